// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rafe/numerics/tensor.hpp"

namespace rafe {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::int32_t id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Shape& shape() const;
  std::span<const double> value() const;
  std::int64_t size() const;
  double item() const;
};

/// Gradient buffers handed to a primitive's first-order backward.
/// `in[k]` is empty when input k does not need a gradient.
struct RawGrad {
  std::span<const double> out;
  std::vector<std::span<double>> in;
};

using RawBackward = std::function<void(RawGrad&)>;
/// Builds input gradients as new tape nodes (used for double backward).
/// Returns one Var per input; an invalid Var means "no contribution".
/// `needed[k]` is false for inputs the caller does not differentiate.
using GraphBackward = std::function<std::vector<Var>(Var grad_out, const std::vector<bool>& needed)>;

/// Ordered record of primitive operations for one optimization step.
///
/// Nodes are appended in evaluation order, so the id order is a valid
/// topological order. `backward` walks it in reverse and accumulates into
/// the gradients of bound DiffTensors. `grad` builds input gradients as new
/// differentiable nodes, which is how the R1 penalty is differentiated with
/// respect to discriminator parameters.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Binds a parameter; after backward its grad() holds d(loss)/d(param).
  Var param(DiffTensor& p);
  /// Constant (or differentiable, when requires_grad) leaf owned by the tape.
  Var input(Shape shape, std::vector<double> values, bool requires_grad = false);
  Var constant(const DiffTensor& t) { return input(t.shape(), {t.values().begin(), t.values().end()}); }
  Var scalar(double v) { return input({}, {v}); }

  /// Appends a primitive. Used by the op library.
  Var record(const char* name, Shape shape, std::vector<double> value, std::vector<Var> inputs,
             RawBackward backward, GraphBackward graph_backward = {});

  void backward(Var loss);
  /// d(out)/d(wrt) as differentiable nodes; `out` must be scalar.
  std::vector<Var> grad(Var out, std::span<const Var> wrt);

  /// Gradient left on a requires_grad input leaf by the last backward.
  std::span<const double> leaf_grad(Var v) const;

  const Shape& shape(Var v) const { return node(v).shape; }
  std::span<const double> value(Var v) const { return node(v).value; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  std::size_t size() const { return nodes_.size(); }
  /// Drops every node recorded after `mark`. Vars beyond it become invalid.
  void truncate(std::size_t mark);
  void clear();

  bool grad_enabled() const { return grad_enabled_; }

  class NoGradGuard {
   public:
    explicit NoGradGuard(Tape& t) : tape_(t), prev_(t.grad_enabled_) { t.grad_enabled_ = false; }
    ~NoGradGuard() { tape_.grad_enabled_ = prev_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

   private:
    Tape& tape_;
    bool prev_;
  };

 private:
  struct Node {
    const char* name = "";
    Shape shape;
    std::vector<double> value;
    std::vector<Var> inputs;
    RawBackward backward;
    GraphBackward graph_backward;
    DiffTensor* param = nullptr;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;
  void check_owned(Var v, const char* what) const;

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> leaf_grads_;
  bool grad_enabled_ = true;
};

}  // namespace rafe
