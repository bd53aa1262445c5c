// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/numerics/tape.hpp"

#include <string>

#include "rafe/numerics/ops.hpp"

namespace rafe {

const Shape& Var::shape() const { return tape->shape(*this); }
std::span<const double> Var::value() const { return tape->value(*this); }
std::int64_t Var::size() const { return static_cast<std::int64_t>(value().size()); }

double Var::item() const {
  auto v = value();
  if (v.size() != 1) throw NumericError("item() on non-scalar of shape " + shape_str(shape()));
  return v[0];
}

const Tape::Node& Tape::node(Var v) const {
  check_owned(v, "access");
  return nodes_[static_cast<std::size_t>(v.id)];
}

void Tape::check_owned(Var v, const char* what) const {
  if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw NumericError(std::string("detached or stale Var passed to ") + what);
  }
}

Var Tape::param(DiffTensor& p) {
  Node n;
  n.name = "param";
  n.shape = p.shape();
  n.value.assign(p.values().begin(), p.values().end());
  n.param = &p;
  n.requires_grad = grad_enabled_ && p.requires_grad();
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::input(Shape shape, std::vector<double> values, bool requires_grad) {
  if (static_cast<std::int64_t>(values.size()) != numel(shape)) {
    throw NumericError("Tape::input: size mismatch for shape " + shape_str(shape));
  }
  Node n;
  n.name = "input";
  n.shape = std::move(shape);
  n.value = std::move(values);
  n.requires_grad = grad_enabled_ && requires_grad;
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::record(const char* name, Shape shape, std::vector<double> value, std::vector<Var> inputs,
                 RawBackward backward, GraphBackward graph_backward) {
  if (static_cast<std::int64_t>(value.size()) != numel(shape)) {
    throw NumericError(std::string(name) + ": value size does not match shape " + shape_str(shape));
  }
  bool rg = false;
  for (const auto& in : inputs) {
    check_owned(in, name);
    if (grad_enabled_ && nodes_[static_cast<std::size_t>(in.id)].requires_grad) rg = true;
  }
  Node n;
  n.name = name;
  n.shape = std::move(shape);
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  n.requires_grad = rg;
  if (rg) {
    n.backward = std::move(backward);
    n.graph_backward = std::move(graph_backward);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::backward(Var loss) {
  check_owned(loss, "backward");
  const auto& ln = nodes_[static_cast<std::size_t>(loss.id)];
  if (ln.value.size() != 1) throw NumericError("backward: loss must be scalar, got " + shape_str(ln.shape));
  if (!all_finite(ln.value)) throw NumericError("backward: loss is not finite");

  const auto top = static_cast<std::size_t>(loss.id);
  std::vector<std::vector<double>> g(top + 1);
  g[top] = {1.0};
  leaf_grads_.resize(nodes_.size());

  for (std::size_t id = top + 1; id-- > 0;) {
    if (g[id].empty()) continue;
    Node& n = nodes_[id];
    if (!n.requires_grad) {
      g[id] = {};
      continue;
    }
    if (n.inputs.empty()) {
      if (n.param != nullptr) {
        auto pg = n.param->grad();
        if (pg.size() != g[id].size()) throw NumericError("backward: parameter resized while bound");
        for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += g[id][i];
      } else if (leaf_grads_[id].empty()) {
        leaf_grads_[id] = std::move(g[id]);
      } else {
        for (std::size_t i = 0; i < g[id].size(); ++i) leaf_grads_[id][i] += g[id][i];
      }
      g[id] = {};
      continue;
    }
    RawGrad rg;
    rg.out = g[id];
    rg.in.reserve(n.inputs.size());
    for (const auto& in : n.inputs) {
      const auto iid = static_cast<std::size_t>(in.id);
      if (!nodes_[iid].requires_grad) {
        rg.in.emplace_back();
        continue;
      }
      if (g[iid].empty()) g[iid].assign(nodes_[iid].value.size(), 0.0);
      rg.in.emplace_back(g[iid]);
    }
    n.backward(rg);
    g[id] = {};
  }
}

std::vector<Var> Tape::grad(Var out, std::span<const Var> wrt) {
  check_owned(out, "grad");
  if (value(out).size() != 1) throw NumericError("grad: output must be scalar");
  const auto top = static_cast<std::size_t>(out.id);

  std::vector<char> reach(top + 1, 0);
  for (const auto& w : wrt) {
    check_owned(w, "grad");
    if (static_cast<std::size_t>(w.id) <= top) reach[static_cast<std::size_t>(w.id)] = 1;
  }
  for (std::size_t id = 0; id <= top; ++id) {
    if (reach[id]) continue;
    for (const auto& in : nodes_[id].inputs) {
      if (reach[static_cast<std::size_t>(in.id)]) {
        reach[id] = 1;
        break;
      }
    }
  }

  std::vector<Var> g(top + 1);
  g[top] = scalar(1.0);
  for (std::size_t id = top + 1; id-- > 0;) {
    if (!g[id].valid() || !reach[id]) continue;
    const auto inputs = nodes_[id].inputs;
    if (inputs.empty()) continue;
    if (!nodes_[id].requires_grad) continue;
    const GraphBackward gb = nodes_[id].graph_backward;
    if (!gb) {
      throw NumericError(std::string("op '") + nodes_[id].name + "' does not support differentiable backward");
    }
    std::vector<bool> needed(inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k) needed[k] = reach[static_cast<std::size_t>(inputs[k].id)] != 0;
    const auto parts = gb(g[id], needed);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (!needed[k] || k >= parts.size() || !parts[k].valid()) continue;
      auto& slot = g[static_cast<std::size_t>(inputs[k].id)];
      slot = slot.valid() ? ops::add(slot, parts[k]) : parts[k];
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const auto& w : wrt) {
    const auto wid = static_cast<std::size_t>(w.id);
    if (wid <= top && g[wid].valid()) {
      result.push_back(g[wid]);
    } else {
      result.push_back(input(shape(w), std::vector<double>(value(w).size(), 0.0)));
    }
  }
  return result;
}

std::span<const double> Tape::leaf_grad(Var v) const {
  check_owned(v, "leaf_grad");
  const auto id = static_cast<std::size_t>(v.id);
  if (id >= leaf_grads_.size() || leaf_grads_[id].empty()) return {};
  return leaf_grads_[id];
}

void Tape::truncate(std::size_t mark) {
  if (mark >= nodes_.size()) return;
  nodes_.erase(nodes_.begin() + static_cast<std::ptrdiff_t>(mark), nodes_.end());
  if (leaf_grads_.size() > mark) leaf_grads_.resize(mark);
}

void Tape::clear() {
  nodes_.clear();
  leaf_grads_.clear();
}

}  // namespace rafe
