// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/numerics/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <string>

namespace rafe::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

Tape& tape_of(Var a) {
  if (!a.valid()) throw NumericError("op applied to an invalid Var");
  return *a.tape;
}

void require_same(Var a, Var b, const char* op) {
  if (a.tape != b.tape) throw NumericError(std::string(op) + ": operands live on different tapes");
  if (a.shape() != b.shape()) {
    throw NumericError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
  }
}

void require_rank(Var a, std::size_t rank, const char* op) {
  if (a.shape().size() != rank) {
    throw NumericError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                       shape_str(a.shape()));
  }
}

double softplus_scalar(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Unary op whose derivative is f'(x) evaluated from x (and y = f(x)).
template <class F, class DF>
Var unary(const char* name, Var a, F f, DF df, GraphBackward gb) {
  auto& t = tape_of(a);
  const auto x = a.value();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  auto yshared = std::make_shared<const std::vector<double>>(y);
  return t.record(
      name, a.shape(), std::move(y), {a},
      [a, yshared, df](RawGrad& g) {
        const auto xv = a.value();
        for (std::size_t i = 0; i < g.out.size(); ++i) g.in[0][i] += g.out[i] * df(xv[i], (*yshared)[i]);
      },
      std::move(gb));
}

}  // namespace

Var add(Var a, Var b) {
  require_same(a, b, "add");
  const auto x = a.value(), y = b.value();
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] + y[i];
  return tape_of(a).record(
      "add", a.shape(), std::move(v), {a, b},
      [](RawGrad& g) {
        for (auto& in : g.in)
          if (!in.empty())
            for (std::size_t i = 0; i < g.out.size(); ++i) in[i] += g.out[i];
      },
      [](Var go, const std::vector<bool>& need) {
        return std::vector<Var>{need[0] ? go : Var{}, need[1] ? go : Var{}};
      });
}

Var sub(Var a, Var b) {
  require_same(a, b, "sub");
  const auto x = a.value(), y = b.value();
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] - y[i];
  return tape_of(a).record(
      "sub", a.shape(), std::move(v), {a, b},
      [](RawGrad& g) {
        if (!g.in[0].empty())
          for (std::size_t i = 0; i < g.out.size(); ++i) g.in[0][i] += g.out[i];
        if (!g.in[1].empty())
          for (std::size_t i = 0; i < g.out.size(); ++i) g.in[1][i] -= g.out[i];
      },
      [](Var go, const std::vector<bool>& need) {
        return std::vector<Var>{need[0] ? go : Var{}, need[1] ? neg(go) : Var{}};
      });
}

Var mul(Var a, Var b) {
  require_same(a, b, "mul");
  const auto x = a.value(), y = b.value();
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] * y[i];
  return tape_of(a).record(
      "mul", a.shape(), std::move(v), {a, b},
      [a, b](RawGrad& g) {
        const auto xa = a.value(), xb = b.value();
        if (!g.in[0].empty())
          for (std::size_t i = 0; i < g.out.size(); ++i) g.in[0][i] += g.out[i] * xb[i];
        if (!g.in[1].empty())
          for (std::size_t i = 0; i < g.out.size(); ++i) g.in[1][i] += g.out[i] * xa[i];
      },
      [a, b](Var go, const std::vector<bool>& need) {
        return std::vector<Var>{need[0] ? mul(go, b) : Var{}, need[1] ? mul(go, a) : Var{}};
      });
}

Var scale(Var a, double k) {
  const auto x = a.value();
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = k * x[i];
  return tape_of(a).record(
      "scale", a.shape(), std::move(v), {a},
      [k](RawGrad& g) {
        for (std::size_t i = 0; i < g.out.size(); ++i) g.in[0][i] += k * g.out[i];
      },
      [k](Var go, const std::vector<bool>&) { return std::vector<Var>{scale(go, k)}; });
}

Var add_scalar(Var a, double k) {
  const auto x = a.value();
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] + k;
  return tape_of(a).record(
      "add_scalar", a.shape(), std::move(v), {a},
      [](RawGrad& g) {
        for (std::size_t i = 0; i < g.out.size(); ++i) g.in[0][i] += g.out[i];
      },
      [](Var go, const std::vector<bool>&) { return std::vector<Var>{go}; });
}

Var neg(Var a) { return scale(a, -1.0); }
Var square(Var a) { return mul(a, a); }

Var mul_const(Var a, std::vector<double> c) {
  const auto x = a.value();
  if (c.size() != x.size()) throw NumericError("mul_const: constant size mismatch");
  auto cs = std::make_shared<const std::vector<double>>(std::move(c));
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] * (*cs)[i];
  return tape_of(a).record(
      "mul_const", a.shape(), std::move(v), {a},
      [cs](RawGrad& g) {
        for (std::size_t i = 0; i < g.out.size(); ++i) g.in[0][i] += g.out[i] * (*cs)[i];
      },
      [cs](Var go, const std::vector<bool>&) { return std::vector<Var>{mul_const(go, *cs)}; });
}

Var softplus(Var a) {
  return unary(
      "softplus", a, softplus_scalar, [](double x, double) { return sigmoid_scalar(x); },
      [a](Var go, const std::vector<bool>&) { return std::vector<Var>{mul(go, sigmoid(a))}; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); },
      [a](Var go, const std::vector<bool>&) {
        auto s = sigmoid(a);
        return std::vector<Var>{mul(go, mul(s, add_scalar(neg(s), 1.0)))};
      });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; },
      [a](Var go, const std::vector<bool>&) {
        auto y = tanh(a);
        return std::vector<Var>{mul(go, add_scalar(neg(square(y)), 1.0))};
      });
}

Var leaky_relu(Var a, double slope) {
  const auto x = a.value();
  std::vector<double> mask(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mask[i] = x[i] > 0.0 ? 1.0 : slope;
  return mul_const(a, std::move(mask));
}

Var sqrt(Var a) {
  return unary(
      "sqrt", a,
      [](double x) {
        if (x < 0.0) throw NumericError("sqrt of negative value");
        return std::sqrt(x);
      },
      [](double, double y) { return 0.5 / y; },
      [a](Var go, const std::vector<bool>&) {
        return std::vector<Var>{mul(go, scale(reciprocal(sqrt(a)), 0.5))};
      });
}

Var reciprocal(Var a) {
  return unary(
      "reciprocal", a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; },
      [a](Var go, const std::vector<bool>&) {
        return std::vector<Var>{mul(go, neg(square(reciprocal(a))))};
      });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value()) s += v;
  const Shape in_shape = a.shape();
  return tape_of(a).record(
      "sum", {}, {s}, {a},
      [](RawGrad& g) {
        for (auto& v : g.in[0]) v += g.out[0];
      },
      [in_shape](Var go, const std::vector<bool>&) { return std::vector<Var>{broadcast_scalar(go, in_shape)}; });
}

Var mean(Var a) {
  const auto n = a.size();
  if (n == 0) throw NumericError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var broadcast_scalar(Var s, Shape shape) {
  if (s.size() != 1) throw NumericError("broadcast_scalar: input must be scalar");
  const auto n = static_cast<std::size_t>(numel(shape));
  std::vector<double> v(n, s.value()[0]);
  return tape_of(s).record(
      "broadcast_scalar", std::move(shape), std::move(v), {s},
      [](RawGrad& g) {
        double acc = 0.0;
        for (double x : g.out) acc += x;
        g.in[0][0] += acc;
      },
      [](Var go, const std::vector<bool>&) { return std::vector<Var>{sum(go)}; });
}

Var matmul(Var a, Var b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.tape != b.tape) throw NumericError("matmul: operands live on different tapes");
  const auto n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != k) {
    throw NumericError("matmul: inner dimension mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  std::vector<double> v(static_cast<std::size_t>(n * m), 0.0);
  {
    ConstMap A(a.value().data(), n, k), B(b.value().data(), k, m);
    MutMap C(v.data(), n, m);
    C.noalias() = A * B;
  }
  return tape_of(a).record(
      "matmul", {n, m}, std::move(v), {a, b},
      [a, b, n, k, m](RawGrad& g) {
        ConstMap G(g.out.data(), n, m);
        if (!g.in[0].empty()) {
          ConstMap B(b.value().data(), k, m);
          MutMap dA(g.in[0].data(), n, k);
          dA.noalias() += G * B.transpose();
        }
        if (!g.in[1].empty()) {
          ConstMap A(a.value().data(), n, k);
          MutMap dB(g.in[1].data(), k, m);
          dB.noalias() += A.transpose() * G;
        }
      },
      [a, b](Var go, const std::vector<bool>& need) {
        return std::vector<Var>{need[0] ? matmul(go, transpose(b)) : Var{},
                                need[1] ? matmul(transpose(a), go) : Var{}};
      });
}

Var linear_map(const char* name, Var x, Shape out_shape, LinearKernel forward, LinearKernel adjoint) {
  auto fwd = std::make_shared<const LinearKernel>(std::move(forward));
  auto adj = std::make_shared<const LinearKernel>(std::move(adjoint));
  std::vector<double> v(static_cast<std::size_t>(numel(out_shape)), 0.0);
  (*fwd)(x.value(), v);
  const Shape in_shape = x.shape();
  return tape_of(x).record(
      name, std::move(out_shape), std::move(v), {x}, [adj](RawGrad& g) { (*adj)(g.out, g.in[0]); },
      [name, in_shape, fwd, adj](Var go, const std::vector<bool>&) {
        return std::vector<Var>{linear_map(name, go, in_shape, *adj, *fwd)};
      });
}

Var transpose(Var a) {
  require_rank(a, 2, "transpose");
  const auto n = a.shape()[0], m = a.shape()[1];
  auto kernel = [](std::int64_t rows, std::int64_t cols) {
    return [rows, cols](std::span<const double> in, std::span<double> out) {
      for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < cols; ++j) out[j * rows + i] += in[i * cols + j];
    };
  };
  return linear_map("transpose", a, {m, n}, kernel(n, m), kernel(m, n));
}

Var broadcast_rows(Var v, std::int64_t n) {
  require_rank(v, 1, "broadcast_rows");
  const auto m = v.shape()[0];
  return linear_map(
      "broadcast_rows", v, {n, m},
      [n, m](std::span<const double> in, std::span<double> out) {
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t j = 0; j < m; ++j) out[i * m + j] += in[j];
      },
      [n, m](std::span<const double> in, std::span<double> out) {
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t j = 0; j < m; ++j) out[j] += in[i * m + j];
      });
}

Var sum_rows(Var a) {
  require_rank(a, 2, "sum_rows");
  const auto n = a.shape()[0], m = a.shape()[1];
  return linear_map(
      "sum_rows", a, {m},
      [n, m](std::span<const double> in, std::span<double> out) {
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t j = 0; j < m; ++j) out[j] += in[i * m + j];
      },
      [n, m](std::span<const double> in, std::span<double> out) {
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t j = 0; j < m; ++j) out[i * m + j] += in[j];
      });
}

Var mean_cols(Var a) {
  require_rank(a, 2, "mean_cols");
  const auto n = a.shape()[0], m = a.shape()[1];
  const double inv = 1.0 / static_cast<double>(m);
  return linear_map(
      "mean_cols", a, {n, 1},
      [n, m, inv](std::span<const double> in, std::span<double> out) {
        for (std::int64_t i = 0; i < n; ++i) {
          double s = 0.0;
          for (std::int64_t j = 0; j < m; ++j) s += in[i * m + j];
          out[i] += s * inv;
        }
      },
      [n, m, inv](std::span<const double> in, std::span<double> out) {
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t j = 0; j < m; ++j) out[i * m + j] += in[i] * inv;
      });
}

Var repeat_rows(Var a, std::int64_t r) {
  require_rank(a, 2, "repeat_rows");
  const auto n = a.shape()[0], k = a.shape()[1];
  return linear_map(
      "repeat_rows", a, {n * r, k},
      [n, k, r](std::span<const double> in, std::span<double> out) {
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t q = 0; q < r; ++q)
            for (std::int64_t j = 0; j < k; ++j) out[(i * r + q) * k + j] += in[i * k + j];
      },
      [n, k, r](std::span<const double> in, std::span<double> out) {
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t q = 0; q < r; ++q)
            for (std::int64_t j = 0; j < k; ++j) out[i * k + j] += in[(i * r + q) * k + j];
      });
}

Var reshape(Var a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw NumericError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  auto ident = [](std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] += in[i];
  };
  return linear_map("reshape", a, std::move(shape), ident, ident);
}

Var flatten(Var a) {
  if (a.shape().empty()) throw NumericError("flatten: scalar input");
  const auto b = a.shape()[0];
  return reshape(a, {b, a.size() / std::max<std::int64_t>(b, 1)});
}

Var slice_cols(Var a, std::int64_t begin, std::int64_t end) {
  require_rank(a, 2, "slice_cols");
  const auto n = a.shape()[0], m = a.shape()[1];
  if (begin < 0 || end > m || begin >= end) throw NumericError("slice_cols: bad range");
  const auto w = end - begin;
  return linear_map(
      "slice_cols", a, {n, w},
      [n, m, w, begin](std::span<const double> in, std::span<double> out) {
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t j = 0; j < w; ++j) out[i * w + j] += in[i * m + begin + j];
      },
      [n, m, w, begin](std::span<const double> in, std::span<double> out) {
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t j = 0; j < w; ++j) out[i * m + begin + j] += in[i * w + j];
      });
}

Var concat_cols(Var a, Var b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  const auto n = a.shape()[0], ka = a.shape()[1], kb = b.shape()[1];
  if (b.shape()[0] != n) throw NumericError("concat_cols: row mismatch");
  const auto k = ka + kb;
  std::vector<double> v(static_cast<std::size_t>(n * k));
  const auto xa = a.value(), xb = b.value();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < ka; ++j) v[i * k + j] = xa[i * ka + j];
    for (std::int64_t j = 0; j < kb; ++j) v[i * k + ka + j] = xb[i * kb + j];
  }
  return tape_of(a).record(
      "concat_cols", {n, k}, std::move(v), {a, b},
      [n, ka, kb, k](RawGrad& g) {
        for (std::int64_t i = 0; i < n; ++i) {
          if (!g.in[0].empty())
            for (std::int64_t j = 0; j < ka; ++j) g.in[0][i * ka + j] += g.out[i * k + j];
          if (!g.in[1].empty())
            for (std::int64_t j = 0; j < kb; ++j) g.in[1][i * kb + j] += g.out[i * k + ka + j];
        }
      },
      [ka, k](Var go, const std::vector<bool>& need) {
        return std::vector<Var>{need[0] ? slice_cols(go, 0, ka) : Var{}, need[1] ? slice_cols(go, ka, k) : Var{}};
      });
}

Var add_bias(Var a, Var bias) {
  require_rank(a, 2, "add_bias");
  return add(a, broadcast_rows(bias, a.shape()[0]));
}

Var im2col3x3(Var x) {
  require_rank(x, 4, "im2col3x3");
  const auto b = x.shape()[0], h = x.shape()[1], w = x.shape()[2], c = x.shape()[3];
  // Each output row (n, y, x) holds the 3x3 neighborhood, tap-major then channel.
  auto visit = [b, h, w, c](auto&& fn) {
    for (std::int64_t n = 0; n < b; ++n)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t xx = 0; xx < w; ++xx) {
          const auto row = ((n * h + y) * w + xx) * 9 * c;
          for (std::int64_t dy = -1; dy <= 1; ++dy) {
            const auto sy = y + dy;
            if (sy < 0 || sy >= h) continue;
            for (std::int64_t dx = -1; dx <= 1; ++dx) {
              const auto sx = xx + dx;
              if (sx < 0 || sx >= w) continue;
              const auto tap = (dy + 1) * 3 + (dx + 1);
              const auto src = ((n * h + sy) * w + sx) * c;
              for (std::int64_t ch = 0; ch < c; ++ch) fn(row + tap * c + ch, src + ch);
            }
          }
        }
  };
  return linear_map(
      "im2col3x3", x, {b * h * w, 9 * c},
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i) { out[o] += in[i]; });
      },
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i) { out[i] += in[o]; });
      });
}

Var avg_pool2(Var x) {
  require_rank(x, 4, "avg_pool2");
  const auto b = x.shape()[0], h = x.shape()[1], w = x.shape()[2], c = x.shape()[3];
  if (h % 2 != 0 || w % 2 != 0) throw NumericError("avg_pool2: odd spatial extent " + shape_str(x.shape()));
  const auto ho = h / 2, wo = w / 2;
  auto visit = [b, h, w, c, ho, wo](auto&& fn) {
    for (std::int64_t n = 0; n < b; ++n)
      for (std::int64_t y = 0; y < ho; ++y)
        for (std::int64_t xx = 0; xx < wo; ++xx)
          for (std::int64_t dy = 0; dy < 2; ++dy)
            for (std::int64_t dx = 0; dx < 2; ++dx)
              for (std::int64_t ch = 0; ch < c; ++ch)
                fn(((n * ho + y) * wo + xx) * c + ch, ((n * h + 2 * y + dy) * w + 2 * xx + dx) * c + ch);
  };
  return linear_map(
      "avg_pool2", x, {b, ho, wo, c},
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i) { out[o] += 0.25 * in[i]; });
      },
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i) { out[i] += 0.25 * in[o]; });
      });
}

Var upsample2(Var x) {
  require_rank(x, 4, "upsample2");
  const auto b = x.shape()[0], h = x.shape()[1], w = x.shape()[2], c = x.shape()[3];
  auto visit = [b, h, w, c](auto&& fn) {
    for (std::int64_t n = 0; n < b; ++n)
      for (std::int64_t y = 0; y < 2 * h; ++y)
        for (std::int64_t xx = 0; xx < 2 * w; ++xx)
          for (std::int64_t ch = 0; ch < c; ++ch)
            fn(((n * 2 * h + y) * 2 * w + xx) * c + ch, ((n * h + y / 2) * w + xx / 2) * c + ch);
  };
  return linear_map(
      "upsample2", x, {b, 2 * h, 2 * w, c},
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i) { out[o] += in[i]; });
      },
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i) { out[i] += in[o]; });
      });
}

std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const auto period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

Var blur_separable(Var x, std::vector<double> taps) {
  require_rank(x, 4, "blur_separable");
  if (taps.size() % 2 != 1) throw NumericError("blur_separable: tap count must be odd");
  const auto b = x.shape()[0], h = x.shape()[1], w = x.shape()[2], c = x.shape()[3];
  const auto r = static_cast<std::int64_t>(taps.size() / 2);
  auto tp = std::make_shared<const std::vector<double>>(std::move(taps));
  // fn(out_index, in_index, weight) over both passes composed into one 2D stencil.
  auto visit = [b, h, w, c, r, tp](auto&& fn) {
    const auto& t = *tp;
    for (std::int64_t n = 0; n < b; ++n)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t xx = 0; xx < w; ++xx)
          for (std::int64_t ky = -r; ky <= r; ++ky) {
            const auto sy = reflect_index(y + ky, h);
            for (std::int64_t kx = -r; kx <= r; ++kx) {
              const auto sx = reflect_index(xx + kx, w);
              const double wt = t[static_cast<std::size_t>(ky + r)] * t[static_cast<std::size_t>(kx + r)];
              for (std::int64_t ch = 0; ch < c; ++ch)
                fn(((n * h + y) * w + xx) * c + ch, ((n * h + sy) * w + sx) * c + ch, wt);
            }
          }
  };
  return linear_map(
      "blur_separable", x, x.shape(),
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i, double wt) { out[o] += wt * in[i]; });
      },
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i, double wt) { out[i] += wt * in[o]; });
      });
}

Var group_mean(Var x, std::int64_t group_size) {
  require_rank(x, 2, "group_mean");
  const auto bsz = x.shape()[0], f = x.shape()[1];
  if (group_size < 1 || bsz % group_size != 0) {
    throw NumericError("group_mean: batch " + std::to_string(bsz) + " not divisible by group " +
                       std::to_string(group_size));
  }
  const auto groups = bsz / group_size;
  const double inv = 1.0 / static_cast<double>(group_size);
  return linear_map(
      "group_mean", x, {groups, f},
      [bsz, f, groups, inv](std::span<const double> in, std::span<double> out) {
        for (std::int64_t s = 0; s < bsz; ++s)
          for (std::int64_t j = 0; j < f; ++j) out[(s % groups) * f + j] += inv * in[s * f + j];
      },
      [bsz, f, groups, inv](std::span<const double> in, std::span<double> out) {
        for (std::int64_t s = 0; s < bsz; ++s)
          for (std::int64_t j = 0; j < f; ++j) out[s * f + j] += inv * in[(s % groups) * f + j];
      });
}

Var group_broadcast(Var x, std::int64_t group_size) {
  require_rank(x, 2, "group_broadcast");
  const auto groups = x.shape()[0], f = x.shape()[1];
  const auto bsz = groups * group_size;
  return linear_map(
      "group_broadcast", x, {bsz, f},
      [bsz, f, groups](std::span<const double> in, std::span<double> out) {
        for (std::int64_t s = 0; s < bsz; ++s)
          for (std::int64_t j = 0; j < f; ++j) out[s * f + j] += in[(s % groups) * f + j];
      },
      [bsz, f, groups](std::span<const double> in, std::span<double> out) {
        for (std::int64_t s = 0; s < bsz; ++s)
          for (std::int64_t j = 0; j < f; ++j) out[(s % groups) * f + j] += in[s * f + j];
      });
}

Var conv3x3(Var x, Var weight, Var bias) {
  require_rank(x, 4, "conv3x3");
  const auto b = x.shape()[0], h = x.shape()[1], w = x.shape()[2], c = x.shape()[3];
  if (weight.shape() != Shape{9 * c, weight.shape().at(1)}) {
    throw NumericError("conv3x3: weight " + shape_str(weight.shape()) + " for " + std::to_string(c) + " channels");
  }
  const auto cout = weight.shape()[1];
  auto y = add_bias(matmul(im2col3x3(x), weight), bias);
  return reshape(y, {b, h, w, cout});
}

Var conv1x1(Var x, Var weight, Var bias) {
  require_rank(x, 4, "conv1x1");
  const auto b = x.shape()[0], h = x.shape()[1], w = x.shape()[2], c = x.shape()[3];
  if (weight.shape().size() != 2 || weight.shape()[0] != c) throw NumericError("conv1x1: weight shape mismatch");
  const auto cout = weight.shape()[1];
  auto y = add_bias(matmul(reshape(x, {b * h * w, c}), weight), bias);
  return reshape(y, {b, h, w, cout});
}

Var minibatch_stddev(Var x, std::int64_t group_size, double eps) {
  require_rank(x, 4, "minibatch_stddev");
  const auto b = x.shape()[0], h = x.shape()[1], w = x.shape()[2], c = x.shape()[3];
  const auto g = std::min(group_size, b);
  auto flat = reshape(x, {b, h * w * c});
  auto centered = sub(flat, group_broadcast(group_mean(flat, g), g));
  auto var = group_mean(square(centered), g);
  auto sd = sqrt(add_scalar(var, eps));
  auto per_sample = group_broadcast(mean_cols(sd), g);
  auto channel = repeat_rows(per_sample, h * w);
  auto cat = concat_cols(reshape(x, {b * h * w, c}), channel);
  return reshape(cat, {b, h, w, c + 1});
}

Var mean_square(Var a) { return mean(square(a)); }

Var mse(Var a, Var b) { return mean_square(sub(a, b)); }

}  // namespace rafe::ops
