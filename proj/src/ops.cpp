#include "stylip/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "stylip/errors.hpp"

namespace stylip::ops {
namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                       shape_string(b));
}

void require_rank(const char* op, const Var& v, std::size_t rank) {
  if (v.value().rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_string(v.shape()));
  }
}

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m x k] += a[m x n] * b[k x n]^T, via a transposed copy of b so the
// inner loop is a contiguous axpy.
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
  std::vector<double> bt(n * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  gemm_nn(a, bt.data(), c, m, n, k);
}

// c[k x n] += a[m x k]^T * b[m x n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

Tensor softmax_values(std::span<const double> logits) {
  Tensor out({logits.size()});
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= total;
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) shape_error("matmul", a.shape(), b.shape());
  Tensor out({m, n});
  gemm_nn(a.value().data().data(), b.value().data().data(), out.data().data(), m, k, n);
  return a.tape().record("matmul", std::move(out), {a, b},
                         [a, b, m, k, n](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           if (gi[0]) gemm_nt(g.data().data(), b.value().data().data(),
                                              gi[0]->data().data(), m, n, k);
                           if (gi[1]) gemm_tn(a.value().data().data(), g.data().data(),
                                              gi[1]->data().data(), m, k, n);
                         });
}

Var transpose(Var a) {
  require_rank("transpose", a, 2);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out({n, m});
  const auto& av = a.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return a.tape().record("transpose", std::move(out), {a},
                         [m, n](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < n; ++j) (*gi[0])[i * n + j] += g[j * m + i];
                         });
}

Var add(Var a, Var b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  Tensor out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape().record("add", std::move(out), {a, b},
                         [](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           for (Tensor* slot : gi) {
                             if (!slot) continue;
                             for (std::size_t i = 0; i < g.size(); ++i) (*slot)[i] += g[i];
                           }
                         });
}

Var sub(Var a, Var b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  Tensor out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape().record("sub", std::move(out), {a, b},
                         [](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           if (gi[0])
                             for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i];
                           if (gi[1])
                             for (std::size_t i = 0; i < g.size(); ++i) (*gi[1])[i] -= g[i];
                         });
}

Var mul(Var a, Var b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  Tensor out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape().record("mul", std::move(out), {a, b},
                         [a, b](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           const auto& av = a.value();
                           const auto& bv = b.value();
                           if (gi[0])
                             for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i] * bv[i];
                           if (gi[1])
                             for (std::size_t i = 0; i < g.size(); ++i) (*gi[1])[i] += g[i] * av[i];
                         });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return a.tape().record("scale", std::move(out), {a},
                         [factor](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += factor * g[i];
                         });
}

Var add_bias(Var a, Var bias) {
  require_rank("add_bias", bias, 1);
  const std::size_t n = bias.shape()[0];
  if (a.value().rank() == 0 || a.shape().back() != n) shape_error("add_bias", a.shape(), bias.shape());
  Tensor out = a.value();
  const auto& bv = bias.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % n];
  return a.tape().record("add_bias", std::move(out), {a, bias},
                         [n](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           if (gi[0])
                             for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i];
                           if (gi[1])
                             for (std::size_t i = 0; i < g.size(); ++i) (*gi[1])[i % n] += g[i];
                         });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = std::tanh(v);
  return a.tape().record("tanh", std::move(out), {a},
                         [](const Tensor& y, const Tensor& g, std::span<Tensor* const> gi) {
                           for (std::size_t i = 0; i < g.size(); ++i)
                             (*gi[0])[i] += g[i] * (1.0 - y[i] * y[i]);
                         });
}

Var maximum(Var a, Var b) {
  if (a.shape() != b.shape()) shape_error("maximum", a.shape(), b.shape());
  Tensor out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], bv[i]);
  return a.tape().record("maximum", std::move(out), {a, b},
                         [a, b](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           const auto& av = a.value();
                           const auto& bv = b.value();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             Tensor* slot = av[i] >= bv[i] ? gi[0] : gi[1];
                             if (slot) (*slot)[i] += g[i];
                           }
                         });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record("sum", Tensor::scalar(s), {a},
                         [](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           for (double& v : gi[0]->data()) v += g[0];
                         });
}

Var mean(Var a) {
  const std::size_t n = a.size();
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var dot(Var u, Var v) {
  require_rank("dot", u, 1);
  if (u.shape() != v.shape()) shape_error("dot", u.shape(), v.shape());
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u.value()[i] * v.value()[i];
  return u.tape().record("dot", Tensor::scalar(s), {u, v},
                         [u, v](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           const std::size_t n = u.size();
                           if (gi[0])
                             for (std::size_t i = 0; i < n; ++i) (*gi[0])[i] += g[0] * v.value()[i];
                           if (gi[1])
                             for (std::size_t i = 0; i < n; ++i) (*gi[1])[i] += g[0] * u.value()[i];
                         });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape().record("reshape", std::move(out), {a},
                         [](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i];
                         });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no parts");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for shape " +
                         shape_string(first));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> extents;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    if (!ok) shape_error("concat", first, s);
    extents.push_back(s[axis]);
    out_shape[axis] += s[axis];
  }

  Tensor out(out_shape);
  const std::size_t total = out_shape[axis];
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& pv = parts[k].value();
    const std::size_t block = extents[k] * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(pv.data().data() + o * block, block, out.data().data() + (o * total + offset) * inner);
    offset += extents[k];
  }

  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().record(
      "concat", std::move(out), std::move(inputs),
      [extents, outer, inner, total](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < gi.size(); ++k) {
          const std::size_t block = extents[k] * inner;
          if (gi[k]) {
            for (std::size_t o = 0; o < outer; ++o) {
              const double* src = g.data().data() + (o * total + off) * inner;
              double* dst = gi[k]->data().data() + o * block;
              for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
            }
          }
          off += extents[k];
        }
      });
}

Var slice(Var a, std::size_t begin, std::size_t end) {
  require_rank("slice", a, 1);
  if (begin > end || end > a.size()) {
    throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for shape " + shape_string(a.shape()));
  }
  const auto& av = a.value();
  Tensor out({end - begin}, std::vector<double>(av.data().begin() + begin, av.data().begin() + end));
  return a.tape().record("slice", std::move(out), {a},
                         [begin](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[begin + i] += g[i];
                         });
}

Var pick(Var a, std::size_t index) {
  if (index >= a.size()) {
    throw DimensionError("pick index " + std::to_string(index) + " out of range for shape " +
                         shape_string(a.shape()));
  }
  return a.tape().record("pick", Tensor::scalar(a.value()[index]), {a},
                         [index](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           (*gi[0])[index] += g[0];
                         });
}

Var mean_rows(Var a) {
  require_rank("mean_rows", a, 2);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (m == 0) throw DimensionError("mean_rows: no rows");
  Tensor out({n});
  const auto& av = a.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += av[i * n + j];
  const double inv = 1.0 / static_cast<double>(m);
  for (double& v : out.data()) v *= inv;
  return a.tape().record("mean_rows", std::move(out), {a},
                         [m, n, inv](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < n; ++j) (*gi[0])[i * n + j] += inv * g[j];
                         });
}

Var conv1x1(Var fmap, Var kernel) {
  require_rank("conv1x1", fmap, 3);
  require_rank("conv1x1", kernel, 2);
  const std::size_t w = fmap.shape()[0], h = fmap.shape()[1], c = fmap.shape()[2];
  const std::size_t co = kernel.shape()[1];
  if (kernel.shape()[0] != c) {
    throw DimensionError("conv1x1: kernel " + shape_string(kernel.shape()) +
                         " does not match feature map channels of " + shape_string(fmap.shape()));
  }
  const std::size_t pixels = w * h;
  Tensor out({w, h, co});
  gemm_nn(fmap.value().data().data(), kernel.value().data().data(), out.data().data(), pixels, c, co);
  return fmap.tape().record(
      "conv1x1", std::move(out), {fmap, kernel},
      [fmap, kernel, pixels, c, co](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
        if (gi[0]) gemm_nt(g.data().data(), kernel.value().data().data(), gi[0]->data().data(),
                           pixels, co, c);
        if (gi[1]) gemm_tn(fmap.value().data().data(), g.data().data(), gi[1]->data().data(),
                           pixels, c, co);
      });
}

Var cosine_similarity(Var u, Var v) {
  require_rank("cosine_similarity", u, 1);
  if (u.shape() != v.shape()) shape_error("cosine_similarity", u.shape(), v.shape());
  const auto& uv = u.value();
  const auto& vv = v.value();
  const double nu = l2_norm(uv.data());
  const double nv = l2_norm(vv.data());
  if (nu <= kNormEpsilon || nv <= kNormEpsilon) {
    throw DegenerateInputError("cosine_similarity: zero-norm input");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < uv.size(); ++i) d += uv[i] * vv[i];
  const double cos = std::clamp(d / (nu * nv), -1.0, 1.0);
  return u.tape().record(
      "cosine_similarity", Tensor::scalar(cos), {u, v},
      [u, v, nu, nv, cos](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
        const auto& a = u.value();
        const auto& b = v.value();
        // d cos / du = v/(|u||v|) - cos * u/|u|^2
        if (gi[0])
          for (std::size_t i = 0; i < a.size(); ++i)
            (*gi[0])[i] += g[0] * (b[i] / (nu * nv) - cos * a[i] / (nu * nu));
        if (gi[1])
          for (std::size_t i = 0; i < a.size(); ++i)
            (*gi[1])[i] += g[0] * (a[i] / (nu * nv) - cos * b[i] / (nv * nv));
      });
}

Var softmax(Var logits) {
  require_rank("softmax", logits, 1);
  if (logits.size() == 0) throw DimensionError("softmax: empty input");
  Tensor out = softmax_values(logits.value().data());
  return logits.tape().record("softmax", std::move(out), {logits},
                              [](const Tensor& y, const Tensor& g, std::span<Tensor* const> gi) {
                                double gy = 0.0;
                                for (std::size_t i = 0; i < y.size(); ++i) gy += g[i] * y[i];
                                for (std::size_t i = 0; i < y.size(); ++i)
                                  (*gi[0])[i] += y[i] * (g[i] - gy);
                              });
}

Var log_softmax(Var logits) {
  require_rank("log_softmax", logits, 1);
  if (logits.size() == 0) throw DimensionError("log_softmax: empty input");
  const auto& lv = logits.value();
  const double mx = *std::max_element(lv.data().begin(), lv.data().end());
  double total = 0.0;
  for (double x : lv.data()) total += std::exp(x - mx);
  const double lse = mx + std::log(total);
  Tensor out = lv;
  for (double& x : out.data()) x -= lse;
  return logits.tape().record("log_softmax", std::move(out), {logits},
                              [](const Tensor& y, const Tensor& g, std::span<Tensor* const> gi) {
                                double gs = 0.0;
                                for (double x : g.data()) gs += x;
                                for (std::size_t i = 0; i < y.size(); ++i)
                                  (*gi[0])[i] += g[i] - std::exp(y[i]) * gs;
                              });
}

Var softmax_rows(Var logits) {
  require_rank("softmax_rows", logits, 2);
  const std::size_t m = logits.shape()[0], n = logits.shape()[1];
  if (n == 0) throw DimensionError("softmax_rows: empty rows");
  Tensor out({m, n});
  const auto& lv = logits.value();
  for (std::size_t i = 0; i < m; ++i) {
    Tensor row = softmax_values(lv.data().subspan(i * n, n));
    std::copy_n(row.data().data(), n, out.data().data() + i * n);
  }
  return logits.tape().record("softmax_rows", std::move(out), {logits},
                              [m, n](const Tensor& y, const Tensor& g, std::span<Tensor* const> gi) {
                                for (std::size_t i = 0; i < m; ++i) {
                                  double gy = 0.0;
                                  for (std::size_t j = 0; j < n; ++j) gy += g[i * n + j] * y[i * n + j];
                                  for (std::size_t j = 0; j < n; ++j)
                                    (*gi[0])[i * n + j] += y[i * n + j] * (g[i * n + j] - gy);
                                }
                              });
}

Var row(Var a, std::size_t index) {
  require_rank("row", a, 2);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (index >= m) {
    throw DimensionError("row: index " + std::to_string(index) + " out of range for " + shape_string(a.shape()));
  }
  const auto& av = a.value();
  Tensor out({n});
  std::copy_n(av.data().data() + index * n, n, out.data().data());
  return a.tape().record("row", std::move(out), {a},
                         [index, n](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           double* dst = gi[0]->data().data() + index * n;
                           for (std::size_t j = 0; j < n; ++j) dst[j] += g[j];
                         });
}

Var block_mean_rows(Var a, std::size_t block) {
  require_rank("block_mean_rows", a, 2);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (block == 0 || m % block != 0) {
    throw DimensionError("block_mean_rows: " + std::to_string(m) + " rows do not split into blocks of " +
                         std::to_string(block));
  }
  const std::size_t groups = m / block;
  const double inv = 1.0 / static_cast<double>(block);
  const auto& av = a.value();
  Tensor out({groups, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[(i / block) * n + j] += av[i * n + j];
  for (double& v : out.data()) v *= inv;
  return a.tape().record("block_mean_rows", std::move(out), {a},
                         [m, n, block, inv](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < n; ++j) (*gi[0])[i * n + j] += inv * g[(i / block) * n + j];
                         });
}

Var block_attention(Var q, Var k, Var v, std::size_t block, double scale) {
  require_rank("block_attention", q, 2);
  if (k.shape() != q.shape()) shape_error("block_attention", q.shape(), k.shape());
  if (v.shape() != q.shape()) shape_error("block_attention", q.shape(), v.shape());
  const std::size_t m = q.shape()[0], n = q.shape()[1];
  if (block == 0 || m % block != 0) {
    throw DimensionError("block_attention: " + std::to_string(m) + " rows do not split into blocks of " +
                         std::to_string(block));
  }
  const std::size_t groups = m / block;
  const auto& qv = q.value();
  const auto& kv = k.value();
  const auto& vv = v.value();
  // weights[g] is the block x block attention matrix of sequence g.
  auto weights = std::make_shared<std::vector<double>>(groups * block * block);
  Tensor out({m, n});
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t r0 = g * block;
    double* w = weights->data() + g * block * block;
    for (std::size_t i = 0; i < block; ++i) {
      const double* qi = qv.data().data() + (r0 + i) * n;
      for (std::size_t j = 0; j < block; ++j) {
        const double* kj = kv.data().data() + (r0 + j) * n;
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) s += qi[c] * kj[c];
        w[i * block + j] = s * scale;
      }
      Tensor p = softmax_values(std::span<const double>(w + i * block, block));
      std::copy_n(p.data().data(), block, w + i * block);
      double* oi = out.data().data() + (r0 + i) * n;
      for (std::size_t j = 0; j < block; ++j) {
        const double a = w[i * block + j];
        const double* vj = vv.data().data() + (r0 + j) * n;
        for (std::size_t c = 0; c < n; ++c) oi[c] += a * vj[c];
      }
    }
  }
  return q.tape().record(
      "block_attention", std::move(out), {q, k, v},
      [q, k, v, weights, groups, block, n, scale](const Tensor&, const Tensor& g, std::span<Tensor* const> gi) {
        const auto& qv = q.value();
        const auto& kv = k.value();
        const auto& vv = v.value();
        std::vector<double> ds(block * block);
        for (std::size_t grp = 0; grp < groups; ++grp) {
          const std::size_t r0 = grp * block;
          const double* w = weights->data() + grp * block * block;
          for (std::size_t i = 0; i < block; ++i) {
            const double* gi_row = g.data().data() + (r0 + i) * n;
            // dA[i, j] = g_i . v_j, then the softmax Jacobian.
            double dot_sum = 0.0;
            for (std::size_t j = 0; j < block; ++j) {
              const double* vj = vv.data().data() + (r0 + j) * n;
              double s = 0.0;
              for (std::size_t c = 0; c < n; ++c) s += gi_row[c] * vj[c];
              ds[i * block + j] = s;
              dot_sum += s * w[i * block + j];
            }
            for (std::size_t j = 0; j < block; ++j) {
              ds[i * block + j] = w[i * block + j] * (ds[i * block + j] - dot_sum) * scale;
            }
            if (gi[2]) {
              for (std::size_t j = 0; j < block; ++j) {
                double* dv = gi[2]->data().data() + (r0 + j) * n;
                const double a = w[i * block + j];
                for (std::size_t c = 0; c < n; ++c) dv[c] += a * gi_row[c];
              }
            }
          }
          for (std::size_t i = 0; i < block; ++i) {
            for (std::size_t j = 0; j < block; ++j) {
              const double d = ds[i * block + j];
              if (gi[0]) {
                double* dq = gi[0]->data().data() + (r0 + i) * n;
                const double* kj = kv.data().data() + (r0 + j) * n;
                for (std::size_t c = 0; c < n; ++c) dq[c] += d * kj[c];
              }
              if (gi[1]) {
                double* dk = gi[1]->data().data() + (r0 + j) * n;
                const double* qi = qv.data().data() + (r0 + i) * n;
                for (std::size_t c = 0; c < n; ++c) dk[c] += d * qi[c];
              }
            }
          }
        }
      });
}

}  // namespace stylip::ops
