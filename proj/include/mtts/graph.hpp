// Copyright 2026  mtts authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MTTS_GRAPH_HPP_
#define MTTS_GRAPH_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mtts/errors.hpp"
#include "mtts/tensor.hpp"

namespace mtts {

// Reverse-mode automatic differentiation over a linear tape. Each operation
// records its forward value and a closure that scatters the output gradient
// into its inputs. Nodes only ever reference earlier nodes, so the tape order
// is already topological and the reverse pass is a single backward sweep.
//
// A Graph instance is confined to one thread. No fusion, no in-place tricks:
// auditability over speed at this scale.
template <class Real>
class Graph {
 public:
  using Id = std::int32_t;

  // ---- leaves ----

  Id input(Tensor<Real> value, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), {}, requires_grad, nullptr});
    return static_cast<Id>(nodes_.size() - 1);
  }

  Id input(Tensor<Real> value) {
    const bool rg = value.requires_grad;
    return input(std::move(value), rg);
  }

  Id constant(Tensor<Real> value) { return input(std::move(value), false); }

  // ---- accessors ----

  const Tensor<Real>& value(Id id) const { return nodes_.at(id).value; }

  const Tensor<Real>& grad(Id id) const {
    const Node& n = nodes_.at(id);
    if (!n.requires_grad)
      throw ValidationError("grad requested for a node without requires_grad");
    return n.grad;
  }

  std::size_t size() const { return nodes_.size(); }

  // ---- elementwise binary ----

  Id add(Id a, Id b) {
    check_same_shape(val(a), val(b), "add");
    Tensor<Real> out = val(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += val(b).data[i];
    return record(std::move(out), {a, b}, [a, b](Graph& g, const Node& n) {
      g.accumulate(a, n.grad.data, 1);
      g.accumulate(b, n.grad.data, 1);
    });
  }

  Id mul(Id a, Id b) {
    check_same_shape(val(a), val(b), "mul");
    Tensor<Real> out = val(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= val(b).data[i];
    return record(std::move(out), {a, b}, [a, b](Graph& g, const Node& n) {
      if (g.wants_grad(a)) {
        auto& ga = g.grad_buf(a);
        const auto& vb = g.val(b).data;
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
          ga.data[i] += n.grad.data[i] * vb[i];
      }
      if (g.wants_grad(b)) {
        auto& gb = g.grad_buf(b);
        const auto& va = g.val(a).data;
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
          gb.data[i] += n.grad.data[i] * va[i];
      }
    });
  }

  // Broadcast add of a row vector onto every row of a matrix.
  // mat: {R, C}, row: {C} or {1, C}.
  Id add_row(Id mat, Id row) {
    const Tensor<Real>& m = val(mat);
    const Tensor<Real>& r = val(row);
    const std::size_t c = m.ndim() == 2 ? m.shape[1] : 0;
    if (m.ndim() != 2 || r.numel() != c)
      throw ValidationError("add_row: shape mismatch " + shape_str(m.shape) +
                            " vs " + shape_str(r.shape));
    Tensor<Real> out = m;
    for (std::size_t i = 0; i < m.shape[0]; ++i)
      for (std::size_t j = 0; j < c; ++j) out.at(i, j) += r.data[j];
    return record(std::move(out), {mat, row}, [mat, row](Graph& g, const Node& n) {
      if (g.wants_grad(mat)) g.accumulate(mat, n.grad.data, 1);
      if (g.wants_grad(row)) {
        auto& gr = g.grad_buf(row);
        const std::size_t rows = n.grad.shape[0], cols = n.grad.shape[1];
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < cols; ++j)
            gr.data[j] += n.grad.at(i, j);
      }
    });
  }

  Id scale(Id a, Real c) {
    Tensor<Real> out = val(a);
    for (auto& x : out.data) x *= c;
    return record(std::move(out), {a}, [a, c](Graph& g, const Node& n) {
      auto& ga = g.grad_buf(a);
      for (std::size_t i = 0; i < n.grad.numel(); ++i)
        ga.data[i] += n.grad.data[i] * c;
    });
  }

  // ---- matrix ops ----

  Id matmul(Id a, Id b) {
    const Tensor<Real>& A = val(a);
    const Tensor<Real>& B = val(b);
    if (A.ndim() != 2 || B.ndim() != 2 || A.shape[1] != B.shape[0])
      throw ValidationError("matmul: shape mismatch " + shape_str(A.shape) +
                            " vs " + shape_str(B.shape));
    const std::size_t m = A.shape[0], k = A.shape[1], n2 = B.shape[1];
    Tensor<Real> out({m, n2});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const Real aip = A.at(i, p);
        if (aip == Real(0)) continue;
        for (std::size_t j = 0; j < n2; ++j)
          out.at(i, j) += aip * B.at(p, j);
      }
    return record(std::move(out), {a, b}, [a, b](Graph& g, const Node& n) {
      const Tensor<Real>& A2 = g.val(a);
      const Tensor<Real>& B2 = g.val(b);
      const std::size_t m = A2.shape[0], k = A2.shape[1], n2 = B2.shape[1];
      if (g.wants_grad(a)) {  // dA = G * B^T
        auto& ga = g.grad_buf(a);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n2; ++j) {
            const Real gij = n.grad.at(i, j);
            if (gij == Real(0)) continue;
            for (std::size_t p = 0; p < k; ++p)
              ga.at(i, p) += gij * B2.at(p, j);
          }
      }
      if (g.wants_grad(b)) {  // dB = A^T * G
        auto& gb = g.grad_buf(b);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const Real aip = A2.at(i, p);
            if (aip == Real(0)) continue;
            for (std::size_t j = 0; j < n2; ++j)
              gb.at(p, j) += aip * n.grad.at(i, j);
          }
      }
    });
  }

  Id transpose(Id a) {
    const Tensor<Real>& A = val(a);
    if (A.ndim() != 2)
      throw ValidationError("transpose: expected 2-d, got " + shape_str(A.shape));
    Tensor<Real> out({A.shape[1], A.shape[0]});
    for (std::size_t i = 0; i < A.shape[0]; ++i)
      for (std::size_t j = 0; j < A.shape[1]; ++j) out.at(j, i) = A.at(i, j);
    return record(std::move(out), {a}, [a](Graph& g, const Node& n) {
      auto& ga = g.grad_buf(a);
      for (std::size_t i = 0; i < n.grad.shape[0]; ++i)
        for (std::size_t j = 0; j < n.grad.shape[1]; ++j)
          ga.at(j, i) += n.grad.at(i, j);
    });
  }

  Id reshape(Id a, Shape s) {
    const Tensor<Real>& A = val(a);
    if (shape_numel(s) != A.numel())
      throw ValidationError("reshape: cannot view " + shape_str(A.shape) +
                            " as " + shape_str(s));
    Tensor<Real> out = A;
    out.shape = std::move(s);
    return record(std::move(out), {a}, [a](Graph& g, const Node& n) {
      g.accumulate(a, n.grad.data, 1);
    });
  }

  // ---- structural ops ----

  // Concatenate 1-d or 2-d tensors along `axis` (0 or 1).
  Id concat(const std::vector<Id>& parts, std::size_t axis) {
    if (parts.empty()) throw ValidationError("concat: no inputs");
    const Tensor<Real>& first = val(parts[0]);
    if (first.ndim() == 1) {
      if (axis != 0) throw ValidationError("concat: 1-d tensors need axis 0");
      std::size_t total = 0;
      for (Id p : parts) {
        if (val(p).ndim() != 1)
          throw ValidationError("concat: rank mismatch");
        total += val(p).numel();
      }
      Tensor<Real> out({total});
      std::size_t off = 0;
      for (Id p : parts)
        for (Real v : val(p).data) out.data[off++] = v;
      auto ps = parts;
      return record(std::move(out), parts, [ps](Graph& g, const Node& n) {
        std::size_t off = 0;
        for (Id p : ps) {
          const std::size_t len = g.val(p).numel();
          if (g.wants_grad(p)) {
            auto& gp = g.grad_buf(p);
            for (std::size_t i = 0; i < len; ++i)
              gp.data[i] += n.grad.data[off + i];
          }
          off += len;
        }
      });
    }
    if (first.ndim() != 2 || axis > 1)
      throw ValidationError("concat: expected 1-d or 2-d and axis in {0,1}");
    std::size_t rows = first.shape[0], cols = first.shape[1];
    if (axis == 0) {
      rows = 0;
      for (Id p : parts) {
        if (val(p).ndim() != 2 || val(p).shape[1] != cols)
          throw ValidationError("concat axis 0: column mismatch " +
                                shape_str(val(p).shape) + " vs " +
                                shape_str(first.shape));
        rows += val(p).shape[0];
      }
    } else {
      cols = 0;
      for (Id p : parts) {
        if (val(p).ndim() != 2 || val(p).shape[0] != rows)
          throw ValidationError("concat axis 1: row mismatch " +
                                shape_str(val(p).shape) + " vs " +
                                shape_str(first.shape));
        cols += val(p).shape[1];
      }
    }
    Tensor<Real> out({rows, cols});
    if (axis == 0) {
      std::size_t r0 = 0;
      for (Id p : parts) {
        const Tensor<Real>& t = val(p);
        for (std::size_t i = 0; i < t.shape[0]; ++i)
          for (std::size_t j = 0; j < cols; ++j)
            out.at(r0 + i, j) = t.at(i, j);
        r0 += t.shape[0];
      }
    } else {
      std::size_t c0 = 0;
      for (Id p : parts) {
        const Tensor<Real>& t = val(p);
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < t.shape[1]; ++j)
            out.at(i, c0 + j) = t.at(i, j);
        c0 += t.shape[1];
      }
    }
    auto ps = parts;
    return record(std::move(out), parts, [ps, axis](Graph& g, const Node& n) {
      std::size_t off = 0;
      for (Id p : ps) {
        const Tensor<Real>& t = g.val(p);
        if (axis == 0) {
          if (g.wants_grad(p)) {
            auto& gp = g.grad_buf(p);
            for (std::size_t i = 0; i < t.shape[0]; ++i)
              for (std::size_t j = 0; j < t.shape[1]; ++j)
                gp.at(i, j) += n.grad.at(off + i, j);
          }
          off += t.shape[0];
        } else {
          if (g.wants_grad(p)) {
            auto& gp = g.grad_buf(p);
            for (std::size_t i = 0; i < t.shape[0]; ++i)
              for (std::size_t j = 0; j < t.shape[1]; ++j)
                gp.at(i, j) += n.grad.at(i, off + j);
          }
          off += t.shape[1];
        }
      }
    });
  }

  // Contiguous slice along `axis` of a 1-d or 2-d tensor.
  Id slice(Id a, std::size_t axis, std::size_t start, std::size_t len) {
    const Tensor<Real>& A = val(a);
    if (axis >= A.ndim() || start + len > A.shape[axis])
      throw ValidationError("slice: range [" + std::to_string(start) + "," +
                            std::to_string(start + len) + ") out of " +
                            shape_str(A.shape) + " axis " +
                            std::to_string(axis));
    Tensor<Real> out;
    if (A.ndim() == 1) {
      out = Tensor<Real>({len});
      for (std::size_t i = 0; i < len; ++i) out.data[i] = A.data[start + i];
    } else if (A.ndim() == 2 && axis == 0) {
      out = Tensor<Real>({len, A.shape[1]});
      for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < A.shape[1]; ++j)
          out.at(i, j) = A.at(start + i, j);
    } else if (A.ndim() == 2 && axis == 1) {
      out = Tensor<Real>({A.shape[0], len});
      for (std::size_t i = 0; i < A.shape[0]; ++i)
        for (std::size_t j = 0; j < len; ++j)
          out.at(i, j) = A.at(i, start + j);
    } else {
      throw ValidationError("slice: only 1-d and 2-d supported");
    }
    return record(std::move(out), {a},
                  [a, axis, start](Graph& g, const Node& n) {
                    auto& ga = g.grad_buf(a);
                    if (n.grad.ndim() == 1) {
                      for (std::size_t i = 0; i < n.grad.numel(); ++i)
                        ga.data[start + i] += n.grad.data[i];
                    } else if (axis == 0) {
                      for (std::size_t i = 0; i < n.grad.shape[0]; ++i)
                        for (std::size_t j = 0; j < n.grad.shape[1]; ++j)
                          ga.at(start + i, j) += n.grad.at(i, j);
                    } else {
                      for (std::size_t i = 0; i < n.grad.shape[0]; ++i)
                        for (std::size_t j = 0; j < n.grad.shape[1]; ++j)
                          ga.at(i, start + j) += n.grad.at(i, j);
                    }
                  });
  }

  // 1-d convolution over time. x: {T, C_in}, w: {K, C_in, C_out},
  // zero-padded so the output is {T, C_out} (K odd, pad = K/2 by default).
  Id conv1d(Id x, Id w, std::optional<std::size_t> padding = std::nullopt) {
    const Tensor<Real>& X = val(x);
    const Tensor<Real>& W = val(w);
    if (X.ndim() != 2 || W.ndim() != 3 || X.shape[1] != W.shape[1])
      throw ValidationError("conv1d: shape mismatch " + shape_str(X.shape) +
                            " vs " + shape_str(W.shape));
    const std::size_t T = X.shape[0], cin = X.shape[1];
    const std::size_t K = W.shape[0], cout = W.shape[2];
    const std::size_t pad = padding.value_or(K / 2);
    if (T + 2 * pad < K)
      throw ValidationError("conv1d: input too short for kernel");
    const std::size_t tout = T + 2 * pad - K + 1;
    Tensor<Real> out({tout, cout});
    for (std::size_t t = 0; t < tout; ++t)
      for (std::size_t k = 0; k < K; ++k) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) -
                                   static_cast<std::ptrdiff_t>(pad);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          const Real xv = X.at(static_cast<std::size_t>(src), ci);
          if (xv == Real(0)) continue;
          for (std::size_t co = 0; co < cout; ++co)
            out.at(t, co) += xv * W.data[(k * cin + ci) * cout + co];
        }
      }
    return record(std::move(out), {x, w}, [x, w, pad](Graph& g, const Node& n) {
      const Tensor<Real>& X2 = g.val(x);
      const Tensor<Real>& W2 = g.val(w);
      const std::size_t T = X2.shape[0], cin = X2.shape[1];
      const std::size_t K = W2.shape[0], cout = W2.shape[2];
      const std::size_t tout = n.grad.shape[0];
      const bool gx = g.wants_grad(x), gw = g.wants_grad(w);
      for (std::size_t t = 0; t < tout; ++t)
        for (std::size_t k = 0; k < K; ++k) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) -
                                     static_cast<std::ptrdiff_t>(pad);
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
          const auto s = static_cast<std::size_t>(src);
          for (std::size_t ci = 0; ci < cin; ++ci) {
            for (std::size_t co = 0; co < cout; ++co) {
              const Real gv = n.grad.at(t, co);
              if (gv == Real(0)) continue;
              if (gx)
                g.grad_buf(x).at(s, ci) += gv * W2.data[(k * cin + ci) * cout + co];
              if (gw)
                g.grad_buf(w).data[(k * cin + ci) * cout + co] +=
                    gv * X2.at(s, ci);
            }
          }
        }
    });
  }

  // ---- activations ----

  Id sigmoid(Id a) {
    Tensor<Real> out = val(a);
    for (auto& v : out.data)
      v = Real(1) / (Real(1) + std::exp(-v));
    return record_unary_from_output(
        a, std::move(out), [](Real y) { return y * (Real(1) - y); });
  }

  Id tanh_(Id a) {
    Tensor<Real> out = val(a);
    for (auto& v : out.data) v = std::tanh(v);
    return record_unary_from_output(
        a, std::move(out), [](Real y) { return Real(1) - y * y; });
  }

  Id relu(Id a) {
    Tensor<Real> out = val(a);
    for (auto& v : out.data) v = v > Real(0) ? v : Real(0);
    return record_unary_from_output(
        a, std::move(out), [](Real y) { return y > Real(0) ? Real(1) : Real(0); });
  }

  // Softmax along the last axis of a 1-d or 2-d tensor. Entries where
  // mask[j] == 0 get probability exactly 0 and receive zero gradient. A row
  // whose unmasked set is empty is an error.
  Id softmax(Id a, const std::vector<std::uint8_t>& mask = {}) {
    const Tensor<Real>& A = val(a);
    const std::size_t cols = A.ndim() == 1 ? A.shape[0] : A.shape[A.ndim() - 1];
    const std::size_t rows = A.numel() / cols;
    if (!mask.empty() && mask.size() != cols)
      throw ValidationError("softmax: mask length " +
                            std::to_string(mask.size()) + " vs axis " +
                            std::to_string(cols));
    Tensor<Real> out = A;
    for (std::size_t r = 0; r < rows; ++r) {
      Real* row = out.data.data() + r * cols;
      Real mx = -std::numeric_limits<Real>::infinity();
      for (std::size_t j = 0; j < cols; ++j)
        if (mask.empty() || mask[j]) mx = std::max(mx, row[j]);
      if (mx == -std::numeric_limits<Real>::infinity())
        throw NumericError("softmax: fully masked row");
      Real sum = 0;
      for (std::size_t j = 0; j < cols; ++j) {
        if (mask.empty() || mask[j]) {
          row[j] = std::exp(row[j] - mx);
          sum += row[j];
        } else {
          row[j] = Real(0);
        }
      }
      for (std::size_t j = 0; j < cols; ++j) row[j] /= sum;
    }
    return record(std::move(out), {a}, [a, cols](Graph& g, const Node& n) {
      auto& ga = g.grad_buf(a);
      const std::size_t rows = n.value.numel() / cols;
      for (std::size_t r = 0; r < rows; ++r) {
        const Real* y = n.value.data.data() + r * cols;
        const Real* gy = n.grad.data.data() + r * cols;
        Real dot = 0;
        for (std::size_t j = 0; j < cols; ++j) dot += gy[j] * y[j];
        for (std::size_t j = 0; j < cols; ++j)
          ga.data[r * cols + j] += y[j] * (gy[j] - dot);
      }
    });
  }

  // ---- lookup ----

  // Rows of `table` ({V, E}) gathered by index; gradient accumulates into
  // each looked-up row once per occurrence.
  Id embedding(Id table, std::vector<std::size_t> ids) {
    const Tensor<Real>& T = val(table);
    if (T.ndim() != 2)
      throw ValidationError("embedding: table must be 2-d, got " +
                            shape_str(T.shape));
    for (auto i : ids)
      if (i >= T.shape[0])
        throw ValidationError("embedding: index " + std::to_string(i) +
                              " out of table rows " +
                              std::to_string(T.shape[0]));
    const std::size_t e = T.shape[1];
    Tensor<Real> out({ids.size(), e});
    for (std::size_t p = 0; p < ids.size(); ++p)
      for (std::size_t j = 0; j < e; ++j) out.at(p, j) = T.at(ids[p], j);
    return record(std::move(out), {table},
                  [table, ids = std::move(ids)](Graph& g, const Node& n) {
                    auto& gt = g.grad_buf(table);
                    const std::size_t e = gt.shape[1];
                    for (std::size_t p = 0; p < ids.size(); ++p)
                      for (std::size_t j = 0; j < e; ++j)
                        gt.at(ids[p], j) += n.grad.at(p, j);
                  });
  }

  // ---- attention helpers ----

  // y[0] = 0, y[i] = x[i-1]; works on a 1-d vector or a single-row matrix.
  Id shift_right(Id a) {
    const Tensor<Real>& A = val(a);
    if (A.ndim() == 2 && A.shape[0] != 1)
      throw ValidationError("shift_right: expected vector or single row");
    Tensor<Real> out = A;
    const std::size_t n = A.numel();
    for (std::size_t i = n; i-- > 1;) out.data[i] = A.data[i - 1];
    if (n > 0) out.data[0] = Real(0);
    return record(std::move(out), {a}, [a](Graph& g, const Node& n) {
      auto& ga = g.grad_buf(a);
      for (std::size_t i = 1; i < n.grad.numel(); ++i)
        ga.data[i - 1] += n.grad.data[i];
    });
  }

  // y = x / sum(x). Raises if the normalizer vanishes (attention underflow).
  Id normalize_sum(Id a) {
    const Tensor<Real>& A = val(a);
    Real sum = 0;
    for (Real v : A.data) sum += v;
    if (!(sum > Real(0)))
      throw NumericError("degenerate-attention: normalizer is " +
                         std::to_string(static_cast<double>(sum)));
    Tensor<Real> out = A;
    for (auto& v : out.data) v /= sum;
    return record(std::move(out), {a}, [a, sum](Graph& g, const Node& n) {
      auto& ga = g.grad_buf(a);
      Real dot = 0;
      for (std::size_t i = 0; i < n.grad.numel(); ++i)
        dot += n.grad.data[i] * n.value.data[i];
      for (std::size_t i = 0; i < n.grad.numel(); ++i)
        ga.data[i] += (n.grad.data[i] - dot) / sum;
    });
  }

  // ---- reductions / losses ----

  Id sum_all(Id a) {
    Real s = 0;
    for (Real v : val(a).data) s += v;
    return record(Tensor<Real>::scalar(s), {a}, [a](Graph& g, const Node& n) {
      auto& ga = g.grad_buf(a);
      for (auto& v : ga.data) v += n.grad.data[0];
    });
  }

  // Mean squared error over all elements.
  Id mse(Id a, Id b) {
    check_same_shape(val(a), val(b), "mse");
    const std::size_t n = val(a).numel();
    Real acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Real d = val(a).data[i] - val(b).data[i];
      acc += d * d;
    }
    acc /= static_cast<Real>(n);
    return record(Tensor<Real>::scalar(acc), {a, b},
                  [a, b, n](Graph& g, const Node& nd) {
                    const Real go = nd.grad.data[0];
                    const Real k = Real(2) / static_cast<Real>(n);
                    const auto& va = g.val(a).data;
                    const auto& vb = g.val(b).data;
                    if (g.wants_grad(a)) {
                      auto& ga = g.grad_buf(a);
                      for (std::size_t i = 0; i < n; ++i)
                        ga.data[i] += go * k * (va[i] - vb[i]);
                    }
                    if (g.wants_grad(b)) {
                      auto& gb = g.grad_buf(b);
                      for (std::size_t i = 0; i < n; ++i)
                        gb.data[i] += go * k * (vb[i] - va[i]);
                    }
                  });
  }

  // Numerically stable binary cross entropy on logits, mean over elements.
  // Positive targets can be weighted to counter class imbalance.
  Id bce_with_logits(Id logits, std::vector<Real> targets,
                     Real pos_weight = Real(1)) {
    const Tensor<Real>& X = val(logits);
    if (X.numel() != targets.size())
      throw ValidationError("bce_with_logits: " + std::to_string(X.numel()) +
                            " logits vs " + std::to_string(targets.size()) +
                            " targets");
    const std::size_t n = X.numel();
    Real acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Real x = X.data[i], t = targets[i];
      const Real w = Real(1) + (pos_weight - Real(1)) * t;
      // log(1 + exp(-|x|)) + max(x, 0) - x*t, weighted
      const Real mx = x > Real(0) ? x : Real(0);
      acc += w * (mx - x * t + std::log(Real(1) + std::exp(-std::abs(x))));
    }
    acc /= static_cast<Real>(n);
    return record(Tensor<Real>::scalar(acc), {logits},
                  [logits, targets = std::move(targets), pos_weight, n](
                      Graph& g, const Node& nd) {
                    const Real go = nd.grad.data[0] / static_cast<Real>(n);
                    auto& gl = g.grad_buf(logits);
                    const auto& x = g.val(logits).data;
                    for (std::size_t i = 0; i < n; ++i) {
                      const Real t = targets[i];
                      const Real w = Real(1) + (pos_weight - Real(1)) * t;
                      const Real p = Real(1) / (Real(1) + std::exp(-x[i]));
                      gl.data[i] += go * w * (p - t);
                    }
                  });
  }

  // ---- reverse pass ----

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Every node
  // created with requires_grad gets a gradient; leaves that do not
  // participate in the loss keep an all-zero gradient.
  void backward(Id loss) {
    Node& ln = nodes_.at(loss);
    if (ln.value.numel() != 1)
      throw ValidationError("backward: loss must be scalar, got " +
                            shape_str(ln.value.shape));
    for (auto& n : nodes_)
      if (n.requires_grad) {
        n.grad = Tensor<Real>::zeros(n.value.shape);
      }
    if (!ln.requires_grad)
      return;  // loss does not depend on any trainable input
    ln.grad.data[0] = Real(1);
    for (Id id = loss; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.requires_grad && n.backprop) n.backprop(*this, n);
    }
  }

 private:
  struct Node {
    Tensor<Real> value;
    Tensor<Real> grad;
    bool requires_grad = false;
    std::function<void(Graph&, const Node&)> backprop;
  };

  const Tensor<Real>& val(Id id) const { return nodes_[id].value; }

  bool wants_grad(Id id) const { return nodes_[id].requires_grad; }

  Tensor<Real>& grad_buf(Id id) { return nodes_[id].grad; }

  void accumulate(Id id, const std::vector<Real>& g, Real k) {
    if (!wants_grad(id)) return;
    auto& dst = nodes_[id].grad.data;
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += k * g[i];
  }

  template <class Back>
  Id record(Tensor<Real> out, const std::vector<Id>& parents, Back back) {
    bool rg = false;
    for (Id p : parents) rg = rg || nodes_[p].requires_grad;
    Node n;
    n.value = std::move(out);
    n.requires_grad = rg;
    if (rg) n.backprop = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
  }

  // Unary op whose local derivative is a function of the *output* value.
  template <class Deriv>
  Id record_unary_from_output(Id a, Tensor<Real> out, Deriv dfn) {
    return record(std::move(out), {a}, [a, dfn](Graph& g, const Node& n) {
      auto& ga = g.grad_buf(a);
      for (std::size_t i = 0; i < n.grad.numel(); ++i)
        ga.data[i] += n.grad.data[i] * dfn(n.value.data[i]);
    });
  }

  std::vector<Node> nodes_;
};

// Standard gated LSTM cell built from primitives. x: {1, D}, h/c: {1, H},
// w_ih: {D, 4H}, w_hh: {H, 4H}, b: {4H}; gate order i, f, g, o.
template <class Real>
std::pair<typename Graph<Real>::Id, typename Graph<Real>::Id> lstm_step(
    Graph<Real>& g, typename Graph<Real>::Id x, typename Graph<Real>::Id h,
    typename Graph<Real>::Id c, typename Graph<Real>::Id w_ih,
    typename Graph<Real>::Id w_hh, typename Graph<Real>::Id b) {
  const std::size_t hid = g.value(h).shape[1];
  auto gates = g.add_row(g.add(g.matmul(x, w_ih), g.matmul(h, w_hh)), b);
  auto i_g = g.sigmoid(g.slice(gates, 1, 0, hid));
  auto f_g = g.sigmoid(g.slice(gates, 1, hid, hid));
  auto g_g = g.tanh_(g.slice(gates, 1, 2 * hid, hid));
  auto o_g = g.sigmoid(g.slice(gates, 1, 3 * hid, hid));
  auto c_new = g.add(g.mul(f_g, c), g.mul(i_g, g_g));
  auto h_new = g.mul(o_g, g.tanh_(c_new));
  return {h_new, c_new};
}

}  // namespace mtts

#endif  // MTTS_GRAPH_HPP_
