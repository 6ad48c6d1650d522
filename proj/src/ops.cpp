// Copyright 2026 The ranfm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ranfm/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ranfm/error.hpp"
#include "ranfm/kernels.hpp"

namespace ranfm {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "gelu") return Activation::gelu;
  throw ContractError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation kind) {
  return kind == Activation::gelu ? "gelu" : "relu";
}

namespace {

template <typename T>
void require_matrix(const Tensor<T>& a, const char* op) {
  if (a.rank() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
}

template <typename T>
void require_finite(const Tensor<T>& a, const char* op) {
  if (!a.all_finite()) throw NumericError(std::string(op) + ": non-finite input");
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  require_shape(a.cols() == b.rows(), "matmul", a.shape(), b.shape());
  Tensor<T> c({a.rows(), b.cols()});
  kernels::active<T>().gemm_nn(a.data().data(), b.data().data(), c.data().data(), a.rows(), a.cols(),
                               b.cols(), false);
  return c;
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  require_shape(a.cols() == b.cols(), "matmul_nt", a.shape(), b.shape());
  Tensor<T> c({a.rows(), b.rows()});
  kernels::active<T>().gemm_nt(a.data().data(), b.data().data(), c.data().data(), a.rows(), a.cols(),
                               b.rows(), false);
  return c;
}

template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  require_shape(a.rows() == b.rows(), "matmul_tn", a.shape(), b.shape());
  Tensor<T> c({a.cols(), b.cols()});
  kernels::active<T>().gemm_tn(a.data().data(), b.data().data(), c.data().data(), a.cols(), a.rows(),
                               b.cols(), false);
  return c;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_matrix(a, "transpose");
  Tensor<T> out({a.cols(), a.rows()});
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& a, const Tensor<T>& bias) {
  require_shape(bias.size() == a.cols(), "add_row_bias", a.shape(), bias.shape());
  Tensor<T> out = a;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
  return out;
}

namespace {

template <typename T>
void softmax_inplace(std::span<T> row) {
  const T mx = *std::max_element(row.begin(), row.end());
  T sum = 0;
  for (T& x : row) {
    x = std::exp(x - mx);
    sum += x;
  }
  const T inv = T(1) / sum;
  for (T& x : row) x *= inv;
}

}  // namespace

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a) {
  require_finite(a, "softmax_rows");
  Tensor<T> out = a;
  for (std::size_t r = 0; r < out.rows(); ++r) softmax_inplace(out.row(r));
  return out;
}

template <typename T>
LayerNormOutput<T> layer_norm(const Tensor<T>& a, const Tensor<T>& gain, const Tensor<T>& bias,
                              T eps) {
  if (!(eps > 0)) throw ContractError("layer_norm: eps must be positive");
  require_shape(gain.size() == a.cols(), "layer_norm(gain)", a.shape(), gain.shape());
  require_shape(bias.size() == a.cols(), "layer_norm(bias)", a.shape(), bias.shape());
  const std::size_t d = a.cols();
  LayerNormOutput<T> res{Tensor<T>(a.shape()), std::vector<T>(a.rows()), std::vector<T>(a.rows())};
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto in = a.row(r);
    T mean = 0;
    for (T x : in) mean += x;
    mean /= static_cast<T>(d);
    T var = 0;
    for (T x : in) var += (x - mean) * (x - mean);
    var /= static_cast<T>(d);
    const T inv_std = T(1) / std::sqrt(var + eps);
    auto out = res.out.row(r);
    for (std::size_t c = 0; c < d; ++c) out[c] = (in[c] - mean) * inv_std * gain[c] + bias[c];
    res.mean[r] = mean;
    res.inv_std[r] = inv_std;
  }
  return res;
}

template <typename T>
T activate(T x, Activation kind) {
  if (kind == Activation::relu) return x > 0 ? x : T(0);
  return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <typename T>
T activate_derivative(T x, Activation kind) {
  if (kind == Activation::relu) return x > 0 ? T(1) : T(0);
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<T> / std::numbers::sqrt2_v<T>;
  return cdf + x * pdf;
}

template <typename T>
Tensor<T> activation(const Tensor<T>& a, Activation kind) {
  Tensor<T> out = a;
  for (T& x : out.data()) x = activate(x, kind);
  return out;
}

template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v) {
  require_shape(q.shape() == k.shape(), "attention(Q,K)", q.shape(), k.shape());
  require_shape(q.rows() == v.rows(), "attention(Q,V)", q.shape(), v.shape());
  Tensor<T> scores = matmul_nt(q, k);
  const T scale = T(1) / std::sqrt(static_cast<T>(q.cols()));
  for (T& s : scores.data()) s *= scale;
  return matmul(softmax_rows(scores), v);
}

template <typename T>
Tensor<T> multihead_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                              std::size_t heads, std::size_t segment, std::vector<T>* probs) {
  require_shape(q.shape() == k.shape() && q.shape() == v.shape(), "multihead_attention", q.shape(),
                k.shape());
  const std::size_t rows = q.rows();
  const std::size_t d = q.cols();
  if (heads == 0 || d % heads != 0)
    throw DimensionError("multihead_attention: width " + std::to_string(d) + " not divisible by " +
                         std::to_string(heads) + " heads");
  if (segment == 0 || rows % segment != 0)
    throw DimensionError("multihead_attention: " + std::to_string(rows) +
                         " rows do not split into sequences of " + std::to_string(segment));
  require_finite(q, "multihead_attention");
  require_finite(k, "multihead_attention");

  const std::size_t dh = d / heads;
  const std::size_t n = segment;
  const std::size_t sequences = rows / n;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const auto& kt = kernels::active<T>();
  Tensor<T> out({rows, d});
  if (probs) probs->assign(sequences * heads * n * n, T(0));

  std::vector<T> qh(n * dh), kh(n * dh), vh(n * dh), oh(n * dh), scores(n);
  for (std::size_t s = 0; s < sequences; ++s) {
    const std::size_t base = s * n;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t c0 = h * dh;
      if (probs) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < dh; ++c) {
            qh[i * dh + c] = q(base + i, c0 + c);
            kh[i * dh + c] = k(base + i, c0 + c);
            vh[i * dh + c] = v(base + i, c0 + c);
          }
        T* p = probs->data() + (s * heads + h) * n * n;
        kt.gemm_nt(qh.data(), kh.data(), p, n, dh, n, false);
        for (std::size_t i = 0; i < n; ++i) {
          std::span<T> row(p + i * n, n);
          for (T& x : row) x *= scale;
          softmax_inplace(row);
        }
        kt.gemm_nn(p, vh.data(), oh.data(), n, n, dh, false);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < dh; ++c) out(base + i, c0 + c) = oh[i * dh + c];
      } else {
        // Column-major copies of the head's K and V so each query is a run of
        // axpy/dot calls over contiguous length-n rows.
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < dh; ++c) {
            kh[c * n + i] = k(base + i, c0 + c);
            vh[c * n + i] = v(base + i, c0 + c);
          }
        for (std::size_t i = 0; i < n; ++i) {
          std::fill(scores.begin(), scores.end(), T(0));
          for (std::size_t c = 0; c < dh; ++c)
            kt.axpy(q(base + i, c0 + c) * scale, kh.data() + c * n, scores.data(), n);
          softmax_inplace(std::span<T>(scores));
          for (std::size_t c = 0; c < dh; ++c)
            out(base + i, c0 + c) = kt.dot(scores.data(), vh.data() + c * n, n);
        }
      }
    }
  }
  return out;
}

#define RANFM_INSTANTIATE_OPS(T)                                                                   \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> matmul_tn(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> transpose(const Tensor<T>&);                                                  \
  template Tensor<T> add_row_bias(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                               \
  template LayerNormOutput<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T); \
  template T activate(T, Activation);                                                              \
  template T activate_derivative(T, Activation);                                                   \
  template Tensor<T> activation(const Tensor<T>&, Activation);                                     \
  template Tensor<T> attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> multihead_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                         std::size_t, std::size_t, std::vector<T>*);

RANFM_INSTANTIATE_OPS(float)
RANFM_INSTANTIATE_OPS(double)

}  // namespace ranfm
