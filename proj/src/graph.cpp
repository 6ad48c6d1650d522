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

#include "ranfm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "ranfm/error.hpp"
#include "ranfm/kernels.hpp"

namespace ranfm {

template <typename T>
NodeId Graph<T>::leaf(Tensor<T> value, bool requires_grad) {
  Node node;
  node.owned = std::move(value);
  node.requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

template <typename T>
NodeId Graph<T>::leaf_ref(const Tensor<T>& value, bool requires_grad) {
  Node node;
  node.external = &value;
  node.requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

template <typename T>
NodeId Graph<T>::record(Tensor<T> value, std::vector<NodeId> inputs, BackwardFn backward) {
  Node node;
  for (NodeId in : inputs) {
    if (in >= nodes_.size())
      throw ContractError("graph: input node " + std::to_string(in) + " does not precede node " +
                          std::to_string(nodes_.size()));
    node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  }
  node.owned = std::move(value);
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

template <typename T>
const Tensor<T>& Graph<T>::value(NodeId id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.owned;
}

template <typename T>
std::span<T> Graph<T>::grad_buffer(NodeId id) {
  Node& n = nodes_.at(id);
  const std::size_t len = value(id).size();
  if (n.grad.size() != len) n.grad.assign(len, T(0));
  return n.grad;
}

template <typename T>
void Graph<T>::backward(NodeId loss) {
  if (loss >= nodes_.size()) throw ContractError("backward: unknown loss node");
  if (value(loss).size() != 1)
    throw ContractError("backward: loss must be scalar, got shape " + shape_string(value(loss).shape()));
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    for (NodeId in : nodes_[id].inputs)
      if (in >= id) throw ContractError("backward: cycle detected at node " + std::to_string(id));
  }
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (n.requires_grad)
      n.grad.assign(value(id).size(), T(0));
    else
      n.grad.clear();
  }
  if (!nodes_[loss].requires_grad) return;
  nodes_[loss].grad[0] = T(1);
  for (NodeId id = loss + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.requires_grad && n.backward) n.backward(*this, id);
  }
}

template class Graph<float>;
template class Graph<double>;

namespace ag {
namespace {

template <typename T>
void accumulate(std::span<T> dst, std::span<const T> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

template <typename T>
NodeId matmul(Graph<T>& g, NodeId a, NodeId b) {
  return g.record(ranfm::matmul(g.value(a), g.value(b)), {a, b}, [a, b](Graph<T>& gr, NodeId self) {
    const auto& av = gr.value(a);
    const auto& bv = gr.value(b);
    const T* dc = gr.grad(self).data();
    const auto& k = kernels::active<T>();
    const std::size_t m = av.rows(), inner = av.cols(), n = bv.cols();
    if (gr.requires_grad(a)) k.gemm_nt(dc, bv.data().data(), gr.grad_buffer(a).data(), m, n, inner, true);
    if (gr.requires_grad(b)) k.gemm_tn(av.data().data(), dc, gr.grad_buffer(b).data(), inner, m, n, true);
  });
}

template <typename T>
NodeId add_row_bias(Graph<T>& g, NodeId a, NodeId bias) {
  return g.record(ranfm::add_row_bias(g.value(a), g.value(bias)), {a, bias},
                  [a, bias](Graph<T>& gr, NodeId self) {
                    auto dy = gr.grad(self);
                    if (gr.requires_grad(a)) accumulate(gr.grad_buffer(a), dy);
                    if (gr.requires_grad(bias)) {
                      auto db = gr.grad_buffer(bias);
                      const std::size_t cols = db.size();
                      for (std::size_t i = 0; i < dy.size(); ++i) db[i % cols] += dy[i];
                    }
                  });
}

template <typename T>
NodeId linear(Graph<T>& g, NodeId x, NodeId weight, NodeId bias) {
  return add_row_bias(g, matmul(g, x, weight), bias);
}

template <typename T>
NodeId add(Graph<T>& g, NodeId a, NodeId b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  require_shape(av.shape() == bv.shape(), "add", av.shape(), bv.shape());
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph<T>& gr, NodeId self) {
    auto dy = gr.grad(self);
    if (gr.requires_grad(a)) accumulate(gr.grad_buffer(a), dy);
    if (gr.requires_grad(b)) accumulate(gr.grad_buffer(b), dy);
  });
}

template <typename T>
NodeId sub(Graph<T>& g, NodeId a, NodeId b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  require_shape(av.shape() == bv.shape(), "sub", av.shape(), bv.shape());
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph<T>& gr, NodeId self) {
    auto dy = gr.grad(self);
    if (gr.requires_grad(a)) accumulate(gr.grad_buffer(a), dy);
    if (gr.requires_grad(b)) {
      auto db = gr.grad_buffer(b);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] -= dy[i];
    }
  });
}

template <typename T>
NodeId mul(Graph<T>& g, NodeId a, NodeId b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  require_shape(av.shape() == bv.shape(), "mul", av.shape(), bv.shape());
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph<T>& gr, NodeId self) {
    auto dy = gr.grad(self);
    const auto& av2 = gr.value(a);
    const auto& bv2 = gr.value(b);
    if (gr.requires_grad(a)) {
      auto da = gr.grad_buffer(a);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * bv2[i];
    }
    if (gr.requires_grad(b)) {
      auto db = gr.grad_buffer(b);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i] * av2[i];
    }
  });
}

template <typename T>
NodeId scale(Graph<T>& g, NodeId a, T factor) {
  Tensor<T> out = g.value(a);
  for (T& x : out.data()) x *= factor;
  return g.record(std::move(out), {a}, [a, factor](Graph<T>& gr, NodeId self) {
    auto dy = gr.grad(self);
    auto da = gr.grad_buffer(a);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += factor * dy[i];
  });
}

template <typename T>
NodeId sum(Graph<T>& g, NodeId a) {
  T total = 0;
  for (T x : g.value(a).data()) total += x;
  return g.record(Tensor<T>({1}, {total}), {a}, [a](Graph<T>& gr, NodeId self) {
    const T dy = gr.grad(self)[0];
    for (T& x : gr.grad_buffer(a)) x += dy;
  });
}

template <typename T>
NodeId transpose(Graph<T>& g, NodeId a) {
  return g.record(ranfm::transpose(g.value(a)), {a}, [a](Graph<T>& gr, NodeId self) {
    const auto& av = gr.value(a);
    const std::size_t r = av.rows(), c = av.cols();
    auto dy = gr.grad(self);
    auto da = gr.grad_buffer(a);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) da[i * c + j] += dy[j * r + i];
  });
}

template <typename T>
NodeId reshape(Graph<T>& g, NodeId a, Shape shape) {
  return g.record(g.value(a).reshaped(std::move(shape)), {a}, [a](Graph<T>& gr, NodeId self) {
    accumulate(gr.grad_buffer(a), gr.grad(self));
  });
}

template <typename T>
NodeId activation(Graph<T>& g, NodeId a, Activation kind) {
  return g.record(ranfm::activation(g.value(a), kind), {a}, [a, kind](Graph<T>& gr, NodeId self) {
    const auto& x = gr.value(a);
    auto dy = gr.grad(self);
    auto da = gr.grad_buffer(a);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * activate_derivative(x[i], kind);
  });
}

template <typename T>
NodeId softmax_rows(Graph<T>& g, NodeId a) {
  return g.record(ranfm::softmax_rows(g.value(a)), {a}, [a](Graph<T>& gr, NodeId self) {
    const auto& y = gr.value(self);
    auto dy = gr.grad(self);
    auto da = gr.grad_buffer(a);
    const std::size_t cols = y.cols();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      T dot = 0;
      for (std::size_t c = 0; c < cols; ++c) dot += dy[r * cols + c] * y[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c)
        da[r * cols + c] += y[r * cols + c] * (dy[r * cols + c] - dot);
    }
  });
}

template <typename T>
NodeId layer_norm(Graph<T>& g, NodeId a, NodeId gain, NodeId bias, T eps) {
  auto res = ranfm::layer_norm(g.value(a), g.value(gain), g.value(bias), eps);
  auto stats = std::make_shared<std::pair<std::vector<T>, std::vector<T>>>(std::move(res.mean),
                                                                          std::move(res.inv_std));
  return g.record(std::move(res.out), {a, gain, bias}, [a, gain, bias, stats](Graph<T>& gr, NodeId self) {
    const auto& x = gr.value(a);
    const auto& gam = gr.value(gain);
    auto dy = gr.grad(self);
    const std::size_t d = x.cols();
    std::vector<T> xhat(d), dxhat(d);
    const bool need_x = gr.requires_grad(a);
    const bool need_g = gr.requires_grad(gain);
    const bool need_b = gr.requires_grad(bias);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const T mean = stats->first[r];
      const T inv_std = stats->second[r];
      T mean_dxhat = 0, mean_dxhat_xhat = 0;
      for (std::size_t c = 0; c < d; ++c) {
        xhat[c] = (x[r * d + c] - mean) * inv_std;
        dxhat[c] = dy[r * d + c] * gam[c];
        mean_dxhat += dxhat[c];
        mean_dxhat_xhat += dxhat[c] * xhat[c];
      }
      mean_dxhat /= static_cast<T>(d);
      mean_dxhat_xhat /= static_cast<T>(d);
      if (need_g) {
        auto dg = gr.grad_buffer(gain);
        for (std::size_t c = 0; c < d; ++c) dg[c] += dy[r * d + c] * xhat[c];
      }
      if (need_b) {
        auto db = gr.grad_buffer(bias);
        for (std::size_t c = 0; c < d; ++c) db[c] += dy[r * d + c];
      }
      if (need_x) {
        auto dx = gr.grad_buffer(a);
        for (std::size_t c = 0; c < d; ++c)
          dx[r * d + c] += inv_std * (dxhat[c] - mean_dxhat - xhat[c] * mean_dxhat_xhat);
      }
    }
  });
}

template <typename T>
NodeId replace_rows(Graph<T>& g, NodeId a, NodeId token, const std::vector<std::uint8_t>& rows) {
  const auto& av = g.value(a);
  const auto& tv = g.value(token);
  require_shape(tv.size() == av.cols(), "replace_rows", av.shape(), tv.shape());
  if (rows.size() != av.rows())
    throw DimensionError("replace_rows: mask has " + std::to_string(rows.size()) + " entries for " +
                         std::to_string(av.rows()) + " rows");
  Tensor<T> out = av;
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r]) std::copy(tv.data().begin(), tv.data().end(), out.row(r).begin());
  return g.record(std::move(out), {a, token}, [a, token, rows](Graph<T>& gr, NodeId self) {
    auto dy = gr.grad(self);
    const std::size_t d = gr.value(token).size();
    if (gr.requires_grad(a)) {
      auto da = gr.grad_buffer(a);
      for (std::size_t r = 0; r < rows.size(); ++r)
        if (!rows[r])
          for (std::size_t c = 0; c < d; ++c) da[r * d + c] += dy[r * d + c];
    }
    if (gr.requires_grad(token)) {
      auto dt = gr.grad_buffer(token);
      for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r])
          for (std::size_t c = 0; c < d; ++c) dt[c] += dy[r * d + c];
    }
  });
}

template <typename T>
NodeId multihead_attention(Graph<T>& g, NodeId q, NodeId k, NodeId v, std::size_t heads,
                           std::size_t segment) {
  if (!g.grad_enabled() || !(g.requires_grad(q) || g.requires_grad(k) || g.requires_grad(v))) {
    return g.record(ranfm::multihead_attention(g.value(q), g.value(k), g.value(v), heads, segment),
                    {q, k, v}, nullptr);
  }
  auto probs = std::make_shared<std::vector<T>>();
  Tensor<T> out = ranfm::multihead_attention(g.value(q), g.value(k), g.value(v), heads, segment, probs.get());
  return g.record(std::move(out), {q, k, v}, [q, k, v, heads, segment, probs](Graph<T>& gr, NodeId self) {
    const auto& qv = gr.value(q);
    const auto& kv = gr.value(k);
    const auto& vv = gr.value(v);
    auto dout = gr.grad(self);
    const std::size_t d = qv.cols();
    const std::size_t dh = d / heads;
    const std::size_t n = segment;
    const std::size_t sequences = qv.rows() / n;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    const auto& kt = kernels::active<T>();
    std::span<T> dq = gr.requires_grad(q) ? gr.grad_buffer(q) : std::span<T>();
    std::span<T> dk = gr.requires_grad(k) ? gr.grad_buffer(k) : std::span<T>();
    std::span<T> dv = gr.requires_grad(v) ? gr.grad_buffer(v) : std::span<T>();

    std::vector<T> qh(n * dh), kh(n * dh), vh(n * dh), doh(n * dh), tmp(n * dh), dp(n * n);
    for (std::size_t s = 0; s < sequences; ++s) {
      const std::size_t base = s * n;
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t c0 = h * dh;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < dh; ++c) {
            const std::size_t at = (base + i) * d + c0 + c;
            qh[i * dh + c] = qv[at];
            kh[i * dh + c] = kv[at];
            vh[i * dh + c] = vv[at];
            doh[i * dh + c] = dout[at];
          }
        const T* p = probs->data() + (s * heads + h) * n * n;
        if (!dv.empty()) {
          kt.gemm_tn(p, doh.data(), tmp.data(), n, n, dh, false);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < dh; ++c) dv[(base + i) * d + c0 + c] += tmp[i * dh + c];
        }
        if (dq.empty() && dk.empty()) continue;
        kt.gemm_nt(doh.data(), vh.data(), dp.data(), n, dh, n, false);
        for (std::size_t i = 0; i < n; ++i) {
          T dot = 0;
          for (std::size_t j = 0; j < n; ++j) dot += dp[i * n + j] * p[i * n + j];
          for (std::size_t j = 0; j < n; ++j) dp[i * n + j] = p[i * n + j] * (dp[i * n + j] - dot) * scale;
        }
        if (!dq.empty()) {
          kt.gemm_nn(dp.data(), kh.data(), tmp.data(), n, n, dh, false);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < dh; ++c) dq[(base + i) * d + c0 + c] += tmp[i * dh + c];
        }
        if (!dk.empty()) {
          kt.gemm_tn(dp.data(), qh.data(), tmp.data(), n, n, dh, false);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < dh; ++c) dk[(base + i) * d + c0 + c] += tmp[i * dh + c];
        }
      }
    }
  });
}

template <typename T>
NodeId segment_mean(Graph<T>& g, NodeId a, std::size_t segment) {
  const auto& av = g.value(a);
  if (segment == 0 || av.rows() % segment != 0)
    throw DimensionError("segment_mean: " + std::to_string(av.rows()) + " rows not divisible by " +
                         std::to_string(segment));
  const std::size_t d = av.cols();
  const std::size_t groups = av.rows() / segment;
  Tensor<T> out({groups, d});
  for (std::size_t s = 0; s < groups; ++s)
    for (std::size_t r = 0; r < segment; ++r)
      for (std::size_t c = 0; c < d; ++c) out(s, c) += av((s * segment + r), c);
  const T inv = T(1) / static_cast<T>(segment);
  for (T& x : out.data()) x *= inv;
  return g.record(std::move(out), {a}, [a, segment, inv](Graph<T>& gr, NodeId self) {
    auto dy = gr.grad(self);
    auto da = gr.grad_buffer(a);
    const std::size_t d2 = gr.value(a).cols();
    for (std::size_t r = 0; r < da.size() / d2; ++r)
      for (std::size_t c = 0; c < d2; ++c) da[r * d2 + c] += dy[(r / segment) * d2 + c] * inv;
  });
}

template <typename T>
NodeId masked_mse(Graph<T>& g, NodeId pred, const Tensor<T>& target,
                  const std::vector<std::uint8_t>& mask) {
  const auto& pv = g.value(pred);
  require_shape(pv.shape() == target.shape(), "masked_mse", pv.shape(), target.shape());
  if (mask.size() != pv.size()) throw DimensionError("masked_mse: mask length does not match prediction");
  std::size_t count = 0;
  T total = 0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (!mask[i]) continue;
    const T e = pv[i] - target[i];
    total += e * e;
    ++count;
  }
  if (count == 0) throw ContractError("masked_mse: no masked positions");
  const T inv = T(1) / static_cast<T>(count);
  return g.record(Tensor<T>({1}, {total * inv}), {pred},
                  [pred, target, mask, inv](Graph<T>& gr, NodeId self) {
                    const T dy = gr.grad(self)[0];
                    const auto& p = gr.value(pred);
                    auto dp = gr.grad_buffer(pred);
                    for (std::size_t i = 0; i < dp.size(); ++i)
                      if (mask[i]) dp[i] += dy * T(2) * (p[i] - target[i]) * inv;
                  });
}

template <typename T>
NodeId mse(Graph<T>& g, NodeId pred, const Tensor<T>& target) {
  return masked_mse(g, pred, target, std::vector<std::uint8_t>(target.size(), 1));
}

template <typename T>
NodeId cross_entropy(Graph<T>& g, NodeId logits, const std::vector<int>& labels) {
  const auto& z = g.value(logits);
  const std::size_t b = z.rows(), classes = z.cols();
  if (labels.size() != b) throw DimensionError("cross_entropy: label count does not match batch");
  auto probs = std::make_shared<Tensor<T>>(ranfm::softmax_rows(z));
  T total = 0;
  for (std::size_t r = 0; r < b; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= classes)
      throw ContractError("cross_entropy: label " + std::to_string(labels[r]) + " out of range");
    total -= std::log(std::max((*probs)(r, labels[r]), std::numeric_limits<T>::min()));
  }
  const T inv = T(1) / static_cast<T>(b);
  return g.record(Tensor<T>({1}, {total * inv}), {logits},
                  [logits, labels, probs, inv](Graph<T>& gr, NodeId self) {
                    const T dy = gr.grad(self)[0];
                    auto dz = gr.grad_buffer(logits);
                    const std::size_t k = probs->cols();
                    for (std::size_t r = 0; r < labels.size(); ++r)
                      for (std::size_t c = 0; c < k; ++c) {
                        const T onehot = static_cast<int>(c) == labels[r] ? T(1) : T(0);
                        dz[r * k + c] += dy * ((*probs)(r, c) - onehot) * inv;
                      }
                  });
}

#define RANFM_INSTANTIATE_AG(T)                                                                   \
  template NodeId matmul(Graph<T>&, NodeId, NodeId);                                              \
  template NodeId linear(Graph<T>&, NodeId, NodeId, NodeId);                                      \
  template NodeId add(Graph<T>&, NodeId, NodeId);                                                 \
  template NodeId add_row_bias(Graph<T>&, NodeId, NodeId);                                        \
  template NodeId sub(Graph<T>&, NodeId, NodeId);                                                 \
  template NodeId mul(Graph<T>&, NodeId, NodeId);                                                 \
  template NodeId scale(Graph<T>&, NodeId, T);                                                    \
  template NodeId sum(Graph<T>&, NodeId);                                                         \
  template NodeId transpose(Graph<T>&, NodeId);                                                   \
  template NodeId reshape(Graph<T>&, NodeId, Shape);                                              \
  template NodeId activation(Graph<T>&, NodeId, Activation);                                      \
  template NodeId softmax_rows(Graph<T>&, NodeId);                                                \
  template NodeId layer_norm(Graph<T>&, NodeId, NodeId, NodeId, T);                               \
  template NodeId replace_rows(Graph<T>&, NodeId, NodeId, const std::vector<std::uint8_t>&);      \
  template NodeId multihead_attention(Graph<T>&, NodeId, NodeId, NodeId, std::size_t, std::size_t); \
  template NodeId segment_mean(Graph<T>&, NodeId, std::size_t);                                   \
  template NodeId masked_mse(Graph<T>&, NodeId, const Tensor<T>&, const std::vector<std::uint8_t>&); \
  template NodeId mse(Graph<T>&, NodeId, const Tensor<T>&);                                       \
  template NodeId cross_entropy(Graph<T>&, NodeId, const std::vector<int>&);

RANFM_INSTANTIATE_AG(float)
RANFM_INSTANTIATE_AG(double)

}  // namespace ag
}  // namespace ranfm
