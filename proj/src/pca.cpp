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

#include "ranfm/pca.hpp"

#include <cmath>
#include <numeric>

#include "ranfm/error.hpp"

namespace ranfm {

namespace {

using Matrix = std::vector<std::vector<double>>;

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

std::vector<double> apply(const Matrix& a, const std::vector<double>& v) {
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::inner_product(a[i].begin(), a[i].end(), v.begin(), 0.0);
  return out;
}

Matrix covariance(const Tensor<double>& x, const std::vector<double>& mean) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Matrix cov(d, std::vector<double>(d, 0.0));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = x(r, i) - mean[i];
      for (std::size_t j = i; j < d; ++j) cov[i][j] += xi * (x(r, j) - mean[j]);
    }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      cov[i][j] /= static_cast<double>(n - 1);
      cov[j][i] = cov[i][j];
    }
  return cov;
}

double trace(const Matrix& a) {
  double t = 0;
  for (std::size_t i = 0; i < a.size(); ++i) t += a[i][i];
  return t;
}

}  // namespace

PcaResult pca_project(const Tensor<double>& embeddings, int components, double tol, int max_iterations) {
  if (embeddings.rank() != 2 || embeddings.rows() < 2) throw ContractError("pca_project needs at least two rows");
  const std::size_t n = embeddings.rows();
  const std::size_t d = embeddings.cols();
  if (components < 1 || static_cast<std::size_t>(components) > d)
    throw ContractError("pca_project: components must lie in [1, " + std::to_string(d) + "]");

  PcaResult res;
  res.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) res.mean[j] += embeddings(r, j);
  for (double& m : res.mean) m /= static_cast<double>(n);

  Matrix cov = covariance(embeddings, res.mean);
  const double total = trace(cov);
  if (!(total > 0)) throw DataError("pca_project: data has rank 0 (all rows identical)");
  const double floor = 1e-12 * total;

  const auto k = static_cast<std::size_t>(components);
  res.components = Tensor<double>({k, d}, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    // Deterministic start that is not orthogonal to a generic eigenvector.
    std::vector<double> v(d);
    for (std::size_t j = 0; j < d; ++j) v[j] = 1.0 + 0.1 * static_cast<double>(j);
    for (std::size_t j = 0; j < d; ++j) v[j] /= norm(v);
    double lambda = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
      std::vector<double> w = apply(cov, v);
      const double len = norm(w);
      if (len <= floor) {
        lambda = 0.0;
        break;
      }
      for (double& x : w) x /= len;
      double delta = 0;
      for (std::size_t j = 0; j < d; ++j) delta = std::max(delta, std::abs(std::abs(w[j]) - std::abs(v[j])));
      v = std::move(w);
      lambda = len;
      if (delta < tol) break;
    }
    if (lambda > 0) {
      const auto av = apply(cov, v);
      lambda = std::inner_product(v.begin(), v.end(), av.begin(), 0.0);
    }
    std::size_t big = 0;
    for (std::size_t j = 1; j < d; ++j)
      if (std::abs(v[j]) > std::abs(v[big])) big = j;
    if (v[big] < 0)
      for (double& x : v) x = -x;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov[i][j] -= lambda * v[i] * v[j];
    for (std::size_t j = 0; j < d; ++j) res.components(c, j) = v[j];
    res.explained_variance.push_back(std::max(lambda, 0.0));
  }

  res.coordinates = Tensor<double>({n, k}, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0;
      for (std::size_t j = 0; j < d; ++j) s += (embeddings(r, j) - res.mean[j]) * res.components(c, j);
      res.coordinates(r, c) = s;
    }
  return res;
}

double discarded_variance(const Tensor<double>& embeddings, const PcaResult& pca) {
  const double total = trace(covariance(embeddings, pca.mean));
  return total - std::accumulate(pca.explained_variance.begin(), pca.explained_variance.end(), 0.0);
}

}  // namespace ranfm
