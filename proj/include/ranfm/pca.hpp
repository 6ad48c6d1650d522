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

#pragma once

#include <vector>

#include "ranfm/tensor.hpp"

namespace ranfm {

struct PcaResult {
  Tensor<double> coordinates;             // n×k
  Tensor<double> components;              // k×d, unit rows
  std::vector<double> explained_variance; // eigenvalues, descending
  std::vector<double> mean;               // d
};

// Projects mean-centered rows onto the top-k covariance eigenvectors found by
// power iteration with deflation. Each component's largest-magnitude loading is
// positive. Throws DataError when all rows are identical.
PcaResult pca_project(const Tensor<double>& embeddings, int components = 2, double tol = 1e-8,
                      int max_iterations = 1000);

// Covariance eigenvalues (divisor n − 1) not captured by the first k components.
double discarded_variance(const Tensor<double>& embeddings, const PcaResult& pca);

}  // namespace ranfm
