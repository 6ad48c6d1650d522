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

#include "ranfm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ranfm/error.hpp"

namespace ranfm {

double finite_difference_check(const ScalarGraphFn& f, const Tensor<double>& x, double h) {
  if (!(h > 0)) throw ContractError("finite_difference_check: step h must be positive");

  std::vector<double> analytic;
  {
    Graph<double> g;
    const NodeId leaf = g.leaf(x);
    g.backward(f(g, leaf));
    auto gr = g.grad(leaf);
    analytic.assign(gr.begin(), gr.end());
  }

  auto eval = [&](const Tensor<double>& point) {
    Graph<double> g(false);
    const NodeId leaf = g.leaf(point, false);
    return g.value(f(g, leaf))[0];
  };

  double worst = 0.0;
  Tensor<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = eval(probe);
    probe[i] = orig - h;
    const double down = eval(probe);
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

}  // namespace ranfm
