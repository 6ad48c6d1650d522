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

#include <functional>

#include "ranfm/graph.hpp"

namespace ranfm {

// Builds a scalar loss from a leaf holding x on a fresh graph.
using ScalarGraphFn = std::function<NodeId(Graph<double>& g, NodeId x)>;

// Compares backprop against central differences (f(x+h) − f(x−h)) / 2h for
// every coordinate of x. Returns max |analytic − numeric| / max(1, |numeric|).
double finite_difference_check(const ScalarGraphFn& f, const Tensor<double>& x, double h);

}  // namespace ranfm
