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

#include <cmath>
#include <limits>

#include "doctest.h"
#include "ranfm/error.hpp"
#include "ranfm/gradcheck.hpp"
#include "ranfm/graph.hpp"
#include "ranfm/ops.hpp"
#include "test_support.hpp"

using namespace ranfm;
using testing::random_tensor;

namespace {

using Mat = Tensor<double>;

// sum(node ⊙ W) for a fixed random W, so every output element reaches the loss.
NodeId weighted_sum(Graph<double>& g, NodeId node, std::uint64_t seed) {
  Rng rng(seed * 7919 + 1);
  const auto w = random_tensor(g.value(node).shape(), rng);
  return ag::sum(g, ag::mul(g, node, g.constant(w)));
}

struct Primitive {
  const char* name;
  Shape input;
  std::function<NodeId(Graph<double>&, NodeId, Rng&)> build;
};

std::vector<Primitive> primitives() {
  auto cst = [](Graph<double>& g, Shape s, Rng& r) { return g.constant(random_tensor(std::move(s), r)); };
  return {
      {"matmul lhs", {3, 4}, [=](auto& g, NodeId x, Rng& r) { return ag::matmul(g, x, cst(g, {4, 5}, r)); }},
      {"matmul rhs", {3, 4}, [=](auto& g, NodeId x, Rng& r) { return ag::matmul(g, cst(g, {2, 3}, r), x); }},
      {"linear", {3, 4},
       [=](auto& g, NodeId x, Rng& r) { return ag::linear(g, x, cst(g, {4, 2}, r), cst(g, {2}, r)); }},
      {"linear weight", {3, 4},
       [=](auto& g, NodeId w, Rng& r) { return ag::linear(g, cst(g, {5, 3}, r), w, cst(g, {4}, r)); }},
      {"add", {3, 4}, [=](auto& g, NodeId x, Rng& r) { return ag::add(g, x, cst(g, {3, 4}, r)); }},
      {"add self", {3, 4}, [](auto& g, NodeId x, Rng&) { return ag::add(g, x, x); }},
      {"add_row_bias", {4}, [=](auto& g, NodeId b, Rng& r) { return ag::add_row_bias(g, cst(g, {3, 4}, r), b); }},
      {"sub", {3, 4}, [=](auto& g, NodeId x, Rng& r) { return ag::sub(g, cst(g, {3, 4}, r), x); }},
      {"mul", {3, 4}, [=](auto& g, NodeId x, Rng& r) { return ag::mul(g, x, cst(g, {3, 4}, r)); }},
      {"mul self", {3, 4}, [](auto& g, NodeId x, Rng&) { return ag::mul(g, x, x); }},
      {"scale", {3, 4}, [](auto& g, NodeId x, Rng&) { return ag::scale(g, x, -1.7); }},
      {"transpose", {3, 4}, [](auto& g, NodeId x, Rng&) { return ag::transpose(g, x); }},
      {"reshape", {3, 4}, [](auto& g, NodeId x, Rng&) { return ag::reshape(g, x, Shape{2, 6}); }},
      {"relu", {3, 4}, [](auto& g, NodeId x, Rng&) { return ag::activation(g, x, Activation::relu); }},
      {"gelu", {3, 4}, [](auto& g, NodeId x, Rng&) { return ag::activation(g, x, Activation::gelu); }},
      {"softmax_rows", {3, 4}, [](auto& g, NodeId x, Rng&) { return ag::softmax_rows(g, x); }},
      {"layer_norm x", {3, 4},
       [=](auto& g, NodeId x, Rng& r) { return ag::layer_norm(g, x, cst(g, {4}, r), cst(g, {4}, r), 1e-5); }},
      {"layer_norm gain", {4},
       [=](auto& g, NodeId w, Rng& r) { return ag::layer_norm(g, cst(g, {3, 4}, r), w, cst(g, {4}, r), 1e-5); }},
      {"layer_norm bias", {4},
       [=](auto& g, NodeId b, Rng& r) { return ag::layer_norm(g, cst(g, {3, 4}, r), cst(g, {4}, r), b, 1e-5); }},
      {"replace_rows", {3, 4},
       [=](auto& g, NodeId x, Rng& r) {
         return ag::replace_rows(g, x, cst(g, {4}, r), std::vector<std::uint8_t>{0, 1, 0});
       }},
      {"replace_rows token", {4},
       [=](auto& g, NodeId t, Rng& r) {
         return ag::replace_rows(g, cst(g, {3, 4}, r), t, std::vector<std::uint8_t>{1, 0, 1});
       }},
      {"attention q", {6, 4},
       [=](auto& g, NodeId q, Rng& r) {
         return ag::multihead_attention(g, q, cst(g, {6, 4}, r), cst(g, {6, 4}, r), 2, 3);
       }},
      {"attention k", {6, 4},
       [=](auto& g, NodeId k, Rng& r) {
         return ag::multihead_attention(g, cst(g, {6, 4}, r), k, cst(g, {6, 4}, r), 2, 3);
       }},
      {"attention v", {6, 4},
       [=](auto& g, NodeId v, Rng& r) {
         return ag::multihead_attention(g, cst(g, {6, 4}, r), cst(g, {6, 4}, r), v, 2, 6);
       }},
      {"attention self", {3, 4}, [](auto& g, NodeId x, Rng&) { return ag::multihead_attention(g, x, x, x, 2, 3); }},
      {"segment_mean", {6, 4}, [](auto& g, NodeId x, Rng&) { return ag::segment_mean(g, x, 3); }},
  };
}

}  // namespace

TEST_SUITE("numerics") {
  TEST_CASE("matmul examples") {
    const auto a = Mat::matrix(2, 2, {1, 2, 3, 4});
    const auto b = Mat::matrix(2, 1, {1, 1});
    CHECK(matmul(a, b) == Mat::matrix(2, 1, {3, 7}));
    const auto eye = Mat::matrix(2, 2, {1, 0, 0, 1});
    const auto any = Mat::matrix(2, 3, {1, -2, 3, 0.5, 7, -1});
    CHECK(matmul(eye, any) == any);
    CHECK(matmul(Mat({2, 2}, 0.0), any) == Mat({2, 3}, 0.0));
  }

  TEST_CASE("matmul shape mismatch names both shapes") {
    try {
      (void)matmul(Mat({2, 3}), Mat({2, 3}));
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x3]") != std::string::npos);
    }
  }

  TEST_CASE("matmul is associative within 1e-5 on random triples") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t m = 1 + rng.below(6), k = 1 + rng.below(6), n = 1 + rng.below(6), p = 1 + rng.below(6);
      const auto a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng), c = random_tensor({n, p}, rng);
      const auto left = matmul(matmul(a, b), c);
      const auto right = matmul(a, matmul(b, c));
      for (std::size_t i = 0; i < left.size(); ++i)
        CHECK(std::abs(left[i] - right[i]) <= 1e-5 * std::max(1.0, std::abs(left[i])));
    }
  }

  TEST_CASE("transposed products match explicit transposes") {
    Rng rng(2);
    const auto a = random_tensor({3, 5}, rng), b = random_tensor({4, 5}, rng), c = random_tensor({3, 4}, rng);
    const auto nt = matmul_nt(a, b);
    const auto ref_nt = matmul(a, transpose(b));
    const auto tn = matmul_tn(a, c);
    const auto ref_tn = matmul(transpose(a), c);
    for (std::size_t i = 0; i < nt.size(); ++i) CHECK(nt[i] == doctest::Approx(ref_nt[i]).epsilon(1e-13));
    for (std::size_t i = 0; i < tn.size(); ++i) CHECK(tn[i] == doctest::Approx(ref_tn[i]).epsilon(1e-13));
  }

  TEST_CASE("softmax examples") {
    const auto u = softmax_rows(Mat::matrix(1, 4, {2, 2, 2, 2}));
    for (double v : u.data()) CHECK(v == doctest::Approx(0.25));
    const auto p = softmax_rows(Mat::matrix(1, 2, {0, std::log(3.0)}));
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));
    const auto big = softmax_rows(Mat::matrix(1, 2, {1000, 0}));
    CHECK(big.all_finite());
    CHECK(big[0] == doctest::Approx(1.0));
    CHECK(big[1] == doctest::Approx(0.0));
  }

  TEST_CASE("softmax rows sum to one, including magnitude 1e3 inputs") {
    Rng rng(4);
    for (double sd : {1.0, 10.0, 1000.0})
      for (int trial = 0; trial < 10; ++trial) {
        const auto s = softmax_rows(random_tensor({5, 9}, rng, sd));
        for (std::size_t r = 0; r < 5; ++r) {
          double sum = 0;
          for (double v : s.row(r)) {
            CHECK(v >= 0.0);
            sum += v;
          }
          CHECK(std::abs(sum - 1.0) <= 1e-6);
        }
        const auto sf = softmax_rows(random_tensor<float>({3, 7}, rng, sd));
        for (std::size_t r = 0; r < 3; ++r) {
          double sum = 0;
          for (float v : sf.row(r)) sum += v;
          CHECK(std::abs(sum - 1.0) <= 1e-6);
        }
      }
  }

  TEST_CASE("softmax rejects NaN") {
    CHECK_THROWS_AS(softmax_rows(Mat::matrix(1, 2, {0, std::numeric_limits<double>::quiet_NaN()})), NumericError);
  }

  TEST_CASE("layer norm examples") {
    const auto one = Mat::vector({1, 1}), zero = Mat::vector({0, 0});
    const auto c = layer_norm(Mat::matrix(1, 2, {4, 4}), one, zero, 1e-5).out;
    CHECK(c[0] == 0.0);
    CHECK(c[1] == 0.0);
    const auto r = layer_norm(Mat::matrix(1, 2, {1, 3}), one, zero, 1e-12).out;
    CHECK(r[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(r[1] == doctest::Approx(1.0).epsilon(1e-9));
    const auto b = Mat::vector({0.5, -2});
    const auto z = layer_norm(Mat::matrix(2, 2, {1, 7, -3, 2}), zero, b, 1e-5).out;
    CHECK(z == Mat::matrix(2, 2, {0.5, -2, 0.5, -2}));
    CHECK_THROWS_AS(layer_norm(Mat::matrix(1, 3, {1, 2, 3}), one, zero, 1e-5), DimensionError);
  }

  TEST_CASE("activation examples") {
    CHECK(activate(-2.0, Activation::relu) == 0.0);
    CHECK(activate(3.0, Activation::relu) == 3.0);
    CHECK(activate(0.0, Activation::gelu) == 0.0);
    CHECK(activate_derivative(2.0, Activation::relu) == 1.0);
    CHECK(activate_derivative(-2.0, Activation::relu) == 0.0);
    CHECK(activate(1.0, Activation::gelu) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
    CHECK(parse_activation("gelu") == Activation::gelu);
    CHECK_THROWS_AS(parse_activation("tanh"), ContractError);
  }

  TEST_CASE("backward examples") {
    Graph<double> g;
    const NodeId x = g.leaf(Mat::vector({1, 2}));
    const NodeId unused = g.leaf(Mat::vector({5, 5, 5}));
    g.backward(ag::sum(g, ag::mul(g, x, x)));
    CHECK(g.grad(x)[0] == 2.0);
    CHECK(g.grad(x)[1] == 4.0);
    for (double v : g.grad(unused)) CHECK(v == 0.0);

    Graph<double> h;
    const NodeId y = h.leaf(Mat::matrix(2, 3, {1, -1, 2, 0, 3, 4}));
    h.backward(ag::sum(h, y));
    for (double v : h.grad(y)) CHECK(v == 1.0);
  }

  TEST_CASE("backward rejects a non-scalar loss") {
    Graph<double> g;
    const NodeId x = g.leaf(Mat::vector({1, 2}));
    CHECK_THROWS_AS(g.backward(ag::scale(g, x, 2.0)), ContractError);
  }

  TEST_CASE("graph rejects inputs that do not precede the node") {
    Graph<double> g;
    const NodeId x = g.leaf(Mat::vector({1}));
    CHECK_THROWS_AS(g.record(Mat::vector({1}), {x + 1}, nullptr), ContractError);
  }

  TEST_CASE("backward is deterministic") {
    auto run = [] {
      Rng rng(9);
      Graph<double> g;
      const NodeId x = g.leaf(random_tensor({6, 4}, rng));
      const NodeId w = g.leaf(random_tensor({4, 4}, rng));
      const NodeId h = ag::softmax_rows(g, ag::matmul(g, x, w));
      g.backward(weighted_sum(g, ag::multihead_attention(g, h, h, x, 2, 3), 3));
      std::vector<double> out(g.grad(w).begin(), g.grad(w).end());
      out.insert(out.end(), g.grad(x).begin(), g.grad(x).end());
      return out;
    };
    CHECK(run() == run());
  }

  TEST_CASE("finite difference check examples") {
    const auto sum_fn = [](Graph<double>& g, NodeId x) { return ag::sum(g, x); };
    Rng rng(6);
    CHECK(finite_difference_check(sum_fn, random_tensor({3, 4}, rng), 1e-5) < 1e-10);
    const auto sq = [](Graph<double>& g, NodeId x) { return ag::sum(g, ag::mul(g, x, x)); };
    CHECK(finite_difference_check(sq, Mat::vector({1, 2}), 1e-5) < 1e-8);
    CHECK_THROWS_AS(finite_difference_check(sum_fn, Mat::vector({1}), 0.0), ContractError);
  }

  TEST_CASE("every primitive passes a gradient check over 10 seeds") {
    for (const auto& p : primitives()) {
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng data_rng(seed);
        const auto x = random_tensor(p.input, data_rng);
        const auto f = [&](Graph<double>& g, NodeId leaf) {
          Rng rng(seed + 1000);  // same constants on every evaluation
          return weighted_sum(g, p.build(g, leaf, rng), seed);
        };
        const double err = finite_difference_check(f, x, 1e-5);
        INFO(p.name << " seed " << seed);
        CHECK(err < 1e-6);
      }
    }
  }

  TEST_CASE("loss primitives pass a gradient check over 10 seeds") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed);
      const auto x = random_tensor({3, 4}, rng);
      const auto target = random_tensor({3, 4}, rng);
      std::vector<std::uint8_t> mask(12);
      for (auto& m : mask) m = rng.below(2);
      mask[0] = 1;
      const std::vector<int> labels = {static_cast<int>(rng.below(4)), static_cast<int>(rng.below(4)),
                                       static_cast<int>(rng.below(4))};
      CHECK(finite_difference_check([&](auto& g, NodeId l) { return ag::mse(g, l, target); }, x, 1e-5) < 1e-6);
      CHECK(finite_difference_check([&](auto& g, NodeId l) { return ag::masked_mse(g, l, target, mask); }, x,
                                    1e-5) < 1e-6);
      CHECK(finite_difference_check([&](auto& g, NodeId l) { return ag::cross_entropy(g, l, labels); }, x, 1e-5) <
            1e-6);
    }
  }

  TEST_CASE("masked mse ignores unmasked positions and rejects an empty mask") {
    Graph<double> g(false);
    const NodeId p = g.leaf(Mat::vector({0, 0, 9}), false);
    const auto loss = ag::masked_mse(g, p, Mat::vector({1, 2, 0}), {1, 1, 0});
    CHECK(g.value(loss)[0] == doctest::Approx(2.5));
    CHECK_THROWS_AS(ag::masked_mse(g, p, Mat::vector({1, 2, 0}), {0, 0, 0}), ContractError);
  }

  TEST_CASE("attention examples") {
    Rng rng(8);
    const auto v = random_tensor({4, 3}, rng);
    const auto k = random_tensor({4, 3}, rng);
    const auto out = attention(Mat({4, 3}, 0.0), k, v);
    for (std::size_t c = 0; c < 3; ++c) {
      double mean = 0;
      for (std::size_t r = 0; r < 4; ++r) mean += v(r, c) / 4.0;
      for (std::size_t r = 0; r < 4; ++r) CHECK(out(r, c) == doctest::Approx(mean).epsilon(1e-12));
    }
    const auto v1 = random_tensor({1, 3}, rng);
    CHECK(attention(random_tensor({1, 3}, rng), random_tensor({1, 3}, rng), v1) == v1);
    const auto eye = Mat::matrix(2, 2, {1, 0, 0, 1});
    const auto a = attention(eye, eye, eye);
    const double w = 1.0 / (1.0 + std::exp(-1.0 / std::sqrt(2.0)));
    CHECK(a(0, 0) == doctest::Approx(w).epsilon(1e-12));
    CHECK(a(0, 0) == doctest::Approx(0.6698).epsilon(1e-4));
    CHECK(a(0, 1) == doctest::Approx(0.3302).epsilon(1e-4));
  }

  TEST_CASE("streaming and cached multi-head attention agree") {
    Rng rng(10);
    for (int trial = 0; trial < 5; ++trial) {
      const std::size_t heads = 1 + rng.below(3);
      const std::size_t d = heads * (1 + rng.below(4));
      const std::size_t segment = 1 + rng.below(7);
      const std::size_t rows = segment * (1 + rng.below(3));
      const auto q = random_tensor({rows, d}, rng), k = random_tensor({rows, d}, rng), v = random_tensor({rows, d}, rng);
      std::vector<double> probs;
      const auto cached = multihead_attention(q, k, v, heads, segment, &probs);
      const auto streamed = multihead_attention(q, k, v, heads, segment);
      CHECK(probs.size() == (rows / segment) * heads * segment * segment);
      CHECK(testing::max_abs_diff(cached.data(), streamed.data()) < 1e-12);
    }
  }

  TEST_CASE("fused multi-head attention equals per-head composition") {
    Rng rng(12);
    const std::size_t heads = 3, dh = 2, d = heads * dh, segment = 5, rows = 10;
    const auto q = random_tensor({rows, d}, rng), k = random_tensor({rows, d}, rng), v = random_tensor({rows, d}, rng);
    const auto fused = multihead_attention(q, k, v, heads, segment);
    for (std::size_t s = 0; s < rows / segment; ++s)
      for (std::size_t h = 0; h < heads; ++h) {
        Mat qs({segment, dh}), ks({segment, dh}), vs({segment, dh});
        for (std::size_t r = 0; r < segment; ++r)
          for (std::size_t c = 0; c < dh; ++c) {
            qs(r, c) = q(s * segment + r, h * dh + c);
            ks(r, c) = k(s * segment + r, h * dh + c);
            vs(r, c) = v(s * segment + r, h * dh + c);
          }
        // Composition from the plain primitives.
        auto scores = matmul_nt(qs, ks);
        for (double& x : scores.data()) x /= std::sqrt(static_cast<double>(dh));
        const auto ref = matmul(softmax_rows(scores), vs);
        for (std::size_t r = 0; r < segment; ++r)
          for (std::size_t c = 0; c < dh; ++c)
            CHECK(fused(s * segment + r, h * dh + c) == doctest::Approx(ref(r, c)).epsilon(1e-12));
      }
  }

  TEST_CASE("tensor contracts") {
    CHECK_THROWS_AS(Mat({2, 0}), ContractError);
    CHECK_THROWS_AS(Mat({2, 2}, std::vector<double>{1, 2, 3}), ContractError);
    Mat t({2, 3}, 1.0);
    CHECK_FALSE(t.has_grad());
    t.grad()[0] = 2.0;
    CHECK(t.has_grad());
    CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
    CHECK_THROWS_AS(t.reshaped({4, 2}), ContractError);
  }

  TEST_CASE("rng is reproducible and uniform draws stay in range") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
      const double u = r.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      CHECK(r.below(7) < 7u);
    }
  }
}
