#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "acr/error.hpp"
#include "acr/optim.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace acr;

namespace {

// One scalar parameter: an extractor of a single 1×1 layer with a fixed 2-class head.
Network scalar_network(double w) {
  Network n;
  n.extractor = MlpExtractor({DenseLayer{Tensor2(1, 1, w), Tensor2(1, 1)}});
  n.head = LinearHead::zeros(1, 2);
  return n;
}

}  // namespace

TEST_CASE("cosine schedule examples") {
  CHECK(cosine_lr(0, 100, 0.001) == 0.001);
  const double closed = 0.001 * std::cos(7.0 * std::numbers::pi / 16.0);
  CHECK(std::abs(cosine_lr(100, 100, 0.001) - closed) <= 1e-12);
  CHECK(cosine_lr(100, 100, 0.001) == doctest::Approx(1.9509e-4).epsilon(1e-4));
  CHECK(cosine_lr(50, 100, 1.0) == doctest::Approx(0.77301).epsilon(1e-5));
  CHECK_THROWS_AS(cosine_lr(101, 100, 0.001), InvalidInput);
  CHECK_THROWS_AS(cosine_lr(0, 0, 0.001), InvalidInput);
}

TEST_CASE("cosine schedule is strictly decreasing and positive") {
  double prev = cosine_lr(0, 500, 0.01);
  for (std::int64_t t = 1; t <= 500; ++t) {
    const double lr = cosine_lr(t, 500, 0.01);
    CHECK(lr < prev);
    CHECK(lr > 0.0);
    prev = lr;
  }
}

TEST_CASE("sgd with momentum: two steps by hand") {
  Network p = scalar_network(1.0);
  Network g = p.zeros_like();
  OptimState s = OptimState::for_network(p, 0.1, 4, 0.9);
  auto& w = p.extractor.layers()[0].weight[0];
  auto& gw = g.extractor.layers()[0].weight[0];

  gw = 0.5;
  const double lr0 = sgd_step(p, g, s);
  gw = -0.25;
  const double lr1 = sgd_step(p, g, s);

  const double e0 = 0.1;
  const double e1 = 0.1 * std::cos(7.0 * std::numbers::pi * 1.0 / (16.0 * 4.0));
  const double v1 = 0.5;
  const double w1 = 1.0 - e0 * v1;
  const double v2 = 0.9 * v1 - 0.25;
  const double w2 = w1 - e1 * v2;
  CHECK(lr0 == e0);
  CHECK(std::abs(lr1 - e1) <= 1e-12);
  CHECK(std::abs(w - w2) <= 1e-12);
  CHECK(std::abs(s.velocity.extractor.layers()[0].weight[0] - v2) <= 1e-12);
  CHECK(s.step == 2);
}

TEST_CASE("zero gradients leave parameters unchanged and decay the velocity") {
  Network p = scalar_network(2.0);
  Network g = p.zeros_like();
  OptimState s = OptimState::for_network(p, 0.1, 10, 0.9);
  s.velocity.extractor.layers()[0].weight[0] = 1.0;
  const Network before = p;
  g.extractor.layers()[0].weight[0] = 0.0;
  // p moves by the decayed velocity only; with zero velocity it stays put.
  s.velocity.extractor.layers()[0].weight[0] = 0.0;
  sgd_step(p, g, s);
  CHECK(parameter_hash(p) == parameter_hash(before));
  s.velocity.extractor.layers()[0].weight[0] = 1.0;
  Network q = p;
  sgd_step(q, g, s);
  CHECK(s.velocity.extractor.layers()[0].weight[0] == doctest::Approx(0.9));
}

TEST_CASE("momentum 0 is vanilla SGD") {
  Network p = scalar_network(1.0);
  Network g = p.zeros_like();
  g.extractor.layers()[0].weight[0] = 2.0;
  OptimState s = OptimState::for_network(p, 0.5, 1, 0.0);
  sgd_step(p, g, s);
  CHECK(p.extractor.layers()[0].weight[0] == 0.0);
  CHECK_THROWS_AS(sgd_step(p, g, s), StateError);
}

TEST_CASE("sgd rejects mismatched gradients") {
  Network p = scalar_network(1.0);
  Rng rng = make_rng(60);
  Network other = acr::testing::default_network(3, 2, rng);
  OptimState s = OptimState::for_network(p, 0.1, 5);
  CHECK_THROWS_AS(sgd_step(p, other, s), ShapeError);
}

TEST_CASE("epoch sampler: full batch is a permutation, epochs are disjoint") {
  EpochSampler full(10, make_rng(61));
  auto b = full.next(10);
  std::sort(b.begin(), b.end());
  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), std::size_t{0});
  CHECK(b == all);

  EpochSampler s(12, make_rng(62));
  std::set<std::size_t> seen;
  for (int i = 0; i < 3; ++i) {
    for (std::size_t v : s.next(4)) CHECK(seen.insert(v).second);
  }
  CHECK(seen.size() == 12);
  CHECK_THROWS_AS(EpochSampler(0, make_rng(1)), EmptyInput);
}

TEST_CASE("epoch sampler follows the recorded shuffle sequence") {
  // Oracle: shuffle 0..6 in place, then shuffle that order again for the next epoch.
  Rng oracle = make_rng(63);
  std::vector<std::size_t> first(7);
  std::iota(first.begin(), first.end(), std::size_t{0});
  std::shuffle(first.begin(), first.end(), oracle);
  std::vector<std::size_t> second = first;
  std::shuffle(second.begin(), second.end(), oracle);

  EpochSampler s(7, make_rng(63));
  const auto a = s.next(5);
  const auto b = s.next(5);
  CHECK(a == std::vector<std::size_t>(first.begin(), first.begin() + 5));
  CHECK(b == std::vector<std::size_t>{first[5], first[6], second[0], second[1], second[2]});
}

TEST_CASE("sample_batches draws from both samplers") {
  EpochSampler l(5, make_rng(64));
  EpochSampler u(9, make_rng(65));
  const BatchIndices b = sample_batches(l, u, 3, 9);
  CHECK(b.labeled.size() == 3);
  CHECK(b.unlabeled.size() == 9);
}
