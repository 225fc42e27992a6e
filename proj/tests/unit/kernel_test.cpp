#include <algorithm>
#include <cmath>

#include "acr/error.hpp"
#include "acr/kernel.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace acr;
using acr::testing::brute_force_mmd2;
using acr::testing::random_tensor;

TEST_CASE("rbf kernel examples") {
  CHECK(rbf_kernel(Tensor2::row({0.3, -1.0}), Tensor2::row({0.3, -1.0}), 0.7) == 1.0);
  CHECK(rbf_kernel(Tensor2::row({0.0}), Tensor2::row({1.0}), 1.0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(rbf_kernel(Tensor2::row({0.0}), Tensor2::row({1.0}), 1.0) == doctest::Approx(0.606531).epsilon(1e-6));
  double prev = 0.0;
  for (double sigma : {0.1, 0.5, 1.0, 5.0, 50.0, 5000.0}) {
    const double k = rbf_kernel(Tensor2::row({0.0, 1.0}), Tensor2::row({2.0, -1.0}), sigma);
    CHECK(k > prev);
    prev = k;
  }
  CHECK(prev == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(rbf_kernel(Tensor2::row({0.0}), Tensor2::row({1.0}), 0.0), InvalidInput);
  CHECK_THROWS_AS(rbf_kernel(Tensor2::row({0.0}), Tensor2::row({1.0, 2.0}), 1.0), ShapeError);
}

TEST_CASE("mmd2 examples") {
  const std::vector<double> one{1.0};
  CHECK(mmd2(Tensor2::row({0.0}), Tensor2::row({1.0}), one) ==
        doctest::Approx(2.0 - 2.0 * std::exp(-0.5)).epsilon(1e-15));
  CHECK(mmd2(Tensor2::row({0.0}), Tensor2::row({1.0}), one) == doctest::Approx(0.786939).epsilon(1e-6));

  Rng rng = make_rng(8);
  const Tensor2 v = random_tensor(6, 3, rng);
  const std::vector<double> sigmas{0.4, 0.8, 1.6};
  CHECK(std::abs(mmd2(v, v, sigmas)) <= 1e-12);

  const Tensor2 a = random_tensor(5, 3, rng);
  const Tensor2 b = random_tensor(7, 3, rng);
  CHECK(std::abs(mmd2(a, b, one) - brute_force_mmd2(a, b, one)) <= 1e-10);
}

TEST_CASE("mmd2 errors") {
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(mmd2(Tensor2(0, 2), Tensor2(3, 2), one), EmptyInput);
  CHECK_THROWS_AS(mmd2(Tensor2(2, 2), Tensor2(3, 3), one), ShapeError);
  const std::vector<double> bad{-1.0};
  CHECK_THROWS_AS(mmd2(Tensor2(2, 2), Tensor2(3, 2), bad), InvalidInput);
}

TEST_CASE("mmd2 is symmetric, permutation invariant and non-negative") {
  Rng rng = make_rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor2 v = random_tensor(1 + trial % 9, 4, rng);
    const Tensor2 u = random_tensor(1 + (trial * 7) % 11, 4, rng, -0.5, 1.5);
    const auto sigmas = median_bandwidths(v, u);
    const double vu = mmd2(v, u, sigmas);
    CHECK(vu >= -1e-12);
    CHECK(std::abs(vu - mmd2(u, v, sigmas)) <= 1e-12);
    std::vector<std::size_t> perm(v.rows());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = perm.size() - 1 - i;
    CHECK(std::abs(vu - mmd2(v.select_rows(perm), u, sigmas)) <= 1e-12);
  }
}

TEST_CASE("mmd2 gradient value agrees with mmd2 and with finite differences") {
  Rng rng = make_rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor2 v = random_tensor(2 + trial % 5, 3, rng);
    const Tensor2 u = random_tensor(2 + (trial * 3) % 6, 3, rng, -0.5, 1.5);
    const auto sigmas = median_bandwidths(v, u);
    const Mmd2Gradient g = mmd2_with_grad(v, u, sigmas);
    CHECK(std::abs(g.value - mmd2(v, u, sigmas)) <= 1e-12);
    const auto rv = acr::testing::finite_difference_check(
        v, g.grad_v, [&](const Tensor2& vv) { return mmd2(vv, u, sigmas); });
    const auto ru = acr::testing::finite_difference_check(
        u, g.grad_u, [&](const Tensor2& uu) { return mmd2(v, uu, sigmas); });
    CHECK_MESSAGE(rv.max_rel <= 1e-4, rv.worst);
    CHECK_MESSAGE(ru.max_rel <= 1e-4, ru.worst);
  }
}

TEST_CASE("unbiased mmd2 examples, oracle and errors") {
  const std::vector<double> one{1.0};
  const Tensor2 pair = Tensor2::from_rows({{0.0}, {1.0}});
  // Off-diagonal within-set means are k(0,1); the cross mean is (1 + k(0,1)) / 2.
  const double k01 = std::exp(-0.5);
  CHECK(mmd2(pair, pair, one, MmdEstimator::kUnbiased) == doctest::Approx(k01 - 1.0).epsilon(1e-15));

  Rng rng = make_rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Tensor2 v = random_tensor(2 + trial % 7, 3, rng);
    const Tensor2 u = random_tensor(2 + (trial * 5) % 9, 3, rng, -0.5, 1.5);
    const auto sigmas = median_bandwidths(v, u);
    CHECK(std::abs(mmd2(v, u, sigmas, MmdEstimator::kUnbiased) - brute_force_mmd2(v, u, sigmas, true)) <= 1e-10);
  }
  CHECK_THROWS_AS(mmd2(Tensor2(1, 2), Tensor2(3, 2), one, MmdEstimator::kUnbiased), InvalidInput);
  CHECK_THROWS_AS(mmd2_with_grad(Tensor2(3, 2), Tensor2(1, 2), one, MmdEstimator::kUnbiased), InvalidInput);
}

TEST_CASE("unbiased mmd2 averages to zero on same-distribution draws, the biased one does not") {
  Rng rng = make_rng(12);
  const std::vector<double> sigmas{0.25, 0.5, 1.0};
  double biased = 0.0, unbiased = 0.0;
  const int draws = 4000;
  for (int t = 0; t < draws; ++t) {
    const Tensor2 v = random_tensor(4, 2, rng);
    const Tensor2 u = random_tensor(6, 2, rng);
    biased += mmd2(v, u, sigmas);
    unbiased += mmd2(v, u, sigmas, MmdEstimator::kUnbiased);
  }
  biased /= draws;
  unbiased /= draws;
  CHECK(std::abs(unbiased) < 0.01);
  CHECK(biased > 0.1);
}

TEST_CASE("unbiased mmd2 gradient matches finite differences") {
  Rng rng = make_rng(13);
  for (int trial = 0; trial < 60; ++trial) {
    const Tensor2 v = random_tensor(2 + trial % 5, 3, rng);
    const Tensor2 u = random_tensor(2 + (trial * 3) % 6, 3, rng, -0.5, 1.5);
    const auto sigmas = median_bandwidths(v, u);
    const Mmd2Gradient g = mmd2_with_grad(v, u, sigmas, MmdEstimator::kUnbiased);
    CHECK(std::abs(g.value - mmd2(v, u, sigmas, MmdEstimator::kUnbiased)) <= 1e-12);
    const auto rv = acr::testing::finite_difference_check(
        v, g.grad_v, [&](const Tensor2& vv) { return mmd2(vv, u, sigmas, MmdEstimator::kUnbiased); });
    const auto ru = acr::testing::finite_difference_check(
        u, g.grad_u, [&](const Tensor2& uu) { return mmd2(v, uu, sigmas, MmdEstimator::kUnbiased); });
    CHECK_MESSAGE(rv.max_rel <= 1e-4, rv.worst);
    CHECK_MESSAGE(ru.max_rel <= 1e-4, ru.worst);
  }
}

TEST_CASE("median pairwise distance") {
  // Distances in {0,1,3}: pairs (0,1)=1, (0,3)=3, (1,3)=2 → median 2.
  const Tensor2 v = Tensor2::from_rows({{0.0}, {1.0}});
  const Tensor2 u = Tensor2::from_rows({{3.0}});
  CHECK(median_pairwise_distance(v, u) == 2.0);
  // Four points 0,1,2,4: distances 1,2,4,1,3,2 → sorted 1,1,2,2,3,4 → median 2.
  CHECK(median_pairwise_distance(Tensor2::from_rows({{0.0}, {1.0}}), Tensor2::from_rows({{2.0}, {4.0}})) == 2.0);
  // All points equal: fallback bandwidth 1.
  CHECK(median_pairwise_distance(Tensor2(3, 2), Tensor2(2, 2)) == 1.0);
  const auto s = median_bandwidths(v, u);
  CHECK(s == std::vector<double>{1.0, 2.0, 4.0});
}
