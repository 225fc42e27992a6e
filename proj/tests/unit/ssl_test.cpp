#include <cmath>

#include "acr/error.hpp"
#include "acr/prob.hpp"
#include "acr/ssl.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace acr;
using namespace acr::testing;

TEST_CASE("cross entropy examples") {
  const std::vector<int> y{0, 1, 2, 3};
  CHECK(cross_entropy_loss(Tensor2(4, 4), y).value == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  const Tensor2 confident = Tensor2::from_rows({{40.0, 0.0}, {0.0, 40.0}});
  const std::vector<int> y2{0, 1};
  CHECK(cross_entropy_loss(confident, y2).value < 1e-15);
  const std::vector<int> bad{0, 2};
  CHECK_THROWS_AS(cross_entropy_loss(Tensor2(2, 2), bad), InvalidLabel);
  const std::vector<int> neg{-1, 0};
  CHECK_THROWS_AS(cross_entropy_loss(Tensor2(2, 2), neg), InvalidLabel);
}

TEST_CASE("cross entropy matches a scalar loop oracle") {
  Rng rng = make_rng(50);
  const Tensor2 z = random_tensor(7, 5, rng, -4.0, 4.0);
  const std::vector<int> y = random_labels(7, 5, rng);
  double want = 0.0;
  for (std::size_t i = 0; i < 7; ++i) {
    double norm = 0.0;
    for (std::size_t k = 0; k < 5; ++k) norm += std::exp(z(i, k));
    want += -(z(i, static_cast<std::size_t>(y[i])) - std::log(norm)) / 7.0;
  }
  const LogitLoss l = cross_entropy_loss(z, y);
  CHECK(l.value == doctest::Approx(want).epsilon(1e-13));
  const auto report = finite_difference_check(
      z, l.grad_logits, [&](const Tensor2& zz) { return cross_entropy_loss(zz, y).value; });
  CHECK_MESSAGE(report.max_rel <= 1e-4, report.worst);
}

TEST_CASE("network cross entropy gradient matches finite differences") {
  Rng rng = make_rng(51);
  const Network net = default_network(16, 4, rng);
  const Tensor2 x = random_tensor(6, 16, rng);
  const std::vector<int> y = random_labels(6, 4, rng);
  const SslResult r = cross_entropy_loss(net, x, y);
  const auto report = finite_difference_check(
      net, r.grads, [&](const Network& n) { return cross_entropy_loss(n, x, y).value; }, rng);
  CHECK_MESSAGE(report.max_rel <= 1e-4, report.worst);
}

TEST_CASE("pseudo-label examples") {
  Rng rng = make_rng(52);
  const Tensor2 z = random_tensor(5, 3, rng, -1.0, 1.0);
  CHECK(pseudo_label_loss(z, 1.0).value == 0.0);
  CHECK(pseudo_label_loss(z, 1.0).accepted == 0);
  const Tensor2 sure = Tensor2::from_rows({{50.0, 0.0, 0.0}});
  CHECK(pseudo_label_loss(sure, 0.95).value < 1e-15);
  CHECK(pseudo_label_loss(sure, 0.95).accepted == 1);
}

TEST_CASE("pseudo-label loss on a 3-example batch matches hand-computed CE over the accepted set") {
  const Tensor2 z = Tensor2::from_rows({{4.0, 0.0}, {0.2, 0.0}, {0.0, 5.0}});
  const LogitLoss l = pseudo_label_loss(z, 0.9);
  CHECK(l.accepted == 2);
  const double ce0 = std::log(1.0 + std::exp(-4.0));
  const double ce2 = std::log(1.0 + std::exp(-5.0));
  CHECK(l.value == doctest::Approx(0.5 * (ce0 + ce2)).epsilon(1e-14));
  for (double g : l.grad_logits.row_span(1)) CHECK(g == 0.0);
}

TEST_CASE("pseudo-label gradient matches finite differences with fixed targets") {
  Rng rng = make_rng(53);
  Network net = default_network(16, 4, rng);
  net.head.weight *= 6.0;  // sharpen predictions so some rows pass the threshold
  const Tensor2 x = random_tensor(6, 16, rng);
  const Tensor2 noise = random_tensor(6, 16, rng, -0.05, 0.05);
  const Tensor2 xp = add(x, noise);
  const PseudoLabels targets = select_pseudo_labels(forward(net, xp).logits, 0.6);
  REQUIRE(!targets.rows.empty());
  const SslResult r = pseudo_label_loss(net, x, noise, 0.6);
  CHECK(r.accepted == targets.rows.size());
  auto loss = [&](const Network& n) { return pseudo_label_loss(forward(n, xp).logits, targets).value; };
  const auto report = finite_difference_check(net, r.grads, loss, rng);
  CHECK_MESSAGE(report.max_rel <= 1e-4, report.worst);
}

TEST_CASE("mean teacher: zero noise and equal models give zero loss") {
  Rng rng = make_rng(54);
  const Network net = default_network(8, 4, rng);
  const Tensor2 x = random_tensor(5, 8, rng);
  const SslResult r = mean_teacher_loss(net, net, x, Tensor2(), Tensor2());
  CHECK(r.value == 0.0);
}

TEST_CASE("mean teacher gradient reaches the student only and matches finite differences") {
  Rng rng = make_rng(55);
  const Network student = default_network(16, 4, rng);
  const Network teacher = default_network(16, 4, rng);
  const Network teacher_before = teacher;
  const Tensor2 x = random_tensor(6, 16, rng);
  const Tensor2 ns = random_tensor(6, 16, rng, -0.1, 0.1);
  const Tensor2 nt = random_tensor(6, 16, rng, -0.1, 0.1);
  const SslResult r = mean_teacher_loss(student, teacher, x, ns, nt);
  CHECK(parameter_hash(teacher) == parameter_hash(teacher_before));
  auto loss = [&](const Network& s) { return mean_teacher_loss(s, teacher, x, ns, nt).value; };
  const auto report = finite_difference_check(student, r.grads, loss, rng);
  CHECK_MESSAGE(report.max_rel <= 1e-4, report.worst);
}

TEST_CASE("mean teacher loss replays recorded noise") {
  Rng rng = make_rng(56);
  const Network student = default_network(8, 3, rng);
  const Network teacher = default_network(8, 3, rng);
  const Tensor2 x = random_tensor(4, 8, rng);
  const auto sd = column_std(x);
  Rng noise_a = make_rng(7, RngStream::kPerturbation);
  const Tensor2 ns = gaussian_perturbation(4, sd, 0.1, noise_a);
  const Tensor2 nt = gaussian_perturbation(4, sd, 0.1, noise_a);
  const double value = mean_teacher_loss(student, teacher, x, ns, nt).value;
  // Oracle: recompute both softmaxes from the recorded perturbations.
  const Tensor2 ps = softmax_rows(forward(student, add(x, ns)).logits);
  const Tensor2 pt = softmax_rows(forward(teacher, add(x, nt)).logits);
  double want = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) want += (ps[i] - pt[i]) * (ps[i] - pt[i]);
  want /= static_cast<double>(ps.size());
  CHECK(value == doctest::Approx(want).epsilon(1e-14));
  Rng noise_b = make_rng(7, RngStream::kPerturbation);
  CHECK(gaussian_perturbation(4, sd, 0.1, noise_b) == ns);
}

TEST_CASE("perturbation scale follows the per-feature std") {
  const Tensor2 x = Tensor2::from_rows({{0.0, 10.0}, {2.0, 10.0}});
  const auto sd = column_std(x);
  CHECK(sd == std::vector<double>{1.0, 0.0});
  Rng rng = make_rng(57);
  const Tensor2 n = gaussian_perturbation(100, sd, 0.1, rng);
  for (std::size_t i = 0; i < 100; ++i) CHECK(n(i, 1) == 0.0);
  CHECK_THROWS_AS(gaussian_perturbation(1, sd, -1.0, rng), InvalidInput);
}

TEST_CASE("ssl method names round-trip") {
  for (SslMethod m : {SslMethod::kNone, SslMethod::kPseudoLabel, SslMethod::kMeanTeacher}) {
    CHECK(ssl_method_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(ssl_method_from_string("fixmatch"), InvalidInput);
}
