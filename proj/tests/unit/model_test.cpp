#include <cmath>
#include <sstream>

#include "acr/checkpoint.hpp"
#include "acr/error.hpp"
#include "acr/model.hpp"
#include "acr/prob.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace acr;
using namespace acr::testing;

TEST_CASE("zero weights and biases give zero features") {
  Rng rng = make_rng(11);
  std::vector<std::size_t> dims{5, 4, 3};
  MlpExtractor ext = MlpExtractor::glorot(dims, rng);
  for (auto& l : ext.layers()) {
    l.weight.fill(0.0);
    l.bias.fill(0.0);
  }
  const Tensor2 f = forward_features(ext, random_tensor(6, 5, rng)).features;
  CHECK(f == Tensor2(6, 3));
}

TEST_CASE("a single identity layer passes non-negative inputs through") {
  MlpExtractor ext({DenseLayer{Tensor2::identity(3), Tensor2(1, 3)}});
  Rng rng = make_rng(12);
  const Tensor2 x = random_tensor(4, 3, rng, 0.0, 2.0);
  CHECK(forward_features(ext, x).features == x);
}

TEST_CASE("forward matches the scalar-loop oracle") {
  Rng rng = make_rng(13);
  const Network net = default_network(16, 4, rng);
  const Tensor2 x = random_tensor(9, 16, rng);
  const ForwardTrace t = forward(net, x);
  const Tensor2 f = loop_features(net.extractor, x);
  const Tensor2 z = loop_logits(net.head, f);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(t.features()[i] == doctest::Approx(f[i]).epsilon(1e-13));
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(t.logits[i] == doctest::Approx(z[i]).epsilon(1e-13));
}

TEST_CASE("forward_logits contracts") {
  Rng rng = make_rng(14);
  LinearHead head = LinearHead::glorot(3, 3, rng);
  head.bias = Tensor2::row({0.1, -0.2, 0.3});
  const Tensor2 zero_logits = forward_logits(head, Tensor2(2, 3));
  CHECK(zero_logits == Tensor2::from_rows({{0.1, -0.2, 0.3}, {0.1, -0.2, 0.3}}));
  head.weight = Tensor2::identity(3);
  head.bias.fill(0.0);
  const Tensor2 f = random_tensor(4, 3, rng);
  CHECK(forward_logits(head, f) == f);
  CHECK_THROWS_AS(forward_logits(head, Tensor2(2, 4)), ShapeError);
}

TEST_CASE("forward rejects the wrong input width") {
  Rng rng = make_rng(15);
  const Network net = default_network(16, 4, rng);
  CHECK_THROWS_AS(forward(net, Tensor2(2, 15)), ShapeError);
}

TEST_CASE("backward without a cached forward pass is a StateError") {
  Rng rng = make_rng(16);
  const Network net = default_network(4, 3, rng);
  Network grads = net.zeros_like();
  CHECK_THROWS_AS(backward(net, ForwardTrace{}, Tensor2(), Tensor2(), grads), StateError);
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  Rng rng = make_rng(17);
  const Network net = default_network(4, 3, rng);
  const ForwardTrace t = forward(net, random_tensor(5, 4, rng));
  Network grads = net.zeros_like();
  backward(net, t, Tensor2(5, 32), Tensor2(5, 3), grads);
  for (const Tensor2* p : parameter_list(std::as_const(grads))) CHECK(*p == Tensor2(p->rows(), p->cols()));
}

TEST_CASE("backward matches finite differences for a linear functional of features and logits") {
  Rng rng = make_rng(18);
  const Network net = default_network(16, 4, rng);
  const Tensor2 x = random_tensor(6, 16, rng);
  const Tensor2 wf = random_tensor(6, 32, rng);
  const Tensor2 wz = random_tensor(6, 4, rng);
  auto loss = [&](const Network& n) {
    const ForwardTrace t = forward(n, x);
    double s = 0.0;
    for (std::size_t i = 0; i < wf.size(); ++i) s += wf[i] * t.features()[i];
    for (std::size_t i = 0; i < wz.size(); ++i) s += wz[i] * t.logits[i];
    return s;
  };
  Network grads = net.zeros_like();
  backward(net, forward(net, x), wf, wz, grads);
  const auto report = finite_difference_check(net, grads, loss, rng);
  CHECK_MESSAGE(report.max_rel <= 1e-4, report.worst);
  CHECK(report.checked == net.parameter_count());
}

TEST_CASE("imprint examples") {
  const Tensor2 f = Tensor2::from_rows({{3.0, 4.0}, {0.0, 2.0}});
  const std::vector<int> y{0, 1};
  const LinearHead h = imprint(f, y, 2);
  CHECK(h.weight(0, 0) == doctest::Approx(0.6));
  CHECK(h.weight(0, 1) == doctest::Approx(0.8));
  CHECK(h.weight(1, 0) == 0.0);
  CHECK(h.weight(1, 1) == 1.0);
  CHECK(h.bias == Tensor2(1, 2));

  const Tensor2 f2 = Tensor2::from_rows({{3.0, 4.0}, {3.0, 4.0}, {0.0, 2.0}, {0.0, 2.0}});
  const std::vector<int> y2{0, 0, 1, 1};
  CHECK(imprint(f2, y2, 2).weight == h.weight);

  const std::vector<int> missing{0, 0};
  CHECK_THROWS_AS(imprint(f, missing, 2), MissingClassError);
}

TEST_CASE("imprinted rows have unit norm and follow normalized class means") {
  Rng rng = make_rng(19);
  const Tensor2 f = random_tensor(30, 8, rng, 0.0, 2.0);
  std::vector<int> y(30);
  for (std::size_t i = 0; i < 30; ++i) y[i] = static_cast<int>(i % 3);
  const LinearHead h = imprint(f, y, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> mean(8, 0.0);
    for (std::size_t i = 0; i < 30; ++i) {
      if (y[i] != static_cast<int>(c)) continue;
      double n = 0.0;
      for (std::size_t k = 0; k < 8; ++k) n += f(i, k) * f(i, k);
      n = std::sqrt(n);
      for (std::size_t k = 0; k < 8; ++k) mean[k] += f(i, k) / n;
    }
    double mn = 0.0, rn = 0.0;
    for (double v : mean) mn += v * v;
    mn = std::sqrt(mn);
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(h.weight(c, k) == doctest::Approx(mean[k] / mn).epsilon(1e-12));
      rn += h.weight(c, k) * h.weight(c, k);
    }
    CHECK(std::abs(std::sqrt(rn) - 1.0) <= 1e-9);
  }
}

TEST_CASE("ema_update examples") {
  Rng rng = make_rng(20);
  const Network student = default_network(4, 3, rng);
  Network teacher = default_network(4, 3, rng);
  const Network teacher0 = teacher;

  Network t1 = teacher;
  ema_update(t1, student, 1.0);
  CHECK(parameter_hash(t1) == parameter_hash(teacher0));
  Network t0 = teacher;
  ema_update(t0, student, 0.0);
  CHECK(parameter_hash(t0) == parameter_hash(student));

  Network zero = student.zeros_like();
  Network one = student.zeros_like();
  for (Tensor2* p : parameter_list(one)) p->fill(1.0);
  ema_update(zero, one, 0.999);
  CHECK((*parameter_list(zero)[0])[0] == doctest::Approx(0.001).epsilon(1e-12));

  Network other = default_network(5, 3, rng);
  CHECK_THROWS_AS(ema_update(teacher, other, 0.5), ShapeError);
}

TEST_CASE("ModelPair copies the source extractor and keeps it separate") {
  Rng rng = make_rng(21);
  const Network source = default_network(6, 5, rng);
  ModelPair pair(source, LinearHead::glorot(32, 3, rng));
  CHECK(parameter_hash(pair.source()) == parameter_hash(source));
  const auto before = parameter_hash(pair.source());
  (*parameter_list(pair.target())[0])[0] += 1.0;
  CHECK(parameter_hash(pair.source()) == before);
  CHECK(pair.target().head.classes() == 3);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  Rng rng = make_rng(22);
  const Network net = default_network(7, 4, rng);
  std::stringstream buf;
  write_checkpoint(buf, net);
  const Network back = read_checkpoint(buf);
  const auto a = parameter_list(net);
  const auto b = parameter_list(back);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
  CHECK(parameter_hash(net) == parameter_hash(back));

  std::stringstream garbage("not a checkpoint");
  CHECK_THROWS_AS(read_checkpoint(garbage), ParseError);
  std::string truncated = buf.str().substr(0, buf.str().size() / 2);
  std::stringstream half(truncated);
  CHECK_THROWS_AS(read_checkpoint(half), ParseError);
}

TEST_CASE("accuracy and predict") {
  Network net;
  net.extractor = MlpExtractor({DenseLayer{Tensor2::identity(2), Tensor2(1, 2)}});
  net.head = LinearHead{Tensor2::identity(2), Tensor2(1, 2)};
  const Tensor2 x = Tensor2::from_rows({{1.0, 0.0}, {0.0, 1.0}, {2.0, 1.0}});
  CHECK(predict(net, x) == std::vector<int>{0, 1, 0});
  const std::vector<int> y{0, 1, 1};
  CHECK(accuracy(net, x, y) == doctest::Approx(2.0 / 3.0));
}
