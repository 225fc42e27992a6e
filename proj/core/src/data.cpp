#include "acr/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "acr/error.hpp"
#include "acr/rng.hpp"

namespace acr {

namespace {

std::vector<double> gaussian_vector(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(d);
  for (double& x : v) x = normal(rng);
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

// Random orthonormal basis of R^d (rows), Gram-Schmidt on Gaussian draws.
std::vector<std::vector<double>> random_frame(std::size_t d, Rng& rng) {
  std::vector<std::vector<double>> basis;
  while (basis.size() < d) {
    auto v = gaussian_vector(d, rng);
    for (const auto& b : basis) {
      const double p = dot(v, b);
      for (std::size_t k = 0; k < d; ++k) v[k] -= p * b[k];
    }
    const double n = std::sqrt(dot(v, v));
    if (n < 1e-8) continue;
    for (double& x : v) x /= n;
    basis.push_back(std::move(v));
  }
  return basis;
}

// Means with all pairwise distances 1 when classes <= d (scaled orthonormal
// directions); otherwise random directions of the same norm.
Tensor2 unit_spaced_means(std::size_t classes, std::size_t d, Rng& rng) {
  Tensor2 means(classes, d);
  const double radius = 1.0 / std::numbers::sqrt2;
  if (classes <= d) {
    const auto frame = random_frame(d, rng);
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t k = 0; k < d; ++k) means(c, k) = radius * frame[c][k];
    }
  } else {
    for (std::size_t c = 0; c < classes; ++c) {
      auto v = gaussian_vector(d, rng);
      normalize(v);
      for (std::size_t k = 0; k < d; ++k) means(c, k) = radius * v[k];
    }
  }
  return means;
}

// Rotation by `angle` in each of the floor(d/2) planes of a random orthonormal
// frame, so every vector is turned by the same angle (up to a fixed axis when d is odd).
Tensor2 rotation_matrix(std::size_t d, double angle, Rng& rng) {
  const auto frame = random_frame(d, rng);
  Tensor2 r = Tensor2::identity(d);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (std::size_t p = 0; p + 1 < d; p += 2) {
    const auto& a = frame[p];
    const auto& b = frame[p + 1];
    // R += (c−1)(aaᵀ + bbᵀ) + s(baᵀ − abᵀ)
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        r(i, j) += (c - 1.0) * (a[i] * a[j] + b[i] * b[j]) + s * (b[i] * a[j] - a[i] * b[j]);
      }
    }
  }
  return r;
}

LabeledSet sample_clusters(const Tensor2& means, double std_dev, std::size_t count,
                           std::size_t first_id, Rng& rng) {
  const std::size_t classes = means.rows();
  const std::size_t d = means.cols();
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<int>(i % classes);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::normal_distribution<double> normal(0.0, std_dev);
  LabeledSet set;
  set.x = Tensor2(count, d);
  set.y = labels;
  set.ids.resize(count);
  set.classes = classes;
  for (std::size_t i = 0; i < count; ++i) {
    auto row = set.x.row_span(i);
    auto mu = means.row_span(static_cast<std::size_t>(labels[i]));
    for (std::size_t k = 0; k < d; ++k) row[k] = mu[k] + normal(rng);
    set.ids[i] = first_id + i;
  }
  return set;
}

}  // namespace

LabeledSet LabeledSet::subset(std::span<const std::size_t> rows) const {
  LabeledSet out;
  out.x = x.select_rows(rows);
  out.classes = classes;
  out.y.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (std::size_t r : rows) {
    out.y.push_back(y[r]);
    out.ids.push_back(ids[r]);
  }
  return out;
}

void SyntheticTaskSpec::validate() const {
  std::string problems;
  auto fail = [&](const char* field, const std::string& why) {
    problems += std::string("task.") + field + ": " + why + "\n";
  };
  if (input_dim < 2) fail("input_dim", "must be >= 2");
  if (target_classes < 2) fail("target_classes", "must be >= 2");
  if (source_classes < target_classes) fail("source_classes", "must be >= target_classes");
  if (!(cluster_std > 0.0) || !std::isfinite(cluster_std)) fail("cluster_std", "must be > 0");
  if (!std::isfinite(transfer_rotation_deg)) fail("transfer_rotation_deg", "must be finite");
  if (!std::isfinite(transfer_shift)) fail("transfer_shift", "must be finite");
  if (source_train < source_classes) fail("source_train", "needs at least one example per class");
  if (target_train < target_classes) fail("target_train", "needs at least one example per class");
  if (target_test == 0) fail("target_test", "must be >= 1");
  if (!problems.empty()) throw ConfigError(problems);
}

TransferTask generate_task(const SyntheticTaskSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, RngStream::kTaskData);
  const std::size_t d = spec.input_dim;

  TransferTask task;
  task.source_means = unit_spaced_means(spec.source_classes, d, rng);

  std::vector<std::size_t> pick(spec.source_classes);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  std::shuffle(pick.begin(), pick.end(), rng);
  pick.resize(spec.target_classes);
  task.target_from_source = pick;

  const double angle = spec.transfer_rotation_deg * std::numbers::pi / 180.0;
  const Tensor2 rot = rotation_matrix(d, angle, rng);
  auto shift_dir = gaussian_vector(d, rng);
  normalize(shift_dir);

  task.target_means = Tensor2(spec.target_classes, d);
  for (std::size_t c = 0; c < spec.target_classes; ++c) {
    auto mu = task.source_means.row_span(pick[c]);
    auto out = task.target_means.row_span(c);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += rot(i, j) * mu[j];
      out[i] = acc + spec.transfer_shift * shift_dir[i];
    }
  }

  std::size_t next_id = 0;
  task.source_train = sample_clusters(task.source_means, spec.cluster_std, spec.source_train, next_id, rng);
  next_id += spec.source_train;
  task.source_test = sample_clusters(task.source_means, spec.cluster_std, spec.source_test, next_id, rng);
  next_id += spec.source_test;
  task.target_train = sample_clusters(task.target_means, spec.cluster_std, spec.target_train, next_id, rng);
  next_id += spec.target_train;
  task.target_test = sample_clusters(task.target_means, spec.cluster_std, spec.target_test, next_id, rng);
  return task;
}

SplitSet split_labeled(const LabeledSet& train, const LabeledSet& test, std::size_t n,
                       std::uint64_t seed) {
  const std::size_t classes = train.classes;
  if (n < classes) {
    throw InvalidSplit("split_labeled: n=" + std::to_string(n) + " is below the class count " +
                       std::to_string(classes) + "; every class needs a labeled example");
  }
  if (n > train.size()) {
    throw InvalidSplit("split_labeled: n=" + std::to_string(n) + " exceeds the " +
                       std::to_string(train.size()) + " available examples");
  }
  Rng rng = make_rng(seed, RngStream::kSplit);

  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < train.size(); ++i) by_class[static_cast<std::size_t>(train.y[i])].push_back(i);
  for (std::size_t c = 0; c < classes; ++c) {
    if (by_class[c].empty()) {
      throw InvalidSplit("split_labeled: class " + std::to_string(c) + " has no training example");
    }
    std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
  }

  // Water-filling: hand out one slot per class in a random class order until n is reached.
  std::vector<std::size_t> quota(classes, 0);
  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t assigned = 0;
  while (assigned < n) {
    for (std::size_t c : order) {
      if (assigned == n) break;
      if (quota[c] < by_class[c].size()) {
        ++quota[c];
        ++assigned;
      }
    }
  }

  std::vector<bool> is_labeled(train.size(), false);
  std::vector<std::size_t> labeled_rows;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < quota[c]; ++k) {
      labeled_rows.push_back(by_class[c][k]);
      is_labeled[by_class[c][k]] = true;
    }
  }
  std::sort(labeled_rows.begin(), labeled_rows.end());
  std::vector<std::size_t> unlabeled_rows;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!is_labeled[i]) unlabeled_rows.push_back(i);
  }

  SplitSet split;
  split.labeled = train.subset(labeled_rows);
  const LabeledSet rest = train.subset(unlabeled_rows);
  split.unlabeled = rest.x;
  split.unlabeled_ids = rest.ids;
  split.unlabeled_hidden_labels = rest.y;
  split.test = test;
  return split;
}

}  // namespace acr
