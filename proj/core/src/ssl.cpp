#include "acr/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acr/error.hpp"
#include "acr/prob.hpp"

namespace acr {

std::string_view to_string(SslMethod m) {
  switch (m) {
    case SslMethod::kNone: return "none";
    case SslMethod::kPseudoLabel: return "pseudo_label";
    case SslMethod::kMeanTeacher: return "mean_teacher";
  }
  return "none";
}

SslMethod ssl_method_from_string(std::string_view s) {
  if (s == "none") return SslMethod::kNone;
  if (s == "pseudo_label") return SslMethod::kPseudoLabel;
  if (s == "mean_teacher") return SslMethod::kMeanTeacher;
  throw InvalidInput("unknown ssl method '" + std::string(s) + "'");
}

namespace {

// Adds (p − onehot(label)) · coef into grad_row, with the clamp respected.
double ce_row(std::span<const double> logits, int label, double coef, std::span<double> grad_row) {
  std::vector<double> p(logits.size());
  detail::softmax_into(logits, p);
  const double py = p[static_cast<std::size_t>(label)];
  if (py < kLogClamp) return -std::log(kLogClamp);
  for (std::size_t j = 0; j < p.size(); ++j) grad_row[j] += coef * p[j];
  grad_row[static_cast<std::size_t>(label)] -= coef;
  return -std::log(py);
}

Tensor2 perturbed(const Tensor2& x, const Tensor2& noise) {
  if (noise.empty()) return x;
  return add(x, noise);
}

}  // namespace

LogitLoss cross_entropy_loss(const Tensor2& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) throw ShapeError("cross_entropy_loss: row/label mismatch");
  if (logits.rows() == 0) throw EmptyInput("cross_entropy_loss: empty batch");
  const int classes = static_cast<int>(logits.cols());
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw InvalidLabel("cross_entropy_loss: label " + std::to_string(y) + " outside [0," +
                         std::to_string(classes) + ")");
    }
  }
  LogitLoss out;
  out.grad_logits = Tensor2(logits.rows(), logits.cols());
  out.accepted = logits.rows();
  const double coef = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    out.value += coef * ce_row(logits.row_span(i), labels[i], coef, out.grad_logits.row_span(i));
  }
  return out;
}

PseudoLabels select_pseudo_labels(const Tensor2& logits, double confidence) {
  PseudoLabels pl;
  std::vector<double> p(logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    detail::softmax_into(logits.row_span(i), p);
    const auto top = std::max_element(p.begin(), p.end());
    if (*top >= confidence) {
      pl.rows.push_back(i);
      pl.labels.push_back(static_cast<int>(top - p.begin()));
    }
  }
  return pl;
}

LogitLoss pseudo_label_loss(const Tensor2& logits, const PseudoLabels& targets) {
  LogitLoss out;
  out.grad_logits = Tensor2(logits.rows(), logits.cols());
  out.accepted = targets.rows.size();
  if (targets.rows.empty()) return out;
  const double coef = 1.0 / static_cast<double>(targets.rows.size());
  for (std::size_t a = 0; a < targets.rows.size(); ++a) {
    const std::size_t i = targets.rows[a];
    out.value += coef * ce_row(logits.row_span(i), targets.labels[a], coef, out.grad_logits.row_span(i));
  }
  return out;
}

LogitLoss pseudo_label_loss(const Tensor2& logits, double confidence) {
  return pseudo_label_loss(logits, select_pseudo_labels(logits, confidence));
}

LogitLoss mean_teacher_loss(const Tensor2& student_logits, const Tensor2& teacher_probs) {
  require_same_shape(student_logits, teacher_probs, "mean_teacher_loss");
  LogitLoss out;
  out.grad_logits = Tensor2(student_logits.rows(), student_logits.cols());
  out.accepted = student_logits.rows();
  if (student_logits.size() == 0) return out;
  const double coef = 1.0 / static_cast<double>(student_logits.size());
  std::vector<double> p(student_logits.cols()), gp(student_logits.cols());
  for (std::size_t i = 0; i < student_logits.rows(); ++i) {
    detail::softmax_into(student_logits.row_span(i), p);
    auto t = teacher_probs.row_span(i);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double d = p[j] - t[j];
      out.value += coef * d * d;
      gp[j] = 2.0 * coef * d;
    }
    detail::softmax_backward(p, gp, out.grad_logits.row_span(i));
  }
  return out;
}

std::vector<double> column_std(const Tensor2& x) {
  std::vector<double> mean(x.cols(), 0.0), sd(x.cols(), 0.0);
  if (x.rows() == 0) return sd;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row_span(i);
    for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row_span(i);
    for (std::size_t j = 0; j < x.cols(); ++j) sd[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  }
  for (double& s : sd) s = std::sqrt(s / static_cast<double>(x.rows()));
  return sd;
}

Tensor2 gaussian_perturbation(std::size_t rows, std::span<const double> feature_std,
                              double noise_std, Rng& rng) {
  if (noise_std < 0.0) throw InvalidInput("gaussian_perturbation: negative noise_std");
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor2 out(rows, feature_std.size());
  for (std::size_t i = 0; i < rows; ++i) {
    auto r = out.row_span(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = normal(rng) * noise_std * feature_std[j];
  }
  return out;
}

SslResult cross_entropy_loss(const Network& model, const Tensor2& x, std::span<const int> labels) {
  const ForwardTrace t = forward(model, x);
  const LogitLoss l = cross_entropy_loss(t.logits, labels);
  SslResult out{l.value, model.zeros_like(), l.accepted};
  backward(model, t, Tensor2(), l.grad_logits, out.grads);
  return out;
}

SslResult pseudo_label_loss(const Network& model, const Tensor2& x_unlabeled,
                            const Tensor2& perturbation, double confidence) {
  if (x_unlabeled.rows() == 0) throw EmptyInput("pseudo_label_loss: empty batch");
  const ForwardTrace t = forward(model, perturbed(x_unlabeled, perturbation));
  const LogitLoss l = pseudo_label_loss(t.logits, confidence);
  SslResult out{l.value, model.zeros_like(), l.accepted};
  backward(model, t, Tensor2(), l.grad_logits, out.grads);
  return out;
}

SslResult mean_teacher_loss(const Network& student, const Network& teacher,
                            const Tensor2& x_unlabeled, const Tensor2& student_perturbation,
                            const Tensor2& teacher_perturbation) {
  const Tensor2 teacher_probs =
      softmax_rows(forward(teacher, perturbed(x_unlabeled, teacher_perturbation)).logits);
  const ForwardTrace t = forward(student, perturbed(x_unlabeled, student_perturbation));
  const LogitLoss l = mean_teacher_loss(t.logits, teacher_probs);
  SslResult out{l.value, student.zeros_like(), l.accepted};
  backward(student, t, Tensor2(), l.grad_logits, out.grads);
  return out;
}

}  // namespace acr
