#include "acr/consistency.hpp"

#include <cmath>
#include <string>

#include "acr/error.hpp"
#include "acr/kernel.hpp"

namespace acr {

GateConfig GateConfig::from_ratios(double ratio_k, double ratio_r, std::size_t source_classes,
                                   std::size_t target_classes) {
  if (source_classes < 2 || target_classes < 2) throw InvalidInput("GateConfig: need >= 2 classes");
  if (ratio_k < 0.0 || ratio_r < 0.0) throw InvalidInput("GateConfig: negative threshold ratio");
  return {ratio_k * std::log(static_cast<double>(source_classes)),
          ratio_r * std::log(static_cast<double>(target_classes))};
}

GateConfig GateConfig::defaults(std::size_t source_classes, std::size_t target_classes) {
  return from_ratios(0.7, 0.7, source_classes, target_classes);
}

double entropy_gate(double entropy_nats, double eps) { return entropy_nats <= eps ? 1.0 : 0.0; }

std::vector<double> entropy_gate(std::span<const double> entropies, double eps) {
  std::vector<double> w(entropies.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = entropy_gate(entropies[i], eps);
  return w;
}

double akc_gate(const ProbVec& p_source, double eps_k) {
  return entropy_gate(entropy(p_source), eps_k);
}

AkcTerm akc_term(const Tensor2& source_features, const Tensor2& target_features,
                 std::span<const double> weights, Divergence mode) {
  require_same_shape(source_features, target_features, "akc_term");
  const std::size_t batch = target_features.rows();
  const std::size_t h = target_features.cols();
  if (batch == 0) throw EmptyInput("akc_term: empty batch");
  if (weights.size() != batch) throw ShapeError("akc_term: one weight per row required");

  AkcTerm out;
  out.grad_target_features = Tensor2(batch, h);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double selected = 0.0;
  std::vector<double> p(h), q(h), grad_q(h);

  for (std::size_t i = 0; i < batch; ++i) {
    const double w = weights[i];
    selected += w;
    if (w == 0.0) continue;
    auto src = source_features.row_span(i);
    auto tgt = target_features.row_span(i);
    auto g = out.grad_target_features.row_span(i);
    const double coef = w * inv_batch;

    if (mode == Divergence::kMse) {
      double d = 0.0;
      for (std::size_t k = 0; k < h; ++k) {
        const double diff = tgt[k] - src[k];
        d += diff * diff;
        g[k] = coef * 2.0 * diff / static_cast<double>(h);
      }
      out.value += coef * d / static_cast<double>(h);
    } else {
      detail::softmax_into(src, p);
      detail::softmax_into(tgt, q);
      out.value += coef * detail::kl_of(p, q);
      for (std::size_t k = 0; k < h; ++k) {
        grad_q[k] = (p[k] > 0.0 && q[k] >= kLogClamp) ? -p[k] / q[k] : 0.0;
      }
      detail::softmax_backward(q, grad_q, g);
      for (double& v : g) v *= coef;
    }
  }
  out.selected_fraction = selected * inv_batch;
  return out;
}

std::vector<double> akc_weights(const Network& source, const Tensor2& x, double eps_k) {
  const Tensor2 probs = softmax_rows(forward(source, x).logits);
  return entropy_gate(entropy_rows(probs), eps_k);
}

AkcResult akc_loss(const ModelPair& pair, const Tensor2& x, std::span<const double> weights,
                   Divergence mode) {
  if (x.rows() == 0) throw EmptyInput("akc_loss: empty batch");
  const Tensor2 source_features = forward_features(pair.source().extractor, x).features;
  const ExtractorTrace trace = forward_features(pair.target().extractor, x);
  AkcTerm term = akc_term(source_features, trace.features, weights, mode);

  AkcResult out;
  out.value = term.value;
  out.selected_fraction = term.selected_fraction;
  out.grads = pair.target().zeros_like();
  backward_features(pair.target().extractor, trace, term.grad_target_features, out.grads.extractor);
  return out;
}

AkcResult akc_loss(const ModelPair& pair, const Tensor2& x_labeled, const Tensor2& x_unlabeled,
                   const GateConfig& gate, Divergence mode) {
  const Tensor2 x = vstack(x_labeled, x_unlabeled);
  if (x.rows() == 0) throw EmptyInput("akc_loss: empty batch");
  const auto weights = akc_weights(pair.source(), x, gate.eps_k);
  return akc_loss(pair, x, weights, mode);
}

std::vector<std::size_t> selected_indices(std::span<const double> entropies, double eps) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < entropies.size(); ++i) {
    if (entropies[i] <= eps) idx.push_back(i);
  }
  return idx;
}

Tensor2 arc_select(const Tensor2& features, std::span<const ProbVec> preds, double eps_r) {
  if (features.rows() != preds.size()) {
    throw ShapeError("arc_select: " + std::to_string(features.rows()) + " rows, " +
                     std::to_string(preds.size()) + " predictions");
  }
  std::vector<double> h(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) h[i] = entropy(preds[i]);
  return features.select_rows(selected_indices(h, eps_r));
}

namespace {

struct StreamPlan {
  std::vector<std::size_t> live;
  Tensor2 stale;
  Tensor2 fetched;
  double fraction = 0.0;
};

StreamPlan plan_stream(const Tensor2& features, const Tensor2& logits, double eps_r,
                       ReplayBuffer& buffer, std::int64_t step) {
  if (features.rows() != logits.rows()) throw ShapeError("plan_arc: features/logits row mismatch");
  StreamPlan sp;
  const auto entropies = entropy_rows(softmax_rows(logits));
  const auto selected = selected_indices(entropies, eps_r);
  sp.fraction = features.rows() == 0
                    ? 0.0
                    : static_cast<double>(selected.size()) / static_cast<double>(features.rows());

  ReplayBuffer::Fetch fetch = buffer.update_and_fetch(features.select_rows(selected), step);
  sp.live.assign(selected.end() - static_cast<std::ptrdiff_t>(fetch.live), selected.end());
  std::vector<std::size_t> stale_rows(fetch.rows.rows() - fetch.live);
  for (std::size_t i = 0; i < stale_rows.size(); ++i) stale_rows[i] = i;
  sp.stale = fetch.rows.select_rows(stale_rows);
  sp.fetched = std::move(fetch.rows);
  return sp;
}

Tensor2 assemble(const Tensor2& stale, const Tensor2& features, std::span<const std::size_t> live) {
  return vstack(stale, features.select_rows(live));
}

void scatter_live(const Tensor2& grad_set, std::size_t stale_rows, std::span<const std::size_t> live,
                  Tensor2& grad_batch) {
  for (std::size_t i = 0; i < live.size(); ++i) {
    auto src = grad_set.row_span(stale_rows + i);
    auto dst = grad_batch.row_span(live[i]);
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
  }
}

}  // namespace

ArcPlan plan_arc(const Tensor2& features_l, const Tensor2& logits_l, const Tensor2& features_u,
                 const Tensor2& logits_u, double eps_r, ArcBuffers& buffers, std::int64_t step,
                 MmdEstimator estimator) {
  StreamPlan l = plan_stream(features_l, logits_l, eps_r, buffers.labeled, step);
  StreamPlan u = plan_stream(features_u, logits_u, eps_r, buffers.unlabeled, step);

  ArcPlan plan;
  plan.estimator = estimator;
  plan.labeled_fraction = l.fraction;
  plan.unlabeled_fraction = u.fraction;
  plan.skip = l.fetched.rows() < 2 || u.fetched.rows() < 2;
  if (!plan.skip) plan.sigmas = median_bandwidths(l.fetched, u.fetched);
  plan.labeled_live = std::move(l.live);
  plan.unlabeled_live = std::move(u.live);
  plan.labeled_stale = std::move(l.stale);
  plan.unlabeled_stale = std::move(u.stale);
  return plan;
}

ArcTerm arc_term(const ArcPlan& plan, const Tensor2& features_l, const Tensor2& features_u) {
  ArcTerm out;
  out.grad_labeled = Tensor2(features_l.rows(), features_l.cols());
  out.grad_unlabeled = Tensor2(features_u.rows(), features_u.cols());
  if (plan.skip) return out;

  const Tensor2 v = assemble(plan.labeled_stale, features_l, plan.labeled_live);
  const Tensor2 u = assemble(plan.unlabeled_stale, features_u, plan.unlabeled_live);
  const Mmd2Gradient m = mmd2_with_grad(v, u, plan.sigmas, plan.estimator);
  out.value = m.value;
  scatter_live(m.grad_v, plan.labeled_stale.rows(), plan.labeled_live, out.grad_labeled);
  scatter_live(m.grad_u, plan.unlabeled_stale.rows(), plan.unlabeled_live, out.grad_unlabeled);
  return out;
}

ArcResult arc_loss(const ModelPair& pair, const Tensor2& x_labeled, const Tensor2& x_unlabeled,
                   const GateConfig& gate, ArcBuffers& buffers, std::int64_t step,
                   MmdEstimator estimator) {
  const Network& target = pair.target();
  const ForwardTrace tl = forward(target, x_labeled);
  const ForwardTrace tu = forward(target, x_unlabeled);

  ArcResult out;
  out.plan = plan_arc(tl.features(), tl.logits, tu.features(), tu.logits, gate.eps_r, buffers, step, estimator);
  out.labeled_fraction = out.plan.labeled_fraction;
  out.unlabeled_fraction = out.plan.unlabeled_fraction;
  const ArcTerm term = arc_term(out.plan, tl.features(), tu.features());
  out.value = term.value;
  out.grads = target.zeros_like();
  backward_features(target.extractor, tl.extractor, term.grad_labeled, out.grads.extractor);
  backward_features(target.extractor, tu.extractor, term.grad_unlabeled, out.grads.extractor);
  return out;
}

}  // namespace acr
