#include "acr/total_loss.hpp"
#include <algorithm>

#include "acr/error.hpp"
#include "acr/prob.hpp"

namespace acr {

namespace {

bool needs_unlabeled(const LossConfig& c) { return c.akc || c.arc; }
bool needs_perturbed(const LossConfig& c) { return c.ssl.method != SslMethod::kNone; }

Tensor2 top_rows(const Tensor2& t, std::size_t count) {
  Tensor2 out(count, t.cols());
  std::copy(t.values().begin(), t.values().begin() + static_cast<std::ptrdiff_t>(count * t.cols()),
            out.values().begin());
  return out;
}

Tensor2 bottom_rows(const Tensor2& t, std::size_t from) {
  Tensor2 out(t.rows() - from, t.cols());
  std::copy(t.values().begin() + static_cast<std::ptrdiff_t>(from * t.cols()), t.values().end(),
            out.values().begin());
  return out;
}

Tensor2 with_noise(const Tensor2& x, const Tensor2& noise) {
  return noise.empty() ? x : add(x, noise);
}

}  // namespace

StepBatch make_step_batch(const ModelPair& pair, Tensor2 x_labeled, std::vector<int> y_labeled,
                          Tensor2 x_unlabeled, const GateConfig& gate) {
  StepBatch b;
  b.x_labeled = std::move(x_labeled);
  b.y_labeled = std::move(y_labeled);
  b.x_unlabeled = std::move(x_unlabeled);
  const Tensor2 all = vstack(b.x_labeled, b.x_unlabeled);
  const ForwardTrace src = forward(pair.source(), all);
  b.source_features = src.features();
  b.akc_weights = entropy_gate(entropy_rows(softmax_rows(src.logits)), gate.eps_k);
  return b;
}

StepTraces compute_traces(const Network& target, const StepBatch& batch, const LossConfig& config,
                          const Perturbations& noise) {
  if (batch.x_labeled.rows() == 0) throw EmptyInput("total_loss: empty labeled batch");
  StepTraces t;
  t.labeled = forward(target, batch.x_labeled);
  if (needs_unlabeled(config)) t.unlabeled = forward(target, batch.x_unlabeled);
  if (needs_perturbed(config)) {
    if (batch.x_unlabeled.rows() == 0) throw EmptyInput("total_loss: SSL term needs unlabeled rows");
    t.perturbed = forward(target, with_noise(batch.x_unlabeled, noise.student));
  }
  return t;
}

StepPlan plan_step(const StepTraces& traces, const StepBatch& batch, const LossConfig& config,
                   const Network* teacher, const Perturbations& noise, ArcBuffers* buffers,
                   std::int64_t step) {
  StepPlan plan;
  if (config.arc) {
    if (buffers == nullptr) throw StateError("plan_step: ARC needs replay buffers");
    plan.arc = plan_arc(traces.labeled.features(), traces.labeled.logits, traces.unlabeled.features(),
                        traces.unlabeled.logits, config.gate.eps_r, *buffers, step,
                        config.arc_estimator);
  }
  switch (config.ssl.method) {
    case SslMethod::kNone: break;
    case SslMethod::kPseudoLabel:
      plan.pseudo = select_pseudo_labels(traces.perturbed.logits, config.ssl.pl_confidence);
      break;
    case SslMethod::kMeanTeacher:
      if (teacher == nullptr) throw StateError("plan_step: mean teacher needs a teacher model");
      plan.teacher_probs =
          softmax_rows(forward(*teacher, with_noise(batch.x_unlabeled, noise.teacher)).logits);
      break;
  }
  return plan;
}

LossEvaluation evaluate_total_loss(const Network& target, const StepTraces& traces,
                                   const StepBatch& batch, const StepPlan& plan,
                                   const LossConfig& config, bool with_grads) {
  const LossWeights& w = config.weights;
  const std::size_t bl = batch.x_labeled.rows();
  const std::size_t h = target.extractor.output_dim();

  LossEvaluation out;
  LossBreakdown& br = out.breakdown;

  const LogitLoss ce = cross_entropy_loss(traces.labeled.logits, batch.y_labeled);
  br.ce = ce.value;
  Tensor2 grad_logits_l = ce.grad_logits;
  Tensor2 grad_feat_l(bl, h);
  Tensor2 grad_feat_u(batch.x_unlabeled.rows(), h);
  Tensor2 grad_logits_p;

  if (config.akc) {
    const Tensor2 target_features = vstack(traces.labeled.features(), traces.unlabeled.features());
    const AkcTerm akc =
        akc_term(batch.source_features, target_features, batch.akc_weights, config.akc_divergence);
    br.akc = akc.value;
    br.akc_fraction = akc.selected_fraction;
    if (with_grads) {
      grad_feat_l += scale(top_rows(akc.grad_target_features, bl), w.lambda_k);
      grad_feat_u += scale(bottom_rows(akc.grad_target_features, bl), w.lambda_k);
    }
  }

  if (config.arc) {
    const ArcTerm arc = arc_term(plan.arc, traces.labeled.features(), traces.unlabeled.features());
    br.arc = arc.value;
    br.arc_labeled_fraction = plan.arc.labeled_fraction;
    br.arc_unlabeled_fraction = plan.arc.unlabeled_fraction;
    if (with_grads) {
      grad_feat_l += scale(arc.grad_labeled, w.lambda_r);
      grad_feat_u += scale(arc.grad_unlabeled, w.lambda_r);
    }
  }

  if (config.ssl.method != SslMethod::kNone) {
    const LogitLoss s = config.ssl.method == SslMethod::kPseudoLabel
                            ? pseudo_label_loss(traces.perturbed.logits, plan.pseudo)
                            : mean_teacher_loss(traces.perturbed.logits, plan.teacher_probs);
    br.ssl = s.value;
    br.pseudo_accepted = config.ssl.method == SslMethod::kPseudoLabel ? s.accepted : 0;
    if (with_grads) grad_logits_p = scale(s.grad_logits, w.lambda_s);
  }

  br.total = br.ce + w.lambda_s * br.ssl + w.lambda_k * br.akc + w.lambda_r * br.arc;

  if (with_grads) {
    out.grads = target.zeros_like();
    backward(target, traces.labeled, grad_feat_l, grad_logits_l, out.grads);
    if (traces.unlabeled.valid()) backward(target, traces.unlabeled, grad_feat_u, Tensor2(), out.grads);
    if (traces.perturbed.valid()) backward(target, traces.perturbed, Tensor2(), grad_logits_p, out.grads);
  }
  return out;
}

LossEvaluation total_loss(const ModelPair& pair, const Network* teacher, const StepBatch& batch,
                          const LossConfig& config, ArcBuffers* buffers, const Perturbations& noise,
                          std::int64_t step) {
  const StepTraces traces = compute_traces(pair.target(), batch, config, noise);
  const StepPlan plan = plan_step(traces, batch, config, teacher, noise, buffers, step);
  return evaluate_total_loss(pair.target(), traces, batch, plan, config, true);
}

}  // namespace acr
