#include "acr/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "acr/error.hpp"

namespace acr {

namespace {

Tensor2 glorot_matrix(std::size_t fan_out, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor2 w(fan_out, fan_in);
  for (double& v : w.values()) v = dist(rng);
  return w;
}

void check_layer(const DenseLayer& layer, std::size_t index) {
  if (layer.weight.rows() == 0 || layer.weight.cols() == 0) {
    throw ShapeError("MlpExtractor: layer " + std::to_string(index) + " has an empty weight");
  }
  if (layer.bias.rows() != 1 || layer.bias.cols() != layer.weight.rows()) {
    throw ShapeError("MlpExtractor: layer " + std::to_string(index) + " bias shape");
  }
}

void fnv_mix(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

MlpExtractor::MlpExtractor(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("MlpExtractor: no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    check_layer(layers_[i], i);
    if (i > 0 && layers_[i].weight.cols() != layers_[i - 1].weight.rows()) {
      throw ShapeError("MlpExtractor: layer " + std::to_string(i) +
                       " input does not match previous output");
    }
  }
}

MlpExtractor MlpExtractor::glorot(std::span<const std::size_t> dims, Rng& rng) {
  if (dims.size() < 2) throw ShapeError("MlpExtractor::glorot: need input and output dims");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    layers.push_back({glorot_matrix(dims[i + 1], dims[i], rng), Tensor2(1, dims[i + 1])});
  }
  return MlpExtractor(std::move(layers));
}

std::size_t MlpExtractor::input_dim() const noexcept {
  return layers_.empty() ? 0 : layers_.front().weight.cols();
}

std::size_t MlpExtractor::output_dim() const noexcept {
  return layers_.empty() ? 0 : layers_.back().weight.rows();
}

std::size_t MlpExtractor::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

LinearHead LinearHead::glorot(std::size_t feature_dim, std::size_t classes, Rng& rng) {
  if (classes < 2) throw InvalidInput("LinearHead: need at least 2 classes");
  return {glorot_matrix(classes, feature_dim, rng), Tensor2(1, classes)};
}

LinearHead LinearHead::zeros(std::size_t feature_dim, std::size_t classes) {
  if (classes < 2) throw InvalidInput("LinearHead: need at least 2 classes");
  return {Tensor2(classes, feature_dim), Tensor2(1, classes)};
}

Network Network::zeros_like() const {
  Network out = *this;
  for (Tensor2* p : parameter_list(out)) p->fill(0.0);
  return out;
}

std::size_t Network::parameter_count() const noexcept {
  return extractor.parameter_count() + head.weight.size() + head.bias.size();
}

std::vector<Tensor2*> parameter_list(Network& net) {
  std::vector<Tensor2*> out;
  for (auto& l : net.extractor.layers()) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  out.push_back(&net.head.weight);
  out.push_back(&net.head.bias);
  return out;
}

std::vector<const Tensor2*> parameter_list(const Network& net) {
  std::vector<const Tensor2*> out;
  for (const auto& l : net.extractor.layers()) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  out.push_back(&net.head.weight);
  out.push_back(&net.head.bias);
  return out;
}

ExtractorTrace forward_features(const MlpExtractor& ext, const Tensor2& x) {
  if (ext.depth() == 0) throw StateError("forward_features: extractor has no layers");
  if (x.cols() != ext.input_dim()) {
    throw ShapeError("forward_features: input dim " + std::to_string(x.cols()) + ", expected " +
                     std::to_string(ext.input_dim()));
  }
  ExtractorTrace trace;
  trace.inputs.reserve(ext.depth());
  trace.pre_activations.reserve(ext.depth());
  Tensor2 current = x;
  for (const auto& layer : ext.layers()) {
    Tensor2 pre = add_row(matmul_bt(current, layer.weight), layer.bias);
    Tensor2 act = relu(pre);
    trace.inputs.push_back(std::move(current));
    trace.pre_activations.push_back(std::move(pre));
    current = std::move(act);
  }
  trace.features = std::move(current);
  return trace;
}

Tensor2 forward_logits(const LinearHead& head, const Tensor2& features) {
  if (features.cols() != head.feature_dim()) {
    throw ShapeError("forward_logits: feature dim " + std::to_string(features.cols()) +
                     ", head expects " + std::to_string(head.feature_dim()));
  }
  return add_row(matmul_bt(features, head.weight), head.bias);
}

ForwardTrace forward(const Network& net, const Tensor2& x) {
  ForwardTrace t;
  t.extractor = forward_features(net.extractor, x);
  t.logits = forward_logits(net.head, t.extractor.features);
  return t;
}

void backward_features(const MlpExtractor& ext, const ExtractorTrace& trace,
                       const Tensor2& grad_features, MlpExtractor& grads) {
  if (!trace.valid()) throw StateError("backward: no cached forward pass");
  if (trace.pre_activations.size() != ext.depth() || grads.depth() != ext.depth()) {
    throw StateError("backward: trace does not belong to this extractor");
  }
  require_same_shape(grad_features, trace.features, "backward_features");

  Tensor2 upstream = grad_features;
  for (std::size_t li = ext.depth(); li-- > 0;) {
    const Tensor2 g_pre = relu_grad(trace.pre_activations[li], upstream);
    auto& g = grads.layers()[li];
    g.weight += matmul_at(g_pre, trace.inputs[li]);
    g.bias += sum_rows(g_pre);
    if (li > 0) upstream = matmul(g_pre, ext.layers()[li].weight);
  }
}

void backward(const Network& net, const ForwardTrace& trace, const Tensor2& grad_features,
              const Tensor2& grad_logits, Network& grads) {
  if (!trace.valid()) throw StateError("backward: no cached forward pass");
  const Tensor2& features = trace.features();
  Tensor2 g_feat = grad_features.empty() ? Tensor2(features.rows(), features.cols()) : grad_features;
  require_same_shape(g_feat, features, "backward(features)");
  if (!grad_logits.empty()) {
    require_same_shape(grad_logits, trace.logits, "backward(logits)");
    grads.head.weight += matmul_at(grad_logits, features);
    grads.head.bias += sum_rows(grad_logits);
    g_feat += matmul(grad_logits, net.head.weight);
  }
  backward_features(net.extractor, trace.extractor, g_feat, grads.extractor);
}

LinearHead imprint(const Tensor2& features, std::span<const int> labels, std::size_t classes) {
  if (features.rows() != labels.size()) {
    throw ShapeError("imprint: " + std::to_string(features.rows()) + " feature rows, " +
                     std::to_string(labels.size()) + " labels");
  }
  if (classes < 2) throw InvalidInput("imprint: need at least 2 classes");
  const std::size_t h = features.cols();
  Tensor2 sums(classes, h);
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || static_cast<std::size_t>(c) >= classes) {
      throw InvalidLabel("imprint: label " + std::to_string(c) + " out of range");
    }
    auto f = features.row_span(i);
    double norm = 0.0;
    for (double v : f) norm += v * v;
    norm = std::sqrt(norm);
    auto s = sums.row_span(static_cast<std::size_t>(c));
    // A zero feature vector has no direction; it still counts as an example.
    if (norm > 0.0) {
      for (std::size_t k = 0; k < h; ++k) s[k] += f[k] / norm;
    }
    ++counts[static_cast<std::size_t>(c)];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) {
      throw MissingClassError("imprint: class " + std::to_string(c) + " has no labeled example");
    }
    auto s = sums.row_span(c);
    double norm = 0.0;
    for (double v : s) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : s) v /= norm;
    }
  }
  return {std::move(sums), Tensor2(1, classes)};
}

LinearHead imprint(const LinearHead& head, const Tensor2& features, std::span<const int> labels) {
  if (features.cols() != head.feature_dim()) throw ShapeError("imprint: feature dim mismatch");
  return imprint(features, labels, head.classes());
}

void ema_update(Network& teacher, const Network& student, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("ema_update: alpha outside [0,1]");
  auto tp = parameter_list(teacher);
  auto sp = parameter_list(student);
  if (tp.size() != sp.size()) throw ShapeError("ema_update: parameter count mismatch");
  for (std::size_t i = 0; i < tp.size(); ++i) require_same_shape(*tp[i], *sp[i], "ema_update");
  const double beta = 1.0 - alpha;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    auto t = tp[i]->values();
    auto s = sp[i]->values();
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = alpha * t[j] + beta * s[j];
  }
}

std::uint64_t parameter_hash(const Network& net) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Tensor2* p : parameter_list(net)) {
    const std::uint64_t shape[2] = {p->rows(), p->cols()};
    fnv_mix(h, shape, sizeof(shape));
    fnv_mix(h, p->values().data(), p->size() * sizeof(double));
  }
  return h;
}

std::vector<int> predict(const Network& net, const Tensor2& x) {
  const Tensor2 logits = forward(net, x).logits;
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto r = logits.row_span(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

double accuracy(const Network& net, const Tensor2& x, std::span<const int> labels) {
  if (x.rows() != labels.size()) throw ShapeError("accuracy: row/label count mismatch");
  if (labels.empty()) return 0.0;
  const auto pred = predict(net, x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

ModelPair::ModelPair(Network source, LinearHead target_head) : source_(std::move(source)) {
  if (target_head.feature_dim() != source_.extractor.output_dim()) {
    throw ShapeError("ModelPair: target head feature dim does not match the extractor");
  }
  target_.extractor = source_.extractor;
  target_.head = std::move(target_head);
}

}  // namespace acr
