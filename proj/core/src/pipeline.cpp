#include "acr/pipeline.hpp"

#include <cmath>

#include "acr/consistency.hpp"
#include "acr/error.hpp"
#include "acr/kernel.hpp"
#include "acr/optim.hpp"
#include "acr/prob.hpp"
#include "acr/rng.hpp"
#include "acr/ssl.hpp"
#include "acr/total_loss.hpp"
#include "json.hpp"

namespace acr {

namespace {

std::vector<std::size_t> extractor_dims(const ExperimentConfig& cfg, std::size_t input_dim) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), cfg.model.hidden.begin(), cfg.model.hidden.end());
  dims.push_back(cfg.model.feature_dim);
  return dims;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::vector<int> pick(const std::vector<int>& v, const std::vector<std::size_t>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

std::vector<double> pick(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

double fraction_confident(const Network& net, const Tensor2& x, double eps) {
  if (x.rows() == 0) return 0.0;
  const auto h = entropy_rows(softmax_rows(forward(net, x).logits));
  double n = 0.0;
  for (double v : h) n += entropy_gate(v, eps);
  return n / static_cast<double>(h.size());
}

}  // namespace

namespace {

TransferData load_data(const ExperimentConfig& cfg, bool with_target) {
  TransferData d;
  if (cfg.data.source == "csv") {
    const CsvSchema schema{cfg.data.label_column};
    CsvDataset src_train = load_csv(cfg.data.source_train_csv, schema);
    d.source_train = src_train.set;
    d.source_classes = d.source_train.classes;
    if (!cfg.data.source_test_csv.empty()) {
      d.source_test = load_csv(cfg.data.source_test_csv, schema, &src_train.label_map).set;
    }
    if (!with_target) return d;
    CsvDataset tgt_train = load_csv(cfg.data.target_train_csv, schema);
    CsvDataset tgt_test = load_csv(cfg.data.target_test_csv, schema, &tgt_train.label_map);
    if (tgt_train.set.x.cols() != d.source_train.x.cols() || tgt_test.set.x.cols() != d.source_train.x.cols()) {
      throw ConfigError("data: source and target CSVs must have the same number of feature columns\n");
    }
    // Test ids continue after the training ids so the two stay disjoint.
    for (auto& id : tgt_test.set.ids) id += tgt_train.set.size();
    d.target_label_map = tgt_train.label_map;
    d.target_classes = tgt_train.set.classes;
    if (d.source_classes < 2 || d.target_classes < 2) {
      throw ConfigError("data: source and target need at least two classes each\n");
    }
    if (cfg.n_labeled < d.target_classes || cfg.n_labeled > tgt_train.set.size()) {
      throw ConfigError("split.n_labeled: must lie in [target classes, target train rows]\n");
    }
    d.target = split_labeled(tgt_train.set, tgt_test.set, cfg.n_labeled, cfg.seed);
  } else {
    SyntheticTaskSpec spec = cfg.task;
    spec.seed = cfg.seed;
    TransferTask task = generate_task(spec);
    d.source_train = std::move(task.source_train);
    d.source_test = std::move(task.source_test);
    d.source_classes = spec.source_classes;
    d.target_classes = spec.target_classes;
    if (with_target) d.target = split_labeled(task.target_train, task.target_test, cfg.n_labeled, cfg.seed);
  }
  return d;
}

}  // namespace

TransferData prepare_data(const ExperimentConfig& cfg) { return load_data(cfg, true); }

TransferData prepare_source_data(const ExperimentConfig& cfg) { return load_data(cfg, false); }

PretrainResult pretrain_source(const LabeledSet& source_train, const LabeledSet& source_test,
                               const ExperimentConfig& cfg) {
  Rng init_rng = make_rng(cfg.seed, RngStream::kSourceInit);
  const auto dims = extractor_dims(cfg, source_train.x.cols());
  Network net;
  net.extractor = MlpExtractor::glorot(dims, init_rng);
  net.head = LinearHead::glorot(cfg.model.feature_dim, source_train.classes, init_rng);

  const std::size_t steps_per_epoch = ceil_div(source_train.size(), cfg.pretrain.batch);
  const auto total = static_cast<std::int64_t>(cfg.pretrain.epochs * steps_per_epoch);
  if (total > 0) {
    EpochSampler sampler(source_train.size(), make_rng(cfg.seed, RngStream::kPretrainBatches));
    OptimState opt = OptimState::for_network(net, cfg.pretrain.lr, total, cfg.optim.momentum);
    for (std::int64_t s = 0; s < total; ++s) {
      const auto idx = sampler.next(cfg.pretrain.batch);
      const SslResult ce = cross_entropy_loss(net, source_train.x.select_rows(idx), pick(source_train.y, idx));
      sgd_step(net, ce.grads, opt);
    }
  }
  PretrainResult r;
  r.source_test_acc = source_test.size() > 0 ? accuracy(net, source_test.x, source_test.y) : 0.0;
  r.source = std::move(net);
  return r;
}

RunResult run_pipeline(const ExperimentConfig& cfg, const RunOptions& options) {
  return run_pipeline(cfg, prepare_data(cfg), options);
}

RunResult run_pipeline(const ExperimentConfig& cfg, const TransferData& data, const RunOptions& options) {
  PretrainResult owned;
  const PretrainResult* pre = options.pretrained;
  if (pre == nullptr) {
    owned = pretrain_source(data.source_train, data.source_test, cfg);
    pre = &owned;
  }
  const SplitSet& split = data.target;
  const LabeledSet& labeled = split.labeled;
  const LossConfig loss_cfg = cfg.loss_config(data.source_classes, data.target_classes);

  // Target head: imprinted from the copied extractor's features, or random.
  LinearHead head;
  if (cfg.model.head_init == HeadInit::kImprint) {
    head = imprint(forward_features(pre->source.extractor, labeled.x).features, labeled.y,
                   data.target_classes);
  } else {
    Rng head_rng = make_rng(cfg.seed, RngStream::kTargetHeadInit);
    head = LinearHead::glorot(cfg.model.feature_dim, data.target_classes, head_rng);
  }
  ModelPair pair(pre->source, std::move(head));

  RunResult result;
  result.source_test_acc = pre->source_test_acc;
  result.source_hash_before = parameter_hash(pair.source());

  // The unlabeled pool is the whole target training set: labeled rows first.
  const Tensor2 pool = vstack(labeled.x, split.unlabeled);
  const std::size_t n_labeled = labeled.size();

  // The source is frozen, so its features and gate decisions are computed once.
  Tensor2 source_features;
  std::vector<double> akc_weights;
  double akc_pool_fraction = 0.0;
  if (loss_cfg.akc) {
    const ForwardTrace src = forward(pair.source(), pool);
    source_features = src.features();
    akc_weights = entropy_gate(entropy_rows(softmax_rows(src.logits)), loss_cfg.gate.eps_k);
    for (double w : akc_weights) akc_pool_fraction += w;
    akc_pool_fraction /= static_cast<double>(akc_weights.size());
  }

  const bool use_noise = loss_cfg.ssl.method != SslMethod::kNone;
  const std::vector<double> feature_std = use_noise ? column_std(pool) : std::vector<double>{};
  std::optional<Network> teacher;
  if (loss_cfg.ssl.method == SslMethod::kMeanTeacher) teacher = pair.target();

  const std::size_t steps_per_epoch = cfg.optim.steps_per_epoch > 0
                                          ? cfg.optim.steps_per_epoch
                                          : ceil_div(pool.rows(), cfg.optim.batch_unlabeled);
  const auto total_steps =
      static_cast<std::int64_t>(std::max<std::size_t>(1, cfg.optim.epochs * steps_per_epoch));
  OptimState opt = OptimState::for_network(pair.target(), cfg.optim.lr, total_steps, cfg.optim.momentum);

  Rng batch_rng = make_rng(cfg.seed, RngStream::kFinetuneBatches);
  EpochSampler labeled_sampler(n_labeled, Rng(batch_rng()));
  EpochSampler pool_sampler(pool.rows(), Rng(batch_rng()));
  Rng noise_rng = make_rng(cfg.seed, RngStream::kPerturbation);
  ArcBuffers buffers(cfg.model.feature_dim, cfg.buffer_capacity, cfg.buffer_k);

  auto evaluate = [&](EpochRecord& rec) {
    rec.train_acc = accuracy(pair.target(), labeled.x, labeled.y);
    rec.test_acc = accuracy(pair.target(), split.test.x, split.test.y);
    rec.akc_selected = akc_pool_fraction;
  };

  {
    EpochRecord rec;
    rec.epoch = 0;
    rec.lr = cosine_lr(0, total_steps, cfg.optim.lr);
    if (loss_cfg.arc) {
      rec.arc_labeled_selected = fraction_confident(pair.target(), labeled.x, loss_cfg.gate.eps_r);
      rec.arc_unlabeled_selected = fraction_confident(pair.target(), pool, loss_cfg.gate.eps_r);
    }
    evaluate(rec);
    result.log.records.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }

  std::int64_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.optim.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = static_cast<int>(epoch);
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      const BatchIndices idx =
          sample_batches(labeled_sampler, pool_sampler, cfg.optim.batch_labeled, cfg.optim.batch_unlabeled);
      StepBatch batch;
      batch.x_labeled = labeled.x.select_rows(idx.labeled);
      batch.y_labeled = pick(labeled.y, idx.labeled);
      batch.x_unlabeled = pool.select_rows(idx.unlabeled);
      if (loss_cfg.akc) {
        // Labeled row i of the labeled set is row i of the pool.
        batch.source_features = vstack(source_features.select_rows(idx.labeled),
                                       source_features.select_rows(idx.unlabeled));
        batch.akc_weights = pick(akc_weights, idx.labeled);
        const auto wu = pick(akc_weights, idx.unlabeled);
        batch.akc_weights.insert(batch.akc_weights.end(), wu.begin(), wu.end());
      }
      Perturbations noise;
      if (use_noise) {
        noise.student = gaussian_perturbation(batch.x_unlabeled.rows(), feature_std, loss_cfg.ssl.noise_std, noise_rng);
        if (teacher) {
          noise.teacher = gaussian_perturbation(batch.x_unlabeled.rows(), feature_std, loss_cfg.ssl.noise_std, noise_rng);
        }
      }

      const StepTraces traces = compute_traces(pair.target(), batch, loss_cfg, noise);
      const StepPlan plan = plan_step(traces, batch, loss_cfg, teacher ? &*teacher : nullptr, noise, &buffers, step);
      const LossEvaluation eval = evaluate_total_loss(pair.target(), traces, batch, plan, loss_cfg, true);
      rec.lr = sgd_step(pair.target(), eval.grads, opt);
      if (teacher) ema_update(*teacher, pair.target(), loss_cfg.ssl.ema_alpha);

      const LossBreakdown& b = eval.breakdown;
      rec.loss_ce += b.ce;
      rec.loss_ssl += b.ssl;
      rec.reg_akc += b.akc;
      rec.reg_arc += b.arc;
      rec.akc_batch_selected += b.akc_fraction;
      rec.arc_labeled_selected += b.arc_labeled_fraction;
      rec.arc_unlabeled_selected += b.arc_unlabeled_fraction;
    }
    const double inv = 1.0 / static_cast<double>(steps_per_epoch);
    rec.loss_ce *= inv;
    rec.loss_ssl *= inv;
    rec.reg_akc *= inv;
    rec.reg_arc *= inv;
    rec.akc_batch_selected *= inv;
    rec.arc_labeled_selected *= inv;
    rec.arc_unlabeled_selected *= inv;
    evaluate(rec);
    result.log.records.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }

  result.source_hash_after = parameter_hash(pair.source());
  if (options.final_representation_mmd && split.unlabeled.rows() > 0) {
    const Tensor2 fl = forward_features(pair.target().extractor, labeled.x).features;
    const Tensor2 fu = forward_features(pair.target().extractor, split.unlabeled).features;
    result.representation_mmd = mmd2_median(fl, fu);
  }
  result.source = pair.source();
  result.target = pair.target();
  return result;
}

std::string run_metadata_json(const ExperimentConfig& cfg, const TransferData& data,
                              const RunResult& result) {
  nlohmann::ordered_json j;
  j["method"] = cfg.method_label();
  j["seed"] = cfg.seed;
  j["source_classes"] = data.source_classes;
  j["target_classes"] = data.target_classes;
  j["n_labeled"] = data.target.labeled.size();
  j["n_unlabeled"] = data.target.unlabeled.rows();
  j["n_test"] = data.target.test.size();
  const GateConfig gate = GateConfig::from_ratios(cfg.eps_k_ratio, cfg.eps_r_ratio, data.source_classes,
                                                  data.target_classes);
  j["eps_k_nats"] = gate.eps_k;
  j["eps_r_nats"] = gate.eps_r;
  j["mmd_estimator"] = std::string(cfg.method.arc_estimator == MmdEstimator::kBiased ? "biased V-statistic"
                                                                                     : "unbiased U-statistic") +
                       ", RBF bandwidths {0.5,1,2} x median pairwise distance";
  j["heuristic_defaults"] = {{"ssl.pl_confidence", cfg.ssl.pl_confidence},
                             {"ssl.ema_alpha", cfg.ssl.ema_alpha},
                             {"ssl.noise_std", cfg.ssl.noise_std},
                             {"buffer.capacity", cfg.buffer_capacity},
                             {"buffer.k", cfg.buffer_k}};
  if (cfg.data.source == "synthetic") {
    j["task"] = {{"input_dim", cfg.task.input_dim},
                 {"source_classes", cfg.task.source_classes},
                 {"target_classes", cfg.task.target_classes},
                 {"cluster_std", cfg.task.cluster_std},
                 {"transfer_rotation_deg", cfg.task.transfer_rotation_deg},
                 {"transfer_shift", cfg.task.transfer_shift},
                 {"seed", cfg.seed}};
  } else {
    auto map = nlohmann::ordered_json::object();
    for (const auto& [raw, dense] : data.target_label_map) map[std::to_string(raw)] = dense;
    j["target_label_map"] = map;
  }
  j["source_test_acc"] = result.source_test_acc;
  j["source_frozen"] = result.source_hash_before == result.source_hash_after;
  if (result.representation_mmd) j["representation_mmd"] = *result.representation_mmd;
  return j.dump();
}

}  // namespace acr
