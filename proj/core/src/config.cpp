#include "acr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "acr/error.hpp"
#include "json.hpp"

namespace acr {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const char* head_init_name(HeadInit h) { return h == HeadInit::kImprint ? "imprint" : "random"; }
const char* divergence_name(Divergence d) { return d == Divergence::kMse ? "mse" : "kl"; }
const char* estimator_name(MmdEstimator e) { return e == MmdEstimator::kBiased ? "biased" : "unbiased"; }

ordered_json to_tree(const ExperimentConfig& c) {
  ordered_json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["data"] = {{"source", c.data.source},
               {"source_train_csv", c.data.source_train_csv},
               {"source_test_csv", c.data.source_test_csv},
               {"target_train_csv", c.data.target_train_csv},
               {"target_test_csv", c.data.target_test_csv},
               {"label_column", c.data.label_column}};
  j["task"] = {{"input_dim", c.task.input_dim},
               {"source_classes", c.task.source_classes},
               {"target_classes", c.task.target_classes},
               {"cluster_std", c.task.cluster_std},
               {"transfer_rotation_deg", c.task.transfer_rotation_deg},
               {"transfer_shift", c.task.transfer_shift},
               {"source_train", c.task.source_train},
               {"source_test", c.task.source_test},
               {"target_train", c.task.target_train},
               {"target_test", c.task.target_test}};
  j["split"] = {{"n_labeled", c.n_labeled}};
  j["model"] = {{"hidden", c.model.hidden},
                {"feature_dim", c.model.feature_dim},
                {"head_init", head_init_name(c.model.head_init)}};
  j["method"] = {{"akc", c.method.akc},
                 {"arc", c.method.arc},
                 {"ssl", std::string(to_string(c.method.ssl))},
                 {"akc_divergence", divergence_name(c.method.akc_divergence)},
                 {"arc_estimator", estimator_name(c.method.arc_estimator)}};
  j["loss"] = {{"lambda_k", c.weights.lambda_k},
               {"lambda_r", c.weights.lambda_r},
               {"lambda_s", c.weights.lambda_s}};
  j["gate"] = {{"eps_k_ratio", c.eps_k_ratio}, {"eps_r_ratio", c.eps_r_ratio}};
  j["buffer"] = {{"capacity", c.buffer_capacity}, {"k", c.buffer_k}};
  j["ssl"] = {{"pl_confidence", c.ssl.pl_confidence},
              {"ema_alpha", c.ssl.ema_alpha},
              {"noise_std", c.ssl.noise_std}};
  j["optim"] = {{"lr", c.optim.lr},
                {"momentum", c.optim.momentum},
                {"epochs", c.optim.epochs},
                {"batch_labeled", c.optim.batch_labeled},
                {"batch_unlabeled", c.optim.batch_unlabeled},
                {"steps_per_epoch", c.optim.steps_per_epoch}};
  j["pretrain"] = {{"epochs", c.pretrain.epochs}, {"lr", c.pretrain.lr}, {"batch", c.pretrain.batch}};
  j["experiment"] = {{"seeds", c.experiment.seeds},
                     {"n_labeled_grid", c.experiment.n_labeled_grid},
                     {"jobs", c.experiment.jobs}};
  return j;
}

// Reads typed fields out of one JSON object, collecting problems with full paths.
class Section {
 public:
  Section(const json& node, std::string path, std::vector<std::string>& problems)
      : node_(node), path_(std::move(path)), problems_(problems) {
    if (!node_.is_object()) problem(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <class T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_.is_object() || !node_.contains(key)) return;
    const json& v = node_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      problem(full(key), e.what());
    }
  }

  void read_sizes(const std::string& key, std::vector<std::size_t>& out) {
    seen_.insert(key);
    if (!node_.is_object() || !node_.contains(key)) return;
    const json& v = node_.at(key);
    if (!v.is_array()) {
      problem(full(key), "expected an array of non-negative integers");
      return;
    }
    std::vector<std::size_t> tmp;
    for (const auto& e : v) {
      if (!e.is_number_unsigned()) {
        problem(full(key), "expected an array of non-negative integers");
        return;
      }
      tmp.push_back(e.get<std::size_t>());
    }
    out = std::move(tmp);
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    if (!node_.is_object() || !node_.contains(key)) return nullptr;
    return &node_.at(key);
  }

  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void problem(const std::string& where, const std::string& what) {
    problems_.push_back(where + ": " + what);
  }

  void reject_unknown() {
    if (!node_.is_object()) return;
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) problem(full(it.key()), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

template <class Fn>
void with_section(Section& parent, const std::string& key, std::vector<std::string>& problems, Fn fn) {
  const json* node = parent.child(key);
  if (node == nullptr) return;
  Section s(*node, parent.full(key), problems);
  if (node->is_object()) {
    fn(s);
    s.reject_unknown();
  }
}

void check(bool ok, const std::string& where, const std::string& what,
           std::vector<std::string>& problems) {
  if (!ok) problems.push_back(where + ": " + what);
}

void validate(const ExperimentConfig& c, std::vector<std::string>& p) {
  check(c.data.source == "synthetic" || c.data.source == "csv", "data.source",
        "must be \"synthetic\" or \"csv\"", p);
  if (c.data.source == "csv") {
    check(!c.data.source_train_csv.empty(), "data.source_train_csv", "required when data.source is csv", p);
    check(!c.data.target_train_csv.empty(), "data.target_train_csv", "required when data.source is csv", p);
    check(!c.data.target_test_csv.empty(), "data.target_test_csv", "required when data.source is csv", p);
  }
  check(!c.data.label_column.empty(), "data.label_column", "must not be empty", p);
  if (c.data.source == "synthetic") {
    try {
      c.task.validate();
    } catch (const ConfigError& e) {
      std::istringstream lines(e.what());
      for (std::string line; std::getline(lines, line);) {
        if (!line.empty()) p.push_back(line);
      }
    }
    check(c.n_labeled <= c.task.target_train, "split.n_labeled", "exceeds task.target_train", p);
    check(c.n_labeled >= c.task.target_classes, "split.n_labeled",
          "must be >= task.target_classes (every class needs a labeled example)", p);
  }
  check(c.n_labeled >= 2, "split.n_labeled", "must be >= 2", p);
  check(c.model.feature_dim >= 1, "model.feature_dim", "must be >= 1", p);
  for (std::size_t i = 0; i < c.model.hidden.size(); ++i) {
    check(c.model.hidden[i] >= 1, "model.hidden[" + std::to_string(i) + "]", "must be >= 1", p);
  }
  check(c.weights.lambda_k >= 0.0, "loss.lambda_k", "must be >= 0", p);
  check(c.weights.lambda_r >= 0.0, "loss.lambda_r", "must be >= 0", p);
  check(c.weights.lambda_s >= 0.0, "loss.lambda_s", "must be >= 0", p);
  check(c.eps_k_ratio >= 0.0, "gate.eps_k_ratio", "must be >= 0", p);
  check(c.eps_r_ratio >= 0.0, "gate.eps_r_ratio", "must be >= 0", p);
  check(c.buffer_capacity >= 1, "buffer.capacity", "must be >= 1", p);
  check(c.buffer_k >= 1, "buffer.k", "must be >= 1", p);
  check(c.ssl.pl_confidence > 0.0 && c.ssl.pl_confidence <= 1.0, "ssl.pl_confidence", "must be in (0, 1]", p);
  check(c.ssl.ema_alpha >= 0.0 && c.ssl.ema_alpha < 1.0, "ssl.ema_alpha", "must be in [0, 1)", p);
  check(c.ssl.noise_std >= 0.0, "ssl.noise_std", "must be >= 0", p);
  check(c.optim.lr > 0.0, "optim.lr", "must be > 0", p);
  check(c.optim.momentum >= 0.0 && c.optim.momentum < 1.0, "optim.momentum", "must be in [0, 1)", p);
  check(c.optim.batch_labeled >= 1, "optim.batch_labeled", "must be >= 1", p);
  check(c.optim.batch_unlabeled >= 1, "optim.batch_unlabeled", "must be >= 1", p);
  check(c.pretrain.lr > 0.0, "pretrain.lr", "must be > 0", p);
  check(c.pretrain.batch >= 1, "pretrain.batch", "must be >= 1", p);
  check(c.experiment.seeds >= 1, "experiment.seeds", "must be >= 1", p);
  check(!c.experiment.n_labeled_grid.empty(), "experiment.n_labeled_grid", "must not be empty", p);
  check(c.experiment.jobs >= 1, "experiment.jobs", "must be >= 1", p);
}

ExperimentConfig from_tree(const json& root) {
  std::vector<std::string> problems;
  ExperimentConfig c;
  Section top(root, "", problems);
  if (!root.is_object()) throw ConfigError("<root>: expected a JSON object\n");

  int schema = kConfigSchemaVersion;
  top.read("schema_version", schema);
  if (schema != kConfigSchemaVersion) {
    top.problem("schema_version", "unsupported version " + std::to_string(schema));
  }
  top.read("seed", c.seed);
  top.read("output_dir", c.output_dir);

  with_section(top, "data", problems, [&](Section& s) {
    s.read("source", c.data.source);
    s.read("source_train_csv", c.data.source_train_csv);
    s.read("source_test_csv", c.data.source_test_csv);
    s.read("target_train_csv", c.data.target_train_csv);
    s.read("target_test_csv", c.data.target_test_csv);
    s.read("label_column", c.data.label_column);
  });
  with_section(top, "task", problems, [&](Section& s) {
    s.read("input_dim", c.task.input_dim);
    s.read("source_classes", c.task.source_classes);
    s.read("target_classes", c.task.target_classes);
    s.read("cluster_std", c.task.cluster_std);
    s.read("transfer_rotation_deg", c.task.transfer_rotation_deg);
    s.read("transfer_shift", c.task.transfer_shift);
    s.read("source_train", c.task.source_train);
    s.read("source_test", c.task.source_test);
    s.read("target_train", c.task.target_train);
    s.read("target_test", c.task.target_test);
  });
  with_section(top, "split", problems, [&](Section& s) { s.read("n_labeled", c.n_labeled); });
  with_section(top, "model", problems, [&](Section& s) {
    s.read_sizes("hidden", c.model.hidden);
    s.read("feature_dim", c.model.feature_dim);
    std::string init = head_init_name(c.model.head_init);
    s.read("head_init", init);
    if (init == "imprint") {
      c.model.head_init = HeadInit::kImprint;
    } else if (init == "random") {
      c.model.head_init = HeadInit::kRandom;
    } else {
      s.problem("model.head_init", "must be \"imprint\" or \"random\"");
    }
  });
  with_section(top, "method", problems, [&](Section& s) {
    s.read("akc", c.method.akc);
    s.read("arc", c.method.arc);
    std::string ssl(to_string(c.method.ssl));
    s.read("ssl", ssl);
    try {
      c.method.ssl = ssl_method_from_string(ssl);
    } catch (const InvalidInput&) {
      s.problem("method.ssl", "must be one of none, pseudo_label, mean_teacher");
    }
    std::string div = divergence_name(c.method.akc_divergence);
    s.read("akc_divergence", div);
    if (div == "mse") {
      c.method.akc_divergence = Divergence::kMse;
    } else if (div == "kl") {
      c.method.akc_divergence = Divergence::kKl;
    } else {
      s.problem("method.akc_divergence", "must be \"mse\" or \"kl\"");
    }
    std::string est = estimator_name(c.method.arc_estimator);
    s.read("arc_estimator", est);
    if (est == "biased") {
      c.method.arc_estimator = MmdEstimator::kBiased;
    } else if (est == "unbiased") {
      c.method.arc_estimator = MmdEstimator::kUnbiased;
    } else {
      s.problem("method.arc_estimator", "must be \"biased\" or \"unbiased\"");
    }
  });
  with_section(top, "loss", problems, [&](Section& s) {
    s.read("lambda_k", c.weights.lambda_k);
    s.read("lambda_r", c.weights.lambda_r);
    s.read("lambda_s", c.weights.lambda_s);
  });
  with_section(top, "gate", problems, [&](Section& s) {
    s.read("eps_k_ratio", c.eps_k_ratio);
    s.read("eps_r_ratio", c.eps_r_ratio);
  });
  with_section(top, "buffer", problems, [&](Section& s) {
    s.read("capacity", c.buffer_capacity);
    s.read("k", c.buffer_k);
  });
  with_section(top, "ssl", problems, [&](Section& s) {
    s.read("pl_confidence", c.ssl.pl_confidence);
    s.read("ema_alpha", c.ssl.ema_alpha);
    s.read("noise_std", c.ssl.noise_std);
  });
  with_section(top, "optim", problems, [&](Section& s) {
    s.read("lr", c.optim.lr);
    s.read("momentum", c.optim.momentum);
    s.read("epochs", c.optim.epochs);
    s.read("batch_labeled", c.optim.batch_labeled);
    s.read("batch_unlabeled", c.optim.batch_unlabeled);
    s.read("steps_per_epoch", c.optim.steps_per_epoch);
  });
  with_section(top, "pretrain", problems, [&](Section& s) {
    s.read("epochs", c.pretrain.epochs);
    s.read("lr", c.pretrain.lr);
    s.read("batch", c.pretrain.batch);
  });
  with_section(top, "experiment", problems, [&](Section& s) {
    s.read("seeds", c.experiment.seeds);
    s.read_sizes("n_labeled_grid", c.experiment.n_labeled_grid);
    s.read("jobs", c.experiment.jobs);
  });
  top.reject_unknown();
  c.ssl.method = c.method.ssl;

  validate(c, problems);
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += p + "\n";
    throw ConfigError(msg);
  }
  return c;
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: invalid JSON: ") + e.what() + "\n");
  }
}

}  // namespace

LossConfig ExperimentConfig::loss_config(std::size_t source_classes, std::size_t target_classes) const {
  LossConfig lc;
  lc.weights = weights;
  lc.gate = GateConfig::from_ratios(eps_k_ratio, eps_r_ratio, source_classes, target_classes);
  lc.akc = method.akc;
  lc.arc = method.arc;
  lc.akc_divergence = method.akc_divergence;
  lc.arc_estimator = method.arc_estimator;
  lc.ssl = ssl;
  lc.ssl.method = method.ssl;
  return lc;
}

std::string ExperimentConfig::method_label() const {
  std::string label;
  if (method.ssl != SslMethod::kNone) label = std::string(to_string(method.ssl));
  auto append = [&](const char* part) {
    if (!label.empty()) label += "+";
    label += part;
  };
  if (method.akc) append("akc");
  if (method.arc) append("arc");
  return label.empty() ? "supervised" : label;
}

std::string to_json(const ExperimentConfig& cfg) { return to_tree(cfg).dump(2) + "\n"; }

ExperimentConfig config_from_json(const std::string& text) { return from_tree(parse_text(text)); }

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>: cannot read config file " + path.string() + "\n");
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

ExperimentConfig apply_overrides(const ExperimentConfig& cfg, const std::vector<std::string>& assignments) {
  if (assignments.empty()) return cfg;
  json tree = json::parse(to_tree(cfg).dump());
  std::vector<std::string> problems;
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) {
      problems.push_back(a + ": expected <dotted.key>=<value>");
      continue;
    }
    const std::string key = a.substr(0, eq);
    const std::string raw = a.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;
    }
    json* node = &tree;
    std::size_t start = 0;
    bool ok = true;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!node->is_object() || !node->contains(part)) {
        problems.push_back(key + ": unknown key");
        ok = false;
        break;
      }
      node = &(*node)[part];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    if (ok) *node = value;
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += p + "\n";
    throw ConfigError(msg);
  }
  return from_tree(tree);
}

}  // namespace acr
