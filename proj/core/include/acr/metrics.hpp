#pragma once

#include <optional>
#include <string>
#include <vector>

namespace acr {

inline constexpr int kMetricsSchemaVersion = 1;

// One row per epoch. Epoch 0 is the evaluation right after head
// initialisation, before any gradient step; its loss columns are 0.
struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double loss_ce = 0.0;
  double loss_ssl = 0.0;
  double reg_akc = 0.0;
  double reg_arc = 0.0;
  double akc_selected = 0.0;        // share of the target pool admitted by the frozen source gate
  double akc_batch_selected = 0.0;  // mean per-batch admitted share over the epoch
  double arc_labeled_selected = 0.0;
  double arc_unlabeled_selected = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct MetricsLog {
  std::vector<EpochRecord> records;

  // Highest test accuracy, earliest epoch on ties.
  const EpochRecord& best() const;
  const EpochRecord& last() const;
};

const std::vector<std::string>& metrics_columns();
std::string to_csv(const MetricsLog& log);
// Inverse of to_csv. Throws ParseError on a header or field mismatch.
MetricsLog metrics_from_csv(const std::string& text);

// {"schema_version", "metadata", "summary", "records": [...]}; `metadata_json`
// must be a JSON object text (or empty).
std::string to_json(const MetricsLog& log, const std::string& metadata_json = "");

}  // namespace acr
