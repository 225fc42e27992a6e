#include "acr/metrics.hpp"

#include <charconv>
#include <sstream>

#include "acr/csv.hpp"
#include "acr/error.hpp"
#include "json.hpp"

namespace acr {

namespace {

template <class Fn>
void for_each_field(EpochRecord& r, Fn fn) {
  fn(r.lr);
  fn(r.loss_ce);
  fn(r.loss_ssl);
  fn(r.reg_akc);
  fn(r.reg_arc);
  fn(r.akc_selected);
  fn(r.akc_batch_selected);
  fn(r.arc_labeled_selected);
  fn(r.arc_unlabeled_selected);
  fn(r.train_acc);
  fn(r.test_acc);
}

nlohmann::ordered_json record_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  j["loss_ce"] = r.loss_ce;
  j["loss_ssl"] = r.loss_ssl;
  j["reg_akc"] = r.reg_akc;
  j["reg_arc"] = r.reg_arc;
  j["akc_selected"] = r.akc_selected;
  j["akc_batch_selected"] = r.akc_batch_selected;
  j["arc_labeled_selected"] = r.arc_labeled_selected;
  j["arc_unlabeled_selected"] = r.arc_unlabeled_selected;
  j["train_acc"] = r.train_acc;
  j["test_acc"] = r.test_acc;
  return j;
}

}  // namespace

const EpochRecord& MetricsLog::best() const {
  if (records.empty()) throw StateError("MetricsLog::best: no records");
  const EpochRecord* best = &records.front();
  for (const auto& r : records) {
    if (r.test_acc > best->test_acc) best = &r;
  }
  return *best;
}

const EpochRecord& MetricsLog::last() const {
  if (records.empty()) throw StateError("MetricsLog::last: no records");
  return records.back();
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "epoch",        "lr",           "loss_ce",           "loss_ssl",
      "reg_akc",      "reg_arc",      "akc_selected",      "akc_batch_selected",
      "arc_labeled_selected", "arc_unlabeled_selected", "train_acc", "test_acc"};
  return cols;
}

std::string to_csv(const MetricsLog& log) {
  std::string out;
  const auto& cols = metrics_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out += cols[i];
    out += i + 1 < cols.size() ? "," : "\n";
  }
  for (EpochRecord r : log.records) {
    out += std::to_string(r.epoch);
    for_each_field(r, [&](double& v) {
      out += ',';
      out += format_double(v);
    });
    out += '\n';
  }
  return out;
}

MetricsLog metrics_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("metrics CSV is empty", 1, 1);
  std::string expected;
  for (const auto& c : metrics_columns()) expected += (expected.empty() ? "" : ",") + c;
  if (line != expected) throw ParseError("metrics CSV header does not match schema", 1, 1);

  MetricsLog log;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != metrics_columns().size()) {
      throw ParseError("metrics row has " + std::to_string(cells.size()) + " fields", line_no, 1);
    }
    EpochRecord r;
    r.epoch = std::stoi(cells[0]);
    std::size_t k = 1;
    for_each_field(r, [&](double& v) {
      const std::string& s = cells[k];
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("bad number '" + s + "'", line_no, k + 1);
      }
      ++k;
    });
    log.records.push_back(r);
  }
  return log;
}

std::string to_json(const MetricsLog& log, const std::string& metadata_json) {
  nlohmann::ordered_json j;
  j["schema_version"] = kMetricsSchemaVersion;
  j["metadata"] = metadata_json.empty() ? nlohmann::ordered_json::object()
                                        : nlohmann::ordered_json::parse(metadata_json);
  if (!log.records.empty()) {
    j["summary"] = {{"best_epoch", log.best().epoch},
                    {"best_test_acc", log.best().test_acc},
                    {"final_epoch", log.last().epoch},
                    {"final_test_acc", log.last().test_acc}};
  }
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : log.records) arr.push_back(record_json(r));
  j["records"] = std::move(arr);
  return j.dump(2) + "\n";
}

}  // namespace acr
