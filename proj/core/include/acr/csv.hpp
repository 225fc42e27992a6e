#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "acr/data.hpp"

namespace acr {

struct CsvSchema {
  std::string label_column = "label";
};

// Original integer label → dense class id.
using LabelMap = std::map<long long, int>;

struct CsvDataset {
  LabeledSet set;
  std::vector<std::string> feature_names;
  LabelMap label_map;
};

// Parses an RFC-4180 CSV (UTF-8, header row required): numeric feature
// columns plus one integer label column. Labels are remapped to 0..C−1 in
// ascending order of the original value. When `existing` is given, that
// mapping is applied instead and an unknown label is a ParseError.
// Errors carry 1-based line and column.
CsvDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {},
                    const LabelMap* existing = nullptr);
CsvDataset parse_csv(const std::string& text, const CsvSchema& schema = {},
                     const LabelMap* existing = nullptr);

// Writes features with shortest round-trip formatting and labels mapped back
// through `label_map` (identity when empty).
void write_csv(const std::filesystem::path& path, const CsvDataset& data,
               const CsvSchema& schema = {});

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace acr
