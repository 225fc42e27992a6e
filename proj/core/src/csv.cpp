#include "acr/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "acr/error.hpp"

namespace acr {

namespace {

struct Field {
  std::string text;
  std::size_t column = 0;  // 1-based character column where the field starts
};

struct Record {
  std::vector<Field> fields;
  std::size_t line = 0;
};

std::vector<Record> tokenize(const std::string& text) {
  std::vector<Record> records;
  std::size_t pos = 0;
  if (text.compare(0, 3, "\xEF\xBB\xBF") == 0) pos = 3;

  std::size_t line = 1;
  std::size_t col = 1;
  while (pos < text.size()) {
    Record rec;
    rec.line = line;
    bool end_of_record = false;
    while (!end_of_record) {
      Field f;
      f.column = col;
      if (pos < text.size() && text[pos] == '"') {
        const std::size_t open_line = line;
        const std::size_t open_col = col;
        ++pos;
        ++col;
        bool closed = false;
        while (pos < text.size()) {
          const char c = text[pos];
          if (c == '"') {
            if (pos + 1 < text.size() && text[pos + 1] == '"') {
              f.text.push_back('"');
              pos += 2;
              col += 2;
              continue;
            }
            ++pos;
            ++col;
            closed = true;
            break;
          }
          if (c == '\n') {
            ++line;
            col = 1;
          } else {
            ++col;
          }
          f.text.push_back(c);
          ++pos;
        }
        if (!closed) throw ParseError("unterminated quoted field", open_line, open_col);
        if (pos < text.size() && text[pos] != ',' && text[pos] != '\n' && text[pos] != '\r') {
          throw ParseError("unexpected character after closing quote", line, col);
        }
      } else {
        while (pos < text.size() && text[pos] != ',' && text[pos] != '\n' && text[pos] != '\r') {
          if (text[pos] == '"') throw ParseError("quote inside unquoted field", line, col);
          f.text.push_back(text[pos]);
          ++pos;
          ++col;
        }
      }
      rec.fields.push_back(std::move(f));
      if (pos >= text.size()) {
        end_of_record = true;
      } else if (text[pos] == ',') {
        ++pos;
        ++col;
      } else {
        if (text[pos] == '\r') ++pos;
        if (pos < text.size() && text[pos] == '\n') ++pos;
        ++line;
        col = 1;
        end_of_record = true;
      }
    }
    // A blank line is a single empty field; skip it.
    if (!(rec.fields.size() == 1 && rec.fields[0].text.empty())) records.push_back(std::move(rec));
  }
  return records;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const Field& f, std::size_t line) {
  const std::string t = trim(f.text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw TypeError("non-numeric feature value '" + f.text + "'", line, f.column);
  }
  return v;
}

long long parse_label(const Field& f, std::size_t line) {
  const std::string t = trim(f.text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw TypeError("label '" + f.text + "' is not an integer", line, f.column);
  }
  return v;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

CsvDataset parse_csv(const std::string& text, const CsvSchema& schema, const LabelMap* existing) {
  const auto records = tokenize(text);
  if (records.empty()) throw ParseError("empty CSV: a header row is required", 1, 1);

  const Record& header = records.front();
  std::size_t label_col = header.fields.size();
  CsvDataset out;
  for (std::size_t j = 0; j < header.fields.size(); ++j) {
    const std::string name = trim(header.fields[j].text);
    if (name == schema.label_column) {
      if (label_col != header.fields.size()) {
        throw ParseError("duplicate label column '" + name + "'", header.line, header.fields[j].column);
      }
      label_col = j;
    } else {
      out.feature_names.push_back(name);
    }
  }
  if (label_col == header.fields.size()) {
    throw ParseError("header has no '" + schema.label_column + "' column", header.line, 1);
  }
  if (out.feature_names.empty()) throw ParseError("header has no feature columns", header.line, 1);
  if (records.size() < 2) throw ParseError("CSV has a header but no data rows", header.line + 1, 1);

  const std::size_t width = header.fields.size();
  const std::size_t rows = records.size() - 1;
  std::vector<double> values;
  values.reserve(rows * out.feature_names.size());
  std::vector<long long> raw_labels;
  raw_labels.reserve(rows);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const Record& rec = records[r];
    if (rec.fields.size() != width) {
      const std::size_t col = rec.fields.size() > width ? rec.fields[width].column
                                                        : rec.fields.back().column;
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(rec.fields.size()),
                       rec.line, col);
    }
    for (std::size_t j = 0; j < width; ++j) {
      if (j == label_col) {
        raw_labels.push_back(parse_label(rec.fields[j], rec.line));
      } else {
        values.push_back(parse_number(rec.fields[j], rec.line));
      }
    }
  }

  if (existing != nullptr) {
    out.label_map = *existing;
  } else {
    for (long long l : raw_labels) out.label_map.emplace(l, 0);
    int next = 0;
    for (auto& [raw, dense] : out.label_map) dense = next++;
  }

  out.set.x = Tensor2(rows, out.feature_names.size(), std::move(values));
  out.set.y.resize(rows);
  out.set.ids.resize(rows);
  out.set.classes = out.label_map.size();
  for (std::size_t i = 0; i < rows; ++i) {
    const auto it = out.label_map.find(raw_labels[i]);
    if (it == out.label_map.end()) {
      throw ParseError("label " + std::to_string(raw_labels[i]) + " not present in the training mapping",
                       records[i + 1].line, records[i + 1].fields[label_col].column);
    }
    out.set.y[i] = it->second;
    out.set.ids[i] = i;
  }
  return out;
}

CsvDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                    const LabelMap* existing) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open CSV file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), schema, existing);
}

void write_csv(const std::filesystem::path& path, const CsvDataset& data, const CsvSchema& schema) {
  std::vector<long long> raw(data.label_map.size());
  for (const auto& [r, dense] : data.label_map) raw[static_cast<std::size_t>(dense)] = r;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& name : data.feature_names) out << quote_if_needed(name) << ',';
  out << quote_if_needed(schema.label_column) << "\r\n";
  const Tensor2& x = data.set.x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (double v : x.row_span(i)) out << format_double(v) << ',';
    const int y = data.set.y[i];
    out << (raw.empty() ? static_cast<long long>(y) : raw[static_cast<std::size_t>(y)]) << "\r\n";
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace acr
