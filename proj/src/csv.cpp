#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "msm/dataio.hpp"
#include "msm/error.hpp"

namespace msm::dataio {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// RFC 4180 records. Quoted fields may hold delimiters, doubled quotes and
// line breaks.
std::vector<std::vector<std::string>> split_records(std::string_view text, char delim) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  auto end_field = [&] {
    record.push_back(field_was_quoted ? field : std::string(trim(field)));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && trim(field).empty()) {
      field.clear();
      quoted = true;
      field_was_quoted = true;
    } else if (c == delim) {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      end_record();
    } else {
      field.push_back(c);
    }
  }
  if (!field.empty() || !record.empty() || field_was_quoted) end_record();
  return records;
}

char detect_delimiter(std::string_view text) {
  auto eol = text.find_first_of("\r\n");
  std::string_view header = text.substr(0, eol);
  bool has_semicolon = header.find(';') != std::string_view::npos;
  bool has_comma = header.find(',') != std::string_view::npos;
  return (has_semicolon && !has_comma) ? ';' : ',';
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

void infer_kind(Column& col) {
  const std::size_t n = col.raw.size();
  std::vector<double> values(n, std::nan(""));
  bool numeric = true;
  for (std::size_t i = 0; i < n && numeric; ++i) {
    if (col.missing[i]) continue;
    numeric = parse_number(col.raw[i], values[i]);
  }
  if (numeric) {
    col.kind = ColumnKind::numeric;
    col.numeric = std::move(values);
    return;
  }
  std::unordered_map<std::string, int> index;
  col.codes.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (col.missing[i]) continue;
    auto [it, inserted] = index.try_emplace(col.raw[i], static_cast<int>(col.levels.size()));
    if (inserted) col.levels.push_back(col.raw[i]);
    col.codes[i] = it->second;
  }
  // Free-form columns (identifiers, notes) are not usable as factors.
  if (col.levels.size() > 50 && col.levels.size() * 2 > n) {
    col.kind = ColumnKind::text;
    col.codes.clear();
    col.levels.clear();
  } else {
    col.kind = ColumnKind::categorical;
  }
}

bool needs_quotes(const std::string& s, char delim) {
  return s.find_first_of(std::string{delim, '"', '\n', '\r'}) != std::string::npos ||
         (!s.empty() && (s.front() == ' ' || s.back() == ' '));
}

}  // namespace

bool is_missing_token(std::string_view cell) {
  cell = trim(cell);
  return cell.empty() || cell == "NA";
}

Dataset parse_csv(std::string_view bytes, std::optional<char> delimiter_hint) {
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xEF &&
      static_cast<unsigned char>(bytes[1]) == 0xBB && static_cast<unsigned char>(bytes[2]) == 0xBF) {
    bytes.remove_prefix(3);
  }
  if (trim(bytes).empty() || bytes.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    fail_validation("EmptyFile", "input contains no header row");
  }
  const char delim = delimiter_hint.value_or(detect_delimiter(bytes));
  auto records = split_records(bytes, delim);
  if (records.empty()) fail_validation("EmptyFile", "input contains no header row");

  const auto& header = records.front();
  std::unordered_set<std::string> seen;
  for (const auto& name : header) {
    if (!seen.insert(name).second) {
      fail_validation("DuplicateColumnName", "duplicate column name '" + name + "'", {{"column", name}});
    }
  }

  std::vector<Column> columns(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    columns[c].name = header[c];
    columns[c].raw.reserve(records.size() - 1);
    columns[c].missing.reserve(records.size() - 1);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      fail_validation("RaggedRows",
                      "row " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                          " fields, header has " + std::to_string(header.size()),
                      {{"row", r}, {"fields", rec.size()}, {"expected", header.size()}});
    }
    for (std::size_t c = 0; c < rec.size(); ++c) {
      bool miss = is_missing_token(rec[c]);
      columns[c].raw.push_back(miss ? std::string() : rec[c]);
      columns[c].missing.push_back(miss ? 1 : 0);
    }
  }
  for (auto& col : columns) infer_kind(col);
  return Dataset(std::move(columns));
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_validation("FileNotFound", "cannot open '" + path + "'", {{"path", path}});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string to_csv(const Dataset& data, char delim) {
  std::string out;
  auto put = [&](const std::string& s) {
    if (needs_quotes(s, delim)) {
      out.push_back('"');
      for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
      }
      out.push_back('"');
    } else {
      out += s;
    }
  };
  const auto& cols = data.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out.push_back(delim);
    put(cols[c].name);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out.push_back(delim);
      if (cols[c].is_missing(r)) {
        out += "NA";
      } else {
        put(cols[c].raw[r]);
      }
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace msm::dataio
