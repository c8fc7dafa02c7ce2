#include "stablesqf/io/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>
#include <system_error>
#include <unordered_map>

namespace stablesqf::io {

std::vector<Split> Dataset::splits(std::size_t validation_len, std::size_t test_len) const {
  std::vector<Split> out;
  out.reserve(series.size());
  for (const auto& s : series) {
    const std::size_t n = s.values.size();
    if (n < validation_len + test_len + 2) {
      throw std::invalid_argument("series " + s.id + " has " + std::to_string(n) +
                                  " points, too few for the validation and test regions");
    }
    out.push_back({n - test_len - validation_len, n - test_len, n});
  }
  return out;
}

std::vector<std::vector<double>> Dataset::values() const {
  std::vector<std::vector<double>> out;
  out.reserve(series.size());
  for (const auto& s : series) out.push_back(s.values);
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DatasetError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, std::size_t season) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DatasetError("line 1: empty dataset file");
  ++line_no;
  if (trim(line) != "series_id,time_index,value") {
    fail(line_no, "expected header 'series_id,time_index,value'");
  }

  struct Raw {
    std::map<long long, std::pair<double, std::size_t>> rows;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Raw> raw;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto c1 = text.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string_view::npos || text.find(',', c2 + 1) != std::string_view::npos) {
      fail(line_no, "expected 3 comma-separated fields");
    }
    const std::string id(trim(text.substr(0, c1)));
    const auto idx_text = trim(text.substr(c1 + 1, c2 - c1 - 1));
    const auto val_text = trim(text.substr(c2 + 1));
    if (id.empty()) fail(line_no, "empty series_id");

    long long idx = 0;
    auto [p1, e1] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
    if (e1 != std::errc() || p1 != idx_text.data() + idx_text.size()) {
      fail(line_no, "malformed time_index '" + std::string(idx_text) + "'");
    }
    double value = 0.0;
    auto [p2, e2] = std::from_chars(val_text.data(), val_text.data() + val_text.size(), value);
    if (e2 != std::errc() || p2 != val_text.data() + val_text.size()) {
      fail(line_no, "malformed value '" + std::string(val_text) + "'");
    }
    if (!std::isfinite(value)) fail(line_no, "non-finite value '" + std::string(val_text) + "'");

    auto [it, inserted] = raw.try_emplace(id);
    if (inserted) order.push_back(id);
    if (!it->second.rows.emplace(idx, std::make_pair(value, line_no)).second) {
      fail(line_no, "duplicate time_index " + std::to_string(idx) + " for series " + id);
    }
  }

  Dataset data;
  data.series.reserve(order.size());
  for (const auto& id : order) {
    const auto& rows = raw.at(id).rows;
    Series s{id, {}, season};
    s.values.reserve(rows.size());
    long long expected = rows.begin()->first;
    for (const auto& [idx, entry] : rows) {
      if (idx != expected) {
        fail(entry.second, "series " + id + " has a gap in time_index: expected " +
                               std::to_string(expected) + ", got " + std::to_string(idx));
      }
      s.values.push_back(entry.first);
      ++expected;
    }
    data.series.push_back(std::move(s));
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, std::size_t season) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset " + path.string());
  return read_dataset_csv(in, season);
}

std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "series_id,time_index,value\n";
  for (const auto& s : data.series) {
    for (std::size_t t = 0; t < s.values.size(); ++t) {
      out << s.id << ',' << t << ',' << format_number(s.values[t]) << '\n';
    }
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  write_dataset_csv(out, data);
}

}  // namespace stablesqf::io
