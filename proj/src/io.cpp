#include "fosr/io.hpp"

#include "fosr/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fosr::io {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& text) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan" || text == "NA") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("not a number: '" + text + "'");
  return value;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    out << header[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << format_double(values(i, j));
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const Eigen::MatrixXd& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_csv(out, header, values);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Eigen::MatrixXd read_csv_block(std::istream& in, Eigen::Index rows) {
  std::vector<std::vector<double>> data;
  std::string line;
  while ((rows < 0 || static_cast<Eigen::Index>(data.size()) < rows) && std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) {
      if (rows < 0) continue;
      throw ConfigError("unexpected blank line in CSV block");
    }
    std::vector<double> row;
    for (const auto& field : split(line, ',')) row.push_back(parse_double(field));
    if (!data.empty() && row.size() != data.front().size())
      throw ConfigError("ragged CSV row " + std::to_string(data.size() + 1));
    data.push_back(std::move(row));
  }
  if (rows >= 0 && static_cast<Eigen::Index>(data.size()) != rows)
    throw ConfigError("CSV block truncated");
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index m = n ? static_cast<Eigen::Index>(data.front().size()) : 0;
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = data[i][j];
  return out;
}

CsvMatrix read_csv(std::istream& in) {
  CsvMatrix out;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV input");
  out.header = split(trim(line), ',');
  out.values = read_csv_block(in);
  if (out.values.rows() > 0 && out.values.cols() != static_cast<Eigen::Index>(out.header.size()))
    throw ConfigError("CSV header has " + std::to_string(out.header.size()) + " fields but rows have " +
                      std::to_string(out.values.cols()));
  if (out.values.rows() == 0) out.values.resize(0, static_cast<Eigen::Index>(out.header.size()));
  return out;
}

CsvMatrix read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_csv(in);
}

std::vector<std::string> numeric_header(const std::vector<double>& values) {
  std::vector<std::string> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(format_double(v));
  return out;
}

std::vector<std::string> prefixed_header(const std::string& prefix, Eigen::Index count) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

std::vector<double> header_as_numbers(const std::vector<std::string>& header) {
  std::vector<double> out;
  out.reserve(header.size());
  for (const auto& h : header) out.push_back(parse_double(h));
  return out;
}

void KeyValue::set(const std::string& key, const std::string& value) {
  for (auto& entry : entries_) {
    if (entry.first == key) {
      entry.second = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void KeyValue::set(const std::string& key, double value) { set(key, format_double(value)); }
void KeyValue::set(const std::string& key, long long value) { set(key, std::to_string(value)); }
void KeyValue::set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

bool KeyValue::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& KeyValue::get(const std::string& key) const {
  for (const auto& entry : entries_)
    if (entry.first == key) return entry.second;
  throw ConfigError("missing required key '" + key + "'");
}

double KeyValue::get_double(const std::string& key) const {
  try {
    return parse_double(get(key));
  } catch (const ConfigError&) {
    if (!has(key)) throw;
    throw ConfigError("key '" + key + "' is not a number: " + get(key));
  }
}

long long KeyValue::get_int(const std::string& key) const {
  const std::string& text = get(key);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("key '" + key + "' is not an integer: " + text);
  return value;
}

bool KeyValue::get_bool(const std::string& key) const {
  const std::string& text = get(key);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("key '" + key + "' is not a boolean: " + text);
}

double KeyValue::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
long long KeyValue::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}
bool KeyValue::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

KeyValue parse_key_value(std::istream& in) {
  KeyValue kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    kv.set(key, trim(t.substr(eq + 1)));
  }
  return kv;
}

KeyValue read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_key_value(in);
}

void write_key_value(std::ostream& out, const KeyValue& kv) {
  for (const auto& [key, value] : kv.entries()) out << key << " = " << value << '\n';
}

void write_key_value_file(const std::string& path, const KeyValue& kv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_key_value(out, kv);
}

std::string join_indices(const std::vector<int>& zero_based) {
  std::string out;
  for (std::size_t k = 0; k < zero_based.size(); ++k) {
    if (k) out += ';';
    out += std::to_string(zero_based[k] + 1);
  }
  return out;
}

}  // namespace fosr::io
