#pragma once

// Plain-text formats shared by the library and the CLI: numeric CSV blocks
// with a header row, and flat `key = value` files.

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace fosr::io {

// Shortest round-trip decimal representation.
std::string format_double(double value);

struct CsvMatrix {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);
void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const Eigen::MatrixXd& values);
// Reads `rows` lines of numeric CSV (all remaining lines when rows < 0).
Eigen::MatrixXd read_csv_block(std::istream& in, Eigen::Index rows = -1);
CsvMatrix read_csv(std::istream& in);
CsvMatrix read_csv_file(const std::string& path);

std::vector<std::string> numeric_header(const std::vector<double>& values);
std::vector<std::string> prefixed_header(const std::string& prefix, Eigen::Index count);
std::vector<double> header_as_numbers(const std::vector<std::string>& header);

// Ordered key-value store; insertion order is preserved on output so files
// are byte-stable.
class KeyValue {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, bool value);

  bool has(const std::string& key) const;
  // Throws ConfigError naming the key when absent or malformed.
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Lines are `key = value`; blank lines and lines starting with '#' are skipped.
KeyValue parse_key_value(std::istream& in);
KeyValue read_key_value_file(const std::string& path);
void write_key_value(std::ostream& out, const KeyValue& kv);
void write_key_value_file(const std::string& path, const KeyValue& kv);

std::string join_indices(const std::vector<int>& zero_based);  // 1-based, ';' separated

}  // namespace fosr::io
