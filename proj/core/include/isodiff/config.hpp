#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace isodiff {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` configuration file. Keys may be dotted (a.kappa) or
// indexed (n.1); `#` starts a comment; list values are comma or whitespace
// separated. One format is shared by design, prior, chain and simulation
// settings.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(std::string_view text,
                                     const std::string& origin = "<string>");

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  double get_real(const std::string& key) const;
  double get_real(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<long> get_int_list(const std::string& key) const;
  std::vector<double> get_real_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Serialises back to the file format, keys sorted.
  std::string to_string() const;

 private:
  [[noreturn]] void missing(const std::string& key) const;

  std::map<std::string, std::string> entries_;
  std::string origin_ = "<empty>";
};

}  // namespace isodiff
