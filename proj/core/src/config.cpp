#include "isodiff/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace isodiff {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

KeyValueConfig KeyValueConfig::parse_string(std::string_view text,
                                            const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": expected `key = value`, got `" + std::string(line) + "`");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error(origin + ":" + std::to_string(lineno) + ": missing key");
    cfg.entries_[std::string(key)] = std::string(value);
  }
  return cfg;
}

void KeyValueConfig::missing(const std::string& key) const {
  throw config_error(origin_ + ": missing required key `" + key + "`");
}

long KeyValueConfig::get_int(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) missing(key);
  const std::string& v = it->second;
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw config_error(origin_ + ": key `" + key + "`: `" + v + "` is not an integer");
  return out;
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double KeyValueConfig::get_real(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) missing(key);
  const std::string& v = it->second;
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw config_error(origin_ + ": key `" + key + "`: `" + v + "` is not a number");
  return out;
}

double KeyValueConfig::get_real(const std::string& key, double fallback) const {
  return has(key) ? get_real(key) : fallback;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) missing(key);
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

namespace {

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char c : v) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) parts.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

}  // namespace

std::vector<long> KeyValueConfig::get_int_list(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) missing(key);
  std::vector<long> out;
  for (const auto& part : split_list(it->second)) {
    long x = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), x);
    if (ec != std::errc{} || ptr != part.data() + part.size())
      throw config_error(origin_ + ": key `" + key + "`: `" + part + "` is not an integer");
    out.push_back(x);
  }
  return out;
}

std::vector<double> KeyValueConfig::get_real_list(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) missing(key);
  std::vector<double> out;
  for (const auto& part : split_list(it->second)) {
    double x = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), x);
    if (ec != std::errc{} || ptr != part.data() + part.size())
      throw config_error(origin_ + ": key `" + key + "`: `" + part + "` is not a number");
    out.push_back(x);
  }
  return out;
}

std::string KeyValueConfig::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

}  // namespace isodiff
