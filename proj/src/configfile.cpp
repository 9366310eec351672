#include "koop/configfile.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace koop {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Trim to the shortest representation that round-trips.
  for (int prec = 1; prec <= 16; ++prec) {
    char shorter[48];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    double back = 0;
    std::sscanf(shorter, "%lf", &back);
    if (back == v) return shorter;
  }
  return buf;
}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      c.errors_.push_back("line " + std::to_string(lineno) + ": expected `key = value`, got: " + t);
      continue;
    }
    c.entries_.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string Config::render() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

bool Config::has(const std::string& key) const { return find(key).has_value(); }

std::optional<std::string> Config::find(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

void Config::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Config::set(const std::string& key, double value) { set(key, format_double(value)); }
void Config::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

std::string Config::get_string(const std::string& key, const std::string& fallback) {
  const auto v = find(key);
  return v ? *v : fallback;
}

double Config::get_double(const std::string& key, double fallback) {
  const auto v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  const double d = std::strtod(v->c_str(), &end);
  if (end == v->c_str() || *end != '\0') {
    errors_.push_back("key `" + key + "`: not a number: " + *v);
    return fallback;
  }
  return d;
}

long long Config::get_int(const std::string& key, long long fallback) {
  const auto v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  const long long i = std::strtoll(v->c_str(), &end, 10);
  if (end == v->c_str() || *end != '\0') {
    errors_.push_back("key `" + key + "`: not an integer: " + *v);
    return fallback;
  }
  return i;
}

bool Config::get_bool(const std::string& key, bool fallback) {
  const auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  errors_.push_back("key `" + key + "`: not a bool: " + *v);
  return fallback;
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) {
  const auto v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::istringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    char* end = nullptr;
    const double d = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0') {
      errors_.push_back("key `" + key + "`: bad list element: " + t);
      return fallback;
    }
    out.push_back(d);
  }
  return out;
}

const std::vector<std::string>& Config::unknown_key_check(const std::vector<std::string>& known) {
  unknown_.clear();
  for (const auto& [k, v] : entries_) {
    if (std::find(known.begin(), known.end(), k) == known.end())
      unknown_.push_back("unknown key `" + k + "`");
  }
  return unknown_;
}

}  // namespace koop
