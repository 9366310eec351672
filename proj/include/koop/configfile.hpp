#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace koop {

/// Ordered `key = value` text config. Lines starting with '#' are comments.
/// Values are kept as strings; typed accessors record every failure so that
/// validation can report all offending keys at once.
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);
  std::string render() const;

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  long long get_int(const std::string& key, long long fallback);
  bool get_bool(const std::string& key, bool fallback);

  /// Comma-separated list of doubles.
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback);

  void require_error(const std::string& message) { errors_.push_back(message); }
  const std::vector<std::string>& errors() const { return errors_; }
  const std::vector<std::string>& unknown_key_check(const std::vector<std::string>& known);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::optional<std::string> find(const std::string& key) const;

  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<std::string> errors_;
  std::vector<std::string> unknown_;
};

std::string format_double(double v);

}  // namespace koop
