#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hpshield {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key=value configuration.
///
///   # comment
///   seed = 7
///   [env]
///   eps = 0.1        -> key "env.eps"
///
/// Values are kept as text and converted on access. Later assignments win, so
/// layering is: defaults, then files, then environment, then command line.
class Config {
 public:
  using Map = std::map<std::string, std::string, std::less<>>;

  Config() = default;
  Config(std::initializer_list<std::pair<const std::string, std::string>> defaults) : values_(defaults) {}

  /// Merge a file's assignments. Throws ConfigError (with file and line).
  void merge_file(const std::filesystem::path& path);
  void merge_text(std::string_view text, const std::string& origin = "<text>");

  /// For every key already present, an environment variable
  /// <prefix><KEY> (upper case, '.' replaced by '_') overrides the value.
  void merge_environment(std::string_view prefix = "HPSHIELD_");

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
  bool has(std::string_view key) const { return values_.find(key) != values_.end(); }

  std::string string(std::string_view key) const;
  std::string string(std::string_view key, std::string fallback) const;
  double number(std::string_view key) const;
  double number(std::string_view key, double fallback) const;
  long long integer(std::string_view key) const;
  long long integer(std::string_view key, long long fallback) const;
  bool boolean(std::string_view key) const;
  bool boolean(std::string_view key, bool fallback) const;

  /// Keys starting with `prefix`, with the prefix removed.
  Map with_prefix(std::string_view prefix) const;
  const Map& values() const { return values_; }

  /// One "key = value" line per entry, sorted.
  std::string dump() const;

 private:
  Map values_;
};

double parse_number(std::string_view text, std::string_view what);

}  // namespace hpshield
