#ifndef LANDUSE_CONFIG_HPP
#define LANDUSE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace landuse {

/// Flat `key = value` configuration. Lines starting with '#' are comments.
/// Relative paths resolve against the directory of the config file.
class Config {
 public:
  Config() = default;
  static Config parse(std::string_view text, std::filesystem::path base_dir = {});
  static Config load(const std::filesystem::path& path);

  /// Applies a `key=value` override; throws ConfigError if malformed.
  void set(std::string_view assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Path value resolved against the base directory.
  std::filesystem::path path(const std::string& key) const;
  std::optional<std::filesystem::path> optional_path(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

  /// FNV-1a 64 over the sorted entries, excluding `excluded` keys; hex string.
  std::string hash(const std::vector<std::string>& excluded = {}) const;

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

}  // namespace landuse

#endif  // LANDUSE_CONFIG_HPP
