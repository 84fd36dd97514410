#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace hslift {

/// Library version, e.g. "0.1.0".
const char* version() noexcept;

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Flat key = value experiment configuration.
///
/// Lines are "key = value"; '#' starts a comment; blank lines are ignored.
/// Later assignments override earlier ones.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& source = "<config>");
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  /// Only when the key is absent.
  void set_default(const std::string& key, const std::string& value);
  /// "key=value".
  void assign(const std::string& assignment);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  /// Must be > 0.
  double get_positive(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::size_t get_count(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Comma-separated lists.
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  /// Removes a key, returning its value if present.
  std::optional<std::string> take(const std::string& key);

  /// Throws ConfigError naming the first key outside `known`.
  void require_known(const std::set<std::string>& known) const;

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  /// Sorted "key=value\n" lines; the hash is taken over these bytes.
  std::string canonical() const;
  std::uint64_t hash() const { return fnv1a64(canonical()); }
  std::string hash_hex() const;
  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Provenance block carried by every output file.
nlohmann::json provenance(const std::string& command, const Config& config);

}  // namespace hslift
