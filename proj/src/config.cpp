#include "hslift/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hslift/errors.hpp"

#ifndef HSLIFT_VERSION
#define HSLIFT_VERSION "0.0.0"
#endif

namespace hslift {

const char* version() noexcept { return HSLIFT_VERSION; }

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), issp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), issp).base(), s.end());
  return s;
}

}  // namespace

Config Config::parse(std::istream& is, const std::string& source) {
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    c.set(key, trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse(in, path);
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

void Config::set_default(const std::string& key, const std::string& value) { entries_.try_emplace(key, value); }

void Config::assign(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& Config::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const auto& s = get(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': '" + s + "' is not a finite number");
}

double Config::get_positive(const std::string& key) const {
  const double v = get_double(key);
  if (!(v > 0.0)) throw ConfigError("config key '" + key + "' must be positive");
  return v;
}

int Config::get_int(const std::string& key) const {
  const double v = get_double(key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("config key '" + key + "' must be an integer");
  return static_cast<int>(v);
}

std::size_t Config::get_count(const std::string& key) const {
  const int v = get_int(key);
  if (v < 1) throw ConfigError("config key '" + key + "' must be at least 1");
  return static_cast<std::size_t>(v);
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const auto& s = get(key);
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is out of range");
  }
}

bool Config::get_bool(const std::string& key) const {
  const auto& s = get(key);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "' must be a boolean");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  // commas inside parentheses belong to the item, e.g. gaussian(0.5)
  int depth = 0;
  std::string cur;
  for (char ch : get(key)) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  for (const auto& s : out) {
    if (s.empty()) throw ConfigError("config key '" + key + "' has an empty list item");
  }
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : get_list(key)) {
    Config tmp;
    tmp.set(key, s);
    out.push_back(tmp.get_double(key));
  }
  return out;
}

void Config::require_known(const std::set<std::string>& known) const {
  for (const auto& [k, v] : entries_) {
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
}

std::optional<std::string> Config::take(const std::string& key) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  auto v = it->second;
  entries_.erase(it);
  return v;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

std::string Config::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : entries_) j[k] = v;
  return j;
}

nlohmann::json provenance(const std::string& command, const Config& config) {
  std::uint64_t seed = 0;
  if (config.has("seed")) seed = config.get_u64("seed");
  return {{"tool", "hslift"},
          {"version", version()},
          {"command", command},
          {"seed", seed},
          {"config_hash", config.hash_hex()},
          {"config", config.to_json()}};
}

}  // namespace hslift
