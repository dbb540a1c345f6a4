#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace smcmc {

/// Flat `section.key = value` configuration.
///
/// Grammar, one entry per line:
///   line    := blank | comment | entry
///   comment := optional spaces, then '#' and anything
///   entry   := key spaces? '=' spaces? value spaces? ('#' comment)?
///   key     := word ('.' word)+ where word is [a-z0-9_]+
/// Values are kept as text and converted on access. Duplicate keys are errors.
/// Every key must be read by the consumer; `unread_keys` lists the rest so that
/// typos are reported rather than silently ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<text>");
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated integers.
  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         const std::vector<std::int64_t>& fallback) const;

  std::vector<std::string> unread_keys() const;
  /// Throws std::invalid_argument naming every unread key.
  void require_all_read() const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  /// `key = value` lines in key order.
  std::string serialize() const;

 private:
  const std::string* lookup(const std::string& key) const;
  [[noreturn]] void bad_value(const std::string& key, const std::string& expected) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> read_;
  std::string origin_;
};

}  // namespace smcmc
