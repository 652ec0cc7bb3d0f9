#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privmon/common.hpp"

namespace privmon {

class ConfigError : public Error {
 public:
  using Error::Error;
};

// `key = value` lines, `#` comments. Readers take keys as they consume them
// so leftovers can be reported as typos.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text);
  static KeyValues load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value);
  bool has(std::string_view key) const;

  std::optional<std::string> take(std::string_view key);
  std::string take_string(std::string_view key, std::string fallback);
  u64 take_u64(std::string_view key, u64 fallback);
  u128 take_u128(std::string_view key, u128 fallback);
  bool take_bool(std::string_view key, bool fallback);
  // Comma separated numbers.
  std::vector<u128> take_list(std::string_view key);

  std::vector<std::string> unused() const;
  // Throws ConfigError naming every key nobody took.
  void require_all_used() const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
    bool used = false;
  };
  std::map<std::string, Entry, std::less<>> entries_;
};

std::vector<u128> parse_number_list(std::string_view text);

}  // namespace privmon
