#include "privmon/config.hpp"

#include <fstream>
#include <sstream>

namespace privmon {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (kv.entries_.count(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    kv.entries_[key] = Entry{std::string(trim(line.substr(eq + 1))), line_no, false};
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void KeyValues::set(const std::string& key, std::string value) { entries_[key] = Entry{std::move(value), 0, false}; }

bool KeyValues::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::optional<std::string> KeyValues::take(std::string_view key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  it->second.used = true;
  return it->second.value;
}

std::string KeyValues::take_string(std::string_view key, std::string fallback) {
  auto v = take(key);
  return v ? *v : fallback;
}

u128 KeyValues::take_u128(std::string_view key, u128 fallback) {
  auto v = take(key);
  if (!v) return fallback;
  try {
    return parse_u128(*v);
  } catch (const DomainError& e) {
    throw ConfigError("config key '" + std::string(key) + "': " + e.what());
  }
}

u64 KeyValues::take_u64(std::string_view key, u64 fallback) {
  const u128 v = take_u128(key, fallback);
  if (v > ~u64{0}) throw ConfigError("config key '" + std::string(key) + "' is too large");
  return static_cast<u64>(v);
}

bool KeyValues::take_bool(std::string_view key, bool fallback) {
  auto v = take(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "' expects true or false");
}

std::vector<u128> KeyValues::take_list(std::string_view key) {
  auto v = take(key);
  if (!v) return {};
  try {
    return parse_number_list(*v);
  } catch (const DomainError& e) {
    throw ConfigError("config key '" + std::string(key) + "': " + e.what());
  }
}

std::vector<std::string> KeyValues::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_) {
    if (!e.used) out.push_back(k);
  }
  return out;
}

void KeyValues::require_all_used() const {
  const auto left = unused();
  if (left.empty()) return;
  std::string msg = "unknown config keys:";
  for (const auto& k : left) msg += " " + k;
  throw ConfigError(msg);
}

std::vector<u128> parse_number_list(std::string_view text) {
  std::vector<u128> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find_first_of(", \t\r", pos);
    if (end == std::string_view::npos) end = text.size();
    const auto item = text.substr(pos, end - pos);
    if (!item.empty()) out.push_back(parse_u128(item));
    pos = end + 1;
  }
  return out;
}

}  // namespace privmon
