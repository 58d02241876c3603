#include "rawcsi/keyvalue.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rawcsi/error.h"

namespace rawcsi {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      fail(Errc::kConfigInvalid, "line " + std::to_string(lineNo) + ": expected key = value");
    }
    const auto key = trim(view.substr(0, eq));
    if (key.empty()) fail(Errc::kConfigInvalid, "line " + std::to_string(lineNo) + ": empty key");
    cfg.set(std::string(key), std::string(trim(view.substr(eq + 1))));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIoFailure, "cannot open config " + path);
  return parse(in);
}

void KeyValueConfig::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

bool KeyValueConfig::contains(std::string_view key) const { return get(key).has_value(); }

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::string KeyValueConfig::require(std::string_view key) const {
  auto v = get(key);
  if (!v) fail(Errc::kConfigInvalid, "missing key " + std::string(key));
  return *v;
}

double KeyValueConfig::getDouble(std::string_view key, double fallback) const {
  auto v = get(key);
  return v ? parseDouble(*v, key) : fallback;
}

std::uint64_t KeyValueConfig::getUint(std::string_view key, std::uint64_t fallback) const {
  auto v = get(key);
  return v ? parseUint(*v, key) : fallback;
}

bool KeyValueConfig::getBool(std::string_view key, bool fallback) const {
  auto v = get(key);
  return v ? parseBool(*v, key) : fallback;
}

std::string KeyValueConfig::getString(std::string_view key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : fallback;
}

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

std::string formatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parseDouble(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    fail(Errc::kConfigInvalid, std::string(what) + ": not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parseUint(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    fail(Errc::kConfigInvalid, std::string(what) + ": not an unsigned integer: '" + std::string(text) + "'");
  }
  return v;
}

bool parseBool(std::string_view text, std::string_view what) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  fail(Errc::kConfigInvalid, std::string(what) + ": not a boolean: '" + std::string(text) + "'");
}

}  // namespace rawcsi
