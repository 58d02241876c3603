#ifndef RAWCSI_KEYVALUE_H_
#define RAWCSI_KEYVALUE_H_

// Line-oriented configuration files:
//
//   # comment
//   key = value
//
// Keys are dotted identifiers; values run to the end of the line with
// surrounding whitespace trimmed. Later duplicates override earlier ones.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rawcsi {

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::string& path);

  void set(std::string key, std::string value);
  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string require(std::string_view key) const;

  double getDouble(std::string_view key, double fallback) const;
  std::uint64_t getUint(std::string_view key, std::uint64_t fallback) const;
  bool getBool(std::string_view key, bool fallback) const;
  std::string getString(std::string_view key, std::string fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string serialize() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Shortest text that parses back to the same double.
std::string formatDouble(double v);
double parseDouble(std::string_view text, std::string_view what);
std::uint64_t parseUint(std::string_view text, std::string_view what);
bool parseBool(std::string_view text, std::string_view what);

}  // namespace rawcsi

#endif  // RAWCSI_KEYVALUE_H_
