#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flusense {

/// Flat `key = value` text file. Blank lines and lines starting with `#` are
/// ignored; keys and values are trimmed. A repeated key is an error.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::filesystem::path& path);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string require(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<std::string> keys() const;

  const std::string& origin() const { return origin_; }
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

 private:
  std::string origin_;
  std::map<std::string, std::string, std::less<>> entries_;
};

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Whole file as a string; throws a validation error if it cannot be opened.
std::string read_file(const std::filesystem::path& path);
/// Non-empty, non-comment lines, trimmed.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace flusense
