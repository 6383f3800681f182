#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace flusense::text {

/// Dictionary for forward maximum matching. Entries are UTF-8 strings; weights
/// are carried for file round-trips but do not affect matching.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::vector<std::string>& entries);

  /// One entry per line, optional `<TAB>weight`. Duplicate entries are an error.
  static Lexicon load(const std::filesystem::path& path);

  void add(const std::string& entry, double weight = 1.0);
  bool contains(std::string_view entry) const { return weights_.count(std::string(entry)) != 0; }
  std::optional<double> weight(std::string_view entry) const;
  std::size_t size() const { return weights_.size(); }
  /// Longest entry length in code points.
  std::size_t max_length() const { return max_len_; }

 private:
  std::unordered_map<std::string, double> weights_;
  std::size_t max_len_ = 0;
};

struct SegmentOptions {
  /// Emit whitespace/punctuation runs as tokens; concatenating the output then
  /// reproduces the input byte for byte.
  bool keep_separators = false;
};

/// Forward maximum matching: at each position take the longest lexicon entry,
/// otherwise a single code point. Separator characters not covered by an entry
/// are dropped unless `keep_separators`.
std::vector<std::string> segment(std::string_view text, const Lexicon& lexicon, SegmentOptions options = {});

/// Splits UTF-8 into code points. Invalid bytes become single-byte units.
std::vector<std::string_view> code_points(std::string_view text);
bool is_separator(std::string_view code_point);

enum class EmoticonCategory { Joy, Happiness, Sadness, Anger };
inline constexpr std::array<EmoticonCategory, 4> kEmoticonCategories{
    EmoticonCategory::Joy, EmoticonCategory::Happiness, EmoticonCategory::Sadness, EmoticonCategory::Anger};
std::string_view to_string(EmoticonCategory c);
EmoticonCategory parse_emoticon_category(std::string_view s);

using EmoticonCounts = std::array<std::size_t, 4>;  // indexed by EmoticonCategory

class EmoticonTable {
 public:
  EmoticonTable() = default;
  /// `literal<TAB>category`; a literal listed twice is an error.
  static EmoticonTable load(const std::filesystem::path& path);

  void add(const std::string& literal, EmoticonCategory category);
  std::optional<EmoticonCategory> find(std::string_view literal) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::string, EmoticonCategory, std::less<>> table_;
};

/// Counts `[...]` literals by category; unknown literals are ignored.
EmoticonCounts extract_emoticons(std::string_view text, const EmoticonTable& table);

}  // namespace flusense::text
