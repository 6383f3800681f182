#include "flusense/text.hpp"

#include <algorithm>
#include <cctype>

#include "flusense/config.hpp"
#include "flusense/error.hpp"

namespace flusense::text {

namespace {
constexpr const char* kModule = "text";

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}
}  // namespace

std::vector<std::string_view> code_points(std::string_view text) {
  std::vector<std::string_view> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = utf8_length(static_cast<unsigned char>(text[i]));
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

bool is_separator(std::string_view cp) {
  if (cp.size() == 1) {
    const auto c = static_cast<unsigned char>(cp[0]);
    if (c <= 0x20 || c == 0x7F) return true;
    return c < 0x80 && !std::isalnum(c) && c != '_';
  }
  // Common CJK and general punctuation.
  static const std::vector<std::string_view> wide{
      "　", "，", "。", "！", "？", "、", "；", "：", "“", "”",
      "‘", "’", "（", "）", "【", "】", "《", "》", "…", "—",
      "～", " ", "·", "「", "」"};
  return std::find(wide.begin(), wide.end(), cp) != wide.end();
}

Lexicon::Lexicon(const std::vector<std::string>& entries) {
  for (const auto& e : entries) add(e);
}

void Lexicon::add(const std::string& entry, double weight) {
  if (entry.empty()) throw validation_error(kModule, "empty lexicon entry");
  weights_[entry] = weight;
  max_len_ = std::max(max_len_, code_points(entry).size());
}

std::optional<double> Lexicon::weight(std::string_view entry) const {
  auto it = weights_.find(std::string(entry));
  if (it == weights_.end()) return std::nullopt;
  return it->second;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  Lexicon lex;
  for (const auto& line : read_lines(path)) {
    const auto tab = line.find('\t');
    std::string entry = trim(line.substr(0, tab));
    double w = 1.0;
    if (tab != std::string::npos) {
      try {
        w = std::stod(line.substr(tab + 1));
      } catch (const std::exception&) {
        throw validation_error(kModule, path.string() + ": bad weight for '" + entry + "'");
      }
    }
    if (lex.contains(entry)) throw validation_error(kModule, path.string() + ": duplicate entry '" + entry + "'");
    lex.add(entry, w);
  }
  return lex;
}

std::vector<std::string> segment(std::string_view text, const Lexicon& lexicon, SegmentOptions options) {
  const auto cps = code_points(text);
  std::vector<std::string> tokens;
  std::string separator_run;
  auto flush_separators = [&] {
    if (!separator_run.empty()) {
      if (options.keep_separators) tokens.push_back(separator_run);
      separator_run.clear();
    }
  };

  std::size_t i = 0;
  std::string candidate;
  while (i < cps.size()) {
    const std::size_t limit = std::min(lexicon.max_length(), cps.size() - i);
    std::size_t matched = 0;
    if (limit > 0) {
      // Build the longest candidate once, then shrink from the right.
      const char* begin = cps[i].data();
      std::vector<std::size_t> ends(limit);
      for (std::size_t k = 0; k < limit; ++k) {
        ends[k] = static_cast<std::size_t>(cps[i + k].data() + cps[i + k].size() - begin);
      }
      for (std::size_t len = limit; len >= 1; --len) {
        if (lexicon.contains(std::string_view(begin, ends[len - 1]))) {
          matched = len;
          break;
        }
      }
    }
    if (matched > 0) {
      flush_separators();
      const char* begin = cps[i].data();
      const char* end = cps[i + matched - 1].data() + cps[i + matched - 1].size();
      tokens.emplace_back(begin, end);
      i += matched;
    } else if (is_separator(cps[i])) {
      separator_run += cps[i];
      ++i;
    } else {
      flush_separators();
      tokens.emplace_back(cps[i]);
      ++i;
    }
  }
  flush_separators();
  return tokens;
}

std::string_view to_string(EmoticonCategory c) {
  switch (c) {
    case EmoticonCategory::Joy: return "Joy";
    case EmoticonCategory::Happiness: return "Happiness";
    case EmoticonCategory::Sadness: return "Sadness";
    case EmoticonCategory::Anger: return "Anger";
  }
  return "?";
}

EmoticonCategory parse_emoticon_category(std::string_view s) {
  for (auto c : kEmoticonCategories) {
    if (to_string(c) == s) return c;
  }
  throw validation_error(kModule, "unknown emoticon category '" + std::string(s) + "'");
}

void EmoticonTable::add(const std::string& literal, EmoticonCategory category) {
  if (literal.size() < 3 || literal.front() != '[' || literal.back() != ']') {
    throw validation_error(kModule, "emoticon literal must be bracketed: '" + literal + "'");
  }
  if (!table_.emplace(literal, category).second) {
    throw validation_error(kModule, "emoticon '" + literal + "' listed twice");
  }
}

std::optional<EmoticonCategory> EmoticonTable::find(std::string_view literal) const {
  auto it = table_.find(literal);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

EmoticonTable EmoticonTable::load(const std::filesystem::path& path) {
  EmoticonTable t;
  for (const auto& line : read_lines(path)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw validation_error(kModule, path.string() + ": expected literal<TAB>category: '" + line + "'");
    }
    t.add(trim(line.substr(0, tab)), parse_emoticon_category(trim(line.substr(tab + 1))));
  }
  return t;
}

EmoticonCounts extract_emoticons(std::string_view text, const EmoticonTable& table) {
  EmoticonCounts counts{};
  std::size_t pos = 0;
  while ((pos = text.find('[', pos)) != std::string_view::npos) {
    const auto close = text.find(']', pos + 1);
    if (close == std::string_view::npos) break;
    // A '[' inside the candidate restarts matching there, so "[[sad]" yields "[sad]".
    const auto inner_open = text.find('[', pos + 1);
    if (inner_open != std::string_view::npos && inner_open < close) {
      pos = inner_open;
      continue;
    }
    if (auto cat = table.find(text.substr(pos, close - pos + 1))) ++counts[static_cast<std::size_t>(*cat)];
    pos = close + 1;
  }
  return counts;
}

}  // namespace flusense::text
