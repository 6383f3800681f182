#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "flusense/corpus.hpp"
#include "flusense/text.hpp"

namespace flusense::sentiment {

enum class Polarity { Positive, Negative, Neutral };
std::string_view to_string(Polarity p);

class SentimentLexicon {
 public:
  void add_word(const std::string& word, double strength);
  void add_degree(const std::string& adverb, double multiplier);
  void add_negation(const std::string& word);

  /// `word<TAB>strength`, `adverb<TAB>multiplier`, one negation per line.
  static SentimentLexicon load(const std::filesystem::path& words, const std::filesystem::path& degrees,
                               const std::filesystem::path& negations);

  std::optional<double> strength(const std::string& token) const;
  std::optional<double> degree(const std::string& token) const;
  bool is_negation(const std::string& token) const { return negations_.count(token) != 0; }

 private:
  std::map<std::string, double, std::less<>> words_;
  std::map<std::string, double, std::less<>> degrees_;
  std::set<std::string, std::less<>> negations_;
};

struct SentimentScore {
  double value = 0.0;
  Polarity polarity = Polarity::Neutral;
};

inline constexpr std::size_t kContextWindow = 3;

Polarity polarity_of(double value);

/// Sum over sentiment tokens of strength x (multiplier of the nearest degree
/// adverb among the preceding three tokens, else 1) x (-1 if a negation word
/// is among those three tokens).
SentimentScore score_text(const std::vector<std::string>& tokens, const SentimentLexicon& lexicon);

/// Keeps |value| <= 100 (closed interval).
std::vector<SentimentScore> filter_range(const std::vector<SentimentScore>& scores);
/// filter_range plus removal of neutral scores: the set the analyses use.
std::vector<SentimentScore> analysis_set(const std::vector<SentimentScore>& scores);
bool in_analysis_set(const SentimentScore& s);

enum class IntensityMode { Absolute, PositiveOnly, NegativeOnly };
std::string_view to_string(IntensityMode m);

struct GroupKey {
  corpus::Region region;
  corpus::Season season;
  auto operator<=>(const GroupKey&) const = default;
};

struct ScoredPost {
  corpus::Region region;
  corpus::Season season;
  SentimentScore score;
};

/// Mean intensity per (region, season) over the analysis set. Groups with no
/// qualifying post are absent.
std::map<GroupKey, double> mean_intensity(const std::vector<ScoredPost>& posts, IntensityMode mode);
double mean_of(const std::vector<double>& values, IntensityMode mode, bool* defined = nullptr);

struct EmoticonFrequency {
  /// Mean occurrences per post, [region][category]; absent for an empty region.
  std::array<std::array<std::optional<double>, 4>, 2> frequency{};
  /// north / south per category; absent when the south frequency is 0 or undefined.
  std::array<std::optional<double>, 4> rate{};
  std::array<std::size_t, 2> posts{};
};

EmoticonFrequency emoticon_frequency(const std::vector<corpus::Post>& posts, const text::EmoticonTable& table);

/// CSV `region,season,mode,value` over all three modes.
void write_intensity_csv(const std::filesystem::path& path, const std::vector<ScoredPost>& posts);

}  // namespace flusense::sentiment
