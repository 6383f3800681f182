#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flusense/corpus.hpp"

namespace flusense::analytics {

enum class KeywordRole { Hospital, Duration };

/// Phrases matched as substrings of the raw post text.
class KeywordSet {
 public:
  KeywordSet(std::string name, KeywordRole role, std::vector<std::string> phrases);
  /// One phrase per line; `#` comments and blank lines skipped.
  static KeywordSet load(const std::filesystem::path& path, KeywordRole role);

  bool matches(std::string_view text) const;
  const std::string& name() const { return name_; }
  KeywordRole role() const { return role_; }
  const std::vector<std::string>& phrases() const { return phrases_; }

 private:
  std::string name_;
  KeywordRole role_;
  std::vector<std::string> phrases_;
};

/// The 22 hospital-related phrases and 14 long-duration phrases, in English.
KeywordSet default_hospital_keywords();
KeywordSet default_duration_keywords();

struct GroupKey {
  corpus::Region region;
  corpus::Season season;
  auto operator<=>(const GroupKey&) const = default;
};

struct HitCount {
  std::size_t hits = 0;
  std::size_t total = 0;
  double ratio() const { return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0; }
};

/// Posts with at least one hospital phrase, per (region, season). Groups with
/// no posts are absent.
std::map<GroupKey, HitCount> incentive_counts(const std::vector<corpus::Post>& posts, const KeywordSet& hospital,
                                              const corpus::SeasonMap& seasons = corpus::SeasonMap());
std::map<GroupKey, double> incentive_ratio(const std::vector<corpus::Post>& posts, const KeywordSet& hospital,
                                           const corpus::SeasonMap& seasons = corpus::SeasonMap());

struct ContingencyTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<double>> counts;  // rows x cols
};

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::vector<std::vector<double>> expected;
};

/// Pearson chi-square test of independence, no continuity correction. Throws
/// for fewer than 2 rows/cols, negative counts, or a zero marginal.
ChiSquareResult chi_square(const ContingencyTable& table);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, int dof);
/// Two-sided p-value of Student's t.
double student_t_two_sided(double t, double dof);

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Product-moment correlation; p from t = r sqrt((n-2)/(1-r^2)), two-sided.
/// Needs equal lengths, n >= 3, and both series non-constant.
CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y);

bool flag_pirt(const corpus::Post& post, const KeywordSet& duration);
/// Sets `prolonged` on Influenza posts that match; clears it on all others.
void mark_prolonged(std::vector<corpus::Post>& posts, const KeywordSet& duration);

/// pirt / irt per week; absent where irt is 0.
std::vector<std::optional<double>> pirt_ratio(const corpus::WeeklySeries& series);

enum class CarryMode {
  Add,   // week w gains pirt[w-1]; PIRT stays in its origin week
  Move,  // as Add, and pirt[w] leaves week w unless w is the last week
};
CarryMode parse_carry_mode(std::string_view s);
std::string_view to_string(CarryMode m);

corpus::WeeklySeries adjust_irt(corpus::WeeklySeries series, CarryMode mode = CarryMode::Add);

/// 2 x 2 (region x hit/miss) table of hospital hits for one season, or all
/// seasons when `season` is empty.
ContingencyTable incentive_table(const std::map<GroupKey, HitCount>& counts, std::optional<corpus::Season> season);

void write_chi_square_json(const std::filesystem::path& path, const std::string& name, const ContingencyTable& table,
                           const ChiSquareResult& result);

}  // namespace flusense::analytics
