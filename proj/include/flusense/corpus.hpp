#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flusense::corpus {

enum class Region { North, South };
enum class Season { Spring, Summer, Autumn, Winter };
enum class Label { Unlabeled, Influenza, Noise };

std::string_view to_string(Region r);
std::string_view to_string(Season s);
std::string_view to_string(Label l);
Region parse_region(std::string_view s);
Season parse_season(std::string_view s);
Label parse_label(std::string_view s);

inline constexpr std::array<Region, 2> kRegions{Region::North, Region::South};
inline constexpr std::array<Season, 4> kSeasons{Season::Spring, Season::Summer, Season::Autumn,
                                                Season::Winter};

struct CivilDate {
  int year = 1970;
  int month = 1;
  int day = 1;
  auto operator<=>(const CivilDate&) const = default;
};

/// Days since 1970-01-01 (proleptic Gregorian).
std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t days);

/// An instant plus the UTC offset it was written with. Calendar labels (week,
/// season) use the wall-clock date at that offset.
struct Timestamp {
  std::int64_t utc_seconds = 0;
  int offset_minutes = 0;

  CivilDate local_date() const;
  std::string to_rfc3339() const;
  auto operator<=>(const Timestamp&) const = default;
};

/// Parses `YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)`. A space may replace `T`.
Timestamp parse_rfc3339(std::string_view text);

struct IsoWeek {
  int year = 1970;
  int week = 1;

  auto operator<=>(const IsoWeek&) const = default;
  std::string to_string() const;  // YYYY-Www
  IsoWeek next() const;
  IsoWeek prev() const;
};

IsoWeek iso_week_of(const CivilDate& d);
IsoWeek parse_iso_week(std::string_view text);
int iso_weeks_in_year(int year);
/// Monday of the given ISO week.
CivilDate iso_week_monday(const IsoWeek& w);

struct Post {
  std::string id;
  Timestamp timestamp;
  std::string province;
  std::optional<Region> region;
  std::string text;
  std::vector<std::string> tokens;
  Label label = Label::Unlabeled;
  bool prolonged = false;  // PIRT flag, set by analytics::mark_prolonged

  IsoWeek week() const { return iso_week_of(timestamp.local_date()); }
};

class RegionMap {
 public:
  RegionMap() = default;
  using Entries = std::map<std::string, Region, std::less<>>;

  explicit RegionMap(Entries entries) : entries_(std::move(entries)) {}

  /// Flat `province = North|South` file, `#` comments.
  static RegionMap load(const std::filesystem::path& path);
  /// Conventional two-area split of mainland provinces (Qinling-Huaihe line).
  static RegionMap china_default();

  std::optional<Region> find(std::string_view province) const;
  Region at(std::string_view province) const;  // throws on unmapped province
  const Entries& entries() const { return entries_; }

 private:
  Entries entries_;
};

class SeasonMap {
 public:
  /// Meteorological seasons: Mar-May, Jun-Aug, Sep-Nov, Dec-Feb.
  SeasonMap();
  explicit SeasonMap(std::array<Season, 12> by_month) : by_month_(by_month) {}

  /// Flat `month = Season` file with months 1..12; every month must be present.
  static SeasonMap load(const std::filesystem::path& path);

  Season of_month(int month) const;
  Season of(const Timestamp& ts) const { return of_month(ts.local_date().month); }

 private:
  std::array<Season, 12> by_month_;
};

Post assign_region(Post post, const RegionMap& map);
Season assign_season(const Timestamp& ts, const SeasonMap& map = SeasonMap());

struct StudyWindow {
  IsoWeek first{2016, 4};
  IsoWeek last{2016, 52};
  bool contains(const IsoWeek& w) const { return first <= w && w <= last; }
};

enum class PostFormat { Jsonl, Csv };

struct IngestResult {
  std::vector<Post> posts;
  std::size_t skipped = 0;
  std::vector<std::string> diagnostics;  // one per skipped record, `line N: reason`
};

/// Reads posts in file order. Records lacking id/timestamp/province/text, with an
/// unparseable timestamp or empty text, or outside `window` are skipped with a
/// diagnostic. Throws on an unreadable file.
IngestResult ingest_posts(const std::filesystem::path& path, PostFormat format,
                          const std::optional<StudyWindow>& window = std::nullopt);
PostFormat format_from_extension(const std::filesystem::path& path);

/// JSONL with keys id, timestamp, province, text, and label/region when set.
void write_posts_jsonl(const std::filesystem::path& path, const std::vector<Post>& posts);

struct IliRecord {
  IsoWeek week;
  Region region = Region::North;
  double ili_pct = 0.0;
};

/// CSV with header `week,region,ili_pct`. Duplicate (week, region) pairs and
/// negative values are errors.
std::vector<IliRecord> load_ili_csv(const std::filesystem::path& path);
void write_ili_csv(const std::filesystem::path& path, const std::vector<IliRecord>& records);

struct WeeklySeries {
  Region region = Region::North;
  std::vector<IsoWeek> weeks;
  std::vector<std::int64_t> irt;
  std::vector<std::int64_t> pirt;
  std::optional<std::vector<std::int64_t>> adjusted_irt;
  std::vector<double> ili;

  std::size_t size() const { return weeks.size(); }
  void validate() const;
};

/// Weekly IRT/PIRT counts for `region` aligned to that region's ILI weeks. Only
/// posts labelled Influenza in `region` count. Throws if posts fall in weeks the
/// ILI series lacks, or if the ILI weeks are not contiguous.
WeeklySeries weekly_aggregate(const std::vector<Post>& posts, const std::vector<IliRecord>& ili,
                              Region region);

struct SynthSpec {
  std::size_t n_posts = 2000;
  double positive_fraction = 0.5;
  double north_fraction = 0.5;
  StudyWindow window{};
  /// Per-week relative volume for positive posts; empty = uniform. Indexed from window.first.
  std::vector<double> north_week_weights;
  std::vector<double> south_week_weights;

  std::size_t background_vocab = 200;
  std::size_t topic_vocab = 40;  // per class
  int min_tokens = 8;
  int max_tokens = 14;
  double topic_rate = 0.4;       // share of tokens drawn from the post's class topic
  double cross_topic_rate = 0.0; // share drawn from the other class topic (label noise)

  std::vector<std::string> planted_pair;  // inserted adjacently into positive posts
  double planted_pair_rate = 0.0;

  double sentiment_rate = 0.6;         // posts carrying a sentiment phrase
  double negative_sentiment_share = 0.7;
  double hospital_rate = 0.05;
  double duration_rate_north = 0.04;
  double duration_rate_south = 0.08;
  double emoticon_rate = 0.3;
  double north_joy_boost = 1.0;        // multiplies the expected joy emoticons per northern post
};

struct SynthCorpus {
  std::vector<Post> posts;         // label Unlabeled, region assigned
  std::vector<Label> truth;        // planted class per post
  std::vector<std::string> lexicon;  // every multi-character word the generator emits
};

/// Deterministic corpus with planted class, sentiment, duration, hospital and
/// emoticon structure.
SynthCorpus synth_corpus(const SynthSpec& spec, std::uint64_t seed);

/// Word lists used by the generator, exposed so tests and demo lexicons agree.
const std::vector<std::string>& synth_hospital_phrases();
const std::vector<std::string>& synth_duration_phrases();

}  // namespace flusense::corpus
