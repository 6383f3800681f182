#include "flusense/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "flusense/config.hpp"
#include "flusense/csv.hpp"
#include "flusense/error.hpp"

namespace flusense::corpus {

namespace {

constexpr const char* kModule = "corpus";

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(Region r) { return r == Region::North ? "North" : "South"; }

std::string_view to_string(Season s) {
  switch (s) {
    case Season::Spring: return "Spring";
    case Season::Summer: return "Summer";
    case Season::Autumn: return "Autumn";
    case Season::Winter: return "Winter";
  }
  return "?";
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::Unlabeled: return "Unlabeled";
    case Label::Influenza: return "Influenza";
    case Label::Noise: return "Noise";
  }
  return "?";
}

Region parse_region(std::string_view s) {
  const auto l = lower(s);
  if (l == "north" || l == "n") return Region::North;
  if (l == "south" || l == "s") return Region::South;
  throw validation_error(kModule, "unknown region '" + std::string(s) + "'");
}

Season parse_season(std::string_view s) {
  const auto l = lower(s);
  if (l == "spring") return Season::Spring;
  if (l == "summer") return Season::Summer;
  if (l == "autumn" || l == "fall") return Season::Autumn;
  if (l == "winter") return Season::Winter;
  throw validation_error(kModule, "unknown season '" + std::string(s) + "'");
}

Label parse_label(std::string_view s) {
  const auto l = lower(s);
  if (l == "influenza" || l == "positive" || l == "1" || l == "+1") return Label::Influenza;
  if (l == "noise" || l == "negative" || l == "0" || l == "-1") return Label::Noise;
  if (l == "unlabeled" || l.empty()) return Label::Unlabeled;
  throw validation_error(kModule, "unknown label '" + std::string(s) + "'");
}

// Howard Hinnant's civil calendar algorithms.
std::int64_t days_from_civil(const CivilDate& d) {
  const std::int64_t y = d.year - (d.month <= 2 ? 1 : 0);
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t mp = (d.month + 9) % 12;
  const std::int64_t doy = (153 * mp + 2) / 5 + d.day - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const int day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  const int month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  const int year = static_cast<int>(yoe + era * 400 + (month <= 2 ? 1 : 0));
  return {year, month, day};
}

namespace {

bool valid_date(const CivilDate& d) {
  if (d.month < 1 || d.month > 12 || d.day < 1) return false;
  return civil_from_days(days_from_civil(d)) == d;
}

// 0 = Monday.
int weekday(std::int64_t days) {
  const std::int64_t wd = (days + 3) % 7;  // 1970-01-01 was a Thursday
  return static_cast<int>(wd < 0 ? wd + 7 : wd);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

CivilDate Timestamp::local_date() const {
  const std::int64_t local = utc_seconds + static_cast<std::int64_t>(offset_minutes) * 60;
  return civil_from_days(floor_div(local, 86400));
}

std::string Timestamp::to_rfc3339() const {
  const std::int64_t local = utc_seconds + static_cast<std::int64_t>(offset_minutes) * 60;
  const std::int64_t days = floor_div(local, 86400);
  const std::int64_t secs = local - days * 86400;
  const auto d = civil_from_days(days);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", d.year, d.month, d.day,
                static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
  std::string out(buf);
  if (offset_minutes == 0) return out + "Z";
  const int off = offset_minutes < 0 ? -offset_minutes : offset_minutes;
  std::snprintf(buf, sizeof buf, "%c%02d:%02d", offset_minutes < 0 ? '-' : '+', off / 60, off % 60);
  return out + buf;
}

Timestamp parse_rfc3339(std::string_view t) {
  auto fail = [&]() -> Error {
    return validation_error(kModule, "bad RFC 3339 timestamp '" + std::string(t) + "'");
  };
  if (t.size() < 20) throw fail();
  CivilDate d;
  int hh = 0, mm = 0, ss = 0;
  if (!parse_int(t.substr(0, 4), d.year) || t[4] != '-' || !parse_int(t.substr(5, 2), d.month) ||
      t[7] != '-' || !parse_int(t.substr(8, 2), d.day) || (t[10] != 'T' && t[10] != 't' && t[10] != ' ') ||
      !parse_int(t.substr(11, 2), hh) || t[13] != ':' || !parse_int(t.substr(14, 2), mm) ||
      t[16] != ':' || !parse_int(t.substr(17, 2), ss)) {
    throw fail();
  }
  if (!valid_date(d) || hh > 23 || mm > 59 || ss > 60) throw fail();
  std::size_t pos = 19;
  if (pos < t.size() && t[pos] == '.') {
    ++pos;
    const auto start = pos;
    while (pos < t.size() && t[pos] >= '0' && t[pos] <= '9') ++pos;
    if (pos == start) throw fail();
  }
  if (pos >= t.size()) throw fail();
  int offset = 0;
  if (t[pos] == 'Z' || t[pos] == 'z') {
    if (pos + 1 != t.size()) throw fail();
  } else if (t[pos] == '+' || t[pos] == '-') {
    int oh = 0, om = 0;
    if (t.size() != pos + 6 || !parse_int(t.substr(pos + 1, 2), oh) || t[pos + 3] != ':' ||
        !parse_int(t.substr(pos + 4, 2), om) || oh > 23 || om > 59) {
      throw fail();
    }
    offset = (oh * 60 + om) * (t[pos] == '-' ? -1 : 1);
  } else {
    throw fail();
  }
  Timestamp ts;
  ts.offset_minutes = offset;
  ts.utc_seconds = days_from_civil(d) * 86400 + hh * 3600 + mm * 60 + std::min(ss, 59) -
                   static_cast<std::int64_t>(offset) * 60;
  return ts;
}

std::string IsoWeek::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-W%02d", year, week);
  return buf;
}

int iso_weeks_in_year(int year) {
  // A year has 53 ISO weeks iff Dec 28 falls in week 53.
  return iso_week_of({year, 12, 28}).week;
}

IsoWeek IsoWeek::next() const {
  if (week < iso_weeks_in_year(year)) return {year, week + 1};
  return {year + 1, 1};
}

IsoWeek IsoWeek::prev() const {
  if (week > 1) return {year, week - 1};
  return {year - 1, iso_weeks_in_year(year - 1)};
}

IsoWeek iso_week_of(const CivilDate& d) {
  const std::int64_t days = days_from_civil(d);
  // The ISO week belongs to the year containing its Thursday.
  const std::int64_t thursday = days - weekday(days) + 3;
  const CivilDate th = civil_from_days(thursday);
  const std::int64_t jan1 = days_from_civil({th.year, 1, 1});
  return {th.year, static_cast<int>((thursday - jan1) / 7 + 1)};
}

CivilDate iso_week_monday(const IsoWeek& w) {
  const std::int64_t jan4 = days_from_civil({w.year, 1, 4});
  const std::int64_t week1_monday = jan4 - weekday(jan4);
  return civil_from_days(week1_monday + 7 * static_cast<std::int64_t>(w.week - 1));
}

IsoWeek parse_iso_week(std::string_view text) {
  IsoWeek w;
  if (text.size() != 8 || text[4] != '-' || (text[5] != 'W' && text[5] != 'w') ||
      !parse_int(text.substr(0, 4), w.year) || !parse_int(text.substr(6, 2), w.week) || w.week < 1 ||
      w.week > iso_weeks_in_year(w.year)) {
    throw validation_error(kModule, "bad ISO week '" + std::string(text) + "' (expected YYYY-Www)");
  }
  return w;
}

RegionMap RegionMap::load(const std::filesystem::path& path) {
  const auto kv = KeyValueFile::load(path);
  Entries entries;
  for (const auto& [k, v] : kv.entries()) entries.emplace(k, parse_region(v));
  if (entries.empty()) throw validation_error(kModule, "region map " + path.string() + " is empty");
  return RegionMap(std::move(entries));
}

RegionMap RegionMap::china_default() {
  Entries e;
  for (const char* p : {"Beijing", "Tianjin", "Hebei", "Shanxi", "Inner Mongolia", "Liaoning", "Jilin",
                        "Heilongjiang", "Shandong", "Henan", "Shaanxi", "Gansu", "Qinghai", "Ningxia",
                        "Xinjiang"}) {
    e.emplace(p, Region::North);
  }
  for (const char* p : {"Shanghai", "Jiangsu", "Zhejiang", "Anhui", "Fujian", "Jiangxi", "Hubei", "Hunan",
                        "Guangdong", "Guangxi", "Hainan", "Chongqing", "Sichuan", "Guizhou", "Yunnan", "Tibet"}) {
    e.emplace(p, Region::South);
  }
  return RegionMap(std::move(e));
}

std::optional<Region> RegionMap::find(std::string_view province) const {
  auto it = entries_.find(province);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

Region RegionMap::at(std::string_view province) const {
  if (auto r = find(province)) return *r;
  throw validation_error(kModule, "unmapped province '" + std::string(province) + "'");
}

SeasonMap::SeasonMap()
    : by_month_{Season::Winter, Season::Winter, Season::Spring, Season::Spring, Season::Spring, Season::Summer,
                Season::Summer, Season::Summer, Season::Autumn, Season::Autumn, Season::Autumn, Season::Winter} {}

SeasonMap SeasonMap::load(const std::filesystem::path& path) {
  const auto kv = KeyValueFile::load(path);
  std::array<Season, 12> months{};
  std::array<bool, 12> seen{};
  for (const auto& [k, v] : kv.entries()) {
    int m = 0;
    if (!parse_int(std::string_view(k), m) || m < 1 || m > 12) {
      throw validation_error(kModule, path.string() + ": month key must be 1..12, got '" + k + "'");
    }
    months[m - 1] = parse_season(v);
    seen[m - 1] = true;
  }
  for (int m = 0; m < 12; ++m) {
    if (!seen[m]) throw validation_error(kModule, path.string() + ": month " + std::to_string(m + 1) + " missing");
  }
  return SeasonMap(months);
}

Season SeasonMap::of_month(int month) const {
  if (month < 1 || month > 12) throw validation_error(kModule, "month out of range");
  return by_month_[month - 1];
}

Post assign_region(Post post, const RegionMap& map) {
  post.region = map.at(post.province);
  return post;
}

Season assign_season(const Timestamp& ts, const SeasonMap& map) { return map.of(ts); }

PostFormat format_from_extension(const std::filesystem::path& path) {
  const auto ext = lower(path.extension().string());
  if (ext == ".csv") return PostFormat::Csv;
  return PostFormat::Jsonl;
}

namespace {

struct RawPost {
  std::optional<std::string> id, timestamp, province, text, label, region;
};

std::optional<std::string> finish_post(const RawPost& raw, const std::optional<StudyWindow>& window, Post& out) {
  if (!raw.id || raw.id->empty()) return "missing id";
  if (!raw.timestamp) return "missing timestamp";
  if (!raw.province || raw.province->empty()) return "missing province";
  if (!raw.text) return "missing text";
  if (raw.text->empty()) return "empty text";
  out.id = *raw.id;
  try {
    out.timestamp = parse_rfc3339(*raw.timestamp);
    if (raw.label) out.label = parse_label(*raw.label);
    if (raw.region && !raw.region->empty()) out.region = parse_region(*raw.region);
  } catch (const Error& e) {
    return std::string(e.what());
  }
  if (window && !window->contains(out.week())) return "outside study window (" + out.week().to_string() + ")";
  out.province = *raw.province;
  out.text = *raw.text;
  return std::nullopt;
}

std::optional<std::string> json_string(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  return std::nullopt;
}

}  // namespace

IngestResult ingest_posts(const std::filesystem::path& path, PostFormat format,
                          const std::optional<StudyWindow>& window) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw runtime_error(kModule, "cannot read posts file " + path.string());
  IngestResult result;
  auto skip = [&](std::size_t lineno, const std::string& why) {
    ++result.skipped;
    result.diagnostics.push_back("line " + std::to_string(lineno) + ": " + why);
  };

  std::string line;
  std::size_t lineno = 0;
  if (format == PostFormat::Jsonl) {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        skip(lineno, "invalid JSON");
        continue;
      }
      if (!obj.is_object()) {
        skip(lineno, "record is not an object");
        continue;
      }
      RawPost raw{json_string(obj, "id"),   json_string(obj, "timestamp"), json_string(obj, "province"),
                  json_string(obj, "text"), json_string(obj, "label"),     json_string(obj, "region")};
      Post post;
      if (auto why = finish_post(raw, window, post)) {
        skip(lineno, *why);
      } else {
        result.posts.push_back(std::move(post));
      }
    }
    return result;
  }

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto rec = csv::parse_record(line);
    if (header.empty()) {
      if (!rec) throw validation_error(kModule, path.string() + ": malformed CSV header");
      header = *rec;
      for (auto& h : header) h = trim(h);
      continue;
    }
    if (!rec) {
      skip(lineno, "unterminated quote");
      continue;
    }
    if (rec->size() != header.size()) {
      skip(lineno, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(rec->size()));
      continue;
    }
    RawPost raw;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto& h = header[i];
      auto& v = (*rec)[i];
      if (h == "id") raw.id = v;
      else if (h == "timestamp") raw.timestamp = v;
      else if (h == "province") raw.province = v;
      else if (h == "text") raw.text = v;
      else if (h == "label") raw.label = v;
      else if (h == "region") raw.region = v;
    }
    Post post;
    if (auto why = finish_post(raw, window, post)) {
      skip(lineno, *why);
    } else {
      result.posts.push_back(std::move(post));
    }
  }
  return result;
}

void write_posts_jsonl(const std::filesystem::path& path, const std::vector<Post>& posts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error(kModule, "cannot write " + path.string());
  for (const auto& p : posts) {
    nlohmann::ordered_json obj;
    obj["id"] = p.id;
    obj["timestamp"] = p.timestamp.to_rfc3339();
    obj["province"] = p.province;
    obj["text"] = p.text;
    if (p.region) obj["region"] = std::string(to_string(*p.region));
    if (p.label != Label::Unlabeled) obj["label"] = std::string(to_string(p.label));
    out << obj.dump() << '\n';
  }
}

std::vector<IliRecord> load_ili_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error(kModule, "cannot read ILI file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<IliRecord> out;
  std::set<std::pair<IsoWeek, Region>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto rec = csv::parse_record(line);
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (!rec || rec->size() != 3) throw validation_error(kModule, where + ": expected 3 fields");
    for (auto& f : *rec) f = trim(f);
    if (!have_header) {
      if ((*rec)[0] != "week" || (*rec)[1] != "region" || (*rec)[2] != "ili_pct") {
        throw validation_error(kModule, where + ": header must be week,region,ili_pct");
      }
      have_header = true;
      continue;
    }
    IliRecord r;
    r.week = parse_iso_week((*rec)[0]);
    r.region = parse_region((*rec)[1]);
    try {
      std::size_t used = 0;
      r.ili_pct = std::stod((*rec)[2], &used);
      if (used != (*rec)[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw validation_error(kModule, where + ": ili_pct is not a number");
    }
    if (!(r.ili_pct >= 0.0)) throw validation_error(kModule, where + ": ili_pct must be nonnegative");
    if (!seen.emplace(r.week, r.region).second) {
      throw validation_error(kModule, where + ": duplicate record for " + r.week.to_string());
    }
    out.push_back(r);
  }
  if (!have_header) throw validation_error(kModule, path.string() + ": empty ILI file");
  return out;
}

void write_ili_csv(const std::filesystem::path& path, const std::vector<IliRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error(kModule, "cannot write " + path.string());
  out << "week,region,ili_pct\n";
  for (const auto& r : records) {
    out << r.week.to_string() << ',' << to_string(r.region) << ',' << csv::format_double(r.ili_pct) << '\n';
  }
}

void WeeklySeries::validate() const {
  const auto n = weeks.size();
  if (irt.size() != n || pirt.size() != n || ili.size() != n || (adjusted_irt && adjusted_irt->size() != n)) {
    throw validation_error(kModule, "weekly series columns differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (irt[i] < 0 || pirt[i] < 0 || pirt[i] > irt[i]) {
      throw validation_error(kModule, "week " + weeks[i].to_string() + ": need 0 <= pirt <= irt");
    }
    if (i > 0 && weeks[i] != weeks[i - 1].next()) {
      throw validation_error(kModule, "weeks not contiguous at " + weeks[i].to_string());
    }
  }
}

WeeklySeries weekly_aggregate(const std::vector<Post>& posts, const std::vector<IliRecord>& ili, Region region) {
  std::vector<IliRecord> mine;
  for (const auto& r : ili) {
    if (r.region == region) mine.push_back(r);
  }
  std::sort(mine.begin(), mine.end(), [](const auto& a, const auto& b) { return a.week < b.week; });

  WeeklySeries s;
  s.region = region;
  std::map<IsoWeek, std::size_t> index;
  for (const auto& r : mine) {
    if (!s.weeks.empty() && r.week != s.weeks.back().next()) {
      throw validation_error(kModule, "ILI weeks for " + std::string(to_string(region)) + " are not contiguous at " +
                                          r.week.to_string());
    }
    index.emplace(r.week, s.weeks.size());
    s.weeks.push_back(r.week);
    s.ili.push_back(r.ili_pct);
  }
  s.irt.assign(s.weeks.size(), 0);
  s.pirt.assign(s.weeks.size(), 0);

  std::set<IsoWeek> missing;
  for (const auto& p : posts) {
    if (p.label != Label::Influenza || p.region != region) continue;
    const auto w = p.week();
    auto it = index.find(w);
    if (it == index.end()) {
      missing.insert(w);
      continue;
    }
    ++s.irt[it->second];
    if (p.prolonged) ++s.pirt[it->second];
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& w : missing) list += (list.empty() ? "" : ", ") + w.to_string();
    throw validation_error(kModule, "posts fall in weeks without ILI data for " + std::string(to_string(region)) +
                                        ": " + list);
  }
  return s;
}

// --- synthetic corpus -------------------------------------------------------

const std::vector<std::string>& synth_hospital_phrases() {
  static const std::vector<std::string> v{"hospital", "outpatient service", "emergency treatment", "blood test",
                                          "transfusion", "doctor", "take an injection", "pick up the medicine"};
  return v;
}

const std::vector<std::string>& synth_duration_phrases() {
  static const std::vector<std::string> v{"over ten days", "two weeks", "three weeks", "half a month",
                                          "several weeks", "one month", "a long time"};
  return v;
}

namespace {

const std::vector<std::string> kPositiveWords{"happy", "relieved", "better", "glad", "recovered"};
const std::vector<std::string> kNegativeWords{"sad", "awful", "painful", "tired", "miserable", "worried"};
const std::vector<std::string> kDegreeWords{"very", "extremely", "slightly"};
const std::vector<std::string> kNegationWords{"not", "never"};
const std::vector<std::string> kJoyEmoticons{"[haha]", "[laugh]"};
const std::vector<std::string> kHappyEmoticons{"[smile]", "[hearts]"};
const std::vector<std::string> kSadEmoticons{"[tears]", "[sob]"};
const std::vector<std::string> kAngerEmoticons{"[angry]", "[rage]"};

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

}  // namespace

SynthCorpus synth_corpus(const SynthSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](const std::vector<std::string>& v) -> const std::string& {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };

  std::vector<std::string> background, pos_topic, neg_topic;
  for (std::size_t i = 0; i < spec.background_vocab; ++i) background.push_back(numbered("w", i));
  for (std::size_t i = 0; i < spec.topic_vocab; ++i) {
    pos_topic.push_back(numbered("flu", i));
    neg_topic.push_back(numbered("misc", i));
  }

  std::vector<std::string> north_provinces, south_provinces;
  const RegionMap provinces = RegionMap::china_default();
  for (const auto& [p, r] : provinces.entries()) {
    (r == Region::North ? north_provinces : south_provinces).push_back(p);
  }

  std::vector<IsoWeek> weeks;
  for (IsoWeek w = spec.window.first; w <= spec.window.last; w = w.next()) weeks.push_back(w);
  auto week_sampler = [&](const std::vector<double>& weights) {
    if (weights.empty()) return std::discrete_distribution<std::size_t>(weeks.size(), 0.0, 1.0, [](double) { return 1.0; });
    if (weights.size() != weeks.size()) {
      throw validation_error(kModule, "week weights length must equal the number of window weeks");
    }
    return std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  };
  auto north_weeks = week_sampler(spec.north_week_weights);
  auto south_weeks = week_sampler(spec.south_week_weights);
  auto uniform_weeks = week_sampler({});

  SynthCorpus out;
  out.posts.reserve(spec.n_posts);
  out.truth.reserve(spec.n_posts);
  for (std::size_t i = 0; i < spec.n_posts; ++i) {
    const bool positive = unit(rng) < spec.positive_fraction;
    const Region region = unit(rng) < spec.north_fraction ? Region::North : Region::South;

    Post post;
    post.id = numbered("p", i);
    post.province = pick(region == Region::North ? north_provinces : south_provinces);
    post.region = region;
    const std::size_t wi =
        positive ? (region == Region::North ? north_weeks(rng) : south_weeks(rng)) : uniform_weeks(rng);
    const auto monday = days_from_civil(iso_week_monday(weeks[wi]));
    const auto day = std::uniform_int_distribution<int>(0, 6)(rng);
    const auto second = std::uniform_int_distribution<int>(0, 86399)(rng);
    post.timestamp.offset_minutes = 8 * 60;
    post.timestamp.utc_seconds = (monday + day) * 86400 + second - 8 * 3600;

    std::vector<std::string> words;
    const int n_tokens = std::uniform_int_distribution<int>(spec.min_tokens, spec.max_tokens)(rng);
    const auto& own = positive ? pos_topic : neg_topic;
    const auto& other = positive ? neg_topic : pos_topic;
    for (int t = 0; t < n_tokens; ++t) {
      const double u = unit(rng);
      if (u < spec.topic_rate && !own.empty()) {
        words.push_back(pick(own));
      } else if (u < spec.topic_rate + spec.cross_topic_rate && !other.empty()) {
        words.push_back(pick(other));
      } else if (!background.empty()) {
        words.push_back(pick(background));
      }
    }
    auto insert_at_random = [&](const std::string& phrase) {
      const auto pos = std::uniform_int_distribution<std::size_t>(0, words.size())(rng);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), phrase);
    };
    if (positive && !spec.planted_pair.empty() && unit(rng) < spec.planted_pair_rate) {
      std::string joined;
      for (const auto& t : spec.planted_pair) joined += (joined.empty() ? "" : " ") + t;
      insert_at_random(joined);
    }
    if (unit(rng) < spec.sentiment_rate) {
      const bool negative = unit(rng) < spec.negative_sentiment_share;
      std::string phrase;
      const double m = unit(rng);
      if (m < 0.3) phrase = pick(kDegreeWords) + " ";
      else if (m < 0.4) phrase = pick(kNegationWords) + " ";
      phrase += pick(negative ? kNegativeWords : kPositiveWords);
      insert_at_random(phrase);
    }
    if (positive && unit(rng) < spec.hospital_rate) insert_at_random(pick(synth_hospital_phrases()));
    const double duration_rate = region == Region::North ? spec.duration_rate_north : spec.duration_rate_south;
    if (positive && unit(rng) < duration_rate) insert_at_random(pick(synth_duration_phrases()));
    // The boost scales the expected joy count per northern post exactly: extra
    // joy runs are added (boost > 1) or joy emoticons thinned (boost < 1).
    const double joy_boost = region == Region::North ? spec.north_joy_boost : 1.0;
    constexpr double kWeights[] = {1.0, 1.0, 2.0, 1.0};
    constexpr double kJoyShare = 1.0 / 5.0;
    if (unit(rng) < spec.emoticon_rate) {
      std::discrete_distribution<int> cat(std::begin(kWeights), std::end(kWeights));
      const std::vector<std::string>* tables[] = {&kJoyEmoticons, &kHappyEmoticons, &kSadEmoticons,
                                                  &kAngerEmoticons};
      const int n = std::uniform_int_distribution<int>(1, 2)(rng);
      for (int e = 0; e < n; ++e) {
        const int c = cat(rng);
        if (c == 0 && joy_boost < 1.0 && unit(rng) >= joy_boost) continue;
        words.push_back(pick(*tables[c]));
      }
    }
    if (joy_boost > 1.0 && unit(rng) < std::min(1.0, (joy_boost - 1.0) * spec.emoticon_rate * kJoyShare)) {
      const int n = std::uniform_int_distribution<int>(1, 2)(rng);
      for (int e = 0; e < n; ++e) words.push_back(pick(kJoyEmoticons));
    }

    for (const auto& w : words) post.text += (post.text.empty() ? "" : " ") + w;
    if (post.text.empty()) post.text = "-";
    out.truth.push_back(positive ? Label::Influenza : Label::Noise);
    out.posts.push_back(std::move(post));
  }

  std::set<std::string> lexicon;
  for (const std::vector<std::string>* list : std::initializer_list<const std::vector<std::string>*>{&background, &pos_topic, &neg_topic, &kPositiveWords, &kNegativeWords, &kDegreeWords,
                           &kNegationWords}) {
    lexicon.insert(list->begin(), list->end());
  }
  for (const auto& t : spec.planted_pair) lexicon.insert(t);
  for (const std::vector<std::string>* list : std::initializer_list<const std::vector<std::string>*>{&synth_hospital_phrases(), &synth_duration_phrases()}) {
    for (const auto& phrase : *list) {
      for (const auto& w : split(phrase, ' ')) lexicon.insert(w);
    }
  }
  for (const std::vector<std::string>* list : std::initializer_list<const std::vector<std::string>*>{&kJoyEmoticons, &kHappyEmoticons, &kSadEmoticons, &kAngerEmoticons}) {
    for (const auto& e : *list) lexicon.insert(e.substr(1, e.size() - 2));
  }
  for (const auto& w : lexicon) {
    if (w.size() > 1) out.lexicon.push_back(w);
  }
  return out;
}

}  // namespace flusense::corpus
