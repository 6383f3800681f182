#include "flusense/analytics.hpp"

#include <cmath>
#include <fstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "flusense/config.hpp"
#include "flusense/error.hpp"

namespace flusense::analytics {

namespace {
constexpr const char* kModule = "analytics";
}

KeywordSet::KeywordSet(std::string name, KeywordRole role, std::vector<std::string> phrases)
    : name_(std::move(name)), role_(role) {
  for (auto& p : phrases) {
    if (p.empty()) throw validation_error(kModule, "keyword set '" + name_ + "' has an empty phrase");
    if (std::find(phrases_.begin(), phrases_.end(), p) != phrases_.end()) {
      throw validation_error(kModule, "keyword set '" + name_ + "' lists '" + p + "' twice");
    }
    phrases_.push_back(std::move(p));
  }
  if (phrases_.empty()) throw validation_error(kModule, "keyword set '" + name_ + "' is empty");
}

KeywordSet KeywordSet::load(const std::filesystem::path& path, KeywordRole role) {
  return KeywordSet(path.stem().string(), role, read_lines(path));
}

bool KeywordSet::matches(std::string_view text) const {
  for (const auto& p : phrases_) {
    if (text.find(p) != std::string_view::npos) return true;
  }
  return false;
}

KeywordSet default_hospital_keywords() {
  return KeywordSet("hospital", KeywordRole::Hospital,
                    {"hospital", "outpatient service", "emergency treatment", "draw blood", "blood test", "register",
                     "test", "transfusion", "prescribe", "chest X-ray", "doctor", "in hospital", "take an injection",
                     "pick up the medicine", "return visit examination", "emergency clinic", "queue",
                     "make a definite diagnosis", "urine test", "in treatment", "pneumonia", "pay the fees"});
}

KeywordSet default_duration_keywords() {
  return KeywordSet("duration", KeywordRole::Duration,
                    {"over ten days", "two weeks", "three weeks", "half a month", "over twenty days", "many days",
                     "several weeks", "a month and a half", "one month", "more than one month", "two months",
                     "several months", "a month or so", "a long time"});
}

std::map<GroupKey, HitCount> incentive_counts(const std::vector<corpus::Post>& posts, const KeywordSet& hospital,
                                              const corpus::SeasonMap& seasons) {
  std::map<GroupKey, HitCount> out;
  for (const auto& p : posts) {
    if (!p.region) throw validation_error(kModule, "post " + p.id + " has no region");
    auto& c = out[{*p.region, seasons.of(p.timestamp)}];
    ++c.total;
    if (hospital.matches(p.text)) ++c.hits;
  }
  return out;
}

std::map<GroupKey, double> incentive_ratio(const std::vector<corpus::Post>& posts, const KeywordSet& hospital,
                                           const corpus::SeasonMap& seasons) {
  std::map<GroupKey, double> out;
  for (const auto& [k, c] : incentive_counts(posts, hospital, seasons)) out.emplace(k, c.ratio());
  return out;
}

double chi_square_sf(double statistic, int dof) {
  if (dof < 1) throw validation_error(kModule, "chi-square needs dof >= 1");
  if (statistic <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), statistic));
}

double student_t_two_sided(double t, double dof) {
  if (!(dof > 0.0)) throw validation_error(kModule, "t distribution needs dof > 0");
  if (std::isinf(t)) return 0.0;
  return 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(dof), std::fabs(t)));
}

ChiSquareResult chi_square(const ContingencyTable& table) {
  const auto& obs = table.counts;
  const std::size_t r = obs.size();
  if (r < 2) throw validation_error(kModule, "contingency table needs at least 2 rows");
  const std::size_t c = obs[0].size();
  if (c < 2) throw validation_error(kModule, "contingency table needs at least 2 columns");
  std::vector<double> row(r, 0.0), col(c, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (obs[i].size() != c) throw validation_error(kModule, "ragged contingency table");
    for (std::size_t j = 0; j < c; ++j) {
      if (!(obs[i][j] >= 0.0)) throw validation_error(kModule, "contingency counts must be nonnegative");
      row[i] += obs[i][j];
      col[j] += obs[i][j];
      total += obs[i][j];
    }
  }
  for (double m : row) {
    if (m == 0.0) throw validation_error(kModule, "contingency table has a zero row marginal");
  }
  for (double m : col) {
    if (m == 0.0) throw validation_error(kModule, "contingency table has a zero column marginal");
  }
  ChiSquareResult res;
  res.dof = static_cast<int>((r - 1) * (c - 1));
  res.expected.assign(r, std::vector<double>(c, 0.0));
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double e = row[i] * col[j] / total;
      res.expected[i][j] = e;
      const double d = obs[i][j] - e;
      res.statistic += d * d / e;
    }
  }
  res.p_value = chi_square_sf(res.statistic, res.dof);
  return res;
}

CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw validation_error(kModule, "pearson: series lengths differ");
  const std::size_t n = x.size();
  if (n < 3) throw validation_error(kModule, "pearson: need at least 3 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw validation_error(kModule, "pearson: constant series");
  CorrelationResult res;
  res.n = n;
  res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = static_cast<double>(n - 2);
  if (std::fabs(res.r) >= 1.0) {
    res.p_value = 0.0;
  } else {
    res.p_value = student_t_two_sided(res.r * std::sqrt(dof / (1.0 - res.r * res.r)), dof);
  }
  return res;
}

bool flag_pirt(const corpus::Post& post, const KeywordSet& duration) { return duration.matches(post.text); }

void mark_prolonged(std::vector<corpus::Post>& posts, const KeywordSet& duration) {
  for (auto& p : posts) p.prolonged = p.label == corpus::Label::Influenza && flag_pirt(p, duration);
}

std::vector<std::optional<double>> pirt_ratio(const corpus::WeeklySeries& s) {
  std::vector<std::optional<double>> out(s.size());
  for (std::size_t w = 0; w < s.size(); ++w) {
    if (s.irt[w] > 0) out[w] = static_cast<double>(s.pirt[w]) / static_cast<double>(s.irt[w]);
  }
  return out;
}

CarryMode parse_carry_mode(std::string_view s) {
  if (s == "add") return CarryMode::Add;
  if (s == "move") return CarryMode::Move;
  throw validation_error(kModule, "carry mode must be add or move, got '" + std::string(s) + "'");
}

std::string_view to_string(CarryMode m) { return m == CarryMode::Add ? "add" : "move"; }

corpus::WeeklySeries adjust_irt(corpus::WeeklySeries s, CarryMode mode) {
  if (s.pirt.size() != s.irt.size()) throw validation_error(kModule, "irt/pirt length mismatch");
  const std::size_t n = s.irt.size();
  std::vector<std::int64_t> adjusted(s.irt);
  for (std::size_t w = 1; w < n; ++w) adjusted[w] += s.pirt[w - 1];
  if (mode == CarryMode::Move) {
    for (std::size_t w = 0; w + 1 < n; ++w) adjusted[w] -= s.pirt[w];
  }
  s.adjusted_irt = std::move(adjusted);
  return s;
}

ContingencyTable incentive_table(const std::map<GroupKey, HitCount>& counts, std::optional<corpus::Season> season) {
  ContingencyTable t;
  t.row_labels = {"North", "South"};
  t.col_labels = {"hospital", "no_hospital"};
  t.counts.assign(2, std::vector<double>(2, 0.0));
  for (const auto& [k, c] : counts) {
    if (season && k.season != *season) continue;
    auto& row = t.counts[static_cast<std::size_t>(k.region)];
    row[0] += static_cast<double>(c.hits);
    row[1] += static_cast<double>(c.total - c.hits);
  }
  return t;
}

void write_chi_square_json(const std::filesystem::path& path, const std::string& name, const ContingencyTable& table,
                           const ChiSquareResult& result) {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["rows"] = table.row_labels;
  j["columns"] = table.col_labels;
  j["observed"] = table.counts;
  j["expected"] = result.expected;
  j["statistic"] = result.statistic;
  j["dof"] = result.dof;
  j["p_value"] = result.p_value;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error(kModule, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace flusense::analytics
