#include "flusense/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "flusense/classifier.hpp"
#include "flusense/config.hpp"
#include "flusense/csv.hpp"
#include "flusense/error.hpp"
#include "flusense/features.hpp"
#include "flusense/gam.hpp"
#include "flusense/sentiment.hpp"
#include "flusense/svg.hpp"
#include "flusense/text.hpp"

namespace flusense::pipeline {

namespace fs = std::filesystem;
using corpus::Label;
using corpus::Post;
using corpus::Region;

namespace {

constexpr const char* kModule = "pipeline";

const std::vector<std::string> kScalarKeys{
    "seed",          "window.first",        "window.last",      "classifier.grid",  "classifier.test_fraction",
    "classifier.C",  "classifier.kernel",   "classifier.gamma", "classifier.tol",   "embed.dim",
    "embed.window",  "embed.negatives",     "embed.epochs",     "embed.min_count",  "embed.learning_rate",
    "embed.neighbors", "embed.seeds",       "gam.k",            "gam.carry_mode",   "gam.response_scale",
    "charts"};

std::string env_name(const std::string& key) {
  std::string out = "FLUSENSE_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& part : split(text, ',')) {
    const auto t = trim(part);
    if (t.empty()) continue;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(t, &pos);
      if (pos != t.size() || v <= 0) throw std::invalid_argument(t);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw validation_error(kModule, key + ": '" + t + "' is not a positive integer");
    }
  }
  if (out.empty()) throw validation_error(kModule, key + " is empty");
  return out;
}

std::size_t positive_size(const KeyValueFile& kv, const std::string& key, std::size_t fallback) {
  const long long v = kv.get_int(key, static_cast<long long>(fallback));
  if (v <= 0) throw validation_error(kModule, key + " must be positive");
  return static_cast<std::size_t>(v);
}

double positive_double(const KeyValueFile& kv, const std::string& key, double fallback) {
  const double v = kv.get_double(key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw validation_error(kModule, key + " must be positive");
  return v;
}

void require_file(const std::optional<fs::path>& path, const std::string& key, Command command) {
  if (!path) {
    throw validation_error(kModule, "'" + key + "' is required by " + std::string(to_string(command)));
  }
  if (!fs::is_regular_file(*path)) throw validation_error(kModule, key + ": no such file " + path->string());
}

// ---------------------------------------------------------------- inputs

struct Inputs {
  std::vector<Post> posts;
  std::vector<Post> training;
  std::vector<corpus::IliRecord> ili;
  corpus::SeasonMap seasons;
  text::Lexicon lexicon;
  std::optional<sentiment::SentimentLexicon> sentiment;
  std::optional<text::EmoticonTable> emoticons;
  analytics::KeywordSet hospital = analytics::default_hospital_keywords();
  analytics::KeywordSet duration = analytics::default_duration_keywords();
  std::set<std::string> stop_list;
};

std::vector<Post> read_posts(const fs::path& path, const PipelineConfig& config, const corpus::RegionMap& regions,
                             const text::Lexicon& lexicon, const std::string& what, RunSummary& summary) {
  auto result = corpus::ingest_posts(path, corpus::format_from_extension(path), config.window);
  if (result.skipped > 0) {
    summary.notes.push_back(what + ": skipped " + std::to_string(result.skipped) + " records");
    for (const auto& d : result.diagnostics) summary.notes.push_back(what + ": " + d);
  }
  std::vector<Post> out;
  for (auto& p : result.posts) {
    p = corpus::assign_region(std::move(p), regions);
    p.tokens = text::segment(p.text, lexicon);
    out.push_back(std::move(p));
  }
  return out;
}

Inputs load_inputs(const PipelineConfig& config, Command command, RunSummary& summary) {
  Inputs in;
  in.lexicon = text::Lexicon::load(config.lexicon);
  const auto regions = config.region_map ? corpus::RegionMap::load(*config.region_map) : corpus::RegionMap::china_default();
  if (config.season_map) in.seasons = corpus::SeasonMap::load(*config.season_map);
  in.posts = read_posts(config.posts, config, regions, in.lexicon, "posts", summary);
  if (in.posts.empty()) throw validation_error(kModule, "no usable posts in " + config.posts.string());
  if (config.training) {
    in.training = read_posts(*config.training, config, regions, in.lexicon, "training", summary);
    for (const auto& p : in.training) {
      if (p.label == Label::Unlabeled) throw validation_error(kModule, "training post " + p.id + " has no label");
    }
  } else if (command != Command::Classify) {
    for (const auto& p : in.posts) {
      if (p.label == Label::Unlabeled) {
        throw validation_error(kModule, "post " + p.id + " has no label and no training set is configured");
      }
    }
  }
  if (config.ili) in.ili = corpus::load_ili_csv(*config.ili);
  if (config.sentiment_words) {
    in.sentiment = sentiment::SentimentLexicon::load(*config.sentiment_words, *config.sentiment_degrees,
                                                     *config.sentiment_negations);
  }
  if (config.emoticons) in.emoticons = text::EmoticonTable::load(*config.emoticons);
  if (config.hospital_keywords) in.hospital = analytics::KeywordSet::load(*config.hospital_keywords, analytics::KeywordRole::Hospital);
  if (config.duration_keywords) in.duration = analytics::KeywordSet::load(*config.duration_keywords, analytics::KeywordRole::Duration);
  if (config.stop_list) {
    for (const auto& w : read_lines(*config.stop_list)) in.stop_list.insert(w);
  }
  return in;
}

// ---------------------------------------------------------------- stages

struct ClassifyResult {
  features::SweepResult sweep;
  features::FeatureSpace space;
  classifier::SvmModel model;
  classifier::EvalReport report;
};

ClassifyResult classify(const PipelineConfig& config, const std::vector<Post>& training) {
  std::vector<std::vector<std::string>> docs;
  std::vector<bool> labels;
  for (const auto& p : training) {
    docs.push_back(p.tokens);
    labels.push_back(p.label == Label::Influenza);
  }
  features::SweepOptions options;
  options.grid = config.grid;
  options.test_fraction = config.test_fraction;
  options.seed = derive_seed(config.seed, 1);
  options.C = config.svm_C;
  options.rbf = config.rbf;
  options.gamma = config.gamma;
  options.tol = config.svm_tol;

  ClassifyResult r;
  r.sweep = features::sweep_dimensions(docs, labels, options);

  std::vector<std::vector<std::string>> train_docs;
  std::vector<bool> train_labels;
  for (auto i : r.sweep.split.train) {
    train_docs.push_back(docs[i]);
    train_labels.push_back(labels[i]);
  }
  r.space = features::FeatureSpace::fit(train_docs, train_labels, r.sweep.best_k);
  classifier::SvmParams params;
  params.C = config.svm_C;
  params.tol = config.svm_tol;
  params.kernel = config.rbf ? classifier::Kernel::rbf(config.gamma > 0.0 ? config.gamma
                                                                           : 1.0 / static_cast<double>(r.space.dimension()))
                             : classifier::Kernel::linear();
  std::vector<features::DocVector> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < train_docs.size(); ++i) {
    x.push_back(r.space.transform(train_docs[i]));
    y.push_back(train_labels[i] ? 1 : -1);
  }
  r.model = classifier::train_svm(x, y, params);
  std::vector<features::DocVector> tx;
  std::vector<int> ty;
  for (auto i : r.sweep.split.test) {
    tx.push_back(r.space.transform(docs[i]));
    ty.push_back(labels[i] ? 1 : -1);
  }
  r.report = classifier::evaluate(r.model, tx, ty);
  return r;
}

struct EmbedResult {
  embeddings::EmbeddingModel north, south;
  embeddings::WordNetworkResult network;
};

EmbedResult embed(const PipelineConfig& config, const std::vector<Post>& posts, const std::set<std::string>& stop) {
  std::vector<std::vector<std::string>> north, south;
  for (const auto& p : posts) {
    if (p.label != Label::Influenza) continue;
    (*p.region == Region::North ? north : south).push_back(p.tokens);
  }
  if (north.empty() || south.empty()) throw validation_error(kModule, "embedding needs influenza posts in both regions");
  EmbedResult r{embeddings::train_sgns(north, config.sgns, derive_seed(config.seed, 2)),
                embeddings::train_sgns(south, config.sgns, derive_seed(config.seed, 3)),
                {}};
  r.network = embeddings::build_word_network(config.seed_tokens, r.north, r.south, config.neighbors, stop);
  return r;
}

std::vector<Post> influenza_posts(const std::vector<Post>& posts) {
  std::vector<Post> out;
  std::copy_if(posts.begin(), posts.end(), std::back_inserter(out),
               [](const Post& p) { return p.label == Label::Influenza; });
  return out;
}

corpus::WeeklySeries series_for(const std::vector<Post>& posts, const std::vector<corpus::IliRecord>& ili, Region region,
                                const PipelineConfig& config) {
  auto s = analytics::adjust_irt(corpus::weekly_aggregate(posts, ili, region), config.carry_mode);
  if (s.weeks.empty()) throw validation_error(kModule, "no ILI weeks for " + std::string(corpus::to_string(region)));
  return s;
}

// ---------------------------------------------------------------- writers

class Writer {
 public:
  Writer(fs::path root, RunSummary& summary) : root_(std::move(root)), summary_(summary) {}

  fs::path path(const fs::path& relative) {
    const fs::path full = root_ / relative;
    fs::create_directories(full.parent_path());
    summary_.written.push_back(relative);
    return full;
  }

  void text(const fs::path& relative, const std::string& content) {
    std::ofstream out(path(relative), std::ios::binary);
    if (!out) throw runtime_error(kModule, "cannot write " + (root_ / relative).string());
    out << content;
  }

 private:
  fs::path root_;
  RunSummary& summary_;
};

std::string opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

void write_classify(Writer& w, const ClassifyResult& r, const std::vector<Post>& labeled) {
  std::string sweep = "k,dimension,train_accuracy,test_accuracy\n";
  for (const auto& row : r.sweep.rows) {
    sweep += csv::join({std::to_string(row.k), std::to_string(row.dimension), csv::format_double(row.train_accuracy),
                        csv::format_double(row.test_accuracy)}) +
             '\n';
  }
  w.text("classify/sweep.csv", sweep);
  nlohmann::ordered_json j;
  j["best_k"] = r.sweep.best_k;
  j["dimension"] = r.space.dimension();
  j["train_size"] = r.sweep.split.train.size();
  j["test_size"] = r.sweep.split.test.size();
  j["support_vectors"] = r.model.support_vectors.size();
  j["tp"] = r.report.tp;
  j["fp"] = r.report.fp;
  j["tn"] = r.report.tn;
  j["fn"] = r.report.fn;
  j["accuracy"] = opt_json(r.report.accuracy);
  j["precision"] = opt_json(r.report.precision);
  j["recall"] = opt_json(r.report.recall);
  w.text("classify/metrics.json", j.dump(2) + "\n");
  r.space.save(w.path("classify/feature_space.txt"));
  r.model.save(w.path("classify/svm_model.txt"));
  corpus::write_posts_jsonl(w.path("classify/labeled_posts.jsonl"), labeled);
}

void write_embed(Writer& w, const EmbedResult& r) {
  r.north.save_text(w.path("embed/vectors_north.txt"));
  r.south.save_text(w.path("embed/vectors_south.txt"));
  embeddings::write_network_csv(w.path("embed/word_network.csv"), r.network);
  std::string missing;
  for (const auto& s : r.network.missing_seeds) missing += s + '\n';
  w.text("embed/missing_seeds.txt", missing);
}

std::vector<std::string> season_names() {
  std::vector<std::string> out;
  for (auto s : corpus::kSeasons) out.emplace_back(corpus::to_string(s));
  return out;
}

void chi_rows(std::string& csv_out, const std::string& name, const analytics::ContingencyTable& t,
              const analytics::ChiSquareResult& r) {
  for (std::size_t i = 0; i < t.row_labels.size(); ++i) {
    for (std::size_t j = 0; j < t.col_labels.size(); ++j) {
      csv_out += csv::join({name, t.row_labels[i], t.col_labels[j], csv::format_double(t.counts[i][j]),
                            csv::format_double(r.expected[i][j]), csv::format_double(r.statistic),
                            std::to_string(r.dof), csv::format_double(r.p_value)}) +
                 '\n';
    }
  }
}

using Deferred = std::vector<std::function<void(Writer&)>>;

Deferred analyze(const PipelineConfig& config, const Inputs& in, const std::vector<Post>& labeled,
                 RunSummary& summary) {
  Deferred out;
  auto text_file = [&out](std::string relative, std::string content) {
    out.push_back([relative = std::move(relative), content = std::move(content)](Writer& w) { w.text(relative, content); });
  };
  const auto irt = influenza_posts(labeled);
  if (irt.empty()) throw validation_error(kModule, "no posts were labelled Influenza");

  // Treatment incentives and their chi-square tests.
  const auto counts = analytics::incentive_counts(irt, in.hospital, in.seasons);
  std::string incentive = "region,season,hits,total,ratio\n";
  for (const auto& [k, c] : counts) {
    incentive += csv::join({std::string(corpus::to_string(k.region)), std::string(corpus::to_string(k.season)),
                            std::to_string(c.hits), std::to_string(c.total), csv::format_double(c.ratio())}) +
                 '\n';
  }
  std::string chi = "test,row,column,observed,expected,statistic,dof,p_value\n";
  std::vector<std::pair<std::string, analytics::ContingencyTable>> tables;
  for (auto s : corpus::kSeasons) tables.emplace_back("incentive_" + std::string(corpus::to_string(s)), analytics::incentive_table(counts, s));
  tables.emplace_back("incentive_all", analytics::incentive_table(counts, std::nullopt));

  // Polarity by region over the analysis set.
  std::vector<sentiment::ScoredPost> scored;
  analytics::ContingencyTable polarity{{"North", "South"}, {"positive", "negative"}, {{0, 0}, {0, 0}}};
  std::array<std::size_t, 2> neutral{};
  for (const auto& p : irt) {
    const auto score = sentiment::score_text(p.tokens, *in.sentiment);
    scored.push_back({*p.region, in.seasons.of(p.timestamp), score});
    if (std::fabs(score.value) > 100.0) continue;
    const auto r = static_cast<std::size_t>(*p.region);
    if (score.polarity == sentiment::Polarity::Positive) polarity.counts[r][0] += 1;
    else if (score.polarity == sentiment::Polarity::Negative) polarity.counts[r][1] += 1;
    else ++neutral[r];
  }
  tables.emplace_back("polarity", polarity);

  std::vector<std::pair<std::string, std::pair<analytics::ContingencyTable, analytics::ChiSquareResult>>> tests;
  for (const auto& [name, table] : tables) {
    try {
      tests.push_back({name, {table, analytics::chi_square(table)}});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Validation) throw;
      summary.notes.push_back("chi-square " + name + " skipped: " + e.what());
    }
  }
  for (const auto& [name, tr] : tests) chi_rows(chi, name, tr.first, tr.second);
  std::string polarity_csv = "region,positive,negative,neutral\n";
  for (auto r : corpus::kRegions) {
    const auto i = static_cast<std::size_t>(r);
    polarity_csv += csv::join({std::string(corpus::to_string(r)), csv::format_double(polarity.counts[i][0]),
                               csv::format_double(polarity.counts[i][1]), std::to_string(neutral[i])}) +
                    '\n';
  }

  // Emoticons.
  const auto emo = sentiment::emoticon_frequency(irt, *in.emoticons);
  std::string emo_csv = "category,north_frequency,south_frequency,rate\n";
  for (auto c : text::kEmoticonCategories) {
    const auto i = static_cast<std::size_t>(c);
    emo_csv += csv::join({std::string(text::to_string(c)), opt(emo.frequency[0][i]), opt(emo.frequency[1][i]),
                          opt(emo.rate[i])}) +
               '\n';
  }

  // Weekly series, PIRT ratios and correlations with ILI.
  std::string pirt_csv = "week,region,irt,pirt,adjusted_irt,ratio\n";
  std::string corr_csv = "region,series,r,p_value,n\n";
  std::map<Region, corpus::WeeklySeries> series;
  for (auto r : corpus::kRegions) {
    auto s = series_for(labeled, in.ili, r, config);
    const auto ratio = analytics::pirt_ratio(s);
    for (std::size_t t = 0; t < s.size(); ++t) {
      pirt_csv += csv::join({s.weeks[t].to_string(), std::string(corpus::to_string(r)), std::to_string(s.irt[t]),
                             std::to_string(s.pirt[t]), std::to_string((*s.adjusted_irt)[t]), opt(ratio[t])}) +
                  '\n';
    }
    const std::pair<const char*, const std::vector<std::int64_t>*> covariates[] = {{"irt", &s.irt},
                                                                                  {"adjusted_irt", &*s.adjusted_irt}};
    for (const auto& [name, values] : covariates) {
      std::vector<double> x(values->begin(), values->end());
      try {
        const auto c = analytics::pearson(x, s.ili);
        corr_csv += csv::join({std::string(corpus::to_string(r)), name, csv::format_double(c.r),
                               csv::format_double(c.p_value), std::to_string(c.n)}) +
                    '\n';
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Validation) throw;
        summary.notes.push_back(std::string("correlation ") + name + " " + std::string(corpus::to_string(r)) +
                                " skipped: " + e.what());
      }
    }
    series.emplace(r, std::move(s));
  }

  text_file("analyze/incentive.csv", incentive);
  text_file("analyze/chi_square.csv", chi);
  for (const auto& [name, tr] : tests) {
    out.push_back([name = name, tr = tr](Writer& w) {
      analytics::write_chi_square_json(w.path("analyze/chi_square_" + name + ".json"), name, tr.first, tr.second);
    });
  }
  text_file("analyze/polarity_counts.csv", polarity_csv);
  out.push_back([scored](Writer& w) { sentiment::write_intensity_csv(w.path("analyze/intensity.csv"), scored); });
  text_file("analyze/emoticons.csv", emo_csv);
  text_file("analyze/pirt.csv", pirt_csv);
  text_file("analyze/correlation.csv", corr_csv);

  if (!config.charts) return out;
  svg::BarChart inc{"Treatment incentive by season", "share of IRT with hospital words", season_names(), {}};
  for (auto r : corpus::kRegions) {
    svg::Series s{std::string(corpus::to_string(r)), {}};
    for (auto season : corpus::kSeasons) {
      auto it = counts.find({r, season});
      s.values.push_back(it == counts.end() ? std::nullopt : std::optional<double>(it->second.ratio()));
    }
    inc.series.push_back(std::move(s));
  }
  text_file("analyze/incentive.svg", svg::render(inc));

  for (auto mode : {sentiment::IntensityMode::Absolute, sentiment::IntensityMode::PositiveOnly,
                    sentiment::IntensityMode::NegativeOnly}) {
    const auto means = sentiment::mean_intensity(scored, mode);
    svg::BarChart chart{"Emotional intensity (" + std::string(sentiment::to_string(mode)) + ")", "mean score",
                        season_names(), {}};
    for (auto r : corpus::kRegions) {
      svg::Series s{std::string(corpus::to_string(r)), {}};
      for (auto season : corpus::kSeasons) {
        auto it = means.find({r, season});
        s.values.push_back(it == means.end() ? std::nullopt : std::optional<double>(it->second));
      }
      chart.series.push_back(std::move(s));
    }
    text_file("analyze/intensity_" + std::string(sentiment::to_string(mode)) + ".svg", svg::render(chart));
  }

  svg::BarChart emo_chart{"Emoticons per post", "mean occurrences", {}, {}};
  for (auto c : text::kEmoticonCategories) emo_chart.categories.emplace_back(text::to_string(c));
  for (auto r : corpus::kRegions) {
    svg::Series s{std::string(corpus::to_string(r)), {}};
    for (auto c : text::kEmoticonCategories) s.values.push_back(emo.frequency[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    emo_chart.series.push_back(std::move(s));
  }
  text_file("analyze/emoticons.svg", svg::render(emo_chart));

  svg::LineChart pirt_chart{"Weekly PIRT ratio", "PIRT / IRT", {}, {}};
  for (const auto& wk : series.at(Region::North).weeks) pirt_chart.x_labels.push_back(wk.to_string());
  for (auto r : corpus::kRegions) {
    const auto& s = series.at(r);
    svg::Series line{std::string(corpus::to_string(r)), {}};
    std::map<corpus::IsoWeek, std::optional<double>> by_week;
    const auto ratio = analytics::pirt_ratio(s);
    for (std::size_t t = 0; t < s.size(); ++t) by_week[s.weeks[t]] = ratio[t];
    for (const auto& wk : series.at(Region::North).weeks) {
      auto it = by_week.find(corpus::parse_iso_week(wk.to_string()));
      line.values.push_back(it == by_week.end() ? std::nullopt : it->second);
    }
    pirt_chart.series.push_back(std::move(line));
  }
  text_file("analyze/pirt.svg", svg::render(pirt_chart));
  return out;
}

std::vector<gam::SuiteRow> regress(const PipelineConfig& config, const Inputs& in, const std::vector<Post>& labeled) {
  auto north = series_for(labeled, in.ili, Region::North, config);
  auto south = series_for(labeled, in.ili, Region::South, config);
  for (auto* s : {&north, &south}) {
    for (double& v : s->ili) v *= config.response_scale;
  }
  gam::FitOptions options;
  options.k = config.gam_k;
  return gam::run_model_suite(north, south, options);
}

void write_regress(Writer& w, const PipelineConfig& config, const std::vector<gam::SuiteRow>& rows) {
  gam::write_suite_csv(w.path("regress/suite.csv"), rows);
  for (const auto& row : rows) gam::write_fitted_csv(w.path("regress/fitted_" + row.code + ".csv"), row);
  if (!config.charts) return;
  for (auto r : corpus::kRegions) {
    const gam::SuiteRow* before = nullptr;
    const gam::SuiteRow* after = nullptr;
    for (const auto& row : rows) {
      if (row.region != r) continue;
      if (row.spec == gam::ModelSpec::SmoothLag) before = &row;
      if (row.spec == gam::ModelSpec::AdjustedSmoothLag) after = &row;
    }
    svg::LineChart chart{"Fitted ILI before and after adjusting IRT (" + std::string(corpus::to_string(r)) + ")",
                         "ILI", {}, {}};
    for (const auto& wk : before->weeks) chart.x_labels.push_back(wk.to_string());
    auto as_series = [](const std::string& name, const std::vector<double>& v) {
      svg::Series s{name, {}};
      for (double x : v) s.values.emplace_back(x);
      return s;
    };
    chart.series.push_back(as_series("observed", before->fit.observed));
    chart.series.push_back(as_series(before->code + " fitted", before->fit.fitted));
    chart.series.push_back(as_series(after->code + " fitted", after->fit.fitted));
    w.text("regress/fitted_" + std::string(corpus::to_string(r)) + ".svg", svg::render(chart));
  }
}

}  // namespace

const std::vector<std::string>& path_keys() {
  static const std::vector<std::string> keys{"posts",
                                             "training",
                                             "ili",
                                             "lexicon",
                                             "region_map",
                                             "season_map",
                                             "sentiment.words",
                                             "sentiment.degrees",
                                             "sentiment.negations",
                                             "emoticons",
                                             "hospital_keywords",
                                             "duration_keywords",
                                             "embed.stop_list",
                                             "output_dir"};
  return keys;
}

PipelineConfig load_config(const fs::path& path) {
  const auto kv = KeyValueFile::load(path);
  for (const auto& key : kv.keys()) {
    const bool known = std::find(path_keys().begin(), path_keys().end(), key) != path_keys().end() ||
                       std::find(kScalarKeys.begin(), kScalarKeys.end(), key) != kScalarKeys.end();
    if (!known) throw validation_error(kModule, path.string() + ": unknown key '" + key + "'");
  }
  const fs::path base = path.parent_path();
  auto path_of = [&](const std::string& key) -> std::optional<fs::path> {
    if (const char* env = std::getenv(env_name(key).c_str()); env && *env) return fs::path(env);
    const auto v = kv.get(key);
    if (!v || v->empty()) return std::nullopt;
    const fs::path p(*v);
    return p.is_absolute() ? p : base / p;
  };

  PipelineConfig c;
  c.source = path;
  const auto posts = path_of("posts");
  if (!posts) throw validation_error(kModule, path.string() + ": 'posts' is required");
  c.posts = *posts;
  const auto lexicon = path_of("lexicon");
  if (!lexicon) throw validation_error(kModule, path.string() + ": 'lexicon' is required");
  c.lexicon = *lexicon;
  c.training = path_of("training");
  c.ili = path_of("ili");
  c.region_map = path_of("region_map");
  c.season_map = path_of("season_map");
  c.sentiment_words = path_of("sentiment.words");
  c.sentiment_degrees = path_of("sentiment.degrees");
  c.sentiment_negations = path_of("sentiment.negations");
  c.emoticons = path_of("emoticons");
  c.hospital_keywords = path_of("hospital_keywords");
  c.duration_keywords = path_of("duration_keywords");
  c.stop_list = path_of("embed.stop_list");
  if (auto out = path_of("output_dir")) c.output_dir = *out;
  else c.output_dir = base / "out";

  const long long seed = kv.get_int("seed", 1);
  if (seed < 0) throw validation_error(kModule, "seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  if (auto v = kv.get("window.first")) c.window.first = corpus::parse_iso_week(*v);
  if (auto v = kv.get("window.last")) c.window.last = corpus::parse_iso_week(*v);
  if (c.window.last < c.window.first) throw validation_error(kModule, "window.last precedes window.first");

  if (auto v = kv.get("classifier.grid")) c.grid = parse_size_list(*v, "classifier.grid");
  c.test_fraction = kv.get_double("classifier.test_fraction", c.test_fraction);
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
    throw validation_error(kModule, "classifier.test_fraction must lie in (0, 1)");
  }
  c.svm_C = positive_double(kv, "classifier.C", c.svm_C);
  const auto kernel = kv.get("classifier.kernel").value_or("rbf");
  if (kernel != "rbf" && kernel != "linear") throw validation_error(kModule, "classifier.kernel must be rbf or linear");
  c.rbf = kernel == "rbf";
  c.gamma = kv.get_double("classifier.gamma", c.gamma);
  c.svm_tol = positive_double(kv, "classifier.tol", c.svm_tol);

  c.sgns.dim = positive_size(kv, "embed.dim", c.sgns.dim);
  c.sgns.window = positive_size(kv, "embed.window", c.sgns.window);
  c.sgns.negatives = positive_size(kv, "embed.negatives", c.sgns.negatives);
  c.sgns.epochs = positive_size(kv, "embed.epochs", c.sgns.epochs);
  c.sgns.min_count = positive_size(kv, "embed.min_count", c.sgns.min_count);
  c.sgns.learning_rate = positive_double(kv, "embed.learning_rate", c.sgns.learning_rate);
  c.neighbors = positive_size(kv, "embed.neighbors", c.neighbors);
  if (auto v = kv.get("embed.seeds")) {
    c.seed_tokens.clear();
    for (const auto& t : split(*v, ',')) {
      if (!trim(t).empty()) c.seed_tokens.push_back(trim(t));
    }
  }

  c.gam_k = positive_size(kv, "gam.k", c.gam_k);
  if (auto v = kv.get("gam.carry_mode")) c.carry_mode = analytics::parse_carry_mode(*v);
  c.response_scale = positive_double(kv, "gam.response_scale", c.response_scale);
  c.charts = kv.get_bool("charts", c.charts);
  return c;
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Classify: return "classify";
    case Command::Embed: return "embed";
    case Command::Analyze: return "analyze";
    case Command::Regress: return "regress";
    case Command::Report: return "report";
  }
  return "?";
}

void validate(const PipelineConfig& c, Command command) {
  require_file(c.posts, "posts", command);
  require_file(c.lexicon, "lexicon", command);
  if (command == Command::Classify) require_file(c.training, "training", command);
  else if (c.training) require_file(c.training, "training", command);
  for (const auto& [p, key] : {std::pair{c.region_map, "region_map"}, std::pair{c.season_map, "season_map"},
                               std::pair{c.hospital_keywords, "hospital_keywords"},
                               std::pair{c.duration_keywords, "duration_keywords"},
                               std::pair{c.stop_list, "embed.stop_list"}}) {
    if (p) require_file(p, key, command);
  }
  const bool analyzes = command == Command::Analyze || command == Command::Report;
  const bool regresses = command == Command::Regress || command == Command::Report;
  if (analyzes || regresses) require_file(c.ili, "ili", command);
  if (analyzes) {
    require_file(c.sentiment_words, "sentiment.words", command);
    require_file(c.sentiment_degrees, "sentiment.degrees", command);
    require_file(c.sentiment_negations, "sentiment.negations", command);
    require_file(c.emoticons, "emoticons", command);
  }
  if (fs::exists(c.output_dir) && !fs::is_directory(c.output_dir)) {
    throw validation_error(kModule, "output_dir exists and is not a directory: " + c.output_dir.string());
  }
}

RunSummary run(const PipelineConfig& config, Command command) {
  validate(config, command);
  RunSummary summary;
  Inputs in = load_inputs(config, command, summary);

  // Compute every stage first.
  std::optional<ClassifyResult> classified;
  std::vector<Post> labeled = in.posts;
  if (config.training) {
    classified = classify(config, in.training);
    labeled = classifier::label_corpus(classified->model, classified->space, std::move(labeled));
  }
  analytics::mark_prolonged(labeled, in.duration);

  std::optional<EmbedResult> embedded;
  if (command == Command::Embed || command == Command::Report) embedded = embed(config, labeled, in.stop_list);
  std::optional<std::vector<gam::SuiteRow>> suite;
  if (command == Command::Regress || command == Command::Report) suite = regress(config, in, labeled);

  Deferred analysis;
  if (command == Command::Analyze || command == Command::Report) analysis = analyze(config, in, labeled, summary);

  fs::create_directories(config.output_dir);
  Writer w(config.output_dir, summary);
  if (classified && (command == Command::Classify || command == Command::Report)) {
    write_classify(w, *classified, labeled);
  }
  if (embedded) write_embed(w, *embedded);
  for (const auto& write : analysis) write(w);
  if (suite) write_regress(w, config, *suite);
  return summary;
}

// ---------------------------------------------------------------- fixture

void write_fixture(const fs::path& dir, std::uint64_t seed, const FixtureOptions& options) {
  fs::create_directories(dir);
  const corpus::StudyWindow window{};
  std::vector<corpus::IsoWeek> weeks;
  for (auto wk = window.first; wk <= window.last; wk = wk.next()) weeks.push_back(wk);

  // Winter-heavy seasonal volume; the south carries a second summer wave.
  std::vector<double> north_w, south_w;
  for (std::size_t i = 0; i < weeks.size(); ++i) {
    const double wk = weeks[i].week;
    const double winter = std::exp(-std::pow((wk - 4.0) / 5.0, 2)) + std::exp(-std::pow((wk - 53.0) / 5.0, 2));
    north_w.push_back(0.3 + 2.5 * winter);
    south_w.push_back(0.4 + 1.5 * winter + 1.2 * std::exp(-std::pow((wk - 28.0) / 4.0, 2)));
  }

  corpus::SynthSpec base;
  base.planted_pair = {"sneezing", "tissues"};
  base.planted_pair_rate = 0.3;
  base.duration_rate_north = 0.08;
  base.duration_rate_south = 0.35;
  base.north_joy_boost = 2.0;

  corpus::SynthSpec train_spec = base;
  train_spec.n_posts = options.training_posts;
  auto training = corpus::synth_corpus(train_spec, derive_seed(seed, 10));
  for (std::size_t i = 0; i < training.posts.size(); ++i) training.posts[i].label = training.truth[i];

  corpus::SynthSpec corpus_spec = base;
  corpus_spec.n_posts = options.corpus_posts;
  corpus_spec.north_week_weights = north_w;
  corpus_spec.south_week_weights = south_w;
  auto full = corpus::synth_corpus(corpus_spec, derive_seed(seed, 11));
  for (auto& p : full.posts) {
    p.id = "c" + p.id.substr(1);
  }

  // ILI from the planted IRT: the south reacts to last week's prolonged cases.
  const analytics::KeywordSet duration("duration", analytics::KeywordRole::Duration, corpus::synth_duration_phrases());
  std::map<std::pair<Region, corpus::IsoWeek>, std::pair<double, double>> weekly;  // irt, pirt
  for (std::size_t i = 0; i < full.posts.size(); ++i) {
    if (full.truth[i] != Label::Influenza) continue;
    auto& cell = weekly[{*full.posts[i].region, full.posts[i].week()}];
    cell.first += 1;
    if (duration.matches(full.posts[i].text)) cell.second += 1;
  }
  std::mt19937_64 rng(derive_seed(seed, 12));
  std::vector<corpus::IliRecord> ili;
  for (auto r : corpus::kRegions) {
    std::vector<double> driver;
    for (std::size_t t = 0; t < weeks.size(); ++t) {
      const auto cur = weekly[{r, weeks[t]}];
      const double carried = (r == Region::South && t > 0) ? weekly[{r, weeks[t - 1]}].second : 0.0;
      driver.push_back(cur.first + carried + 1.0);
    }
    double mean = 0.0;
    for (double d : driver) mean += d / static_cast<double>(driver.size());
    std::gamma_distribution<double> noise(200.0, 1.0 / 200.0);
    for (std::size_t t = 0; t < weeks.size(); ++t) {
      const double mu = 3.0 * std::pow(driver[t] / mean, 0.8);
      const double value = std::round(mu * noise(rng) * 1000.0) / 1000.0;
      ili.push_back({weeks[t], r, value});
    }
  }

  corpus::write_posts_jsonl(dir / "training.jsonl", training.posts);
  corpus::write_posts_jsonl(dir / "posts.jsonl", full.posts);
  corpus::write_ili_csv(dir / "ili.csv", ili);

  std::set<std::string> lexicon(training.lexicon.begin(), training.lexicon.end());
  lexicon.insert(full.lexicon.begin(), full.lexicon.end());
  std::string lex;
  for (const auto& wd : lexicon) lex += wd + '\n';
  std::ofstream(dir / "lexicon.txt", std::ios::binary) << lex;

  std::ofstream(dir / "sentiment_words.tsv", std::ios::binary)
      << "# word<TAB>strength\nhappy\t3\nrelieved\t2\nbetter\t2\nglad\t3\nrecovered\t4\n"
         "sad\t-3\nawful\t-4\npainful\t-4\ntired\t-2\nmiserable\t-5\nworried\t-2\n";
  std::ofstream(dir / "sentiment_degrees.tsv", std::ios::binary)
      << "# adverb<TAB>multiplier\nvery\t2\nextremely\t3\nslightly\t0.5\n";
  std::ofstream(dir / "sentiment_negations.txt", std::ios::binary) << "not\nnever\n";
  std::ofstream(dir / "emoticons.tsv", std::ios::binary)
      << "[haha]\tJoy\n[laugh]\tJoy\n[smile]\tHappiness\n[hearts]\tHappiness\n"
         "[tears]\tSadness\n[sob]\tSadness\n[angry]\tAnger\n[rage]\tAnger\n";
  std::string hospital, dur;
  for (const auto& p : corpus::synth_hospital_phrases()) hospital += p + '\n';
  for (const auto& p : corpus::synth_duration_phrases()) dur += p + '\n';
  std::ofstream(dir / "hospital.txt", std::ios::binary) << hospital;
  std::ofstream(dir / "duration.txt", std::ios::binary) << dur;
  std::string regions = "# province = North|South\n";
  const auto default_regions = corpus::RegionMap::china_default();
  for (const auto& [p, r] : default_regions.entries()) {
    regions += p + " = " + std::string(corpus::to_string(r)) + '\n';
  }
  std::ofstream(dir / "region_map.conf", std::ios::binary) << regions;

  std::ofstream(dir / "flusense.conf", std::ios::binary)
      << "# Synthetic demo inputs. Paths are relative to this file.\n"
         "posts = posts.jsonl\n"
         "training = training.jsonl\n"
         "ili = ili.csv\n"
         "lexicon = lexicon.txt\n"
         "region_map = region_map.conf\n"
         "sentiment.words = sentiment_words.tsv\n"
         "sentiment.degrees = sentiment_degrees.tsv\n"
         "sentiment.negations = sentiment_negations.txt\n"
         "emoticons = emoticons.tsv\n"
         "hospital_keywords = hospital.txt\n"
         "duration_keywords = duration.txt\n"
         "output_dir = out\n"
         "seed = "
      << seed
      << "\n"
         "\n"
         "classifier.grid = 50, 100, 200, 400\n"
         "embed.dim = 50\n"
         "embed.epochs = 5\n"
         "embed.neighbors = 20\n"
         "embed.seeds = sneezing, tissues, flu000, hospital\n"
         "# ILI% per 100 visits, read as a count per 10000 visits.\n"
         "gam.response_scale = 100\n";
}

}  // namespace flusense::pipeline
