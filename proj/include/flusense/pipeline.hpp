#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flusense/analytics.hpp"
#include "flusense/corpus.hpp"
#include "flusense/embeddings.hpp"

namespace flusense::pipeline {

/// Everything a run needs, resolved from the flat config file. Relative paths
/// are taken relative to the config file's directory.
struct PipelineConfig {
  std::filesystem::path source;  // the config file itself

  std::filesystem::path posts;
  std::optional<std::filesystem::path> training;  // labelled posts; absent means `posts` carry labels
  std::optional<std::filesystem::path> ili;
  std::filesystem::path lexicon;
  std::optional<std::filesystem::path> region_map;
  std::optional<std::filesystem::path> season_map;
  std::optional<std::filesystem::path> sentiment_words;
  std::optional<std::filesystem::path> sentiment_degrees;
  std::optional<std::filesystem::path> sentiment_negations;
  std::optional<std::filesystem::path> emoticons;
  std::optional<std::filesystem::path> hospital_keywords;  // built-in list when absent
  std::optional<std::filesystem::path> duration_keywords;  // built-in list when absent
  std::optional<std::filesystem::path> stop_list;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  corpus::StudyWindow window{};

  std::vector<std::size_t> grid{250, 500, 1000, 2000, 4000};
  double test_fraction = 0.2;
  double svm_C = 1.0;
  bool rbf = true;
  double gamma = 1.0;
  double svm_tol = 1e-3;

  embeddings::SgnsParams sgns{};
  std::size_t neighbors = 100;
  std::vector<std::string> seed_tokens = embeddings::default_seed_tokens();

  std::size_t gam_k = 10;
  analytics::CarryMode carry_mode = analytics::CarryMode::Add;
  double response_scale = 1.0;

  bool charts = true;
};

/// Reads a config file. Unknown keys are errors. Path keys may be overridden
/// by environment variables named FLUSENSE_<KEY>, upper-cased with `.` as `_`
/// (for example FLUSENSE_OUTPUT_DIR); no other key can be overridden that way.
PipelineConfig load_config(const std::filesystem::path& path);

/// Every path key, as spelled in the config file.
const std::vector<std::string>& path_keys();

enum class Command { Classify, Embed, Analyze, Regress, Report };
std::string_view to_string(Command c);

/// Checks that every input the command reads exists, before anything runs.
void validate(const PipelineConfig& config, Command command);

struct RunSummary {
  std::vector<std::filesystem::path> written;  // relative to the output directory, in write order
  std::vector<std::string> notes;              // skipped records, absent cells and similar
};

/// Computes everything first and writes only when all stages succeeded.
RunSummary run(const PipelineConfig& config, Command command);

struct FixtureOptions {
  std::size_t training_posts = 2000;
  std::size_t corpus_posts = 6000;
};

/// Writes a complete synthetic input set plus `flusense.conf` into `dir`.
/// The south ILI series carries the one-week PIRT shift; the north does not.
void write_fixture(const std::filesystem::path& dir, std::uint64_t seed, const FixtureOptions& options = {});

}  // namespace flusense::pipeline
