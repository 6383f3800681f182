#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace flusense::features {

/// Sparse vector: strictly increasing `index`, parallel `value`, fixed `dim`.
struct DocVector {
  std::size_t dim = 0;
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  static DocVector from_dense(const std::vector<double>& dense);
  std::size_t nnz() const { return index.size(); }
  double squared_norm() const;
  std::vector<double> to_dense() const;
};

double dot(const DocVector& a, const DocVector& b);
double squared_distance(const DocVector& a, const DocVector& b);

/// Information gain of a binary feature about a binary label, in bits:
/// H(label) - H(label | presence). Throws on an empty input or length mismatch.
double ig_score(const std::vector<bool>& presence, const std::vector<bool>& labels);

/// Same quantity from contingency counts: documents with the feature that are
/// positive / negative, and class totals.
double ig_from_counts(std::size_t present_pos, std::size_t present_neg, std::size_t total_pos,
                      std::size_t total_neg);

class FeatureSpace {
 public:
  /// Vocabulary in lexicographic order, document frequencies and IG over the
  /// labelled corpus, then the top-`k` tokens by IG (ties: lexicographic).
  /// If k exceeds the vocabulary, everything is selected and a warning appended.
  static FeatureSpace fit(const std::vector<std::vector<std::string>>& docs, const std::vector<bool>& labels,
                          std::size_t k, std::vector<std::string>* warnings = nullptr);

  /// Same statistics, new selection size.
  FeatureSpace with_k(std::size_t k, std::vector<std::string>* warnings = nullptr) const;

  /// tf * (ln((1 + n_docs) / (1 + df)) + 1) over selected tokens, L2-normalised.
  DocVector transform(const std::vector<std::string>& doc) const;
  /// Un-normalised TF-IDF weight of one selected token; used by tests and reports.
  double idf(std::size_t vocab_index) const;

  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<std::size_t>& doc_freq() const { return doc_freq_; }
  const std::vector<double>& ig() const { return ig_; }
  /// Vocabulary indices, descending IG.
  const std::vector<std::size_t>& selected() const { return selected_; }
  std::vector<std::string> selected_tokens() const;
  std::size_t n_docs() const { return n_docs_; }
  std::size_t dimension() const { return selected_.size(); }

  void save(const std::filesystem::path& path) const;
  static FeatureSpace load(const std::filesystem::path& path);

 private:
  void select(std::size_t k, std::vector<std::string>* warnings);

  std::vector<std::string> vocabulary_;
  std::vector<std::size_t> doc_freq_;
  std::vector<double> ig_;
  std::size_t n_docs_ = 0;
  std::vector<std::size_t> ranking_;  // all vocabulary indices by IG
  std::vector<std::size_t> selected_;
  std::unordered_map<std::string, std::uint32_t> column_;  // token -> selected position
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffle under `seed`; round(test_fraction * class size) of each class to test.
Split stratified_split(const std::vector<bool>& labels, double test_fraction, std::uint64_t seed);

struct SweepRow {
  std::size_t k = 0;            // requested
  std::size_t dimension = 0;    // after truncation to the vocabulary
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct SweepOptions {
  std::vector<std::size_t> grid{250, 500, 1000, 2000, 4000};
  double test_fraction = 0.2;
  std::uint64_t seed = 1;
  double C = 1.0;
  bool rbf = true;
  /// TF-IDF rows are unit vectors, so squared distances lie in [0, 2] and
  /// gamma = 1 keeps the kernel informative. <= 0 selects 1 / dimension.
  double gamma = 1.0;
  double tol = 1e-3;
};

struct SweepResult {
  std::size_t best_k = 0;
  std::vector<SweepRow> rows;
  Split split;
};

/// Trains an SVM for every k in the grid on the same split; best k maximises
/// held-out accuracy, smallest k on ties.
SweepResult sweep_dimensions(const std::vector<std::vector<std::string>>& docs, const std::vector<bool>& labels,
                             const SweepOptions& options);

}  // namespace flusense::features
