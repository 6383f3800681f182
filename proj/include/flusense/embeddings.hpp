#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace flusense::embeddings {

struct SgnsParams {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  std::size_t min_count = 5;
  double learning_rate = 0.025;
  double min_learning_rate_fraction = 1e-4;
  double unigram_power = 0.75;
};

class EmbeddingModel {
 public:
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vocab_.size(); }
  std::optional<std::size_t> index_of(const std::string& token) const;

  std::span<const double> input_vector(std::size_t i) const { return {input_.data() + i * dim_, dim_}; }
  std::span<const double> output_vector(std::size_t i) const { return {output_.data() + i * dim_, dim_}; }
  const SgnsParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

  /// Header `|V| d`, then `token v1 ... vd` per row (input vectors).
  void save_text(const std::filesystem::path& path) const;

 private:
  friend struct ModelBuilder;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::uint64_t> counts_;
  std::size_t dim_ = 0;
  std::vector<double> input_;
  std::vector<double> output_;
  SgnsParams params_;
  std::uint64_t seed_ = 0;
};

/// Loss and gradients for one (center, context, negatives) example:
/// L = -log s(u_o . v_c) - sum_k log s(-u_k . v_c), s the logistic function.
/// Gradient spans must have the sizes of their inputs; `grad_negatives` is
/// negatives.size() * d, row-major.
double sgns_loss_and_gradient(std::span<const double> center, std::span<const double> context,
                              const std::vector<std::span<const double>>& negatives, std::span<double> grad_center,
                              std::span<double> grad_context, std::span<double> grad_negatives);

struct TrainStats {
  std::vector<double> epoch_mean_loss;
  std::uint64_t pairs = 0;
};

/// Single-threaded SGD over skip-gram pairs with negative sampling from the
/// unigram distribution raised to `unigram_power`, learning rate decaying
/// linearly to `min_learning_rate_fraction` of its start. Tokens below
/// `min_count` are dropped before windows are formed.
EmbeddingModel train_sgns(const std::vector<std::vector<std::string>>& corpus, const SgnsParams& params,
                          std::uint64_t seed, TrainStats* stats = nullptr);

double cosine(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  std::string token;
  double cosine = 0.0;
};

/// Top-k by cosine over input vectors, query excluded, descending with
/// lexicographic tie-break. Throws for an out-of-vocabulary token.
std::vector<Neighbor> most_similar(const EmbeddingModel& model, const std::string& token, std::size_t k);

enum class Annotation { NorthOnly, SouthOnly, Common };
std::string_view to_string(Annotation a);

struct NetworkEdge {
  std::string neighbor;
  Annotation annotation = Annotation::Common;
  std::optional<double> north_cosine;
  std::optional<double> south_cosine;
  /// Exported cosine: the owning region's value, or the mean for Common edges.
  double cosine() const;
};

struct WordNetwork {
  std::string seed;
  std::vector<NetworkEdge> edges;  // NorthOnly, then SouthOnly, then Common; each by descending cosine
};

struct WordNetworkResult {
  std::vector<WordNetwork> networks;
  std::vector<std::string> missing_seeds;
};

const std::vector<std::string>& default_seed_tokens();

/// Per seed: top-k lists in both models, then the stop list is removed, then
/// the lists are split into NorthOnly / SouthOnly / Common.
WordNetworkResult build_word_network(const std::vector<std::string>& seeds, const EmbeddingModel& north,
                                     const EmbeddingModel& south, std::size_t k = 100,
                                     const std::set<std::string>& stop_list = {});

/// Edge list `seed,neighbor,annotation,cosine`.
void write_network_csv(const std::filesystem::path& path, const WordNetworkResult& result);

}  // namespace flusense::embeddings
