#include "flusense/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "flusense/csv.hpp"
#include "flusense/error.hpp"

namespace flusense::embeddings {

namespace {

constexpr const char* kModule = "embeddings";

double dotp(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace

struct ModelBuilder {
  static EmbeddingModel make(std::vector<std::string> vocab, std::vector<std::uint64_t> counts, const SgnsParams& p,
                             std::uint64_t seed) {
    EmbeddingModel m;
    m.vocab_ = std::move(vocab);
    m.counts_ = std::move(counts);
    for (std::size_t i = 0; i < m.vocab_.size(); ++i) m.index_.emplace(m.vocab_[i], i);
    m.dim_ = p.dim;
    m.params_ = p;
    m.seed_ = seed;
    m.input_.assign(m.vocab_.size() * p.dim, 0.0);
    m.output_.assign(m.vocab_.size() * p.dim, 0.0);
    return m;
  }
  static std::vector<double>& input(EmbeddingModel& m) { return m.input_; }
  static std::vector<double>& output(EmbeddingModel& m) { return m.output_; }
};

std::optional<std::size_t> EmbeddingModel::index_of(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingModel::save_text(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error(kModule, "cannot write " + path.string());
  out << vocab_.size() << ' ' << dim_ << '\n';
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    out << vocab_[i];
    for (double v : input_vector(i)) out << ' ' << csv::format_double(v);
    out << '\n';
  }
}

double sgns_loss_and_gradient(std::span<const double> center, std::span<const double> context,
                              const std::vector<std::span<const double>>& negatives, std::span<double> grad_center,
                              std::span<double> grad_context, std::span<double> grad_negatives) {
  const std::size_t d = center.size();
  std::fill(grad_center.begin(), grad_center.end(), 0.0);

  const double pos = dotp(context, center);
  double loss = -log_sigmoid(pos);
  const double gpos = sigmoid(pos) - 1.0;  // dL/d(u_o . v_c)
  for (std::size_t i = 0; i < d; ++i) {
    grad_center[i] += gpos * context[i];
    grad_context[i] = gpos * center[i];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const auto u = negatives[k];
    const double s = dotp(u, center);
    loss -= log_sigmoid(-s);
    const double gneg = sigmoid(s);  // dL/d(u_k . v_c)
    for (std::size_t i = 0; i < d; ++i) {
      grad_center[i] += gneg * u[i];
      grad_negatives[k * d + i] = gneg * center[i];
    }
  }
  return loss;
}

EmbeddingModel train_sgns(const std::vector<std::vector<std::string>>& corpus, const SgnsParams& params,
                          std::uint64_t seed, TrainStats* stats) {
  if (params.dim == 0 || params.window == 0 || params.epochs == 0) {
    throw validation_error(kModule, "dim, window and epochs must be positive");
  }
  std::map<std::string, std::uint64_t> freq;
  for (const auto& sentence : corpus) {
    for (const auto& t : sentence) ++freq[t];
  }
  std::vector<std::string> vocab;
  std::vector<std::uint64_t> counts;
  for (const auto& [t, c] : freq) {
    if (c >= params.min_count) {
      vocab.push_back(t);
      counts.push_back(c);
    }
  }
  if (vocab.empty()) throw validation_error(kModule, "vocabulary is empty after min-count filtering");

  EmbeddingModel model = ModelBuilder::make(vocab, counts, params, seed);
  auto& in = ModelBuilder::input(model);
  auto& out = ModelBuilder::output(model);
  const std::size_t d = params.dim;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& v : in) v = (unit(rng) - 0.5) / static_cast<double>(d);

  std::vector<std::vector<std::size_t>> sentences;
  std::uint64_t total_tokens = 0;
  for (const auto& sentence : corpus) {
    std::vector<std::size_t> ids;
    for (const auto& t : sentence) {
      if (auto i = model.index_of(t)) ids.push_back(*i);
    }
    total_tokens += ids.size();
    if (ids.size() > 1) sentences.push_back(std::move(ids));
  }

  std::vector<double> cumulative(vocab.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    acc += std::pow(static_cast<double>(counts[i]), params.unigram_power);
    cumulative[i] = acc;
  }
  auto draw_negative = [&] {
    const double u = unit(rng) * acc;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), vocab.size() - 1);
  };

  std::vector<double> g_center(d), g_context(d), g_neg(params.negatives * d);
  std::vector<std::size_t> neg_ids;
  std::vector<std::span<const double>> neg_vecs;
  const double total_steps = static_cast<double>(total_tokens) * static_cast<double>(params.epochs);
  std::uint64_t processed = 0;
  if (stats) *stats = {};

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::uint64_t epoch_pairs = 0;
    for (const auto& ids : sentences) {
      for (std::size_t c = 0; c < ids.size(); ++c) {
        const double progress = total_steps > 0 ? static_cast<double>(processed) / total_steps : 0.0;
        const double lr =
            params.learning_rate * std::max(params.min_learning_rate_fraction, 1.0 - progress);
        ++processed;
        const std::size_t lo = c >= params.window ? c - params.window : 0;
        const std::size_t hi = std::min(ids.size() - 1, c + params.window);
        for (std::size_t o = lo; o <= hi; ++o) {
          if (o == c) continue;
          const std::size_t center = ids[c];
          const std::size_t context = ids[o];
          neg_ids.clear();
          neg_vecs.clear();
          for (std::size_t k = 0; k < params.negatives; ++k) {
            const std::size_t n = draw_negative();
            if (n == context) continue;
            neg_ids.push_back(n);
            neg_vecs.emplace_back(out.data() + n * d, d);
          }
          std::span<double> vc(in.data() + center * d, d);
          std::span<double> uo(out.data() + context * d, d);
          const double loss = sgns_loss_and_gradient(vc, uo, neg_vecs, g_center, g_context,
                                                     std::span<double>(g_neg.data(), neg_ids.size() * d));
          epoch_loss += loss;
          ++epoch_pairs;
          for (std::size_t i = 0; i < d; ++i) uo[i] -= lr * g_context[i];
          for (std::size_t k = 0; k < neg_ids.size(); ++k) {
            double* u = out.data() + neg_ids[k] * d;
            for (std::size_t i = 0; i < d; ++i) u[i] -= lr * g_neg[k * d + i];
          }
          for (std::size_t i = 0; i < d; ++i) vc[i] -= lr * g_center[i];
        }
      }
    }
    if (stats) {
      stats->epoch_mean_loss.push_back(epoch_pairs ? epoch_loss / static_cast<double>(epoch_pairs) : 0.0);
      stats->pairs += epoch_pairs;
    }
  }
  return model;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(dotp(a, a));
  const double nb = std::sqrt(dotp(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dotp(a, b) / (na * nb), -1.0, 1.0);
}

std::vector<Neighbor> most_similar(const EmbeddingModel& model, const std::string& token, std::size_t k) {
  if (k == 0) throw validation_error(kModule, "k must be at least 1");
  const auto q = model.index_of(token);
  if (!q) throw validation_error(kModule, "token '" + token + "' is not in the vocabulary");
  std::vector<Neighbor> all;
  all.reserve(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (i == *q) continue;
    all.push_back({model.vocabulary()[i], cosine(model.input_vector(*q), model.input_vector(i))});
  }
  auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.token < b.token;
  };
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), better);
  all.resize(take);
  return all;
}

std::string_view to_string(Annotation a) {
  switch (a) {
    case Annotation::NorthOnly: return "NorthOnly";
    case Annotation::SouthOnly: return "SouthOnly";
    case Annotation::Common: return "Common";
  }
  return "?";
}

double NetworkEdge::cosine() const {
  if (annotation == Annotation::NorthOnly) return north_cosine.value_or(0.0);
  if (annotation == Annotation::SouthOnly) return south_cosine.value_or(0.0);
  return 0.5 * (north_cosine.value_or(0.0) + south_cosine.value_or(0.0));
}

const std::vector<std::string>& default_seed_tokens() {
  static const std::vector<std::string> seeds{"influenza", "cold", "cough", "fever", "sneeze", "rhinobyon"};
  return seeds;
}

WordNetworkResult build_word_network(const std::vector<std::string>& seeds, const EmbeddingModel& north,
                                     const EmbeddingModel& south, std::size_t k,
                                     const std::set<std::string>& stop_list) {
  WordNetworkResult result;
  for (const auto& seed : seeds) {
    if (!north.index_of(seed) || !south.index_of(seed)) {
      result.missing_seeds.push_back(seed);
      continue;
    }
    std::map<std::string, double> n_top, s_top;
    for (const auto& nb : most_similar(north, seed, k)) {
      if (!stop_list.count(nb.token)) n_top.emplace(nb.token, nb.cosine);
    }
    for (const auto& nb : most_similar(south, seed, k)) {
      if (!stop_list.count(nb.token)) s_top.emplace(nb.token, nb.cosine);
    }
    WordNetwork net;
    net.seed = seed;
    std::vector<NetworkEdge> north_only, south_only, common;
    for (const auto& [tok, c] : n_top) {
      auto it = s_top.find(tok);
      if (it == s_top.end()) north_only.push_back({tok, Annotation::NorthOnly, c, std::nullopt});
      else common.push_back({tok, Annotation::Common, c, it->second});
    }
    for (const auto& [tok, c] : s_top) {
      if (!n_top.count(tok)) south_only.push_back({tok, Annotation::SouthOnly, std::nullopt, c});
    }
    auto by_cosine = [](const NetworkEdge& a, const NetworkEdge& b) {
      if (a.cosine() != b.cosine()) return a.cosine() > b.cosine();
      return a.neighbor < b.neighbor;
    };
    for (auto* group : {&north_only, &south_only, &common}) {
      std::sort(group->begin(), group->end(), by_cosine);
      net.edges.insert(net.edges.end(), group->begin(), group->end());
    }
    result.networks.push_back(std::move(net));
  }
  return result;
}

void write_network_csv(const std::filesystem::path& path, const WordNetworkResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error(kModule, "cannot write " + path.string());
  out << "seed,neighbor,annotation,cosine\n";
  for (const auto& net : result.networks) {
    for (const auto& e : net.edges) {
      out << csv::join({net.seed, e.neighbor, std::string(to_string(e.annotation)), csv::format_double(e.cosine())})
          << '\n';
    }
  }
}

}  // namespace flusense::embeddings
