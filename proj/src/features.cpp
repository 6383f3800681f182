#include "flusense/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "flusense/classifier.hpp"
#include "flusense/csv.hpp"
#include "flusense/error.hpp"

namespace flusense::features {

namespace {
constexpr const char* kModule = "features";
constexpr const char* kMagic = "flusense-feature-space";
constexpr int kVersion = 1;

double entropy2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}
}  // namespace

DocVector DocVector::from_dense(const std::vector<double>& dense) {
  DocVector v;
  v.dim = dense.size();
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      v.index.push_back(static_cast<std::uint32_t>(i));
      v.value.push_back(dense[i]);
    }
  }
  return v;
}

double DocVector::squared_norm() const {
  double s = 0.0;
  for (double x : value) s += x * x;
  return s;
}

std::vector<double> DocVector::to_dense() const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < index.size(); ++k) out[index[k]] = value[k];
  return out;
}

double dot(const DocVector& a, const DocVector& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.index.size() && j < b.index.size()) {
    if (a.index[i] == b.index[j]) {
      s += a.value[i++] * b.value[j++];
    } else if (a.index[i] < b.index[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return s;
}

double squared_distance(const DocVector& a, const DocVector& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.index.size() || j < b.index.size()) {
    if (j == b.index.size() || (i < a.index.size() && a.index[i] < b.index[j])) {
      s += a.value[i] * a.value[i];
      ++i;
    } else if (i == a.index.size() || b.index[j] < a.index[i]) {
      s += b.value[j] * b.value[j];
      ++j;
    } else {
      const double d = a.value[i++] - b.value[j++];
      s += d * d;
    }
  }
  return s;
}

double ig_from_counts(std::size_t present_pos, std::size_t present_neg, std::size_t total_pos,
                      std::size_t total_neg) {
  const double n = static_cast<double>(total_pos + total_neg);
  if (n == 0.0) throw validation_error(kModule, "information gain of an empty corpus");
  const double n_present = static_cast<double>(present_pos + present_neg);
  const double n_absent = n - n_present;
  const double h = entropy2(static_cast<double>(total_pos) / n);
  double h_cond = 0.0;
  if (n_present > 0) h_cond += n_present / n * entropy2(static_cast<double>(present_pos) / n_present);
  if (n_absent > 0) {
    h_cond += n_absent / n * entropy2(static_cast<double>(total_pos - present_pos) / n_absent);
  }
  return std::max(0.0, h - h_cond);
}

double ig_score(const std::vector<bool>& presence, const std::vector<bool>& labels) {
  if (presence.size() != labels.size()) throw validation_error(kModule, "presence/label length mismatch");
  if (presence.empty()) throw validation_error(kModule, "information gain of an empty corpus");
  std::size_t pp = 0, pn = 0, tp = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      ++tp;
      if (presence[i]) ++pp;
    } else {
      ++tn;
      if (presence[i]) ++pn;
    }
  }
  return ig_from_counts(pp, pn, tp, tn);
}

FeatureSpace FeatureSpace::fit(const std::vector<std::vector<std::string>>& docs, const std::vector<bool>& labels,
                               std::size_t k, std::vector<std::string>* warnings) {
  if (docs.size() != labels.size()) throw validation_error(kModule, "docs/labels length mismatch");
  if (docs.empty()) throw validation_error(kModule, "cannot fit a feature space on an empty corpus");
  if (k == 0) throw validation_error(kModule, "k must be at least 1");

  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // token -> (pos docs, neg docs)
  std::size_t total_pos = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::vector<std::string> uniq = docs[d];
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (labels[d]) ++total_pos;
    for (auto& t : uniq) {
      auto& c = counts[t];
      (labels[d] ? c.first : c.second) += 1;
    }
  }
  const std::size_t total_neg = docs.size() - total_pos;

  FeatureSpace fs;
  fs.n_docs_ = docs.size();
  for (const auto& [tok, c] : counts) {
    fs.vocabulary_.push_back(tok);
    fs.doc_freq_.push_back(c.first + c.second);
    fs.ig_.push_back(ig_from_counts(c.first, c.second, total_pos, total_neg));
  }
  fs.ranking_.resize(fs.vocabulary_.size());
  std::iota(fs.ranking_.begin(), fs.ranking_.end(), 0);
  // Vocabulary is already lexicographic, so a stable sort keeps the tie-break.
  std::stable_sort(fs.ranking_.begin(), fs.ranking_.end(),
                   [&](std::size_t a, std::size_t b) { return fs.ig_[a] > fs.ig_[b]; });
  fs.select(k, warnings);
  return fs;
}

FeatureSpace FeatureSpace::with_k(std::size_t k, std::vector<std::string>* warnings) const {
  if (k == 0) throw validation_error(kModule, "k must be at least 1");
  FeatureSpace fs = *this;
  fs.select(k, warnings);
  return fs;
}

void FeatureSpace::select(std::size_t k, std::vector<std::string>* warnings) {
  if (k > vocabulary_.size()) {
    if (warnings) {
      warnings->push_back("requested " + std::to_string(k) + " features but vocabulary has " +
                          std::to_string(vocabulary_.size()) + "; selecting all");
    }
    k = vocabulary_.size();
  }
  selected_.assign(ranking_.begin(), ranking_.begin() + static_cast<std::ptrdiff_t>(k));
  column_.clear();
  for (std::size_t c = 0; c < selected_.size(); ++c) column_.emplace(vocabulary_[selected_[c]], c);
}

double FeatureSpace::idf(std::size_t vocab_index) const {
  return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(doc_freq_.at(vocab_index)))) +
         1.0;
}

DocVector FeatureSpace::transform(const std::vector<std::string>& doc) const {
  std::map<std::uint32_t, double> tf;
  for (const auto& t : doc) {
    auto it = column_.find(t);
    if (it != column_.end()) tf[it->second] += 1.0;
  }
  DocVector v;
  v.dim = selected_.size();
  double norm2 = 0.0;
  for (const auto& [col, count] : tf) {
    const double w = count * idf(selected_[col]);
    v.index.push_back(col);
    v.value.push_back(w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v.value) x *= inv;
  }
  return v;
}

std::vector<std::string> FeatureSpace::selected_tokens() const {
  std::vector<std::string> out;
  out.reserve(selected_.size());
  for (auto i : selected_) out.push_back(vocabulary_[i]);
  return out;
}

void FeatureSpace::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error(kModule, "cannot write " + path.string());
  out << kMagic << ' ' << kVersion << '\n';
  out << "n_docs " << n_docs_ << '\n';
  out << "vocab " << vocabulary_.size() << '\n';
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    if (vocabulary_[i].find_first_of("\t\n\r") != std::string::npos) {
      throw runtime_error(kModule, "token with tab or newline cannot be serialised");
    }
    out << vocabulary_[i] << '\t' << doc_freq_[i] << '\t' << csv::format_double(ig_[i]) << '\n';
  }
  out << "selected " << selected_.size() << '\n';
  for (auto i : selected_) out << i << '\n';
}

FeatureSpace FeatureSpace::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error(kModule, "cannot read " + path.string());
  auto bad = [&](const std::string& why) { return validation_error(kModule, path.string() + ": " + why); };
  std::string magic, key, line;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw bad("not a feature-space file");
  if (version != kVersion) throw bad("unsupported version " + std::to_string(version));
  FeatureSpace fs;
  std::size_t n_vocab = 0, n_sel = 0;
  if (!(in >> key >> fs.n_docs_) || key != "n_docs") throw bad("expected n_docs");
  if (!(in >> key >> n_vocab) || key != "vocab") throw bad("expected vocab");
  std::getline(in, line);
  for (std::size_t i = 0; i < n_vocab; ++i) {
    if (!std::getline(in, line)) throw bad("truncated vocabulary");
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) throw bad("bad vocabulary row");
    fs.vocabulary_.push_back(line.substr(0, t1));
    fs.doc_freq_.push_back(std::stoull(line.substr(t1 + 1, t2 - t1 - 1)));
    fs.ig_.push_back(std::stod(line.substr(t2 + 1)));
  }
  if (!(in >> key >> n_sel) || key != "selected") throw bad("expected selected");
  fs.ranking_.resize(fs.vocabulary_.size());
  std::iota(fs.ranking_.begin(), fs.ranking_.end(), 0);
  std::stable_sort(fs.ranking_.begin(), fs.ranking_.end(),
                   [&](std::size_t a, std::size_t b) { return fs.ig_[a] > fs.ig_[b]; });
  for (std::size_t i = 0; i < n_sel; ++i) {
    std::size_t idx = 0;
    if (!(in >> idx) || idx >= fs.vocabulary_.size()) throw bad("bad selected index");
    fs.selected_.push_back(idx);
  }
  for (std::size_t c = 0; c < fs.selected_.size(); ++c) fs.column_.emplace(fs.vocabulary_[fs.selected_[c]], c);
  return fs;
}

Split stratified_split(const std::vector<bool>& labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw validation_error(kModule, "test fraction must be in (0,1)");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  std::mt19937_64 rng(seed);
  Split split;
  for (auto* cls : {&pos, &neg}) {
    std::shuffle(cls->begin(), cls->end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(cls->size())));
    split.test.insert(split.test.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(), cls->begin() + static_cast<std::ptrdiff_t>(n_test), cls->end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

SweepResult sweep_dimensions(const std::vector<std::vector<std::string>>& docs, const std::vector<bool>& labels,
                             const SweepOptions& options) {
  if (options.grid.empty()) throw validation_error(kModule, "dimension grid is empty");
  if (docs.size() != labels.size()) throw validation_error(kModule, "docs/labels length mismatch");

  SweepResult result;
  result.split = stratified_split(labels, options.test_fraction, options.seed);
  auto has_both = [&](const std::vector<std::size_t>& idx) {
    bool p = false, n = false;
    for (auto i : idx) (labels[i] ? p : n) = true;
    return p && n;
  };
  if (!has_both(result.split.train) || !has_both(result.split.test)) {
    throw validation_error(kModule, "train/test split is single-class");
  }

  std::vector<std::vector<std::string>> train_docs, test_docs;
  std::vector<bool> train_labels;
  std::vector<int> train_y, test_y;
  for (auto i : result.split.train) {
    train_docs.push_back(docs[i]);
    train_labels.push_back(labels[i]);
    train_y.push_back(labels[i] ? 1 : -1);
  }
  for (auto i : result.split.test) {
    test_docs.push_back(docs[i]);
    test_y.push_back(labels[i] ? 1 : -1);
  }

  const auto base = FeatureSpace::fit(train_docs, train_labels, 1);
  double best_acc = -1.0;
  for (const auto k : options.grid) {
    const auto space = base.with_k(k);
    std::vector<DocVector> xtr, xte;
    for (const auto& d : train_docs) xtr.push_back(space.transform(d));
    for (const auto& d : test_docs) xte.push_back(space.transform(d));
    classifier::SvmParams params;
    params.C = options.C;
    params.tol = options.tol;
    params.kernel = options.rbf ? classifier::Kernel::rbf(options.gamma > 0.0 ? options.gamma
                                                                              : 1.0 / static_cast<double>(space.dimension()))
                                : classifier::Kernel::linear();
    const auto model = classifier::train_svm(xtr, train_y, params);
    SweepRow row;
    row.k = k;
    row.dimension = space.dimension();
    row.train_accuracy = classifier::evaluate(model, xtr, train_y).accuracy.value_or(0.0);
    row.test_accuracy = classifier::evaluate(model, xte, test_y).accuracy.value_or(0.0);
    result.rows.push_back(row);
    if (row.test_accuracy > best_acc || (row.test_accuracy == best_acc && k < result.best_k)) {
      best_acc = row.test_accuracy;
      result.best_k = k;
    }
  }
  return result;
}

}  // namespace flusense::features
