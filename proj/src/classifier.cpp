#include "flusense/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "flusense/csv.hpp"
#include "flusense/error.hpp"

namespace flusense::classifier {

namespace {

constexpr const char* kModule = "classifier";
constexpr const char* kMagic = "flusense-svm";
constexpr int kVersion = 1;
constexpr double kTau = 1e-12;
constexpr std::size_t kCacheBytes = std::size_t{256} << 20;

// Kernel columns computed on demand with FIFO eviction.
class KernelColumns {
 public:
  KernelColumns(const std::vector<DocVector>& x, const Kernel& kernel) : x_(x), kernel_(kernel) {
    capacity_ = std::max<std::size_t>(2, kCacheBytes / (sizeof(double) * std::max<std::size_t>(1, x.size())));
  }

  std::shared_ptr<const std::vector<double>> column(std::size_t i) {
    if (auto it = cache_.find(i); it != cache_.end()) return it->second;
    auto col = std::make_shared<std::vector<double>>(x_.size());
    for (std::size_t t = 0; t < x_.size(); ++t) (*col)[t] = kernel_(x_[i], x_[t]);
    if (cache_.size() >= capacity_) {
      cache_.erase(order_.front());
      order_.pop_front();
    }
    cache_.emplace(i, col);
    order_.push_back(i);
    return col;
  }

 private:
  const std::vector<DocVector>& x_;
  Kernel kernel_;
  std::size_t capacity_;
  std::unordered_map<std::size_t, std::shared_ptr<const std::vector<double>>> cache_;
  std::deque<std::size_t> order_;
};

}  // namespace

double Kernel::operator()(const DocVector& a, const DocVector& b) const {
  if (type == KernelType::Linear) return features::dot(a, b);
  return std::exp(-gamma * features::squared_distance(a, b));
}

SvmModel train_svm(const std::vector<DocVector>& x, const std::vector<int>& y, const SvmParams& params,
                   TrainTrace* trace) {
  const std::size_t n = x.size();
  if (y.size() != n) throw validation_error(kModule, "vectors/labels length mismatch");
  if (!(params.C > 0.0)) throw validation_error(kModule, "C must be positive");
  if (params.kernel.type == KernelType::Rbf && !(params.kernel.gamma > 0.0)) {
    throw validation_error(kModule, "RBF gamma must be positive");
  }
  bool has_pos = false, has_neg = false;
  for (std::size_t t = 0; t < n; ++t) {
    if (y[t] == 1) has_pos = true;
    else if (y[t] == -1) has_neg = true;
    else throw validation_error(kModule, "labels must be +1 or -1");
    if (x[t].dim != x[0].dim) throw validation_error(kModule, "training vectors differ in dimension");
  }
  if (!has_pos || !has_neg) throw validation_error(kModule, "training set must contain both classes");

  const double C = params.C;
  KernelColumns columns(x, params.kernel);
  std::vector<double> diag(n);
  for (std::size_t t = 0; t < n; ++t) diag[t] = params.kernel(x[t], x[t]);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  auto in_up = [&](std::size_t t) { return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0.0); };
  auto in_low = [&](std::size_t t) { return (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < C); };
  auto dual_objective = [&] {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += alpha[t] * (1.0 - grad[t]);
    return 0.5 * s;
  };

  std::size_t iter = 0;
  double gap = 0.0;
  while (true) {
    // Maximal violating pair; strict comparisons keep the lowest index on ties.
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low(t) && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    gap = g_max - g_min;
    if (i == n || j == n || gap < params.tol) break;
    if (iter >= params.max_iterations) {
      std::ostringstream msg;
      msg << "SMO did not converge after " << iter << " iterations (KKT gap " << gap << ", tol " << params.tol
          << ")";
      throw runtime_error(kModule, msg.str());
    }
    ++iter;

    const auto ki = columns.column(i);
    const auto kj = columns.column(j);
    const double yi = y[i], yj = y[j];
    const double qij = yi * yj * (*ki)[j];
    const double old_ai = alpha[i], old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = diag[i] + diag[j] + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = diag[i] + diag[j] - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (yi * (*ki)[t] * dai + yj * (*kj)[t] * daj);
    }
    if (trace) trace->dual_objective.push_back(dual_objective());
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= C) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  SvmModel model;
  model.kernel = params.kernel;
  model.C = C;
  model.bias = -rho;
  model.dim = x[0].dim;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      model.support_vectors.push_back(x[t]);
      model.dual_coef.push_back(alpha[t] * y[t]);
    }
  }
  if (trace) {
    trace->iterations = iter;
    trace->final_gap = gap;
  }
  return model;
}

double decision_value(const SvmModel& model, const DocVector& v) {
  if (v.dim != model.dim || (!v.index.empty() && v.index.back() >= model.dim)) {
    throw validation_error(kModule, "vector dimension " + std::to_string(v.dim) + " does not match model dimension " +
                                        std::to_string(model.dim));
  }
  double s = model.bias;
  for (std::size_t t = 0; t < model.support_vectors.size(); ++t) {
    s += model.dual_coef[t] * model.kernel(model.support_vectors[t], v);
  }
  return s;
}

int predict(const SvmModel& model, const DocVector& x) { return decision_value(model, x) >= 0.0 ? 1 : -1; }

EvalReport make_report(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  EvalReport r{tp, fp, tn, fn, {}, {}, {}};
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = ratio(tp + tn, tp + fp + tn + fn);
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  return r;
}

EvalReport evaluate(const SvmModel& model, const std::vector<DocVector>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw validation_error(kModule, "vectors/labels length mismatch");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const int p = predict(model, x[t]);
    if (p == 1) (y[t] == 1 ? tp : fp) += 1;
    else (y[t] == 1 ? fn : tn) += 1;
  }
  return make_report(tp, fp, tn, fn);
}

std::vector<corpus::Post> label_corpus(const SvmModel& model, const features::FeatureSpace& space,
                                       std::vector<corpus::Post> posts) {
  for (auto& p : posts) {
    p.label = predict(model, space.transform(p.tokens)) == 1 ? corpus::Label::Influenza : corpus::Label::Noise;
  }
  return posts;
}

void SvmModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error(kModule, "cannot write " + path.string());
  out << kMagic << ' ' << kVersion << '\n';
  if (kernel.type == KernelType::Linear) out << "kernel linear\n";
  else out << "kernel rbf " << csv::format_double(kernel.gamma) << '\n';
  out << "C " << csv::format_double(C) << '\n';
  out << "bias " << csv::format_double(bias) << '\n';
  out << "dim " << dim << '\n';
  out << "sv " << support_vectors.size() << '\n';
  for (std::size_t t = 0; t < support_vectors.size(); ++t) {
    out << csv::format_double(dual_coef[t]);
    const auto& v = support_vectors[t];
    for (std::size_t k = 0; k < v.index.size(); ++k) out << ' ' << v.index[k] << ':' << csv::format_double(v.value[k]);
    out << '\n';
  }
}

SvmModel SvmModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error(kModule, "cannot read " + path.string());
  auto bad = [&](const std::string& why) { return validation_error(kModule, path.string() + ": " + why); };
  std::string magic, key, kind;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw bad("not an SVM model file");
  if (version != kVersion) throw bad("unsupported version " + std::to_string(version));
  SvmModel m;
  if (!(in >> key >> kind) || key != "kernel") throw bad("expected kernel");
  if (kind == "linear") {
    m.kernel = Kernel::linear();
  } else if (kind == "rbf") {
    double g = 0.0;
    if (!(in >> g)) throw bad("expected gamma");
    m.kernel = Kernel::rbf(g);
  } else {
    throw bad("unknown kernel " + kind);
  }
  std::size_t n_sv = 0;
  if (!(in >> key >> m.C) || key != "C") throw bad("expected C");
  if (!(in >> key >> m.bias) || key != "bias") throw bad("expected bias");
  if (!(in >> key >> m.dim) || key != "dim") throw bad("expected dim");
  if (!(in >> key >> n_sv) || key != "sv") throw bad("expected sv");
  std::string line;
  std::getline(in, line);
  for (std::size_t t = 0; t < n_sv; ++t) {
    if (!std::getline(in, line)) throw bad("truncated support vectors");
    std::istringstream row(line);
    double coef = 0.0;
    if (!(row >> coef)) throw bad("bad support vector row");
    DocVector v;
    v.dim = m.dim;
    std::string cell;
    while (row >> cell) {
      const auto colon = cell.find(':');
      if (colon == std::string::npos) throw bad("bad sparse entry " + cell);
      v.index.push_back(static_cast<std::uint32_t>(std::stoul(cell.substr(0, colon))));
      v.value.push_back(std::stod(cell.substr(colon + 1)));
    }
    m.dual_coef.push_back(coef);
    m.support_vectors.push_back(std::move(v));
  }
  return m;
}

}  // namespace flusense::classifier
