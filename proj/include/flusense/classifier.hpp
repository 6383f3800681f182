#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "flusense/corpus.hpp"
#include "flusense/features.hpp"

namespace flusense::classifier {

using features::DocVector;

enum class KernelType { Linear, Rbf };

struct Kernel {
  KernelType type = KernelType::Rbf;
  double gamma = 1.0;

  double operator()(const DocVector& a, const DocVector& b) const;
  static Kernel linear() { return {KernelType::Linear, 0.0}; }
  static Kernel rbf(double gamma) { return {KernelType::Rbf, gamma}; }
};

struct SvmParams {
  Kernel kernel = Kernel::rbf(1.0);
  double C = 1.0;
  double tol = 1e-3;
  std::size_t max_iterations = 100000;
};

struct SvmModel {
  Kernel kernel;
  double C = 1.0;
  double bias = 0.0;
  std::size_t dim = 0;
  std::vector<DocVector> support_vectors;
  std::vector<double> dual_coef;  // alpha_i * y_i

  void save(const std::filesystem::path& path) const;
  static SvmModel load(const std::filesystem::path& path);
};

struct TrainTrace {
  std::size_t iterations = 0;
  double final_gap = 0.0;               // max KKT violation at exit
  std::vector<double> dual_objective;   // maximisation form, one entry per iteration
};

/// SMO with maximal-violating-pair working-set selection (lowest index on ties).
/// Labels are +1 / -1. Throws on a single-class set, mismatched dimensions, or
/// when `max_iterations` pass without reaching `tol`.
SvmModel train_svm(const std::vector<DocVector>& vectors, const std::vector<int>& labels, const SvmParams& params,
                   TrainTrace* trace = nullptr);

double decision_value(const SvmModel& model, const DocVector& x);
/// sign of the decision value; zero maps to +1.
int predict(const SvmModel& model, const DocVector& x);

struct EvalReport {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> accuracy, precision, recall;  // absent when the ratio is 0/0
};

EvalReport make_report(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);
EvalReport evaluate(const SvmModel& model, const std::vector<DocVector>& vectors, const std::vector<int>& labels);

/// Labels each post Influenza or Noise from its `tokens`.
std::vector<corpus::Post> label_corpus(const SvmModel& model, const features::FeatureSpace& space,
                                       std::vector<corpus::Post> posts);

}  // namespace flusense::classifier
