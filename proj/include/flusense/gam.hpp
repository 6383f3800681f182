#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flusense/corpus.hpp"

namespace flusense::gam {

/// Cubic B-spline basis on [min x, max x] with interior knots at quantiles of
/// x, and the exact integrated-squared-second-derivative penalty. The penalty
/// null space is the linear functions.
class SplineBasis {
 public:
  /// Needs k >= 4 and at least k distinct values of x.
  static SplineBasis build(const std::vector<double>& x, std::size_t k);

  std::size_t dimension() const { return k_; }
  /// Distinct breakpoints: lower bound, interior knots, upper bound.
  const std::vector<double>& knots() const { return breaks_; }
  const Eigen::MatrixXd& penalty() const { return penalty_; }

  /// Row of basis values at x; x is clamped into the knot range.
  Eigen::RowVectorXd evaluate(double x) const;
  Eigen::MatrixXd evaluate(const std::vector<double>& x) const;
  /// d-th derivative of every basis function at x (d <= 3).
  Eigen::RowVectorXd derivative(double x, int d) const;
  /// Coefficients c with sum_i c_i B_i(x) = a + b x.
  Eigen::VectorXd linear_coefficients(double a, double b) const;

 private:
  std::size_t k_ = 0;
  std::vector<double> breaks_;
  std::vector<double> knots_;  // full clamped knot vector, size k + 4
  Eigen::MatrixXd penalty_;
};

// Negative-binomial log-likelihood pieces, NB2 parameterisation:
// Var(y) = mu + mu^2 / kappa.
double nb_loglik(double y, double mu, double kappa);
double nb_deviance(double y, double mu, double kappa);
double nb_deviance(const std::vector<double>& y, const std::vector<double>& mu, double kappa);
/// d loglik / d eta under the log link.
double nb_score(double y, double mu, double kappa);
/// -d^2 loglik / d eta^2 (observed information), the PIRLS working weight.
double nb_working_weight(double y, double mu, double kappa);

/// Response plus covariates for one fit: an optional smooth term and any
/// number of linear terms. An intercept is always included.
struct GamProblem {
  std::vector<double> y;
  std::optional<std::vector<double>> smooth_x;
  std::vector<std::vector<double>> linear;
};

struct FitOptions {
  std::size_t k = 10;
  std::optional<double> lambda;  // chosen by GCV when absent
  std::optional<double> kappa;   // profile likelihood when absent
  std::size_t max_iterations = 200;
  double tolerance = 1e-8;
  double kappa_min = 1e-2;
  double kappa_max = 1e8;
};

struct GamMetrics {
  double deviance_explained = 0.0;
  double rmse = 0.0;
  double aic = 0.0;
};

struct GamFit {
  double beta0 = 0.0;
  Eigen::VectorXd spline_coef;     // k coefficients on the B-spline basis (empty without a smooth)
  std::vector<double> linear_coef; // one per linear covariate
  double kappa = 0.0;
  double lambda = 0.0;             // multiplies the normalised penalty
  double edf = 0.0;
  std::vector<double> observed;
  std::vector<double> fitted;      // mu_t
  std::vector<double> residuals;   // y_t - mu_t
  std::vector<double> smooth;      // centred s(x_t); empty without a smooth
  double loglik = 0.0;
  double deviance = 0.0;
  double null_deviance = 0.0;
  GamMetrics metrics;

  std::vector<double> pirls_trace;  // penalised log-likelihood per accepted PIRLS iterate, final (kappa, lambda)
  double gradient_max_norm = 0.0;   // penalised score at convergence
  std::size_t iterations = 0;
  std::optional<SplineBasis> basis;

  /// Smooth evaluated at x; sums to zero over the fitted covariate values.
  double smooth_at(double x) const;
};

/// Penalised IRLS (Newton weights, step halving) for the NB model with log
/// link. lambda by GCV, kappa by golden-section search on the profile
/// likelihood, alternated until both settle.
GamFit fit_gam(const GamProblem& problem, const FitOptions& options = {});

/// (null - model) / null deviance with the null model's fitted means and the
/// model's kappa.
double deviance_explained(const GamFit& model, const GamFit& null_model);
double deviance_explained(const GamFit& model);
/// sqrt(mean((log y - log mu)^2)); throws on nonpositive observations.
double rmse(const GamFit& fit);
double aic(const GamFit& fit);

enum class ModelSpec { LagOnly, SmoothOnly, SmoothLag, AdjustedSmoothLag };
std::string_view to_string(ModelSpec s);
/// N1..N4 / S1..S4.
std::string model_code(corpus::Region region, ModelSpec spec);

inline constexpr std::size_t kLag = 2;

/// Fits one model form on weeks 3..n (the first kLag weeks have no lag value).
GamFit fit_nbgam(const corpus::WeeklySeries& series, ModelSpec spec, const FitOptions& options = {});

struct SuiteRow {
  corpus::Region region;
  ModelSpec spec;
  std::string code;
  std::vector<corpus::IsoWeek> weeks;
  GamFit fit;
};

/// Four model forms per region, north first.
std::vector<SuiteRow> run_model_suite(const corpus::WeeklySeries& north, const corpus::WeeklySeries& south,
                                      const FitOptions& options = {});

/// `region,spec,deviance_explained,rmse,aic,edf,kappa,lambda`
void write_suite_csv(const std::filesystem::path& path, const std::vector<SuiteRow>& rows);
/// `week,observed,fitted`
void write_fitted_csv(const std::filesystem::path& path, const SuiteRow& row);

}  // namespace flusense::gam
