#include "flusense/gam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "flusense/csv.hpp"
#include "flusense/error.hpp"

namespace flusense::gam {

namespace {

constexpr const char* kModule = "gam";
constexpr int kDegree = 3;

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cox-de Boor: all basis functions of the given degree at x.
std::vector<double> bspline_basis(const std::vector<double>& t, int degree, double x) {
  const std::size_t m = t.size();
  // Degree 0 indicators; the right end of the range belongs to the last non-empty interval.
  std::vector<double> b(m - 1, 0.0);
  std::size_t last_nonempty = 0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (t[i] < t[i + 1]) last_nonempty = i;
  }
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (t[i] <= x && x < t[i + 1]) b[i] = 1.0;
  }
  if (x >= t[last_nonempty + 1]) b[last_nonempty] = 1.0;
  for (int p = 1; p <= degree; ++p) {
    std::vector<double> next(m - 1 - static_cast<std::size_t>(p), 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) {
      double v = 0.0;
      const double d1 = t[i + p] - t[i];
      const double d2 = t[i + p + 1] - t[i + 1];
      if (d1 > 0.0) v += (x - t[i]) / d1 * b[i];
      if (d2 > 0.0) v += (t[i + p + 1] - x) / d2 * b[i + 1];
      next[i] = v;
    }
    b = std::move(next);
  }
  return b;
}

// d-th derivative of every degree-p basis function at x.
std::vector<double> bspline_derivative(const std::vector<double>& t, int degree, int d, double x) {
  if (d == 0) return bspline_basis(t, degree, x);
  const auto lower = bspline_derivative(t, degree - 1, d - 1, x);
  std::vector<double> out(t.size() - 1 - static_cast<std::size_t>(degree), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = 0.0;
    const double d1 = t[i + degree] - t[i];
    const double d2 = t[i + degree + 1] - t[i + 1];
    if (d1 > 0.0) v += lower[i] / d1;
    if (d2 > 0.0) v -= lower[i + 1] / d2;
    out[i] = degree * v;
  }
  return out;
}

}  // namespace

SplineBasis SplineBasis::build(const std::vector<double>& x, std::size_t k) {
  if (k < 4) throw validation_error(kModule, "spline basis needs k >= 4");
  std::vector<double> distinct(x);
  for (double v : distinct) {
    if (!std::isfinite(v)) throw validation_error(kModule, "spline covariate has a non-finite value");
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < k) {
    throw validation_error(kModule, "spline basis of dimension " + std::to_string(k) + " needs at least " +
                                        std::to_string(k) + " distinct covariate values, got " +
                                        std::to_string(distinct.size()));
  }
  SplineBasis basis;
  basis.k_ = k;
  const std::size_t n_interior = k - 4;
  const double lo = distinct.front();
  const double hi = distinct.back();
  basis.breaks_.push_back(lo);
  for (std::size_t j = 1; j <= n_interior; ++j) {
    // Type-7 quantile of the distinct values.
    const double p = static_cast<double>(j) / static_cast<double>(n_interior + 1);
    const double h = p * static_cast<double>(distinct.size() - 1);
    const auto f = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(f);
    basis.breaks_.push_back(f + 1 < distinct.size() ? distinct[f] + frac * (distinct[f + 1] - distinct[f]) : distinct[f]);
  }
  basis.breaks_.push_back(hi);
  for (std::size_t i = 1; i < basis.breaks_.size(); ++i) {
    if (!(basis.breaks_[i] > basis.breaks_[i - 1])) throw runtime_error(kModule, "spline knots not increasing");
  }

  basis.knots_.assign(kDegree + 1, lo);
  basis.knots_.insert(basis.knots_.end(), basis.breaks_.begin() + 1, basis.breaks_.end() - 1);
  basis.knots_.insert(basis.knots_.end(), kDegree + 1, hi);

  // Second derivatives are piecewise linear, so two-point Gauss-Legendre per
  // interval integrates the products exactly.
  basis.penalty_ = MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  const double g = 1.0 / std::sqrt(3.0);
  for (std::size_t s = 0; s + 1 < basis.breaks_.size(); ++s) {
    const double a = basis.breaks_[s], b = basis.breaks_[s + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (double node : {mid - half * g, mid + half * g}) {
      const auto d2 = basis.derivative(node, 2);
      basis.penalty_.noalias() += half * d2.transpose() * d2;
    }
  }
  basis.penalty_ = 0.5 * (basis.penalty_ + basis.penalty_.transpose());
  return basis;
}

Eigen::RowVectorXd SplineBasis::evaluate(double x) const { return derivative(x, 0); }

Eigen::MatrixXd SplineBasis::evaluate(const std::vector<double>& x) const {
  MatrixXd out(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(k_));
  for (std::size_t i = 0; i < x.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = evaluate(x[i]);
  return out;
}

Eigen::RowVectorXd SplineBasis::derivative(double x, int d) const {
  if (d < 0 || d > kDegree) throw validation_error(kModule, "derivative order must be 0..3");
  x = std::clamp(x, breaks_.front(), breaks_.back());
  const auto v = bspline_derivative(knots_, kDegree, d, x);
  Eigen::RowVectorXd out(static_cast<Eigen::Index>(k_));
  for (std::size_t i = 0; i < k_; ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

Eigen::VectorXd SplineBasis::linear_coefficients(double a, double b) const {
  VectorXd c(static_cast<Eigen::Index>(k_));
  for (std::size_t i = 0; i < k_; ++i) {
    const double greville = (knots_[i + 1] + knots_[i + 2] + knots_[i + 3]) / 3.0;
    c(static_cast<Eigen::Index>(i)) = a + b * greville;
  }
  return c;
}

double nb_loglik(double y, double mu, double kappa) {
  return std::lgamma(y + kappa) - std::lgamma(kappa) - std::lgamma(y + 1.0) + kappa * std::log(kappa / (kappa + mu)) +
         (y > 0.0 ? y * std::log(mu / (kappa + mu)) : 0.0);
}

double nb_deviance(double y, double mu, double kappa) {
  // 2 [y log(y/mu) - (y + kappa) log((y + kappa)/(mu + kappa))], log1p keeps
  // the large-kappa limit accurate.
  const double first = y > 0.0 ? y * std::log(y / mu) : 0.0;
  const double second = (y + kappa) * std::log1p((y - mu) / (mu + kappa));
  return std::max(0.0, 2.0 * (first - second));
}

double nb_deviance(const std::vector<double>& y, const std::vector<double>& mu, double kappa) {
  if (y.size() != mu.size()) throw validation_error(kModule, "deviance: length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) d += nb_deviance(y[i], mu[i], kappa);
  return d;
}

double nb_score(double y, double mu, double kappa) { return (y - mu) / (1.0 + mu / kappa); }

double nb_working_weight(double y, double mu, double kappa) {
  const double r = 1.0 + mu / kappa;
  return mu * (1.0 + y / kappa) / (r * r);
}

namespace {

struct Design {
  MatrixXd X;        // intercept | smooth (k-1 constrained columns) | linear
  MatrixXd S;        // penalty, zero outside the smooth block
  MatrixXd Z;        // k x (k-1) sum-to-zero constraint
  Eigen::Index smooth_cols = 0;
  std::optional<SplineBasis> basis;
};

Design make_design(const GamProblem& problem, std::size_t k) {
  const auto n = static_cast<Eigen::Index>(problem.y.size());
  Design d;
  MatrixXd Xs;
  if (problem.smooth_x) {
    if (problem.smooth_x->size() != problem.y.size()) throw validation_error(kModule, "smooth covariate length mismatch");
    d.basis = SplineBasis::build(*problem.smooth_x, k);
    const MatrixXd B = d.basis->evaluate(*problem.smooth_x);
    // Null space of the column sums.
    const VectorXd c = B.colwise().sum().transpose();
    Eigen::HouseholderQR<MatrixXd> qr(c);
    const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(c.size(), c.size());
    d.Z = Q.rightCols(c.size() - 1);
    Xs = B * d.Z;
    d.smooth_cols = Xs.cols();
  }
  const auto p_lin = static_cast<Eigen::Index>(problem.linear.size());
  const Eigen::Index p = 1 + d.smooth_cols + p_lin;
  d.X.resize(n, p);
  d.X.col(0).setOnes();
  if (d.smooth_cols > 0) d.X.middleCols(1, d.smooth_cols) = Xs;
  for (Eigen::Index j = 0; j < p_lin; ++j) {
    const auto& col = problem.linear[static_cast<std::size_t>(j)];
    if (col.size() != problem.y.size()) throw validation_error(kModule, "linear covariate length mismatch");
    for (Eigen::Index i = 0; i < n; ++i) d.X(i, 1 + d.smooth_cols + j) = col[static_cast<std::size_t>(i)];
  }
  d.S = MatrixXd::Zero(p, p);
  if (d.smooth_cols > 0) {
    MatrixXd Ss = d.Z.transpose() * d.basis->penalty() * d.Z;
    // Normalise so lambda = 1 balances penalty and data for the smooth block.
    const double scale = (Xs.transpose() * Xs).norm() / Ss.norm();
    d.S.block(1, 1, d.smooth_cols, d.smooth_cols) = scale * 0.5 * (Ss + Ss.transpose());
  }
  return d;
}

struct PirlsResult {
  VectorXd beta;
  VectorXd eta;
  double penalized = 0.0;
  double loglik = 0.0;
  std::vector<double> trace;
  std::size_t iterations = 0;
};

class Solver {
 public:
  Solver(const Design& design, const std::vector<double>& y, const FitOptions& options)
      : d_(design), y_(y), opt_(options) {
    y_mean_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  }

  double loglik(const VectorXd& eta, double kappa) const {
    double l = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) l += nb_loglik(y_[static_cast<std::size_t>(i)], std::exp(eta(i)), kappa);
    return l;
  }

  double penalized(const VectorXd& beta, const VectorXd& eta, double kappa, double lambda) const {
    return loglik(eta, kappa) - 0.5 * lambda * beta.dot(d_.S * beta);
  }

  VectorXd initial_beta(double lambda) const {
    const auto n = static_cast<Eigen::Index>(y_.size());
    VectorXd w(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = 0.5 * (y_[static_cast<std::size_t>(i)] + y_mean_);
      w(i) = mu;
      z(i) = std::log(mu);
    }
    return solve(w, z, lambda);
  }

  VectorXd solve(const VectorXd& w, const VectorXd& z, double lambda) const {
    const MatrixXd XtW = d_.X.transpose() * w.asDiagonal();
    MatrixXd H = XtW * d_.X + lambda * d_.S;
    const VectorXd rhs = XtW * z;
    Eigen::LDLT<MatrixXd> ldlt(H);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      VectorXd b = ldlt.solve(rhs);
      if (b.allFinite()) return b;
    }
    // Rank-deficient system: minimum-norm solution.
    return H.completeOrthogonalDecomposition().solve(rhs);
  }

  PirlsResult pirls(double kappa, double lambda, const std::optional<VectorXd>& start) const {
    PirlsResult r;
    r.beta = start ? *start : initial_beta(lambda);
    r.eta = d_.X * r.beta;
    r.penalized = penalized(r.beta, r.eta, kappa, lambda);
    r.trace.push_back(r.penalized);
    const auto n = r.eta.size();
    bool converged = false;
    bool polished = false;
    for (std::size_t it = 0; it < opt_.max_iterations; ++it) {
      VectorXd w(n), z(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = std::exp(r.eta(i));
        const double yi = y_[static_cast<std::size_t>(i)];
        w(i) = nb_working_weight(yi, mu, kappa);
        z(i) = r.eta(i) + nb_score(yi, mu, kappa) / w(i);
      }
      VectorXd beta_new = solve(w, z, lambda);
      VectorXd eta_new = d_.X * beta_new;
      double pl_new = penalized(beta_new, eta_new, kappa, lambda);
      int halvings = 0;
      while (!(pl_new >= r.penalized) && halvings < 50) {
        beta_new = 0.5 * (beta_new + r.beta);
        eta_new = d_.X * beta_new;
        pl_new = penalized(beta_new, eta_new, kappa, lambda);
        ++halvings;
      }
      ++r.iterations;
      if (!(pl_new >= r.penalized)) {
        // No ascent direction left at machine precision.
        converged = true;
        break;
      }
      const double change = (beta_new - r.beta).lpNorm<Eigen::Infinity>();
      const double scale = std::max(1.0, beta_new.lpNorm<Eigen::Infinity>());
      r.beta = std::move(beta_new);
      r.eta = std::move(eta_new);
      r.penalized = pl_new;
      r.trace.push_back(pl_new);
      if (change < opt_.tolerance * scale) {
        // One further Newton step drives the score to rounding level.
        if (polished) {
          converged = true;
          break;
        }
        polished = true;
      }
    }
    if (!converged && !polished) {
      std::ostringstream msg;
      msg << "PIRLS did not converge in " << opt_.max_iterations << " iterations (kappa " << kappa << ", lambda "
          << lambda << "); penalised log-likelihood trace:";
      const std::size_t from = r.trace.size() > 5 ? r.trace.size() - 5 : 0;
      for (std::size_t i = from; i < r.trace.size(); ++i) msg << ' ' << r.trace[i];
      throw runtime_error(kModule, msg.str());
    }
    r.loglik = loglik(r.eta, kappa);
    return r;
  }

  // edf and GCV score at a converged fit.
  std::pair<double, double> edf_gcv(const PirlsResult& r, double kappa, double lambda) const {
    const auto n = r.eta.size();
    VectorXd w(n), z(n);
    double rss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = std::exp(r.eta(i));
      const double yi = y_[static_cast<std::size_t>(i)];
      w(i) = nb_working_weight(yi, mu, kappa);
      const double resid = nb_score(yi, mu, kappa) / w(i);
      rss += w(i) * resid * resid;
    }
    const MatrixXd XtWX = d_.X.transpose() * w.asDiagonal() * d_.X;
    const MatrixXd H = XtWX + lambda * d_.S;
    const double edf = H.completeOrthogonalDecomposition().solve(XtWX).trace();
    const double denom = static_cast<double>(n) - edf;
    const double gcv = denom > 0.0 ? static_cast<double>(n) * rss / (denom * denom)
                                   : std::numeric_limits<double>::infinity();
    return {edf, gcv};
  }

  double select_lambda(double kappa) const {
    auto score = [&](double log10_lambda) {
      const double lambda = std::pow(10.0, log10_lambda);
      const auto r = pirls(kappa, lambda, std::nullopt);
      return edf_gcv(r, kappa, lambda).second;
    };
    double best_u = -6.0, best = std::numeric_limits<double>::infinity();
    for (double u = -6.0; u <= 8.0 + 1e-9; u += 0.5) {
      const double s = score(u);
      if (s < best) {
        best = s;
        best_u = u;
      }
    }
    const double u = golden_min(score, best_u - 0.5, best_u + 0.5, 40);
    return std::pow(10.0, score(u) <= best ? u : best_u);
  }

  double select_kappa(double lambda) const {
    auto neg_profile = [&](double log_kappa) {
      const double kappa = std::exp(log_kappa);
      return -pirls(kappa, lambda, std::nullopt).loglik;
    };
    const double lo = std::log(opt_.kappa_min), hi = std::log(opt_.kappa_max);
    // Coarse scan first so golden section starts inside the right bracket.
    double best_u = lo, best = std::numeric_limits<double>::infinity();
    const int steps = 24;
    for (int s = 0; s <= steps; ++s) {
      const double u = lo + (hi - lo) * s / steps;
      const double v = neg_profile(u);
      if (v < best) {
        best = v;
        best_u = u;
      }
    }
    const double step = (hi - lo) / steps;
    const double u = golden_min(neg_profile, std::max(lo, best_u - step), std::min(hi, best_u + step), 60);
    return std::exp(neg_profile(u) <= best ? u : best_u);
  }

  template <typename F>
  static double golden_min(F&& f, double a, double b, int iterations) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iterations; ++i) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = f(d);
      }
    }
    return fc <= fd ? c : d;
  }

  double moment_kappa() const {
    // Overdispersion of the data around its mean; crude start only.
    double num = 0.0, den = 0.0;
    for (double yi : y_) {
      num += y_mean_ * y_mean_;
      den += (yi - y_mean_) * (yi - y_mean_) - y_mean_;
    }
    if (!(den > 0.0)) return opt_.kappa_max;
    return std::clamp(num / den, opt_.kappa_min, opt_.kappa_max);
  }

 private:
  const Design& d_;
  const std::vector<double>& y_;
  const FitOptions& opt_;
  double y_mean_ = 0.0;
};

}  // namespace

double GamFit::smooth_at(double x) const {
  if (!basis) return 0.0;
  return basis->evaluate(x).dot(spline_coef);
}

GamFit fit_gam(const GamProblem& problem, const FitOptions& options) {
  const auto& y = problem.y;
  if (y.empty()) throw validation_error(kModule, "empty response");
  bool any_positive = false;
  for (double v : y) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw validation_error(kModule, "response must be finite and nonnegative");
    if (v > 0.0) any_positive = true;
  }
  if (!any_positive) throw validation_error(kModule, "response is identically zero");
  const std::size_t p_expected = 1 + (problem.smooth_x ? options.k - 1 : 0) + problem.linear.size();
  if (y.size() < p_expected + 1) throw validation_error(kModule, "too few observations for the model");
  if (options.lambda && !(*options.lambda >= 0.0)) throw validation_error(kModule, "lambda must be nonnegative");
  if (options.kappa && !(*options.kappa > 0.0)) throw validation_error(kModule, "kappa must be positive");

  const Design design = make_design(problem, options.k);
  const Solver solver(design, y, options);
  const bool has_smooth = design.smooth_cols > 0;

  double kappa = options.kappa ? *options.kappa : solver.moment_kappa();
  double lambda = has_smooth ? (options.lambda ? *options.lambda : 1.0) : 0.0;
  if (!options.kappa || (has_smooth && !options.lambda)) {
    for (int round = 0; round < 20; ++round) {
      const double old_kappa = kappa, old_lambda = lambda;
      if (has_smooth && !options.lambda) lambda = solver.select_lambda(kappa);
      if (!options.kappa) kappa = solver.select_kappa(lambda);
      const bool kappa_settled = std::fabs(std::log(kappa) - std::log(old_kappa)) < 1e-6;
      const bool lambda_settled =
          !has_smooth || options.lambda || std::fabs(std::log(lambda) - std::log(old_lambda)) < 1e-6;
      if (round > 0 && kappa_settled && lambda_settled) break;
      if (options.kappa && !has_smooth) break;
    }
  }

  const auto r = solver.pirls(kappa, lambda, std::nullopt);
  const auto [edf, gcv] = solver.edf_gcv(r, kappa, lambda);
  (void)gcv;

  GamFit fit;
  fit.kappa = kappa;
  fit.lambda = lambda;
  fit.edf = edf;
  fit.beta0 = r.beta(0);
  if (has_smooth) {
    fit.spline_coef = design.Z * r.beta.segment(1, design.smooth_cols);
    fit.basis = design.basis;
  }
  for (std::size_t j = 0; j < problem.linear.size(); ++j) {
    fit.linear_coef.push_back(r.beta(1 + design.smooth_cols + static_cast<Eigen::Index>(j)));
  }
  fit.observed = y;
  const auto n = static_cast<Eigen::Index>(y.size());
  VectorXd score(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = std::exp(r.eta(i));
    fit.fitted.push_back(mu);
    fit.residuals.push_back(y[static_cast<std::size_t>(i)] - mu);
    score(i) = nb_score(y[static_cast<std::size_t>(i)], mu, kappa);
  }
  if (has_smooth) {
    const VectorXd s = design.X.middleCols(1, design.smooth_cols) * r.beta.segment(1, design.smooth_cols);
    fit.smooth.assign(s.data(), s.data() + s.size());
  }
  fit.gradient_max_norm = (design.X.transpose() * score - lambda * design.S * r.beta).lpNorm<Eigen::Infinity>();
  fit.loglik = r.loglik;
  fit.deviance = nb_deviance(y, fit.fitted, kappa);
  const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  fit.null_deviance = nb_deviance(y, std::vector<double>(y.size(), y_mean), kappa);
  fit.pirls_trace = r.trace;
  fit.iterations = r.iterations;

  fit.metrics.deviance_explained =
      fit.null_deviance > 0.0 ? (fit.null_deviance - fit.deviance) / fit.null_deviance : 0.0;
  fit.metrics.aic = aic(fit);
  const bool all_positive = std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; });
  fit.metrics.rmse = all_positive ? rmse(fit) : std::numeric_limits<double>::quiet_NaN();
  return fit;
}

double deviance_explained(const GamFit& model, const GamFit& null_model) {
  if (model.observed != null_model.observed) throw validation_error(kModule, "fits have different responses");
  const double dev_null = nb_deviance(null_model.observed, null_model.fitted, model.kappa);
  if (dev_null == 0.0) throw validation_error(kModule, "null deviance is zero");
  return (dev_null - nb_deviance(model.observed, model.fitted, model.kappa)) / dev_null;
}

double deviance_explained(const GamFit& model) {
  if (model.null_deviance == 0.0) throw validation_error(kModule, "null deviance is zero");
  return (model.null_deviance - model.deviance) / model.null_deviance;
}

double rmse(const GamFit& fit) {
  if (fit.observed.empty()) throw validation_error(kModule, "rmse of an empty fit");
  double s = 0.0;
  for (std::size_t i = 0; i < fit.observed.size(); ++i) {
    if (!(fit.observed[i] > 0.0)) throw validation_error(kModule, "rmse needs positive observations");
    const double d = std::log(fit.observed[i]) - std::log(fit.fitted[i]);
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(fit.observed.size()));
}

double aic(const GamFit& fit) { return -2.0 * fit.loglik + 2.0 * (fit.edf + 1.0); }

std::string_view to_string(ModelSpec s) {
  switch (s) {
    case ModelSpec::LagOnly: return "LagOnly";
    case ModelSpec::SmoothOnly: return "SmoothOnly";
    case ModelSpec::SmoothLag: return "Smooth+Lag";
    case ModelSpec::AdjustedSmoothLag: return "AdjustedSmooth+Lag";
  }
  return "?";
}

std::string model_code(corpus::Region region, ModelSpec spec) {
  return std::string(region == corpus::Region::North ? "N" : "S") + std::to_string(static_cast<int>(spec) + 1);
}

GamFit fit_nbgam(const corpus::WeeklySeries& series, ModelSpec spec, const FitOptions& options) {
  series.validate();
  const std::size_t n = series.size();
  if (n < kLag || n - kLag < options.k + 5) {
    throw validation_error(kModule, "series too short: " + std::to_string(n > kLag ? n - kLag : 0) +
                                        " usable weeks, need at least " + std::to_string(options.k + 5));
  }
  if (spec == ModelSpec::AdjustedSmoothLag && !series.adjusted_irt) {
    throw validation_error(kModule, "adjusted IRT has not been computed");
  }
  GamProblem problem;
  std::vector<double> lag, covariate;
  for (std::size_t t = kLag; t < n; ++t) {
    problem.y.push_back(series.ili[t]);
    lag.push_back(series.ili[t - kLag]);
    const auto count = spec == ModelSpec::AdjustedSmoothLag ? (*series.adjusted_irt)[t] : series.irt[t];
    covariate.push_back(static_cast<double>(count));
  }
  if (spec != ModelSpec::LagOnly) problem.smooth_x = std::move(covariate);
  if (spec != ModelSpec::SmoothOnly) problem.linear.push_back(std::move(lag));
  return fit_gam(problem, options);
}

std::vector<SuiteRow> run_model_suite(const corpus::WeeklySeries& north, const corpus::WeeklySeries& south,
                                      const FitOptions& options) {
  std::vector<SuiteRow> rows;
  for (const auto* series : {&north, &south}) {
    for (auto spec : {ModelSpec::LagOnly, ModelSpec::SmoothOnly, ModelSpec::SmoothLag, ModelSpec::AdjustedSmoothLag}) {
      SuiteRow row{series->region, spec, model_code(series->region, spec), {}, {}};
      row.weeks.assign(series->weeks.begin() + static_cast<std::ptrdiff_t>(std::min(kLag, series->weeks.size())),
                       series->weeks.end());
      row.fit = fit_nbgam(*series, spec, options);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_suite_csv(const std::filesystem::path& path, const std::vector<SuiteRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error(kModule, "cannot write " + path.string());
  out << "region,spec,deviance_explained,rmse,aic,edf,kappa,lambda\n";
  for (const auto& r : rows) {
    out << csv::join({std::string(corpus::to_string(r.region)), std::string(to_string(r.spec)),
                      csv::format_double(r.fit.metrics.deviance_explained), csv::format_double(r.fit.metrics.rmse),
                      csv::format_double(r.fit.metrics.aic), csv::format_double(r.fit.edf),
                      csv::format_double(r.fit.kappa), csv::format_double(r.fit.lambda)})
        << '\n';
  }
}

void write_fitted_csv(const std::filesystem::path& path, const SuiteRow& row) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error(kModule, "cannot write " + path.string());
  out << "week,observed,fitted\n";
  for (std::size_t i = 0; i < row.fit.observed.size(); ++i) {
    out << row.weeks.at(i).to_string() << ',' << csv::format_double(row.fit.observed[i]) << ','
        << csv::format_double(row.fit.fitted[i]) << '\n';
  }
}

}  // namespace flusense::gam
