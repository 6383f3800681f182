#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "flusense/analytics.hpp"
#include "flusense/error.hpp"
#include "flusense/gam.hpp"
#include "oracles.hpp"
#include "simulate.hpp"
#include "support.hpp"

using namespace flusense;
using namespace flusense::gam;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Least-squares line through (x, s); returns {intercept, slope, max abs residual}.
std::array<double, 3> line_fit(const std::vector<double>& x, const std::vector<double>& s) {
  const double n = static_cast<double>(x.size());
  double mx = 0, ms = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, ms += s[i] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (s[i] - ms), sxx += (x[i] - mx) * (x[i] - mx);
  const double b = sxy / sxx, a = ms - b * mx;
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(s[i] - a - b * x[i]));
  return {a, b, worst};
}

GamProblem smooth_problem(std::uint64_t seed, std::size_t n = 80) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  GamProblem p;
  std::vector<double> x;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = u(rng);
    x.push_back(xi);
    p.y.push_back(sim::nb_draw(rng, std::exp(2.0 + 0.6 * std::sin(xi)), 8.0));
  }
  p.smooth_x = x;
  return p;
}

}  // namespace

TEST_CASE("spline basis") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  std::vector<double> x(60);
  for (auto& v : x) v = u(rng);

  for (std::size_t k : {4, 6, 8, 10, 15}) {
    const auto b = SplineBasis::build(x, k);
    CHECK(b.dimension() == k);
    const auto& knots = b.knots();
    for (std::size_t i = 1; i < knots.size(); ++i) CHECK(knots[i] > knots[i - 1]);
    CHECK(knots.front() == *std::min_element(x.begin(), x.end()));
    CHECK(knots.back() == *std::max_element(x.begin(), x.end()));

    const auto& S = b.penalty();
    CHECK((S - S.transpose()).cwiseAbs().maxCoeff() < 1e-12 * S.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, S.cwiseAbs().maxCoeff()));

    const auto lin = b.linear_coefficients(1.5, -0.7);
    CHECK(std::abs(lin.dot(S * lin)) < 1e-8);
    for (double xi : x) CHECK(b.evaluate(xi).dot(lin) == doctest::Approx(1.5 - 0.7 * xi).epsilon(1e-10));

    for (double xi : x) CHECK(b.evaluate(xi).sum() == doctest::Approx(1.0).epsilon(1e-12));

    if (k >= 6) {
      const Eigen::MatrixXd B = b.evaluate(x);
      Eigen::VectorXd target(static_cast<Eigen::Index>(x.size()));
      for (std::size_t i = 0; i < x.size(); ++i) target(static_cast<Eigen::Index>(i)) = 0.3 * std::pow(x[i], 3) - x[i] * x[i] + 2.0;
      const Eigen::VectorXd c = B.colPivHouseholderQr().solve(target);
      CHECK((B * c - target).cwiseAbs().maxCoeff() < 1e-6);
    }

    // Derivatives against central differences.
    const double h = 1e-5;
    for (double xi : {-1.3, 0.2, 1.7, 2.4}) {
      for (int d = 1; d <= 2; ++d) {
        const Eigen::RowVectorXd num = (b.derivative(xi + h, d - 1) - b.derivative(xi - h, d - 1)) / (2 * h);
        CHECK((b.derivative(xi, d) - num).cwiseAbs().maxCoeff() < 1e-4 * std::max(1.0, num.cwiseAbs().maxCoeff()));
      }
    }
  }
  CHECK_THROWS_AS(SplineBasis::build({1, 2, 3, 1, 2, 3, 1, 2}, 5), Error);
  CHECK_THROWS_AS(SplineBasis::build(x, 3), Error);
}

TEST_CASE("negative binomial pieces") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> mu_d(0.2, 80.0), kappa_d(0.3, 50.0);
  std::poisson_distribution<int> y_d(12);
  for (int t = 0; t < 300; ++t) {
    const double y = y_d(rng), mu = mu_d(rng), kappa = kappa_d(rng);
    const double h = 1e-4;
    auto ll_eta = [&](double eta) { return nb_loglik(y, std::exp(eta), kappa); };
    const double eta = std::log(mu);
    const double d1 = (ll_eta(eta + h) - ll_eta(eta - h)) / (2 * h);
    const double d2 = (ll_eta(eta + h) - 2 * ll_eta(eta) + ll_eta(eta - h)) / (h * h);
    CHECK(nb_score(y, mu, kappa) == doctest::Approx(d1).epsilon(1e-4));
    CHECK(nb_working_weight(y, mu, kappa) == doctest::Approx(-d2).epsilon(1e-4).scale(1e-3));
    CHECK(nb_deviance(y, mu, kappa) >= -1e-12);
    CHECK(nb_deviance(y, std::max(y, 1e-300), kappa) == doctest::Approx(0.0).scale(1e-9));
    // Deviance is twice the log-likelihood gap to the saturated model.
    if (y > 0) {
      CHECK(nb_deviance(y, mu, kappa) ==
            doctest::Approx(2.0 * (nb_loglik(y, y, kappa) - nb_loglik(y, mu, kappa))).epsilon(1e-8));
    }
  }
}

TEST_CASE("NB deviance tends to the Poisson deviance") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> y, mu;
    std::poisson_distribution<int> p(15);
    std::uniform_real_distribution<double> m(5.0, 30.0);
    for (int i = 0; i < 40; ++i) {
      y.push_back(p(rng));
      mu.push_back(m(rng));
    }
    const double poisson = oracle::poisson_deviance(y, mu);
    CHECK(std::abs(nb_deviance(y, mu, 1e8) - poisson) / poisson < 1e-4);
  }
}

TEST_CASE("recovering a linear smooth from simulated NB data") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  GamProblem p;
  std::vector<double> z;
  for (int i = 0; i < 200; ++i) {
    const double zi = g(rng);
    z.push_back(zi);
    p.y.push_back(sim::nb_draw(rng, std::exp(1.0 + 0.5 * zi), 10.0));
  }
  p.smooth_x = z;
  const auto fit = fit_gam(p);
  const auto [a, slope, worst] = line_fit(z, fit.smooth);
  (void)a;
  (void)worst;
  CHECK(std::abs(slope - 0.5) <= 0.05);

  GamProblem generating;
  generating.y = p.y;
  generating.linear = {z};
  const auto ref = fit_gam(generating);
  CHECK(fit.metrics.deviance_explained >= 0.9 * ref.metrics.deviance_explained);
  CHECK(ref.linear_coef[0] == doctest::Approx(0.5).epsilon(0.1));
  CHECK(ref.metrics.aic < fit_gam({p.y, std::nullopt, {}}).metrics.aic);
}

TEST_CASE("a very large lambda leaves a linear smooth") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = smooth_problem(seed);
    FitOptions o;
    o.lambda = 1e12;
    const auto fit = fit_gam(p, o);
    CHECK(line_fit(*p.smooth_x, fit.smooth)[2] < 1e-4);
  }
}

TEST_CASE("intercept-only fit on a constant response") {
  GamProblem p;
  p.y.assign(30, 7.0);
  const auto fit = fit_gam(p);
  for (double mu : fit.fitted) CHECK(mu == doctest::Approx(7.0).epsilon(1e-10));
}

TEST_CASE("property: PIRLS monotone, score equations, edf monotone, invariants") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = smooth_problem(100 + seed);
    const auto fit = fit_gam(p);
    REQUIRE(!fit.pirls_trace.empty());
    for (std::size_t i = 1; i < fit.pirls_trace.size(); ++i) {
      CHECK(fit.pirls_trace[i] >= fit.pirls_trace[i - 1] - 1e-9 * std::abs(fit.pirls_trace[i - 1]));
    }
    CHECK(fit.gradient_max_norm < 1e-6);
    for (double mu : fit.fitted) CHECK(mu > 0.0);
    CHECK(fit.edf >= 1.0);
    CHECK(fit.edf <= 10.0 + 2.0);
    CHECK(fit.metrics.deviance_explained <= 1.0);
    CHECK(fit.kappa > 0.0);
    CHECK(fit.lambda >= 0.0);
    double centred = 0.0;
    for (double s : fit.smooth) centred += s;
    CHECK(std::abs(centred) < 1e-8 * static_cast<double>(fit.smooth.size()));
    CHECK(fit.smooth_at((*p.smooth_x)[3]) == doctest::Approx(fit.smooth[3]).epsilon(1e-9));
  }
  auto p = smooth_problem(7);
  double previous = 1e300;
  for (double log_lambda = -6; log_lambda <= 10; log_lambda += 1.0) {
    FitOptions o;
    o.lambda = std::pow(10.0, log_lambda);
    o.kappa = 8.0;
    const auto fit = fit_gam(p, o);
    CHECK(fit.edf <= previous + 1e-9);
    previous = fit.edf;
  }
  CHECK(previous == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("metrics") {
  GamFit f;
  f.observed = {2.0, 4.0, 8.0};
  f.fitted = f.observed;
  CHECK(rmse(f) == 0.0);
  for (auto& mu : f.fitted) mu *= std::exp(1.0);
  CHECK(rmse(f) == doctest::Approx(1.0).epsilon(1e-14));
  f.fitted = {1.0, 4.0, 16.0};
  CHECK(rmse(f) == doctest::Approx(std::sqrt((2.0 * std::log(2.0) * std::log(2.0)) / 3.0)));
  f.observed = {0.0, 1.0, 2.0};
  CHECK_THROWS_AS(rmse(f), Error);

  GamFit a, b;
  a.loglik = b.loglik = -50.0;
  a.edf = 3.0;
  b.edf = 5.0;
  CHECK(aic(a) < aic(b));
  CHECK(aic(a) == 100.0 + 8.0);

  const auto fit = fit_gam(smooth_problem(9));
  CHECK(deviance_explained(fit, fit) == 0.0);
  CHECK(deviance_explained(fit) == doctest::Approx(fit.metrics.deviance_explained));
  auto saturated = fit;
  saturated.fitted = fit.observed;
  GamProblem null_problem{fit.observed, std::nullopt, {}};
  const auto null_fit = fit_gam(null_problem);
  CHECK(deviance_explained(saturated, null_fit) == doctest::Approx(1.0));
  CHECK(deviance_explained(fit, null_fit) == doctest::Approx(fit.metrics.deviance_explained).epsilon(1e-6));
}

TEST_CASE("property: a pure-noise covariate does not buy AIC") {
  std::vector<double> gains;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = smooth_problem(200 + seed, 60);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> noise(p.y.size());
    for (auto& v : noise) v = g(rng);
    auto with_noise = p;
    with_noise.linear = {noise};
    gains.push_back(fit_gam(p).metrics.aic - fit_gam(with_noise).metrics.aic);
  }
  CHECK(median(gains) <= 2.0);
}

TEST_CASE("model suite") {
  auto north = sim::carry_forward_series(1, false);
  north.region = corpus::Region::North;
  auto south = sim::carry_forward_series(2, true);
  SUBCASE("eight rows, with an identity when PIRT is zero") {
    auto zero = north;
    std::fill(zero.pirt.begin(), zero.pirt.end(), 0);
    const auto rows = run_model_suite(analytics::adjust_irt(zero), analytics::adjust_irt(south));
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].code == "N1");
    CHECK(rows[7].code == "S4");
    CHECK(rows[2].fit.metrics.deviance_explained == rows[3].fit.metrics.deviance_explained);
    CHECK(rows[2].fit.metrics.aic == rows[3].fit.metrics.aic);
    CHECK(rows[2].fit.metrics.rmse == rows[3].fit.metrics.rmse);
    for (const auto& r : rows) CHECK(r.fit.observed.size() == north.size() - kLag);

    testing::TempDir dir;
    write_suite_csv(dir / "suite.csv", rows);
    const auto csv = testing::read_text(dir / "suite.csv");
    CHECK(csv.substr(0, csv.find('\n')) == "region,spec,deviance_explained,rmse,aic,edf,kappa,lambda");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
    write_fitted_csv(dir / "f.csv", rows[7]);
    const auto fitted = testing::read_text(dir / "f.csv");
    CHECK(fitted.rfind("week,observed,fitted\n2016-W06,", 0) == 0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(fit_nbgam(south, ModelSpec::AdjustedSmoothLag), Error);
    auto shorty = south;
    shorty.weeks.resize(10);
    shorty.irt.resize(10);
    shorty.pirt.resize(10);
    shorty.ili.resize(10);
    CHECK_THROWS_AS(fit_nbgam(shorty, ModelSpec::SmoothLag), Error);
  }
}

TEST_CASE("planted carry-forward favours the adjusted model") {
  std::vector<double> adjusted, plain;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = analytics::adjust_irt(sim::carry_forward_series(1000 + seed));
    plain.push_back(fit_nbgam(s, ModelSpec::SmoothLag).metrics.deviance_explained);
    adjusted.push_back(fit_nbgam(s, ModelSpec::AdjustedSmoothLag).metrics.deviance_explained);
  }
  MESSAGE("median deviance explained: Smooth+Lag " << median(plain) << ", adjusted " << median(adjusted));
  CHECK(median(adjusted) > median(plain));
}
