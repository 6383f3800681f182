#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "flusense/classifier.hpp"
#include "flusense/corpus.hpp"
#include "flusense/error.hpp"
#include "flusense/text.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace flusense;
using namespace flusense::classifier;
using features::DocVector;

namespace {

std::vector<DocVector> to_docs(const std::vector<oracle::Point>& pts) {
  std::vector<DocVector> out;
  for (const auto& p : pts) out.push_back(DocVector::from_dense(p));
  return out;
}

void check_dual_feasible(const SvmModel& m) {
  CHECK(!m.support_vectors.empty());
  double sum = 0.0;
  for (double a : m.dual_coef) {
    CHECK(std::abs(a) <= m.C + 1e-12);
    sum += a;
  }
  CHECK(std::abs(sum) < 1e-9);
}

}  // namespace

TEST_CASE("two points on a line") {
  const auto x = to_docs({{-1.0}, {1.0}});
  SvmParams p;
  p.kernel = Kernel::linear();
  p.C = 1e3;
  const auto m = train_svm(x, {-1, 1}, p);
  CHECK(decision_value(m, DocVector::from_dense({0.0})) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(predict(m, DocVector::from_dense({0.5})) == 1);
  CHECK(predict(m, DocVector::from_dense({-0.5})) == -1);
  CHECK(decision_value(m, DocVector::from_dense({1.0})) == doctest::Approx(1.0));
  check_dual_feasible(m);
}

TEST_CASE("XOR with the RBF kernel") {
  const auto x = to_docs({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
  const std::vector<int> y{-1, -1, 1, 1};
  SvmParams p;
  p.kernel = Kernel::rbf(1.0);
  const auto m = train_svm(x, y, p);
  for (std::size_t i = 0; i < 4; ++i) CHECK(predict(m, x[i]) == y[i]);
  check_dual_feasible(m);
  CHECK(p.kernel(x[2], x[2]) == 1.0);
}

TEST_CASE("duplicating every point keeps the hard-margin decision function") {
  const std::vector<oracle::Point> pts{{0, 0}, {0.2, 0.9}, {1.5, 1.2}, {2.0, 0.1}, {0.1, 2.5}, {2.2, 2.0}};
  const std::vector<int> y{-1, -1, 1, 1, -1, 1};
  auto x = to_docs(pts);
  SvmParams p;
  p.kernel = Kernel::linear();
  p.C = 1e4;
  p.tol = 1e-9;
  const auto once = train_svm(x, y, p);
  auto x2 = x;
  x2.insert(x2.end(), x.begin(), x.end());
  auto y2 = y;
  y2.insert(y2.end(), y.begin(), y.end());
  const auto twice = train_svm(x2, y2, p);
  for (double a = -1; a <= 3; a += 0.5) {
    for (double b = -1; b <= 3; b += 0.5) {
      const auto probe = DocVector::from_dense({a, b});
      CHECK(decision_value(once, probe) == doctest::Approx(decision_value(twice, probe)).epsilon(1e-6));
    }
  }
}

TEST_CASE("decision function identities") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<oracle::Point> pts;
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    const int label = i % 2 ? 1 : -1;
    pts.push_back({g(rng) + label, g(rng) + 0.5 * label, g(rng)});
    y.push_back(label);
  }
  const auto x = to_docs(pts);

  SUBCASE("linear decision equals w.x + b") {
    SvmParams p;
    p.kernel = Kernel::linear();
    const auto m = train_svm(x, y, p);
    std::vector<double> w(3, 0.0);
    for (std::size_t s = 0; s < m.support_vectors.size(); ++s) {
      const auto d = m.support_vectors[s].to_dense();
      for (std::size_t i = 0; i < 3; ++i) w[i] += m.dual_coef[s] * d[i];
    }
    for (const auto& q : pts) {
      const double explicit_value = w[0] * q[0] + w[1] * q[1] + w[2] * q[2] + m.bias;
      CHECK(decision_value(m, DocVector::from_dense(q)) == doctest::Approx(explicit_value).epsilon(1e-9));
    }
  }
  SUBCASE("free support vectors sit on the margin") {
    SvmParams p;
    p.kernel = Kernel::rbf(0.5);
    p.tol = 1e-3;
    const auto m = train_svm(x, y, p);
    check_dual_feasible(m);
    for (std::size_t s = 0; s < m.support_vectors.size(); ++s) {
      const double a = std::abs(m.dual_coef[s]);
      if (a > 1e-6 && a < m.C - 1e-6) {
        const double label = m.dual_coef[s] > 0 ? 1.0 : -1.0;
        CHECK(std::abs(decision_value(m, m.support_vectors[s]) - label) < p.tol);
      }
    }
  }
  SUBCASE("dual objective never decreases") {
    TrainTrace trace;
    SvmParams p;
    p.kernel = Kernel::rbf(0.5);
    train_svm(x, y, p, &trace);
    REQUIRE(trace.dual_objective.size() == trace.iterations);
    for (std::size_t i = 1; i < trace.dual_objective.size(); ++i) {
      CHECK(trace.dual_objective[i] >= trace.dual_objective[i - 1] - 1e-12);
    }
    CHECK(trace.final_gap < p.tol);
  }
  SUBCASE("permuting the training order changes no prediction") {
    SvmParams p;
    p.kernel = Kernel::rbf(0.5);
    p.tol = 1e-8;
    const auto m = train_svm(x, y, p);
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<DocVector> xp;
    std::vector<int> yp;
    for (auto i : order) {
      xp.push_back(x[i]);
      yp.push_back(y[i]);
    }
    const auto mp = train_svm(xp, yp, p);
    for (int t = 0; t < 200; ++t) {
      const auto probe = DocVector::from_dense({2 * g(rng), 2 * g(rng), 2 * g(rng)});
      const double a = decision_value(m, probe), b = decision_value(mp, probe);
      CHECK(a == doctest::Approx(b).epsilon(1e-5));
      if (std::abs(a) > 1e-4) CHECK(predict(m, probe) == predict(mp, probe));
    }
  }
}

TEST_CASE("property: SMO matches the brute-force dual on small instances") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);  // 2..6 points
    std::vector<oracle::Point> pts;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back({u(rng), u(rng)});
      y.push_back(i % 2 ? 1 : -1);
    }
    const bool use_rbf = trial % 2 == 0;
    const double gamma = 1.5;
    const double C = trial % 3 == 0 ? 0.5 : 10.0;
    const oracle::KernelFn k = use_rbf ? oracle::KernelFn([&](const auto& a, const auto& b) { return oracle::rbf(a, b, gamma); })
                                       : oracle::KernelFn(oracle::linear);
    const auto reference = oracle::svm_dual_bruteforce(pts, y, k, C);
    REQUIRE(std::isfinite(reference.objective));

    SvmParams p;
    p.kernel = use_rbf ? Kernel::rbf(gamma) : Kernel::linear();
    p.C = C;
    p.tol = 1e-7;
    const auto m = train_svm(to_docs(pts), y, p);
    check_dual_feasible(m);
    for (int probe = 0; probe < 20; ++probe) {
      const oracle::Point q{1.5 * u(rng), 1.5 * u(rng)};
      CHECK(std::abs(decision_value(m, DocVector::from_dense(q)) - oracle::svm_decision(reference, pts, y, k, q)) <
            1e-3);
    }
  }
}

TEST_CASE("training errors") {
  const auto x = to_docs({{0.0}, {1.0}});
  CHECK_THROWS_AS(train_svm(x, {1, 1}, {}), Error);
  CHECK_THROWS_AS(train_svm(x, {1}, {}), Error);
  CHECK_THROWS_AS(train_svm({DocVector::from_dense({0.0}), DocVector::from_dense({1.0, 2.0})}, {1, -1}, {}), Error);
  SvmParams p;
  p.max_iterations = 0;
  try {
    train_svm(to_docs({{0.0}, {1.0}, {0.4}, {0.6}}), {-1, 1, 1, -1}, p);
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Runtime);
    CHECK(std::string(e.what()).find("iterations") != std::string::npos);
  }
  const auto m = train_svm(x, {-1, 1}, {});
  CHECK_THROWS_AS(decision_value(m, DocVector::from_dense({1.0, 2.0})), Error);
}

TEST_CASE("evaluation reports") {
  const auto r = make_report(2, 1, 3, 2);
  CHECK(*r.accuracy == doctest::Approx(0.625));
  CHECK(*r.precision == doctest::Approx(2.0 / 3.0));
  CHECK(*r.recall == doctest::Approx(0.5));
  const auto all_positive = make_report(5, 5, 0, 0);
  CHECK(*all_positive.precision == 0.5);
  CHECK(*all_positive.recall == 1.0);
  const auto none = make_report(0, 0, 4, 0);
  CHECK(!none.precision.has_value());
  CHECK(!none.recall.has_value());
  CHECK(*none.accuracy == 1.0);

  const auto x = to_docs({{-1.0}, {1.0}, {-2.0}, {2.0}});
  const auto m = train_svm(x, {-1, 1, -1, 1}, {.kernel = Kernel::linear()});
  const auto perfect = evaluate(m, x, {-1, 1, -1, 1});
  CHECK(*perfect.accuracy == 1.0);
  CHECK(*perfect.precision == 1.0);
  CHECK(*perfect.recall == 1.0);
}

TEST_CASE("model files round trip") {
  const auto x = to_docs({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
  const auto m = train_svm(x, {-1, -1, 1, 1}, {});
  testing::TempDir dir;
  m.save(dir / "m.txt");
  const auto back = SvmModel::load(dir / "m.txt");
  for (const auto& v : x) CHECK(decision_value(back, v) == decision_value(m, v));
  testing::write_text(dir / "bad.txt", "not a model\n");
  CHECK_THROWS_AS(SvmModel::load(dir / "bad.txt"), Error);
}

TEST_CASE("label_corpus") {
  corpus::SynthSpec spec;
  spec.n_posts = 600;
  const auto synth = corpus::synth_corpus(spec, 17);
  const text::Lexicon lex(synth.lexicon);
  auto posts = synth.posts;
  std::vector<std::vector<std::string>> docs;
  std::vector<bool> labels;
  for (auto& p : posts) {
    p.tokens = text::segment(p.text, lex);
    docs.push_back(p.tokens);
  }
  for (auto t : synth.truth) labels.push_back(t == corpus::Label::Influenza);

  const auto split = features::stratified_split(labels, 0.5, 1);
  std::vector<std::vector<std::string>> train_docs;
  std::vector<bool> train_labels;
  std::vector<DocVector> vectors;
  std::vector<int> y;
  for (auto i : split.train) {
    train_docs.push_back(docs[i]);
    train_labels.push_back(labels[i]);
  }
  const auto space = features::FeatureSpace::fit(train_docs, train_labels, 60);
  for (std::size_t i = 0; i < train_docs.size(); ++i) {
    vectors.push_back(space.transform(train_docs[i]));
    y.push_back(train_labels[i] ? 1 : -1);
  }
  const auto model = train_svm(vectors, y, {});

  CHECK(label_corpus(model, space, {}).empty());
  const auto labelled = label_corpus(model, space, posts);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < labelled.size(); ++i) {
    CHECK(labelled[i].label != corpus::Label::Unlabeled);
    agree += labelled[i].label == synth.truth[i];
  }
  CHECK(static_cast<double>(agree) / static_cast<double>(labelled.size()) >= 0.95);
  const auto again = label_corpus(model, space, posts);
  for (std::size_t i = 0; i < labelled.size(); ++i) CHECK(again[i].label == labelled[i].label);
}
