#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "ltadmm/objectives.hpp"

using ltadmm::LocalProblem;
using ltadmm::RandomStream;
using ltadmm::Vec;

namespace {

// central finite differences of the full cost, the independent gradient oracle
Vec fd_gradient(const LocalProblem& p, const Vec& x, double step = 1e-5) {
  Vec g(x.size());
  for (int c = 0; c < x.size(); ++c) {
    Vec hi = x, lo = x;
    hi[c] += step;
    lo[c] -= step;
    g[c] = (p.full_cost(hi) - p.full_cost(lo)) / (2.0 * step);
  }
  return g;
}

}  // namespace

TEST_CASE("generator shapes and determinism") {
  const auto problems = ltadmm::generate_logistic(10, 5, 100, 0.1, 1234);
  REQUIRE(problems.size() == 10);
  int total = 0;
  for (const auto& p : problems) {
    REQUIRE(p.dimension() == 5);
    REQUIRE(p.component_count() == 100);
    total += p.component_count();
  }
  REQUIRE(total == 1000);

  const auto again = ltadmm::generate_logistic(10, 5, 100, 0.1, 1234);
  RandomStream rng(99, 0, 0, ltadmm::StreamPurpose::dataset_features);
  const Vec x = rng.normal_vector(5);
  for (int i = 0; i < 10; ++i) {
    const Vec a = problems[static_cast<std::size_t>(i)].full_gradient(x);
    const Vec b = again[static_cast<std::size_t>(i)].full_gradient(x);
    for (int c = 0; c < 5; ++c) REQUIRE(a[c] == b[c]);
  }

  const auto other = ltadmm::generate_logistic(10, 5, 100, 0.1, 1235);
  REQUIRE(problems[0].full_gradient(x) != other[0].full_gradient(x));

  REQUIRE_THROWS_AS(ltadmm::generate_logistic(10, 5, 100, 0.0, 1), ltadmm::ParameterError);
  REQUIRE_THROWS_AS(ltadmm::generate_logistic(0, 5, 100, 0.1, 1), ltadmm::ParameterError);
}

TEST_CASE("logistic gradient at the origin is -(b/2) a") {
  const auto problems = ltadmm::generate_logistic(1, 1, 1, 1.0, 77);
  const auto& p = problems[0];
  const auto& comp = dynamic_cast<const ltadmm::LogisticComponent&>(p.component(0));
  const Vec zero = Vec::Zero(1);
  const Vec g = p.component_gradient(0, zero);
  // hand differentiation of log(1+exp(-b a x)) + (eps/2) x^2 at x = 0
  REQUIRE(std::abs(g[0] - (-0.5 * comp.label() * comp.features()[0])) < 1e-15);

  const Vec gf = p.full_gradient(zero);
  REQUIRE(gf[0] == g[0]);  // m_i = 1
}

TEST_CASE("component index range") {
  const auto problems = ltadmm::generate_logistic(1, 3, 4, 0.5, 7);
  const Vec x = Vec::Zero(3);
  REQUIRE_THROWS_AS(problems[0].component_gradient(4, x), ltadmm::ParameterError);
  REQUIRE_THROWS_AS(problems[0].component_gradient(-1, x), ltadmm::ParameterError);
}

TEST_CASE("quadratic components") {
  Vec a(2);
  a << 1.0, -2.0;
  const auto p = ltadmm::make_quadratic_problem(0, {a});
  Vec x(2);
  x << 0.5, 0.5;
  const Vec g = p.full_gradient(x);
  REQUIRE((g - (x - a)).norm() == 0.0);
  REQUIRE(p.component_gradient(0, x) == g);
}

TEST_CASE("full gradient matches finite differences of the full cost") {
  const auto problems = ltadmm::generate_logistic(2, 4, 12, 0.3, 2024);
  RandomStream rng(5, 0, 0, ltadmm::StreamPurpose::dataset_features);
  for (const auto& p : problems) {
    for (int trial = 0; trial < 5; ++trial) {
      const Vec x = rng.normal_vector(4);
      const Vec g = p.full_gradient(x);
      const Vec fd = fd_gradient(p, x);
      REQUIRE((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
    }
  }
}

TEST_CASE("every component gradient matches finite differences") {
  const auto problems = ltadmm::generate_logistic(1, 3, 6, 0.2, 31);
  const auto& p = problems[0];
  RandomStream rng(6, 0, 0, ltadmm::StreamPurpose::dataset_features);
  for (int h = 0; h < p.component_count(); ++h) {
    for (int trial = 0; trial < 10; ++trial) {
      const Vec x = rng.normal_vector(3);
      const Vec g = p.component_gradient(h, x);
      Vec fd(3);
      for (int c = 0; c < 3; ++c) {
        Vec hi = x, lo = x;
        hi[c] += 1e-5;
        lo[c] -= 1e-5;
        fd[c] = (p.component_value(h, hi) - p.component_value(h, lo)) / 2e-5;
      }
      REQUIRE((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
    }
  }
}

TEST_CASE("strong convexity and smoothness on random pairs") {
  const double eps = 0.4;
  const auto problems = ltadmm::generate_logistic(3, 5, 20, eps, 99);
  RandomStream rng(8, 0, 0, ltadmm::StreamPurpose::dataset_features);
  for (const auto& p : problems) {
    REQUIRE(p.strong_convexity() == eps);
    for (int trial = 0; trial < 10; ++trial) {
      const Vec x = rng.normal_vector(5);
      const Vec y = rng.normal_vector(5);
      const Vec dg = p.full_gradient(x) - p.full_gradient(y);
      const Vec dx = x - y;
      REQUIRE(dg.dot(dx) >= eps * dx.squaredNorm() * (1.0 - 1e-12));
      REQUIRE(dg.norm() <= p.smoothness() * dx.norm() * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("global gradient") {
  const auto single = ltadmm::generate_logistic(1, 3, 5, 0.2, 10);
  RandomStream rng(12, 0, 0, ltadmm::StreamPurpose::dataset_features);
  const Vec x = rng.normal_vector(3);
  REQUIRE((ltadmm::global_gradient(single, x) - single[0].full_gradient(x)).norm() == 0.0);

  // quadratic anchors: global gradient is x - mean(anchors)
  std::vector<LocalProblem> quads;
  Vec mean = Vec::Zero(3);
  for (int i = 0; i < 4; ++i) {
    RandomStream ar(3, static_cast<std::uint64_t>(i), 0, ltadmm::StreamPurpose::quadratic_anchor);
    const Vec a = ar.normal_vector(3);
    mean += a;
    quads.push_back(ltadmm::make_quadratic_problem(i, {a}));
  }
  mean /= 4.0;
  REQUIRE((ltadmm::global_gradient(quads, x) - (x - mean)).norm() < 1e-14);
  // at the closed-form optimum the gradient vanishes
  REQUIRE(ltadmm::global_gradient(quads, mean).norm() < 1e-14);

  auto mismatched = ltadmm::generate_logistic(2, 4, 3, 0.2, 11);
  REQUIRE_THROWS_AS(ltadmm::global_gradient(mismatched, x), ltadmm::ParameterError);
}

TEST_CASE("dataset dump and load round trip") {
  const auto data = ltadmm::generate_logistic_data(3, 4, 7, 0.25, 555);
  std::ostringstream out;
  ltadmm::write_logistic_data(data, out);

  std::istringstream in(out.str());
  const auto back = ltadmm::read_logistic_data(in, 0.25);
  REQUIRE(back.samples.size() == data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    REQUIRE(back.samples[i].size() == data.samples[i].size());
    for (std::size_t h = 0; h < data.samples[i].size(); ++h) {
      REQUIRE(back.samples[i][h].label == data.samples[i][h].label);
      REQUIRE((back.samples[i][h].features - data.samples[i][h].features).norm() == 0.0);
    }
  }

  std::ostringstream out2;
  ltadmm::write_logistic_data(back, out2);
  REQUIRE(out.str() == out2.str());
}
