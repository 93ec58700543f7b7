#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "rted/error.hpp"
#include "rted/marginals.hpp"

using namespace rted;

TEST_CASE("point mass sample lands in a single bin") {
  std::vector<double> s(25, 0.505);
  const auto m = fit_pdh(s);
  CHECK(m.bins() == 100);
  CHECK(m.masses()(50) == doctest::Approx(1.0));
  CHECK(m.masses().sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.cdf(0.51) == doctest::Approx(1.0));
  CHECK(m.cdf(0.50) == doctest::Approx(0.0));
}

TEST_CASE("one sample per bin gives a uniform histogram") {
  std::vector<double> s;
  for (int k = 0; k < 100; ++k) s.push_back((k + 0.5) / 100.0);
  const auto m = fit_pdh(s);
  for (Eigen::Index k = 0; k < m.bins(); ++k) CHECK(m.masses()(k) == doctest::Approx(0.01));
  CHECK(m.cdf(0.5) == doctest::Approx(0.5));
  CHECK(m.inverse_cdf(0.25) == doctest::Approx(0.25));
  CHECK(m.inverse_cdf(0.0) == 0.0);
  CHECK(m.inverse_cdf(1.0) == 1.0);
}

TEST_CASE("Beta(2,5) fit matches analytic bin probabilities") {
  std::mt19937_64 g(11);
  std::vector<double> s;
  for (int i = 0; i < 10000; ++i) s.push_back(oracle::beta_draw(g, 2, 5));
  const auto m = fit_pdh(s);
  int misses = 0;
  for (Eigen::Index k = 0; k < m.bins(); ++k) {
    const double p = oracle::beta25_cdf((k + 1) / 100.0) - oracle::beta25_cdf(k / 100.0);
    if (std::abs(m.masses()(k) - p) > 3 * std::sqrt(p * (1 - p) / 10000) + 1e-12) ++misses;
  }
  // 3-sigma bands: a handful of the 100 bins may fall outside by chance.
  CHECK(misses <= 3);
  CHECK(std::abs(m.cdf(0.3) - oracle::beta25_cdf(0.3)) <= 0.02);
}

TEST_CASE("inverse cdf round trip on strictly increasing segments") {
  std::mt19937_64 g(3);
  std::vector<double> s;
  for (int i = 0; i < 500; ++i) s.push_back(oracle::beta_draw(g, 2, 5));
  const auto m = fit_pdh(s);
  std::uniform_real_distribution<double> u01;
  double prev_u = -1, prev_x = -1;
  std::vector<double> us;
  for (int i = 0; i < 1000; ++i) us.push_back(u01(g));
  std::sort(us.begin(), us.end());
  for (double u : us) {
    const double x = m.inverse_cdf(u);
    CHECK(m.cdf(x) >= u - 1e-12);
    if (m.pdf(x) > 0) CHECK(std::abs(m.cdf(x) - u) <= 1e-9);
    if (prev_u >= 0) CHECK(x >= prev_x);
    prev_u = u;
    prev_x = x;
  }
  CHECK_THROWS_AS(m.inverse_cdf(1.5), Error);
  CHECK_THROWS_AS(m.inverse_cdf(-0.1), Error);
}

TEST_CASE("flat segments resolve to the leftmost point") {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
  w << 0.5, 0.0, 0.0, 0.5;
  const EmpiricalMarginal m(0.0, 0.25, w);
  CHECK(m.inverse_cdf(0.5) == doctest::Approx(0.25));
  CHECK(m.cdf(0.6) == doctest::Approx(0.5));
}

TEST_CASE("resampling through the inverse reproduces bin masses") {
  std::mt19937_64 g(5);
  std::vector<double> s;
  for (int i = 0; i < 4000; ++i) s.push_back(oracle::beta_draw(g, 2, 5));
  const auto m = fit_pdh(s);
  std::uniform_real_distribution<double> u01;
  std::vector<double> r;
  const int n = 40000;
  for (int i = 0; i < n; ++i) r.push_back(m.inverse_cdf(u01(g)));
  const auto m2 = fit_pdh(r);
  for (Eigen::Index k = 0; k < m.bins(); ++k) {
    const double p = m.masses()(k);
    CHECK(std::abs(m2.masses()(k) - p) <= 4 * std::sqrt(p / n) + 1e-12);
  }
}

TEST_CASE("fit errors") {
  std::vector<double> empty;
  CHECK_THROWS_AS(fit_pdh(empty), Error);
  std::vector<double> out{0.2, 1.3};
  CHECK_THROWS_AS(fit_pdh(out), Error);
  std::vector<double> ok{0.2};
  CHECK_THROWS_AS(fit_pdh(ok, {0.0, 1.0, 0.03}), Error);
}

TEST_CASE("json round trip is bit exact") {
  std::mt19937_64 g(9);
  std::vector<double> s;
  for (int i = 0; i < 777; ++i) s.push_back(oracle::beta_draw(g, 2, 5));
  const auto m = fit_pdh(s);
  const nlohmann::json j = m;
  const auto back = nlohmann::json::parse(j.dump()).get<EmpiricalMarginal>();
  CHECK(back.bins() == m.bins());
  CHECK((back.masses().array() == m.masses().array()).all());
  CHECK((back.cdf_at_edges().array() == m.cdf_at_edges().array()).all());
  CHECK(back.lower() == m.lower());
  CHECK(back.upper() == m.upper());
  const auto pm = EmpiricalMarginal::point_mass(0.25);
  const nlohmann::json jp = pm;
  const auto pb = jp.get<EmpiricalMarginal>();
  CHECK(pb.is_point_mass());
  CHECK(pb.lower() == 0.25);
}
