#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "rted/copula_model.hpp"
#include "rted/error.hpp"
#include "rted/stats.hpp"

using namespace rted;

namespace {

// Dataset whose latent (a1..ap, f1..fp) is Gaussian with `corr`; outputs are
// Phi(z) squared for plant 0 (skewed) and Phi(z) otherwise.
HistoricalDataset gaussian_dataset(const Eigen::MatrixXd& corr, int n, std::uint64_t seed) {
  const int p = static_cast<int>(corr.rows() / 2);
  std::mt19937_64 g(seed);
  const Eigen::MatrixXd z = oracle::gaussian_rows(g, corr, n);
  HistoricalDataset d;
  d.step_minutes = 5;
  for (int j = 0; j < p; ++j) d.plants.push_back({j, PlantKind::Wind, 100.0, j + 1, "P" + std::to_string(j)});
  d.actual.resize(n, p);
  d.forecast.resize(n, p);
  for (int i = 0; i < n; ++i) {
    d.timestamps.push_back(i * 5);
    for (int j = 0; j < p; ++j) {
      double a = oracle::phi_cdf(z(i, j)), f = oracle::phi_cdf(z(i, p + j));
      if (j == 0) a *= a, f *= f;
      d.actual(i, j) = a;
      d.forecast(i, j) = f;
    }
  }
  return d;
}

Eigen::MatrixXd plant_corr(int p, double af, double cross) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(2 * p, 2 * p, cross * af);
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < p; ++k) {
      c(j, k) = j == k ? 1.0 : cross;
      c(p + j, p + k) = j == k ? 1.0 : cross;
    }
    c(j, p + j) = c(p + j, j) = af;
  }
  return c;
}

EmpiricalMarginal uniform_marginal(double lo = 0.0, double hi = 1.0, int bins = 100) {
  return EmpiricalMarginal(lo, (hi - lo) / bins, Eigen::VectorXd::Constant(bins, 1.0 / bins));
}

}  // namespace

TEST_CASE("independent plants fit near-zero correlation") {
  const auto d = gaussian_dataset(Eigen::MatrixXd::Identity(4, 4), 10000, 1);
  const auto m = fit_copula(d);
  CHECK(m.size() == 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (r != c) CHECK(std::abs(m.correlation()(r, c)) <= 0.05);
}

TEST_CASE("bivariate rho 0.6 is recovered by generate-then-refit") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(2, 2);
  c(0, 1) = c(1, 0) = 0.6;
  const auto d = gaussian_dataset(c, 20000, 2);
  const auto m = fit_copula(d);
  CHECK(std::abs(m.correlation()(0, 1) - 0.6) <= 0.03);
}

TEST_CASE("duplicated plant column triggers positive-definite repair") {
  auto d = gaussian_dataset(Eigen::MatrixXd::Identity(4, 4), 2000, 3);
  d.actual.col(1) = d.actual.col(0);
  const auto m = fit_copula(d);
  CHECK(m.correlation()(0, 1) > 0.999);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.correlation());
  CHECK(eig.eigenvalues().minCoeff() >= 1e-10);
  CHECK((m.correlation().diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(!m.warnings().empty());
}

TEST_CASE("constant column is a degenerate-variable error") {
  auto d = gaussian_dataset(Eigen::MatrixXd::Identity(4, 4), 200, 4);
  d.actual.col(1).setConstant(0.3);
  try {
    fit_copula(d);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateVariable);
  }
  auto small = gaussian_dataset(Eigen::MatrixXd::Identity(2, 2), 40, 4);
  CHECK_THROWS_AS(fit_copula(small), Error);
}

TEST_CASE("fewer samples than variables warns and applies a ridge") {
  const int p = 30;
  const auto d = gaussian_dataset(plant_corr(p, 0.7, 0.3), 55, 5);
  const auto m = fit_copula(d);
  bool warned = false;
  for (const auto& w : m.warnings()) warned |= w.find("singular") != std::string::npos;
  CHECK(warned);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.correlation());
  CHECK(eig.eigenvalues().minCoeff() >= 1e-10);
}

TEST_CASE("identity correlation leaves the marginal unchanged") {
  const auto d = gaussian_dataset(Eigen::MatrixXd::Identity(4, 4), 3000, 6);
  auto fitted = fit_copula(d);
  const CopulaModel m(fitted.plants(), fitted.forecast_plants(), {}, fitted.marginals(),
                      Eigen::MatrixXd::Identity(4, 4), fitted.sample_count());
  std::map<Eigen::Index, double> given{{1, 0.4}, {2, 0.9}, {3, 0.1}};
  const auto c = full_conditional(m, 0, given);
  CHECK(c.cond_mean() == 0.0);
  CHECK(c.cond_std() == 1.0);
  for (double x = 0.0; x <= 1.0; x += 0.013) CHECK(c.cdf(x) == doctest::Approx(m.marginal(0).cdf(x)).epsilon(1e-12));
  CHECK_THROWS_AS(full_conditional(m, 1, given), Error);
  CHECK_THROWS_AS(full_conditional(m, 0, {{1, 1.4}}), Error);
}

TEST_CASE("three-variable conditioning matches the partitioned-matrix oracle") {
  Eigen::MatrixXd s(3, 3);
  s << 1.0, 0.5, -0.3, 0.5, 1.0, 0.2, -0.3, 0.2, 1.0;
  std::vector<EmpiricalMarginal> marg(3, uniform_marginal());
  std::vector<PlantId> plants{{0, PlantKind::Wind, 10, 1, "a"}, {1, PlantKind::Wind, 10, 1, "b"}, {2, PlantKind::Solar, 10, 1, "c"}};
  const CopulaModel m(plants, {}, {}, marg, s, 1000000);
  const double x2 = 0.8, x3 = 0.35;
  const auto c = full_conditional(m, 0, {{1, x2}, {2, x3}});
  Eigen::VectorXd zg(2);
  zg << m.latent(1, x2), m.latent(2, x3);
  const auto [mu, sd] = oracle::gaussian_condition(s, 0, {1, 2}, zg);
  CHECK(std::abs(c.cond_mean() - mu) <= 1e-10);
  CHECK(std::abs(c.cond_std() - sd) <= 1e-10);
}

TEST_CASE("sequential conditionals reproduce the copula density ratio") {
  const double rho = 0.65;
  Eigen::MatrixXd s(2, 2);
  s << 1, rho, rho, 1;
  Eigen::VectorXd w(50);
  for (int k = 0; k < 50; ++k) w(k) = 1.0 + 0.5 * std::sin(0.3 * k) + 0.02 * k;
  const EmpiricalMarginal m0(0.0, 0.02, w), m1 = uniform_marginal();
  const CopulaModel m({{0, PlantKind::Wind, 1, 1, "a"}, {1, PlantKind::Wind, 1, 1, "b"}}, {}, {}, {m0, m1}, s, 1 << 30);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i)
    for (int k = 0; k < 100; ++k) {
      const double x1 = (i + 0.5) / 100.0, x2 = (k + 0.37) / 100.0;
      const auto c = full_conditional(m, 0, {{1, x2}});
      const double seq = m1.pdf(x2) * c.pdf(x1);
      // Direct Gaussian copula density c(u, v) f0 f1.
      const double za = m.latent(0, x1), zb = m.latent(1, x2);
      const double q = (rho * rho * (za * za + zb * zb) - 2 * rho * za * zb) / (2 * (1 - rho * rho));
      const double direct = std::exp(-q) / std::sqrt(1 - rho * rho) * m0.pdf(x1) * m1.pdf(x2);
      worst = std::max(worst, std::abs(seq - direct));
    }
  CHECK(worst <= 1e-8);
}

TEST_CASE("quantile is monotone and inverts the conditional cdf") {
  const auto d = gaussian_dataset(plant_corr(2, 0.8, 0.5), 5000, 7);
  const auto m = fit_copula(d, {DerivedVariableSpec::sum(d.plants)});
  Eigen::Vector2d f(0.3, 0.6);
  const auto c = conditional_sum(m, f);
  double prev = -1;
  for (int i = 1; i <= 9; ++i) {
    const double b = i / 10.0;
    const double x = c.quantile(b);
    CHECK(std::abs(c.cdf(x) - b) <= 1e-6);
    CHECK(x >= prev);
    prev = x;
  }
  CHECK(c.quantile(1.0) == doctest::Approx(m.marginal(*m.find("sum")).upper()));
  CHECK(c.quantile(1.0 - 1e-15) <= c.base().upper());
  // Conditional density integrates to one.
  CHECK(oracle::simpson([&](double x) { return c.pdf(x); }, c.base().lower(), c.base().upper(), 20000) ==
        doctest::Approx(1.0).epsilon(1e-4));
  CHECK(c.bin_masses().sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("median quantile of a symmetric marginal under identity correlation") {
  const CopulaModel m({{0, PlantKind::Wind, 1, 1, "a"}}, {}, {}, {uniform_marginal(0.2, 0.8, 60)},
                      Eigen::MatrixXd::Identity(1, 1), 100);
  const auto c = full_conditional(m, 0, {});
  CHECK(c.quantile(0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.quantile(1.0) == doctest::Approx(0.8));
}

TEST_CASE("single-plant sum conditional equals the plant conditional") {
  Eigen::MatrixXd c(2, 2);
  c << 1, 0.7, 0.7, 1;
  const auto d = gaussian_dataset(c, 3000, 8);
  const auto m = fit_copula(d, {DerivedVariableSpec::sum(d.plants)});
  Eigen::VectorXd f(1);
  f << 0.42;
  const auto cs = conditional_sum(m, f);
  const auto cp = full_conditional(m, 0, {{1, 0.42}});
  CHECK(cs.cond_mean() == doctest::Approx(cp.cond_mean()).epsilon(1e-8));
  CHECK(cs.cond_std() == doctest::Approx(cp.cond_std()).epsilon(1e-8));
  for (double b : {0.05, 0.3, 0.5, 0.9}) CHECK(std::abs(cs.quantile(b) - cp.quantile(b)) <= 1e-8);
  CHECK(cs.scale_mw() == 100.0);
}

TEST_CASE("sum conditional at median forecasts matches the binned historical average") {
  const auto d = gaussian_dataset(plant_corr(2, 0.85, 0.5), 40000, 9);
  const auto m = fit_copula(d, {DerivedVariableSpec::sum(d.plants)});
  Eigen::Vector2d med;
  for (int j = 0; j < 2; ++j) {
    std::vector<double> v(d.forecast.col(j).data(), d.forecast.col(j).data() + d.samples());
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    med(j) = v[v.size() / 2];
  }
  const auto c = conditional_sum(m, med);
  // Nearest-neighbor oracle: samples with both forecasts within 0.04 of the median.
  std::vector<double> near;
  for (Eigen::Index i = 0; i < d.samples(); ++i)
    if (std::abs(d.forecast(i, 0) - med(0)) < 0.04 && std::abs(d.forecast(i, 1) - med(1)) < 0.04)
      near.push_back(0.5 * (d.actual(i, 0) + d.actual(i, 1)));
  REQUIRE(near.size() > 200);
  const double emp = stats::mean(near), se = stats::stddev(near) / std::sqrt(static_cast<double>(near.size()));
  CHECK(std::abs(c.mean() - emp) <= 3 * se + 0.01);
}

TEST_CASE("independent symmetric sum conditional is symmetric") {
  Eigen::VectorXd tri(100);
  for (int k = 0; k < 100; ++k) tri(k) = std::min(k + 1, 100 - k);
  std::vector<EmpiricalMarginal> marg{uniform_marginal(), uniform_marginal(), uniform_marginal(), uniform_marginal(),
                                      EmpiricalMarginal(0.0, 0.01, tri)};
  const std::vector<PlantId> plants{{0, PlantKind::Wind, 50, 1, "a"}, {1, PlantKind::Wind, 50, 1, "b"}};
  const CopulaModel m(plants, {0, 1}, {DerivedVariableSpec::sum(plants)}, marg, Eigen::MatrixXd::Identity(5, 5), 5000);
  const auto c = conditional_sum(m, Eigen::Vector2d(0.2, 0.9));
  const double mu = c.mean();
  CHECK(mu == doctest::Approx(0.5).epsilon(1e-12));
  for (double h = 0.0; h < 0.5; h += 0.0137) CHECK(std::abs(c.pdf(mu + h) - c.pdf(mu - h)) <= 1e-6);
}

TEST_CASE("line conditionals") {
  const auto d = gaussian_dataset(plant_corr(2, 0.8, 0.4), 4000, 10);
  Eigen::MatrixXd k(3, 2);
  k << 0.0, 0.0, 1.0, 0.0, 0.5, -0.5;
  const auto m = fit_copula(d, DerivedVariableSpec::lines(k, d.plants));
  Eigen::Vector2d f(0.5, 0.2);
  const auto zero = conditional_line(m, 0, f);
  CHECK(zero.base().is_point_mass());
  CHECK(zero.quantile(0.999) == 0.0);
  CHECK(zero.cdf(0.0) == 1.0);

  const auto one = conditional_line(m, 1, f);
  const auto plant = full_conditional(m, 0, {{2, 0.5}, {3, 0.2}});
  for (double b : {0.1, 0.5, 0.9}) CHECK(std::abs(one.quantile(b) - plant.quantile(b)) <= 1e-6);

  const auto two = conditional_line(m, 2, f);
  CHECK(two.base().lower() == doctest::Approx(-0.5));
  CHECK(two.base().upper() == doctest::Approx(0.5));
  CHECK(two.scale_mw() == doctest::Approx(100.0));

  try {
    conditional_line(m, 7, f);
    FAIL("unregistered line");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  try {
    conditional_sum(m, f);
    FAIL("no sum registered");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("marginalizing the conditional over its conditioning set recovers the marginal") {
  const auto d = gaussian_dataset(plant_corr(2, 0.8, 0.5), 6000, 11);
  const auto m = fit_copula(d);
  const Eigen::MatrixXd l = m.correlation().llt().matrixL();
  std::mt19937_64 g(12);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u01;
  std::vector<double> xs;
  for (int i = 0; i < 10000; ++i) {
    Eigen::Vector4d e(nd(g), nd(g), nd(g), nd(g));
    const Eigen::Vector4d z = l * e;
    std::map<Eigen::Index, double> given;
    for (Eigen::Index v = 1; v < 4; ++v) given[v] = m.marginal(v).inverse_cdf(oracle::phi_cdf(z(v)));
    xs.push_back(full_conditional(m, 0, given).quantile(u01(g)));
  }
  const auto& marg = m.marginal(0);
  CHECK(stats::ks_one_sample(xs, [&](double x) { return marg.cdf(x); }) <= 0.02);
}

TEST_CASE("model json round trip") {
  const auto d = gaussian_dataset(plant_corr(2, 0.8, 0.4), 500, 13);
  const auto m = fit_copula(d, {DerivedVariableSpec::sum(d.plants)});
  nlohmann::json j = m;
  const auto back = copula_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.size() == m.size());
  CHECK((back.correlation().array() == m.correlation().array()).all());
  CHECK(back.variables()[4].label == "sum");
  CHECK((back.marginal(4).masses().array() == m.marginal(4).masses().array()).all());
  CHECK(back.sample_count() == m.sample_count());
}

TEST_CASE("removing spatial correlation keeps each plant's forecast link") {
  const auto d = gaussian_dataset(plant_corr(2, 0.8, 0.5), 2000, 14);
  const auto m = fit_copula(d);
  const auto ind = m.without_spatial_correlation();
  CHECK(ind.correlation()(0, 1) == 0.0);
  CHECK(ind.correlation()(0, 3) == 0.0);
  CHECK(ind.correlation()(0, 2) == m.correlation()(0, 2));
}

TEST_CASE("conditioning on a tied zero uses the tie block's mid-rank") {
  // Plant 1's forecast is zero 40% of the time, as solar is at night.
  auto d = gaussian_dataset(plant_corr(2, 0.8, 0.5), 20000, 3);
  int zeros = 0;
  for (Eigen::Index i = 0; i < d.samples(); ++i) {
    d.forecast(i, 1) = std::max(0.0, d.forecast(i, 1) - 0.4) / 0.6;
    if (d.forecast(i, 1) == 0.0) ++zeros;
  }
  const auto m = fit_copula(d);
  const auto f1 = *m.forecast_index(1);
  const double n1 = static_cast<double>(d.samples()) + 1.0;
  CHECK(m.latent(f1, 0.0) == doctest::Approx(oracle::phi_inv(0.5 * (zeros + 1) / n1)).epsilon(0.02));

  std::vector<double> given_zero;
  for (Eigen::Index i = 0; i < d.samples(); ++i)
    if (d.forecast(i, 1) == 0.0) given_zero.push_back(d.actual(i, 0));
  const auto c = full_conditional(m, 0, {{f1, 0.0}});
  CHECK(std::abs(c.mean() - stats::mean(given_zero)) <= 0.03);
}
