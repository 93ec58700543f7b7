#include "rted/synthetic.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "rted/error.hpp"
#include "rted/normal.hpp"
#include "rted/rng.hpp"

namespace rted {

double beta_cdf_integer(double x, int a, int b) {
  if (a < 1 || b < 1) throw Error(ErrorKind::Domain, "integer beta parameters must be >= 1");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const int n = a + b - 1;
  double sum = 0.0, binom = 1.0;
  for (int j = 0; j <= n; ++j) {
    if (j > 0) binom = binom * (n - j + 1) / j;
    if (j >= a) sum += binom * std::pow(x, j) * std::pow(1.0 - x, n - j);
  }
  return std::min(1.0, sum);
}

double beta_quantile_integer(double u, int a, int b) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (beta_cdf_integer(mid, a, b) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

HistoricalDataset make_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  const auto n_plants = static_cast<Eigen::Index>(spec.plants.size());
  if (n_plants == 0) throw Error(ErrorKind::Config, "synthetic corpus needs at least one plant");
  const Eigen::Index steps_per_day = 1440 / spec.step_minutes;
  const Eigen::Index lag = spec.forecast_lag_steps;
  const Eigen::Index n_raw = spec.days * steps_per_day + lag;

  Eigen::MatrixXd spatial(n_plants, n_plants);
  for (Eigen::Index i = 0; i < n_plants; ++i)
    for (Eigen::Index j = 0; j < n_plants; ++j) {
      const auto& a = spec.plants[static_cast<std::size_t>(i)];
      const auto& b = spec.plants[static_cast<std::size_t>(j)];
      spatial(i, j) = std::exp(-std::hypot(a.x_km - b.x_km, a.y_km - b.y_km) / spec.correlation_length_km);
    }
  const Eigen::MatrixXd chol = spatial.llt().matrixL();
  const double phi = std::exp(-1.0 / spec.temporal_range_steps);
  const double innov = std::sqrt(1.0 - phi * phi);

  Rng rng(derive_seed("synthetic:", spec.seed));
  Eigen::VectorXd y(n_plants), xi(n_plants);
  for (Eigen::Index j = 0; j < n_plants; ++j) xi(j) = rng.normal();
  y = chol * xi;

  Eigen::MatrixXd raw(n_raw, n_plants);
  for (Eigen::Index t = 0; t < n_raw; ++t) {
    for (Eigen::Index j = 0; j < n_plants; ++j) xi(j) = rng.normal();
    y = phi * y + innov * (chol * xi);
    const double minute_of_day =
        static_cast<double>(((spec.start_minutes + (t - lag) * spec.step_minutes) % 1440 + 1440) % 1440);
    const double hour = minute_of_day / 60.0;
    for (Eigen::Index j = 0; j < n_plants; ++j) {
      const double u = normal_cdf(y(j));
      double v;
      if (spec.plants[static_cast<std::size_t>(j)].kind == PlantKind::Wind) {
        v = beta_quantile_integer(u, 2, 4);
      } else {
        const double daylight = std::max(0.0, std::sin(std::numbers::pi * (hour - 6.0) / 12.0));
        v = daylight * beta_quantile_integer(u, 4, 2);
      }
      raw(t, j) = std::clamp(std::round(v / spec.resolution_pu) * spec.resolution_pu, 0.0, 1.0);
    }
  }

  HistoricalDataset out;
  out.step_minutes = spec.step_minutes;
  for (Eigen::Index j = 0; j < n_plants; ++j) {
    const auto& p = spec.plants[static_cast<std::size_t>(j)];
    out.plants.push_back({static_cast<int>(j), p.kind, p.capacity_mw, p.bus, p.name});
  }
  const Eigen::Index n = n_raw - lag;
  out.actual = raw.bottomRows(n);
  out.forecast = raw.topRows(n);
  out.timestamps.resize(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < n; ++t)
    out.timestamps[static_cast<std::size_t>(t)] = spec.start_minutes + t * spec.step_minutes;
  out.validate();
  return out;
}

SyntheticCorpusSpec six_bus_corpus_spec() {
  SyntheticCorpusSpec spec;
  spec.plants = {
      {"W1", PlantKind::Wind, 100.0, 4, 0.0, 0.0},
      {"W2", PlantKind::Wind, 100.0, 6, 40.0, 15.0},
      {"W3", PlantKind::Wind, 100.0, 6, 70.0, 40.0},
      {"S1", PlantKind::Solar, 100.0, 5, 180.0, -20.0},
  };
  spec.days = 30;
  spec.start_minutes = parse_timestamp("2006-04-01T00:00");
  return spec;
}

}  // namespace rted
