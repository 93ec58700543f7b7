#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rted/data_ingest.hpp"

namespace rted {

/// Regularized incomplete beta I_x(a, b) for integer a, b >= 1 (binomial sum).
double beta_cdf_integer(double x, int a, int b);
double beta_quantile_integer(double u, int a, int b);

struct SyntheticPlant {
  std::string name;
  PlantKind kind = PlantKind::Wind;
  double capacity_mw = 100.0;
  int bus = 0;
  double x_km = 0.0;
  double y_km = 0.0;
};

/// Synthetic corpus: a latent Gaussian field, exponential in distance across
/// plants and AR(1) in time, pushed through Beta marginals (wind) or a
/// daylight envelope times a Beta cloudiness factor (solar). Forecasts are
/// persistence forecasts at `forecast_lag_steps`.
struct SyntheticCorpusSpec {
  std::vector<SyntheticPlant> plants;
  int days = 30;
  int step_minutes = 5;
  double correlation_length_km = 150.0;
  double temporal_range_steps = 24.0;
  int forecast_lag_steps = 12;
  double resolution_pu = 1e-4;
  std::uint64_t seed = 2006;
  std::int64_t start_minutes = 0;
};

HistoricalDataset make_synthetic_corpus(const SyntheticCorpusSpec& spec);

/// The plant layout used by the bundled 6-bus quickstart corpus.
SyntheticCorpusSpec six_bus_corpus_spec();

}  // namespace rted
