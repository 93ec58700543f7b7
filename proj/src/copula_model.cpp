#include "rted/copula_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rted/error.hpp"
#include "rted/gaussian.hpp"
#include "rted/normal.hpp"
#include "rted/stats.hpp"

using nlohmann::json;

namespace rted {

namespace {

constexpr double kStdFloor = 1e-8;

// Support of a normalized derived variable, rounded outward to the grid.
std::pair<double, double> derived_support(const DerivedVariableSpec& spec, double width) {
  const double s = spec.scale_mw();
  const double lo = spec.weights.cwiseMin(0.0).sum() / s;
  const double hi = spec.weights.cwiseMax(0.0).sum() / s;
  const double k_lo = std::floor(lo / width + 1e-9);
  const double k_hi = std::ceil(hi / width - 1e-9);
  return {k_lo * width, k_hi * width};
}

Eigen::VectorXd latent_column(std::span<const double> x) {
  const auto ranks = stats::mid_ranks(x);
  const double n1 = static_cast<double>(x.size()) + 1.0;
  Eigen::VectorXd z(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) z(static_cast<Eigen::Index>(i)) = normal_quantile(ranks[i] / n1);
  return z;
}

}  // namespace

DerivedVariableSpec DerivedVariableSpec::sum(const std::vector<PlantId>& plants) {
  DerivedVariableSpec s{"sum", Eigen::VectorXd(static_cast<Eigen::Index>(plants.size()))};
  for (std::size_t j = 0; j < plants.size(); ++j) s.weights(static_cast<Eigen::Index>(j)) = plants[j].capacity_mw;
  return s;
}

std::vector<DerivedVariableSpec> DerivedVariableSpec::lines(const Eigen::MatrixXd& k,
                                                            const std::vector<PlantId>& plants) {
  if (k.cols() != static_cast<Eigen::Index>(plants.size()))
    throw Error(ErrorKind::Domain, "shift-factor matrix columns must match plant count");
  std::vector<DerivedVariableSpec> out;
  for (Eigen::Index l = 0; l < k.rows(); ++l) {
    DerivedVariableSpec s{line_label(l), Eigen::VectorXd(k.cols())};
    for (Eigen::Index j = 0; j < k.cols(); ++j) s.weights(j) = k(l, j) * plants[static_cast<std::size_t>(j)].capacity_mw;
    out.push_back(std::move(s));
  }
  return out;
}

CopulaModel::CopulaModel(std::vector<PlantId> plants, std::vector<int> forecast_plants,
                         std::vector<DerivedVariableSpec> derived, std::vector<EmpiricalMarginal> marginals,
                         Eigen::MatrixXd corr, Eigen::Index sample_count)
    : plants_(std::move(plants)),
      forecast_plants_(std::move(forecast_plants)),
      derived_(std::move(derived)),
      marginals_(std::move(marginals)),
      corr_(std::move(corr)),
      sample_count_(sample_count) {
  build_variables();
  const auto d = size();
  if (static_cast<Eigen::Index>(marginals_.size()) != d)
    throw Error(ErrorKind::Fit, "marginal count does not match variable count");
  if (corr_.rows() != d || corr_.cols() != d) throw Error(ErrorKind::Fit, "correlation matrix has wrong shape");
  if (!corr_.allFinite() || (corr_ - corr_.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      (corr_.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12)
    throw Error(ErrorKind::Fit, "correlation matrix must be symmetric with unit diagonal");
  if (sample_count_ < 1) throw Error(ErrorKind::Fit, "sample count must be positive");
}

void CopulaModel::build_variables() {
  variables_.clear();
  std::set<int> seen;
  for (std::size_t j = 0; j < plants_.size(); ++j)
    variables_.push_back({"actual:" + plants_[j].name, VariableRole::Actual, static_cast<int>(j), -1,
                          plants_[j].capacity_mw});
  for (int j : forecast_plants_) {
    if (j < 0 || j >= static_cast<int>(plants_.size()) || !seen.insert(j).second)
      throw Error(ErrorKind::Config, "invalid forecast plant selection");
    variables_.push_back({"forecast:" + plants_[static_cast<std::size_t>(j)].name, VariableRole::Forecast, j, -1,
                          plants_[static_cast<std::size_t>(j)].capacity_mw});
  }
  for (std::size_t k = 0; k < derived_.size(); ++k) {
    if (derived_[k].weights.size() != plant_count() || !derived_[k].weights.allFinite())
      throw Error(ErrorKind::Config, "derived variable '" + derived_[k].label + "' has invalid weights");
    variables_.push_back({derived_[k].label, VariableRole::Derived, -1, static_cast<int>(k),
                          derived_[k].scale_mw() > 0.0 ? derived_[k].scale_mw() : 1.0});
  }
}

std::optional<Eigen::Index> CopulaModel::forecast_index(Eigen::Index plant) const {
  for (std::size_t i = 0; i < forecast_plants_.size(); ++i)
    if (forecast_plants_[i] == plant) return plant_count() + static_cast<Eigen::Index>(i);
  return std::nullopt;
}

std::optional<Eigen::Index> CopulaModel::find(const std::string& label) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].label == label) return static_cast<Eigen::Index>(i);
  return std::nullopt;
}

double CopulaModel::latent(Eigen::Index var, double value) const {
  const auto& m = marginal(var);
  if (m.is_point_mass()) return 0.0;
  const double n1 = static_cast<double>(sample_count_) + 1.0;
  // Values on the support ends (zero output, full output) are usually tied
  // blocks in the history; give them the edge bin's mid-rank as the fit did.
  double u = m.cdf(value);
  if (value <= m.lower()) u = 0.5 * m.masses()(0);
  if (value >= m.upper()) u = 1.0 - 0.5 * m.masses()(m.bins() - 1);
  u = std::clamp(u, 1.0 / n1, 1.0 - 1.0 / n1);
  return normal_quantile(u);
}

CopulaModel CopulaModel::without_spatial_correlation() const {
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(size(), size());
  for (Eigen::Index j = 0; j < plant_count(); ++j)
    if (auto f = forecast_index(j)) {
      c(j, *f) = corr_(j, *f);
      c(*f, j) = corr_(*f, j);
    }
  CopulaModel out(plants_, forecast_plants_, derived_, marginals_, c, sample_count_);
  out.warnings_ = warnings_;
  return out;
}

CopulaModel fit_copula(const HistoricalDataset& data, const std::vector<DerivedVariableSpec>& derived,
                       const FitOptions& options) {
  data.validate();
  const Eigen::Index n = data.samples();
  const Eigen::Index p = data.plant_count();
  if (n < 50) throw Error(ErrorKind::Fit, "copula fit needs at least 50 samples, got " + std::to_string(n));

  std::vector<int> fplants = options.forecast_plants;
  if (fplants.empty())
    for (int j = 0; j < p; ++j) fplants.push_back(j);

  // Columns in model order; derived columns are normalized weighted sums.
  const Eigen::Index d = p + static_cast<Eigen::Index>(fplants.size()) + static_cast<Eigen::Index>(derived.size());
  Eigen::MatrixXd cols(n, d);
  cols.leftCols(p) = data.actual;
  for (std::size_t i = 0; i < fplants.size(); ++i) {
    if (fplants[i] < 0 || fplants[i] >= p) throw Error(ErrorKind::Config, "forecast plant index out of range");
    cols.col(p + static_cast<Eigen::Index>(i)) = data.forecast.col(fplants[i]);
  }
  const Eigen::Index d0 = p + static_cast<Eigen::Index>(fplants.size());
  for (std::size_t k = 0; k < derived.size(); ++k) {
    const auto& spec = derived[k];
    if (spec.weights.size() != p || !spec.weights.allFinite())
      throw Error(ErrorKind::Config, "derived variable '" + spec.label + "' must have one finite weight per plant");
    const double s = spec.scale_mw();
    cols.col(d0 + static_cast<Eigen::Index>(k)) =
        s > 0.0 ? Eigen::VectorXd(data.actual * spec.weights / s) : Eigen::VectorXd::Zero(n);
  }

  std::vector<EmpiricalMarginal> marginals;
  std::vector<bool> degenerate(static_cast<std::size_t>(d), false);
  std::vector<std::string> warnings;
  for (Eigen::Index v = 0; v < d; ++v) {
    const auto col = cols.col(v);
    const bool constant = col.maxCoeff() == col.minCoeff();
    const bool is_derived = v >= d0;
    if (is_derived) {
      const auto& spec = derived[static_cast<std::size_t>(v - d0)];
      if (spec.scale_mw() == 0.0) {
        marginals.push_back(EmpiricalMarginal::point_mass(0.0));
        degenerate[static_cast<std::size_t>(v)] = true;
        continue;
      }
      if (constant)
        throw Error(ErrorKind::DegenerateVariable, "derived variable '" + spec.label + "' is constant in history");
      const auto [lo, hi] = derived_support(spec, options.grid.bin_width);
      // Guard against the last ulp of a sum landing just outside the support.
      Eigen::VectorXd clipped = col.cwiseMax(lo).cwiseMin(hi);
      cols.col(v) = clipped;
      marginals.push_back(fit_pdh(std::span<const double>(clipped.data(), static_cast<std::size_t>(n)),
                                  {lo, hi, options.grid.bin_width}));
    } else {
      if (constant) {
        const auto j = v < p ? v : fplants[static_cast<std::size_t>(v - p)];
        throw Error(ErrorKind::DegenerateVariable,
                    std::string(v < p ? "actual" : "forecast") + " series of plant " +
                        data.plants[static_cast<std::size_t>(j)].name + " is constant");
      }
      marginals.push_back(fit_pdh(std::span<const double>(col.data(), static_cast<std::size_t>(n)), options.grid));
    }
  }

  Eigen::MatrixXd latent(n, d);
  for (Eigen::Index v = 0; v < d; ++v) {
    if (degenerate[static_cast<std::size_t>(v)]) {
      latent.col(v).setZero();
      continue;
    }
    latent.col(v) = latent_column(std::span<const double>(cols.col(v).data(), static_cast<std::size_t>(n)));
  }
  Eigen::MatrixXd corr = stats::correlation_matrix(latent);
  for (Eigen::Index v = 0; v < d; ++v)
    if (degenerate[static_cast<std::size_t>(v)]) {
      corr.row(v).setZero();
      corr.col(v).setZero();
      corr(v, v) = 1.0;
    }
  if (n < d) {
    warnings.push_back("singular fit: " + std::to_string(n) + " samples for " + std::to_string(d) +
                       " variables, ridge " + std::to_string(options.ridge) + " applied");
    corr = (1.0 - options.ridge) * corr + options.ridge * Eigen::MatrixXd::Identity(d, d);
  }
  auto repaired = repair_correlation(corr, options.eigen_floor);
  if (repaired.modified)
    warnings.push_back("correlation repaired: min eigenvalue " + std::to_string(repaired.min_eigenvalue_before) +
                       " -> " + std::to_string(repaired.min_eigenvalue_after));

  CopulaModel model(data.plants, fplants, derived, std::move(marginals), std::move(repaired.matrix), n);
  for (auto& w : warnings) model.add_warning(std::move(w));
  return model;
}

UnivariateConditional::UnivariateConditional(EmpiricalMarginal base, double cond_mean, double cond_std,
                                             double scale_mw)
    : base_(std::move(base)), mean_(cond_mean), std_(cond_std), scale_mw_(scale_mw) {
  if (!(std_ > kStdFloor)) {
    std_ = kStdFloor;
    near_deterministic_ = true;
  }
}

double UnivariateConditional::cdf(double x) const {
  if (base_.is_point_mass()) return base_.cdf(x);
  const double f = base_.cdf(x);
  if (f <= 0.0) return 0.0;
  if (f >= 1.0) return 1.0;
  return normal_cdf((normal_quantile(f) - mean_) / std_);
}

double UnivariateConditional::pdf(double x) const {
  if (base_.is_point_mass()) return 0.0;
  const double f = base_.cdf(x);
  const double dens = base_.pdf(x);
  if (f <= 0.0 || f >= 1.0 || dens == 0.0) return 0.0;
  const double z = normal_quantile(f);
  return dens * normal_pdf((z - mean_) / std_) / (std_ * normal_pdf(z));
}

double UnivariateConditional::quantile(double beta) const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorKind::Domain, "quantile level must lie in [0,1]");
  if (base_.is_point_mass()) return base_.lower();
  return base_.inverse_cdf(normal_cdf(mean_ + std_ * normal_quantile(beta)));
}

Eigen::VectorXd UnivariateConditional::bin_masses() const {
  if (base_.is_point_mass()) return Eigen::VectorXd::Ones(1);
  const Eigen::Index b = base_.bins();
  Eigen::VectorXd g(b + 1);
  const auto& edges = base_.cdf_at_edges();
  for (Eigen::Index k = 0; k <= b; ++k) {
    const double f = edges(k);
    g(k) = f <= 0.0 ? 0.0 : f >= 1.0 ? 1.0 : normal_cdf((normal_quantile(f) - mean_) / std_);
  }
  g(0) = 0.0;
  g(b) = 1.0;
  return g.tail(b) - g.head(b);
}

double UnivariateConditional::mean() const {
  if (base_.is_point_mass()) return base_.lower();
  const Eigen::VectorXd m = bin_masses();
  double s = 0.0;
  for (Eigen::Index k = 0; k < m.size(); ++k) s += m(k) * (base_.edge(k) + 0.5 * base_.bin_width());
  return s;
}

UnivariateConditional full_conditional(const CopulaModel& model, Eigen::Index target,
                                       const std::map<Eigen::Index, double>& given) {
  const auto d = model.size();
  if (target < 0 || target >= d) throw Error(ErrorKind::Domain, "conditional target out of range");
  if (given.count(target)) throw Error(ErrorKind::Domain, "conditional target appears in the conditioning set");
  std::vector<Eigen::Index> idx;
  Eigen::VectorXd z(static_cast<Eigen::Index>(given.size()));
  for (const auto& [v, x] : given) {
    if (v < 0 || v >= d) throw Error(ErrorKind::Domain, "conditioning variable out of range");
    const auto& m = model.marginal(v);
    if (!(x >= m.lower() - 1e-12 && x <= m.upper() + 1e-12))
      throw Error(ErrorKind::Domain, "conditioning value " + std::to_string(x) + " for " +
                                         model.variables()[static_cast<std::size_t>(v)].label +
                                         " lies outside its support");
    z(static_cast<Eigen::Index>(idx.size())) = model.latent(v, x);
    idx.push_back(v);
  }
  const auto reg = gaussian_regression(model.correlation(), target, std::span<const Eigen::Index>(idx));
  const double mu = idx.empty() ? 0.0 : reg.coeffs.dot(z);
  const double sd = std::sqrt(std::max(reg.variance, 0.0));
  return UnivariateConditional(model.marginal(target), mu, sd,
                               model.variables()[static_cast<std::size_t>(target)].scale_mw);
}

namespace {

UnivariateConditional conditional_derived(const CopulaModel& model, const std::string& label,
                                          const Eigen::VectorXd& forecasts) {
  const auto target = model.find(label);
  if (!target) throw Error(ErrorKind::Config, "derived variable '" + label + "' was not registered at fit time");
  if (forecasts.size() != model.plant_count())
    throw Error(ErrorKind::Domain, "forecast vector must have one entry per plant");
  std::map<Eigen::Index, double> given;
  for (Eigen::Index j = 0; j < model.plant_count(); ++j)
    if (auto f = model.forecast_index(j)) given[*f] = forecasts(j);
  return full_conditional(model, *target, given);
}

}  // namespace

UnivariateConditional conditional_sum(const CopulaModel& model, const Eigen::VectorXd& forecasts) {
  return conditional_derived(model, "sum", forecasts);
}

UnivariateConditional conditional_line(const CopulaModel& model, Eigen::Index line, const Eigen::VectorXd& forecasts) {
  return conditional_derived(model, DerivedVariableSpec::line_label(line), forecasts);
}

void to_json(json& j, const CopulaModel& m) {
  json plants = json::array();
  for (const auto& p : m.plants())
    plants.push_back({{"name", p.name},
                      {"kind", to_string(p.kind)},
                      {"capacity_mw", exact_decimal(p.capacity_mw)},
                      {"bus", p.bus}});
  json derived = json::array();
  for (const auto& d : m.derived()) {
    json w = json::array();
    for (Eigen::Index k = 0; k < d.weights.size(); ++k) w.push_back(exact_decimal(d.weights(k)));
    derived.push_back({{"label", d.label}, {"weights_mw", w}});
  }
  json vars = json::array();
  for (Eigen::Index v = 0; v < m.size(); ++v) {
    const auto& info = m.variables()[static_cast<std::size_t>(v)];
    vars.push_back({{"label", info.label}, {"marginal", m.marginal(v)}});
  }
  json corr = json::array();
  for (Eigen::Index r = 0; r < m.size(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.size(); ++c) row.push_back(exact_decimal(m.correlation()(r, c)));
    corr.push_back(row);
  }
  j = {{"family", "gaussian"},
       {"sample_count", m.sample_count()},
       {"plants", plants},
       {"forecast_plants", m.forecast_plants()},
       {"derived", derived},
       {"variables", vars},
       {"correlation", corr},
       {"warnings", m.warnings()}};
}

CopulaModel copula_from_json(const json& j) {
  try {
    std::vector<PlantId> plants;
    for (const auto& p : j.at("plants")) {
      PlantId id;
      id.index = static_cast<int>(plants.size());
      id.name = p.at("name").get<std::string>();
      id.kind = plant_kind_from_string(p.at("kind").get<std::string>());
      id.capacity_mw = parse_exact_decimal(p.at("capacity_mw").get<std::string>());
      id.bus = p.at("bus").get<int>();
      plants.push_back(id);
    }
    std::vector<DerivedVariableSpec> derived;
    for (const auto& d : j.at("derived")) {
      DerivedVariableSpec s{d.at("label").get<std::string>(), Eigen::VectorXd(d.at("weights_mw").size())};
      for (std::size_t k = 0; k < d.at("weights_mw").size(); ++k)
        s.weights(static_cast<Eigen::Index>(k)) = parse_exact_decimal(d.at("weights_mw")[k].get<std::string>());
      derived.push_back(std::move(s));
    }
    std::vector<EmpiricalMarginal> marginals;
    for (const auto& v : j.at("variables")) marginals.push_back(v.at("marginal").get<EmpiricalMarginal>());
    const auto& cj = j.at("correlation");
    const auto d = static_cast<Eigen::Index>(cj.size());
    Eigen::MatrixXd corr(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c)
        corr(r, c) = parse_exact_decimal(cj.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<std::string>());
    CopulaModel m(std::move(plants), j.at("forecast_plants").get<std::vector<int>>(), std::move(derived),
                  std::move(marginals), std::move(corr), j.at("sample_count").get<Eigen::Index>());
    if (j.contains("warnings"))
      for (const auto& w : j.at("warnings")) m.add_warning(w.get<std::string>());
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("copula model artifact: ") + e.what());
  }
}

}  // namespace rted
