#include "rted/marginals.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "rted/error.hpp"

namespace rted {

EmpiricalMarginal::EmpiricalMarginal(double lower, double bin_width, Eigen::VectorXd masses)
    : lower_(lower), bin_width_(bin_width), masses_(std::move(masses)) {
  if (masses_.size() == 0) throw Error(ErrorKind::Domain, "histogram needs at least one bin");
  if (!(bin_width_ >= 0.0)) throw Error(ErrorKind::Domain, "negative bin width");
  if ((masses_.array() < 0.0).any() || !masses_.allFinite())
    throw Error(ErrorKind::Domain, "histogram masses must be finite and non-negative");
  const double total = masses_.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::Domain, "histogram has zero total mass");
  if (std::abs(total - 1.0) > 1e-12) masses_ /= total;
  upper_ = lower_ + static_cast<double>(masses_.size()) * bin_width_;
  build_cdf();
}

EmpiricalMarginal EmpiricalMarginal::point_mass(double value) {
  return EmpiricalMarginal(value, 0.0, Eigen::VectorXd::Ones(1));
}

void EmpiricalMarginal::build_cdf() {
  cdf_edges_.resize(masses_.size() + 1);
  cdf_edges_(0) = 0.0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < masses_.size(); ++k) {
    acc += masses_(k);
    cdf_edges_(k + 1) = acc;
  }
  cdf_edges_(masses_.size()) = 1.0;
  // Guard against rounding making the last interior edge exceed one.
  for (Eigen::Index k = masses_.size() - 1; k > 0 && cdf_edges_(k) > 1.0; --k) cdf_edges_(k) = 1.0;
}

double EmpiricalMarginal::cdf(double x) const {
  if (is_point_mass()) return x < lower_ ? 0.0 : 1.0;
  if (x <= lower_) return 0.0;
  if (x >= upper_) return 1.0;
  const double pos = (x - lower_) / bin_width_;
  const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), bins() - 1);
  const double frac = pos - static_cast<double>(k);
  return cdf_edges_(k) + frac * masses_(k);
}

double EmpiricalMarginal::pdf(double x) const {
  if (is_point_mass() || x < lower_ || x > upper_) return 0.0;
  const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>((x - lower_) / bin_width_), bins() - 1);
  return masses_(k) / bin_width_;
}

double EmpiricalMarginal::inverse_cdf(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw Error(ErrorKind::Domain, "inverse_cdf probability outside [0,1]");
  if (is_point_mass() || u == 0.0) return lower_;
  const double* first = cdf_edges_.data();
  const double* last = first + cdf_edges_.size();
  // first edge with cdf >= u; the segment ending there has positive mass.
  const auto k = static_cast<Eigen::Index>(std::lower_bound(first, last, u) - first);
  if (k == 0) return lower_;
  if (cdf_edges_(k) == u) return edge(k);
  const Eigen::Index bin = k - 1;
  const double m = masses_(bin);
  const double frac = m > 0.0 ? std::clamp((u - cdf_edges_(bin)) / m, 0.0, 1.0) : 1.0;
  if (frac >= 1.0) return edge(bin + 1);
  return std::min(upper_, edge(bin) + frac * bin_width_);
}

double EmpiricalMarginal::mean() const {
  if (is_point_mass()) return lower_;
  double m = 0.0;
  for (Eigen::Index k = 0; k < bins(); ++k) m += masses_(k) * (edge(k) + 0.5 * bin_width_);
  return m;
}

EmpiricalMarginal fit_pdh(std::span<const double> samples, const HistogramGrid& grid) {
  if (samples.empty()) throw Error(ErrorKind::Fit, "cannot fit a histogram to an empty sample");
  if (!(grid.bin_width > 0.0)) throw Error(ErrorKind::Domain, "bin width must be positive");
  const double span = (grid.upper - grid.lower) / grid.bin_width;
  const double rounded = std::round(span);
  if (rounded < 1.0 || std::abs(span - rounded) > 1e-9 * std::max(1.0, rounded))
    throw Error(ErrorKind::Domain, "bin width does not tile the support");
  const auto n_bins = static_cast<Eigen::Index>(rounded);
  const double upper = grid.lower + rounded * grid.bin_width;
  constexpr double slack = 1e-12;

  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_bins);
  for (double x : samples) {
    if (!std::isfinite(x) || x < grid.lower - slack || x > upper + slack)
      throw Error(ErrorKind::Domain, "sample " + std::to_string(x) + " outside histogram support");
    auto k = static_cast<Eigen::Index>(std::floor((x - grid.lower) / grid.bin_width));
    counts(std::clamp<Eigen::Index>(k, 0, n_bins - 1)) += 1.0;
  }
  return EmpiricalMarginal(grid.lower, grid.bin_width, std::move(counts));
}

std::string exact_decimal(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_exact_decimal(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::Format, "invalid decimal '" + s + "'");
  return v;
}

void to_json(nlohmann::json& j, const EmpiricalMarginal& m) {
  if (m.is_point_mass()) {
    j = {{"kind", "point_mass"}, {"value", exact_decimal(m.lower())}};
    return;
  }
  nlohmann::json edges = nlohmann::json::array(), masses = nlohmann::json::array();
  for (Eigen::Index k = 0; k <= m.bins(); ++k) edges.push_back(exact_decimal(m.edge(k)));
  for (Eigen::Index k = 0; k < m.bins(); ++k) masses.push_back(exact_decimal(m.masses()(k)));
  j = {{"kind", "histogram"},
       {"lower", exact_decimal(m.lower())},
       {"bin_width", exact_decimal(m.bin_width())},
       {"edges", std::move(edges)},
       {"masses", std::move(masses)}};
}

void from_json(const nlohmann::json& j, EmpiricalMarginal& m) {
  if (j.at("kind") == "point_mass") {
    m = EmpiricalMarginal::point_mass(parse_exact_decimal(j.at("value").get<std::string>()));
    return;
  }
  const auto& masses = j.at("masses");
  Eigen::VectorXd v(static_cast<Eigen::Index>(masses.size()));
  for (std::size_t k = 0; k < masses.size(); ++k)
    v(static_cast<Eigen::Index>(k)) = parse_exact_decimal(masses[k].get<std::string>());
  m = EmpiricalMarginal(parse_exact_decimal(j.at("lower").get<std::string>()),
                        parse_exact_decimal(j.at("bin_width").get<std::string>()), std::move(v));
}

}  // namespace rted
