#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>
#include "json.hpp"

namespace rted {

/// Probability density histogram on [lower, upper] with constant density inside
/// each bin, so the CDF is piecewise linear between bin edges.
///
/// A marginal built with `point_mass` has zero bin width and represents a
/// Dirac distribution at `lower == upper`.
class EmpiricalMarginal {
 public:
  EmpiricalMarginal() = default;

  /// Histogram with explicit masses. Masses are normalized to sum to one.
  EmpiricalMarginal(double lower, double bin_width, Eigen::VectorXd masses);

  static EmpiricalMarginal point_mass(double value);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double bin_width() const { return bin_width_; }
  Eigen::Index bins() const { return masses_.size(); }
  const Eigen::VectorXd& masses() const { return masses_; }
  const Eigen::VectorXd& cdf_at_edges() const { return cdf_edges_; }
  double edge(Eigen::Index k) const { return k == bins() ? upper_ : lower_ + static_cast<double>(k) * bin_width_; }
  bool is_point_mass() const { return bin_width_ == 0.0; }

  double cdf(double x) const;
  double pdf(double x) const;
  /// Generalized inverse inf{x : cdf(x) >= u}; flat segments resolve leftmost.
  double inverse_cdf(double u) const;
  double mean() const;

 private:
  void build_cdf();

  double lower_ = 0.0;
  double upper_ = 0.0;
  double bin_width_ = 0.0;
  Eigen::VectorXd masses_;
  Eigen::VectorXd cdf_edges_;
};

struct HistogramGrid {
  double lower = 0.0;
  double upper = 1.0;
  double bin_width = 0.01;
};

/// Fit a PDH: per-bin mass = count / total. Samples equal to `upper` land in
/// the last bin. Throws Fit on empty input, Domain on samples outside the grid
/// or a width that does not tile [lower, upper].
EmpiricalMarginal fit_pdh(std::span<const double> samples, const HistogramGrid& grid = {});

void to_json(nlohmann::json& j, const EmpiricalMarginal& m);
void from_json(const nlohmann::json& j, EmpiricalMarginal& m);

/// Shortest decimal string that round-trips to the same double.
std::string exact_decimal(double v);
double parse_exact_decimal(const std::string& s);

}  // namespace rted
