#pragma once

// Test-side reference computations. These deliberately avoid the library's
// own samplers and transforms.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Inverse normal CDF by bisection on erfc.
inline double phi_inv(double u) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (phi_cdf(mid) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Beta(2,5) CDF in closed form: 1 - (1-x)^6 - 6x(1-x)^5.
inline double beta25_cdf(double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  return 1.0 - std::pow(1 - x, 6) - 6 * x * std::pow(1 - x, 5);
}

inline double beta_draw(std::mt19937_64& g, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(g), y = gb(g);
  return x / (x + y);
}

// Rows of correlated standard normals via Cholesky of `corr`.
inline Eigen::MatrixXd gaussian_rows(std::mt19937_64& g, const Eigen::MatrixXd& corr, int n) {
  std::normal_distribution<double> nd;
  const Eigen::MatrixXd l = corr.llt().matrixL();
  Eigen::MatrixXd out(n, corr.rows());
  Eigen::VectorXd e(corr.rows());
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = nd(g);
    out.row(i) = (l * e).transpose();
  }
  return out;
}

// Textbook conditioning by explicit inverse of the given block.
inline std::pair<double, double> gaussian_condition(const Eigen::MatrixXd& s, int target, const std::vector<int>& given,
                                                    const Eigen::VectorXd& zg) {
  const int g = static_cast<int>(given.size());
  Eigen::MatrixXd sgg(g, g);
  Eigen::VectorXd sgt(g);
  for (int a = 0; a < g; ++a) {
    sgt(a) = s(given[a], target);
    for (int b = 0; b < g; ++b) sgg(a, b) = s(given[a], given[b]);
  }
  const Eigen::MatrixXd inv = sgg.inverse();
  return {sgt.dot(inv * zg), std::sqrt(s(target, target) - sgt.dot(inv * sgt))};
}

// Simpson quadrature of f on [a, b] with n (even) panels.
template <typename F>
double simpson(F&& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace oracle
