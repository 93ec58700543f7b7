#include "rted/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rted::stats {

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return 1.0;
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

double ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf) {
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

namespace {

Eigen::MatrixX2d pseudo_observations(const Eigen::MatrixX2d& x) {
  Eigen::MatrixX2d u(x.rows(), 2);
  const double n1 = static_cast<double>(x.rows()) + 1.0;
  for (int c = 0; c < 2; ++c) {
    std::vector<double> col(x.col(c).data(), x.col(c).data() + x.rows());
    const auto r = mid_ranks(col);
    for (Eigen::Index i = 0; i < x.rows(); ++i) u(i, c) = r[i] / n1;
  }
  return u;
}

// Bivariate ECDF on a lattice via 2-D cumulative counts.
Eigen::MatrixXd lattice_ecdf(const Eigen::MatrixX2d& u, int grid) {
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(grid, grid);
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const int a = std::min(grid - 1, static_cast<int>(std::ceil(u(i, 0) * grid)) - 1);
    const int b = std::min(grid - 1, static_cast<int>(std::ceil(u(i, 1) * grid)) - 1);
    counts(std::max(a, 0), std::max(b, 0)) += 1.0;
  }
  for (int r = 0; r < grid; ++r)
    for (int c = 0; c < grid; ++c) {
      if (r > 0) counts(r, c) += counts(r - 1, c);
      if (c > 0) counts(r, c) += counts(r, c - 1);
      if (r > 0 && c > 0) counts(r, c) -= counts(r - 1, c - 1);
    }
  return counts / static_cast<double>(u.rows());
}

}  // namespace

double empirical_copula_ks(const Eigen::MatrixX2d& a, const Eigen::MatrixX2d& b, int grid) {
  const Eigen::MatrixXd ca = lattice_ecdf(pseudo_observations(a), grid);
  const Eigen::MatrixXd cb = lattice_ecdf(pseudo_observations(b), grid);
  return (ca - cb).cwiseAbs().maxCoeff();
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data) {
  const Eigen::RowVectorXd mu = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mu;
  Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index j = 0; j < cov.cols(); ++j) cov(i, j) /= sd(i) * sd(j);
  return cov;
}

std::vector<double> mid_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace rted::stats
