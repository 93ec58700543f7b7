#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rted::stats {

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
/// Handles ties (discrete samples) exactly.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample KS statistic against a continuous CDF.
double ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Sup distance between the empirical copulas (rank transforms) of two
/// bivariate samples, evaluated on a `grid` x `grid` lattice of (u, v).
double empirical_copula_ks(const Eigen::MatrixX2d& a, const Eigen::MatrixX2d& b, int grid = 50);

double pearson(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);
double stddev(std::span<const double> x);

/// Pearson correlation matrix of the columns of `data`.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data);

/// Mid-ranks (1-based, ties averaged).
std::vector<double> mid_ranks(std::span<const double> x);

}  // namespace rted::stats
