#pragma once

#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace rted {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { Le, Ge, Eq };

struct Term {
  Eigen::Index var;
  double coef;
};

struct LpRow {
  std::string label;
  std::vector<Term> terms;
  RowSense sense = RowSense::Le;
  double rhs = 0.0;
};

/// min c.x + offset  s.t.  rows, lo <= x <= hi.
class LinearProgram {
 public:
  explicit LinearProgram(std::string name = "lp") : name_(std::move(name)) {}

  Eigen::Index add_variable(std::string label, double lo, double hi, double cost = 0.0);
  Eigen::Index add_row(std::string label, std::vector<Term> terms, RowSense sense, double rhs);

  void set_cost(Eigen::Index var, double c) { cost_[static_cast<std::size_t>(var)] = c; }
  void set_bounds(Eigen::Index var, double lo, double hi);
  void set_rhs(Eigen::Index row, double rhs) { rows_[static_cast<std::size_t>(row)].rhs = rhs; }
  void add_offset(double v) { offset_ += v; }
  void set_offset(double v) { offset_ = v; }

  const std::string& name() const { return name_; }
  Eigen::Index num_vars() const { return static_cast<Eigen::Index>(cost_.size()); }
  Eigen::Index num_rows() const { return static_cast<Eigen::Index>(rows_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& lower() const { return lo_; }
  const std::vector<double>& upper() const { return hi_; }
  const std::vector<double>& cost() const { return cost_; }
  const std::vector<LpRow>& rows() const { return rows_; }
  double offset() const { return offset_; }
  Eigen::Index nonzeros() const;

  /// Index of a labelled variable, or -1.
  Eigen::Index find_variable(const std::string& label) const;

  Eigen::MatrixXd dense_matrix() const;
  Eigen::VectorXd rhs_vector() const;

  /// Finite coefficients, lo <= hi, unique labels without whitespace.
  void validate() const;

 private:
  std::string name_;
  std::vector<std::string> labels_;
  std::vector<double> lo_, hi_, cost_;
  std::vector<LpRow> rows_;
  std::unordered_map<std::string, Eigen::Index> index_;
  double offset_ = 0.0;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };
const char* to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective_value = 0.0;
  /// Row multipliers y (d objective / d rhs at Optimal; phase-one
  /// multipliers of the infeasibility at Infeasible).
  Eigen::VectorXd row_duals;
  /// c - A^T y per variable.
  Eigen::VectorXd reduced_costs;
  Eigen::VectorXd row_activity;
  std::vector<Eigen::Index> basic_variables;  // structural variables in the final basis
  int iterations = 0;
  /// Sum of artificial values left after phase one (Infeasible only).
  double infeasibility = 0.0;
  /// Rows that could not be satisfied, by label (Infeasible only).
  std::vector<std::string> infeasible_rows;
};

struct SolverOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  int max_iters = 200000;
};

/// Two-phase bounded-variable primal simplex on a dense basis inverse.
/// Dantzig pricing; on degenerate steps the entering and leaving choices
/// switch to Bland's smallest-index rule.
LpSolution solve(const LinearProgram& lp, const SolverOptions& options = {});

/// Primal objective minus the dual bound b.y + sum of bound terms, using the
/// solution's row duals. Infinite when the reduced costs are dual infeasible.
double duality_gap(const LinearProgram& lp, const LpSolution& sol, double tol = 1e-9);

/// Largest row or bound violation of x.
double max_violation(const LinearProgram& lp, const Eigen::VectorXd& x);

/// MPS with the fixed-format column layout where names and numbers fit,
/// whitespace-separated otherwise. The objective constant is written as the
/// negated RHS of the objective row.
std::string export_mps(const LinearProgram& lp);
LinearProgram parse_mps(const std::string& text);

}  // namespace rted
