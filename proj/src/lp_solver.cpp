#include "rted/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rted/error.hpp"
#include "rted/marginals.hpp"

namespace rted {

Eigen::Index LinearProgram::add_variable(std::string label, double lo, double hi, double cost) {
  if (index_.count(label)) throw Error(ErrorKind::Domain, "duplicate variable label '" + label + "'");
  const auto j = num_vars();
  index_.emplace(label, j);
  labels_.push_back(std::move(label));
  lo_.push_back(lo);
  hi_.push_back(hi);
  cost_.push_back(cost);
  return j;
}

Eigen::Index LinearProgram::add_row(std::string label, std::vector<Term> terms, RowSense sense, double rhs) {
  for (const auto& t : terms)
    if (t.var < 0 || t.var >= num_vars())
      throw Error(ErrorKind::Domain, "row '" + label + "' references an unknown variable");
  rows_.push_back({std::move(label), std::move(terms), sense, rhs});
  return num_rows() - 1;
}

void LinearProgram::set_bounds(Eigen::Index var, double lo, double hi) {
  lo_[static_cast<std::size_t>(var)] = lo;
  hi_[static_cast<std::size_t>(var)] = hi;
}

Eigen::Index LinearProgram::nonzeros() const {
  Eigen::Index n = 0;
  for (const auto& r : rows_) n += static_cast<Eigen::Index>(r.terms.size());
  return n;
}

Eigen::Index LinearProgram::find_variable(const std::string& label) const {
  const auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

Eigen::MatrixXd LinearProgram::dense_matrix() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(num_rows(), num_vars());
  for (Eigen::Index i = 0; i < num_rows(); ++i)
    for (const auto& t : rows_[static_cast<std::size_t>(i)].terms) a(i, t.var) += t.coef;
  return a;
}

Eigen::VectorXd LinearProgram::rhs_vector() const {
  Eigen::VectorXd b(num_rows());
  for (Eigen::Index i = 0; i < num_rows(); ++i) b(i) = rows_[static_cast<std::size_t>(i)].rhs;
  return b;
}

void LinearProgram::validate() const {
  auto bad_label = [](const std::string& s) {
    return s.empty() || std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
  };
  for (Eigen::Index j = 0; j < num_vars(); ++j) {
    const auto& l = labels_[static_cast<std::size_t>(j)];
    if (bad_label(l)) throw Error(ErrorKind::Domain, "variable label '" + l + "' is empty or contains whitespace");
    const double lo = lo_[static_cast<std::size_t>(j)], hi = hi_[static_cast<std::size_t>(j)];
    if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kInf || hi == -kInf)
      throw Error(ErrorKind::Domain, "variable '" + l + "' has invalid bounds");
    if (!std::isfinite(cost_[static_cast<std::size_t>(j)]))
      throw Error(ErrorKind::Domain, "variable '" + l + "' has a non-finite cost");
  }
  std::unordered_map<std::string, int> seen;
  for (const auto& r : rows_) {
    if (bad_label(r.label)) throw Error(ErrorKind::Domain, "row label '" + r.label + "' is empty or contains whitespace");
    if (!seen.emplace(r.label, 1).second) throw Error(ErrorKind::Domain, "duplicate row label '" + r.label + "'");
    if (index_.count(r.label)) throw Error(ErrorKind::Domain, "row label '" + r.label + "' clashes with a variable");
    if (!std::isfinite(r.rhs)) throw Error(ErrorKind::Domain, "row '" + r.label + "' has a non-finite rhs");
    for (const auto& t : r.terms)
      if (!std::isfinite(t.coef)) throw Error(ErrorKind::Domain, "row '" + r.label + "' has a non-finite coefficient");
  }
  if (!std::isfinite(offset_)) throw Error(ErrorKind::Domain, "non-finite objective offset");
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

namespace {

using Index = Eigen::Index;
using Entries = std::vector<std::pair<Index, double>>;

enum class State : unsigned char { Basic, AtLower, AtUpper, FreeZero };

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SolverOptions& opt) : lp_(lp), opt_(opt) {
    m_ = lp.num_rows();
    n_ = lp.num_vars();
    cols_.assign(static_cast<std::size_t>(n_), {});
    for (Index i = 0; i < m_; ++i)
      for (const auto& t : lp.rows()[static_cast<std::size_t>(i)].terms)
        if (t.coef != 0.0) cols_[static_cast<std::size_t>(t.var)].emplace_back(i, t.coef);
    // Merge repeated (row, var) terms.
    for (auto& c : cols_) {
      std::sort(c.begin(), c.end(), [](auto& a, auto& b) { return a.first < b.first; });
      Entries merged;
      for (const auto& e : c) {
        if (!merged.empty() && merged.back().first == e.first)
          merged.back().second += e.second;
        else
          merged.push_back(e);
      }
      c.swap(merged);
    }
    b_ = lp.rhs_vector();
    bmax_ = b_.size() ? b_.cwiseAbs().maxCoeff() : 0.0;
  }

  LpSolution run() {
    setup();
    LpSolution sol;
    if (!art_row_.empty()) {
      phase_costs(true);
      const auto st = iterate();
      (void)st;  // phase one is bounded below by zero
      double infeas = 0.0;
      for (std::size_t k = 0; k < art_row_.size(); ++k) infeas += x_(n_ + m_ + static_cast<Index>(k));
      if (infeas > 1e-8 * (1.0 + bmax_)) {
        sol.status = LpStatus::Infeasible;
        sol.infeasibility = infeas;
        sol.row_duals = y_;
        for (std::size_t k = 0; k < art_row_.size(); ++k)
          if (x_(n_ + m_ + static_cast<Index>(k)) > opt_.feas_tol)
            sol.infeasible_rows.push_back(lp_.rows()[static_cast<std::size_t>(art_row_[k])].label);
        fill_primal(sol);
        return sol;
      }
      for (std::size_t k = 0; k < art_row_.size(); ++k) {
        const Index j = n_ + m_ + static_cast<Index>(k);
        lo_(j) = hi_(j) = 0.0;
        if (state_[static_cast<std::size_t>(j)] != State::Basic) {
          x_(j) = 0.0;
          state_[static_cast<std::size_t>(j)] = State::AtLower;
        }
      }
    }
    phase_costs(false);
    const auto st = iterate();
    sol.status = st;
    fill_primal(sol);
    sol.row_duals = y_;
    sol.reduced_costs.resize(n_);
    for (Index j = 0; j < n_; ++j) sol.reduced_costs(j) = reduced_cost(j);
    for (Index p = 0; p < m_; ++p)
      if (basis_[static_cast<std::size_t>(p)] < n_) sol.basic_variables.push_back(basis_[static_cast<std::size_t>(p)]);
    std::sort(sol.basic_variables.begin(), sol.basic_variables.end());
    return sol;
  }

 private:
  Index total() const { return n_ + m_ + static_cast<Index>(art_row_.size()); }

  template <typename F>
  void for_column(Index j, F&& f) const {
    if (j < n_) {
      for (const auto& [r, v] : cols_[static_cast<std::size_t>(j)]) f(r, v);
    } else if (j < n_ + m_) {
      f(j - n_, 1.0);
    } else {
      const auto k = static_cast<std::size_t>(j - n_ - m_);
      f(art_row_[k], art_sign_[k]);
    }
  }

  void setup() {
    std::vector<double> lo, hi;
    for (Index j = 0; j < n_; ++j) {
      lo.push_back(lp_.lower()[static_cast<std::size_t>(j)]);
      hi.push_back(lp_.upper()[static_cast<std::size_t>(j)]);
    }
    for (Index i = 0; i < m_; ++i) {
      switch (lp_.rows()[static_cast<std::size_t>(i)].sense) {
        case RowSense::Le: lo.push_back(0.0), hi.push_back(kInf); break;
        case RowSense::Ge: lo.push_back(-kInf), hi.push_back(0.0); break;
        case RowSense::Eq: lo.push_back(0.0), hi.push_back(0.0); break;
      }
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_ + m_);
    state_.assign(static_cast<std::size_t>(n_ + m_), State::AtLower);
    for (Index j = 0; j < n_; ++j) {
      const double l = lo[static_cast<std::size_t>(j)], h = hi[static_cast<std::size_t>(j)];
      if (std::isfinite(l)) {
        x(j) = l;
      } else if (std::isfinite(h)) {
        x(j) = h;
        state_[static_cast<std::size_t>(j)] = State::AtUpper;
      } else {
        state_[static_cast<std::size_t>(j)] = State::FreeZero;
      }
    }
    Eigen::VectorXd s = b_;
    for (Index j = 0; j < n_; ++j)
      if (x(j) != 0.0)
        for (const auto& [r, v] : cols_[static_cast<std::size_t>(j)]) s(r) -= v * x(j);

    basis_.assign(static_cast<std::size_t>(m_), -1);
    std::vector<double> sign(static_cast<std::size_t>(m_), 1.0);
    for (Index i = 0; i < m_; ++i) {
      const Index sj = n_ + i;
      const double l = lo[static_cast<std::size_t>(sj)], h = hi[static_cast<std::size_t>(sj)];
      if (s(i) >= l - opt_.feas_tol && s(i) <= h + opt_.feas_tol) {
        basis_[static_cast<std::size_t>(i)] = sj;
        x(sj) = std::clamp(s(i), l, h);
        state_[static_cast<std::size_t>(sj)] = State::Basic;
      } else {
        const double v = s(i) < l ? l : h;
        x(sj) = v;
        state_[static_cast<std::size_t>(sj)] = s(i) < l ? State::AtLower : State::AtUpper;
        art_row_.push_back(i);
        art_sign_.push_back(s(i) > v ? 1.0 : -1.0);
        sign[static_cast<std::size_t>(i)] = art_sign_.back();
      }
    }
    const Index nt = total();
    lo_.resize(nt);
    hi_.resize(nt);
    x_.resize(nt);
    for (Index j = 0; j < n_ + m_; ++j) {
      lo_(j) = lo[static_cast<std::size_t>(j)];
      hi_(j) = hi[static_cast<std::size_t>(j)];
      x_(j) = x(j);
    }
    for (std::size_t k = 0; k < art_row_.size(); ++k) {
      const Index j = n_ + m_ + static_cast<Index>(k);
      const Index i = art_row_[k];
      lo_(j) = 0.0;
      hi_(j) = kInf;
      x_(j) = std::abs(s(i) - x(n_ + i));
      basis_[static_cast<std::size_t>(i)] = j;
      state_.push_back(State::Basic);
    }
    binv_ = Eigen::MatrixXd::Zero(m_, m_);
    for (Index i = 0; i < m_; ++i) binv_(i, i) = sign[static_cast<std::size_t>(i)];
    cost_.resize(nt);
  }

  void phase_costs(bool phase_one) {
    cost_.setZero();
    if (phase_one) {
      cost_.tail(static_cast<Index>(art_row_.size())).setOnes();
    } else {
      for (Index j = 0; j < n_; ++j) cost_(j) = lp_.cost()[static_cast<std::size_t>(j)];
    }
    compute_duals();
  }

  void compute_duals() {
    Eigen::VectorXd cb(m_);
    for (Index p = 0; p < m_; ++p) cb(p) = cost_(basis_[static_cast<std::size_t>(p)]);
    y_.noalias() = binv_.transpose() * cb;
  }

  double reduced_cost(Index j) const {
    double d = cost_(j);
    for_column(j, [&](Index r, double v) { d -= y_(r) * v; });
    return d;
  }

  void ftran(Index j, Eigen::VectorXd& alpha) const {
    alpha.setZero(m_);
    for_column(j, [&](Index r, double v) { alpha.noalias() += v * binv_.col(r); });
  }

  // Basic values from scratch: x_B = B^-1 (b - N x_N).
  void recompute_basics() {
    Eigen::VectorXd r = b_;
    for (Index j = 0; j < total(); ++j)
      if (state_[static_cast<std::size_t>(j)] != State::Basic && x_(j) != 0.0)
        for_column(j, [&](Index row, double v) { r(row) -= v * x_(j); });
    const Eigen::VectorXd xb = binv_ * r;
    for (Index p = 0; p < m_; ++p) x_(basis_[static_cast<std::size_t>(p)]) = xb(p);
  }

  double residual() const {
    Eigen::VectorXd r = b_;
    for (Index j = 0; j < total(); ++j)
      if (x_(j) != 0.0) for_column(j, [&](Index row, double v) { r(row) -= v * x_(j); });
    return m_ ? r.cwiseAbs().maxCoeff() : 0.0;
  }

  // Rebuild B^-1 exploiting unit (slack and artificial) columns: only the
  // block of structural columns on the rows not covered by units is inverted.
  void reinvert() {
    std::vector<Index> unit_pos_of_row(static_cast<std::size_t>(m_), -1);
    std::vector<double> unit_sign(static_cast<std::size_t>(m_), 0.0);
    std::vector<Index> struct_pos;
    for (Index p = 0; p < m_; ++p) {
      const Index j = basis_[static_cast<std::size_t>(p)];
      if (j >= n_) {
        Index row = 0;
        double sg = 1.0;
        for_column(j, [&](Index r, double v) { row = r, sg = v; });
        unit_pos_of_row[static_cast<std::size_t>(row)] = p;
        unit_sign[static_cast<std::size_t>(row)] = sg;
      } else {
        struct_pos.push_back(p);
      }
    }
    std::vector<Index> free_rows;
    std::vector<Index> row_slot(static_cast<std::size_t>(m_), -1);
    for (Index i = 0; i < m_; ++i)
      if (unit_pos_of_row[static_cast<std::size_t>(i)] < 0) {
        row_slot[static_cast<std::size_t>(i)] = static_cast<Index>(free_rows.size());
        free_rows.push_back(i);
      }
    const auto k = static_cast<Index>(struct_pos.size());
    if (static_cast<Index>(free_rows.size()) != k) throw Error(ErrorKind::Numerical, "basis bookkeeping failed");
    // A_RK and A_LK.
    Eigen::MatrixXd ark = Eigen::MatrixXd::Zero(k, k);
    for (Index a = 0; a < k; ++a)
      for (const auto& [r, v] : cols_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(struct_pos[static_cast<std::size_t>(a)])])])
        if (row_slot[static_cast<std::size_t>(r)] >= 0) ark(row_slot[static_cast<std::size_t>(r)], a) = v;
    binv_.setZero();
    Eigen::MatrixXd minv;
    if (k > 0) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(ark);
      minv = lu.inverse();
      if (!minv.allFinite()) throw Error(ErrorKind::Numerical, "singular basis during reinversion");
      for (Index a = 0; a < k; ++a)
        for (Index c = 0; c < k; ++c) binv_(struct_pos[static_cast<std::size_t>(a)], free_rows[static_cast<std::size_t>(c)]) = minv(a, c);
    }
    // Unit rows: z_p = sign * (e_i - sum_a A_{i,K_a} z_{K_a}).
    for (Index i = 0; i < m_; ++i) {
      const Index p = unit_pos_of_row[static_cast<std::size_t>(i)];
      if (p < 0) continue;
      const double sg = unit_sign[static_cast<std::size_t>(i)];
      binv_(p, i) = sg;
    }
    for (Index a = 0; a < k; ++a) {
      const Index pa = struct_pos[static_cast<std::size_t>(a)];
      for (const auto& [r, v] : cols_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(pa)])]) {
        const Index p = unit_pos_of_row[static_cast<std::size_t>(r)];
        if (p < 0) continue;
        binv_.row(p).noalias() -= unit_sign[static_cast<std::size_t>(r)] * v * binv_.row(pa);
      }
    }
    recompute_basics();
    compute_duals();
  }

  LpStatus iterate() {
    Eigen::VectorXd alpha(m_);
    bool bland = false;
    int since_check = 0;
    bool verified = false;
    while (true) {
      if (iters_ >= opt_.max_iters)
        throw Error(ErrorKind::Resource, "simplex iteration cap of " + std::to_string(opt_.max_iters) + " reached");

      // Pricing.
      Index q = -1;
      double best = 0.0, dq = 0.0;
      int dir = 0;
      for (Index j = 0; j < total(); ++j) {
        const State s = state_[static_cast<std::size_t>(j)];
        if (s == State::Basic || lo_(j) == hi_(j)) continue;
        const double d = reduced_cost(j);
        int dj = 0;
        if (d < -opt_.opt_tol && (s == State::AtLower || s == State::FreeZero)) dj = 1;
        if (d > opt_.opt_tol && (s == State::AtUpper || s == State::FreeZero)) dj = -1;
        if (!dj) continue;
        if (bland) {
          q = j, dq = d, dir = dj;
          break;
        }
        if (std::abs(d) > best) best = std::abs(d), q = j, dq = d, dir = dj;
      }
      if (q < 0) {
        // Confirm optimality on a fresh factorization once.
        if (!verified && (iters_ > 0 || residual() > 1e-9 * (1.0 + bmax_))) {
          reinvert();
          verified = true;
          continue;
        }
        return LpStatus::Optimal;
      }
      verified = false;
      (void)dq;

      ftran(q, alpha);
      // Ratio test on x_B(t) = x_B - dir * t * alpha, in two passes (Harris):
      // the first bounds the step with tolerance-relaxed limits, the second
      // takes the largest pivot among rows blocking within that bound, which
      // keeps tiny pivots out of the basis.
      constexpr double kPivotTol = 1e-9;
      auto ratio = [&](Index p, double slack) {
        const double a = dir * alpha(p);
        const Index j = basis_[static_cast<std::size_t>(p)];
        if (a > 0.0) return lo_(j) == -kInf ? kInf : (x_(j) - lo_(j) + slack) / a;
        return hi_(j) == kInf ? kInf : (hi_(j) - x_(j) + slack) / -a;
      };
      double bound = kInf;
      for (Index p = 0; p < m_; ++p)
        if (std::abs(alpha(p)) > kPivotTol) bound = std::min(bound, ratio(p, opt_.feas_tol));
      bound = std::max(bound, 0.0);  // a basic already past its bound blocks at once
      double tmax = hi_(q) - lo_(q);  // bound flip distance (inf for free/one-sided)
      Index leave = -1;
      bool leave_to_upper = false;
      if (bound < kInf) {
        double best_piv = 0.0, best_t = kInf;
        for (Index p = 0; p < m_; ++p) {
          const double a = dir * alpha(p);
          if (std::abs(a) <= kPivotTol) continue;
          const double t = std::max(0.0, ratio(p, 0.0));
          if (t > bound) continue;
          bool take = leave < 0;
          if (!take && bland)
            // Bland: smallest ratio, ties to the smallest variable index.
            take = t < best_t - 1e-12 ||
                   (t <= best_t + 1e-12 && basis_[static_cast<std::size_t>(p)] < basis_[static_cast<std::size_t>(leave)]);
          else if (!take)
            take = std::abs(a) > best_piv;
          if (take) leave = p, best_piv = std::abs(a), best_t = t, leave_to_upper = a < 0.0;
        }
        if (best_t < tmax)
          tmax = best_t;
        else
          leave = -1;
      }
      if (tmax == kInf) return LpStatus::Unbounded;
      ++iters_;
      bland = tmax <= 1e-12;

      const double step = dir * tmax;
      x_(q) += step;
      if (step != 0.0)
        for (Index p = 0; p < m_; ++p)
          if (alpha(p) != 0.0) x_(basis_[static_cast<std::size_t>(p)]) -= step * alpha(p);

      if (leave < 0) {
        // Bound flip.
        state_[static_cast<std::size_t>(q)] = dir > 0 ? State::AtUpper : State::AtLower;
        x_(q) = dir > 0 ? hi_(q) : lo_(q);
      } else {
        const Index out = basis_[static_cast<std::size_t>(leave)];
        x_(out) = leave_to_upper ? hi_(out) : lo_(out);
        state_[static_cast<std::size_t>(out)] = leave_to_upper ? State::AtUpper : State::AtLower;
        state_[static_cast<std::size_t>(q)] = State::Basic;
        basis_[static_cast<std::size_t>(leave)] = q;
        const double piv = alpha(leave);
        const Eigen::RowVectorXd rho = binv_.row(leave) / piv;
        alpha(leave) -= 1.0;
        binv_.noalias() -= alpha * rho;
        compute_duals();
      }

      if (++since_check >= 50) {
        since_check = 0;
        if (residual() > 1e-9 * (1.0 + bmax_)) reinvert();
      }
    }
  }

  void fill_primal(LpSolution& sol) const {
    sol.iterations = iters_;
    sol.x.resize(n_);
    for (Index j = 0; j < n_; ++j) {
      double v = x_(j);
      // Snap round-off onto the bounds.
      if (std::abs(v - lo_(j)) <= 1e-11 * (1.0 + std::abs(v))) v = lo_(j);
      if (std::abs(v - hi_(j)) <= 1e-11 * (1.0 + std::abs(v))) v = hi_(j);
      sol.x(j) = v;
    }
    sol.row_activity = Eigen::VectorXd::Zero(m_);
    for (Index j = 0; j < n_; ++j)
      for (const auto& [r, v] : cols_[static_cast<std::size_t>(j)]) sol.row_activity(r) += v * sol.x(j);
    double obj = lp_.offset();
    for (Index j = 0; j < n_; ++j) obj += lp_.cost()[static_cast<std::size_t>(j)] * sol.x(j);
    sol.objective_value = obj;
  }

  const LinearProgram& lp_;
  SolverOptions opt_;
  Index m_ = 0, n_ = 0;
  std::vector<Entries> cols_;
  std::vector<Index> art_row_;
  std::vector<double> art_sign_;
  Eigen::VectorXd b_, lo_, hi_, x_, cost_, y_;
  double bmax_ = 0.0;
  std::vector<State> state_;
  std::vector<Index> basis_;
  Eigen::MatrixXd binv_;
  int iters_ = 0;
};

}  // namespace

LpSolution solve(const LinearProgram& lp, const SolverOptions& options) {
  lp.validate();
  Simplex s(lp, options);
  return s.run();
}

double duality_gap(const LinearProgram& lp, const LpSolution& sol, double tol) {
  if (sol.status != LpStatus::Optimal) return kInf;
  const auto& y = sol.row_duals;
  double dual = lp.offset();
  for (Eigen::Index i = 0; i < lp.num_rows(); ++i) {
    const auto& r = lp.rows()[static_cast<std::size_t>(i)];
    // Slack sign conditions: y <= 0 on <=, y >= 0 on >= (minimization).
    if ((r.sense == RowSense::Le && y(i) > tol) || (r.sense == RowSense::Ge && y(i) < -tol)) return kInf;
    dual += r.rhs * y(i);
  }
  const Eigen::VectorXd at_y = lp.dense_matrix().transpose() * y;
  for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
    const double d = lp.cost()[static_cast<std::size_t>(j)] - at_y(j);
    const double lo = lp.lower()[static_cast<std::size_t>(j)], hi = lp.upper()[static_cast<std::size_t>(j)];
    if (d > tol) {
      if (lo == -kInf) return kInf;
      dual += d * lo;
    } else if (d < -tol) {
      if (hi == kInf) return kInf;
      dual += d * hi;
    } else {
      dual += d * sol.x(j);
    }
  }
  return std::abs(sol.objective_value - dual);
}

double max_violation(const LinearProgram& lp, const Eigen::VectorXd& x) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
    worst = std::max(worst, lp.lower()[static_cast<std::size_t>(j)] - x(j));
    worst = std::max(worst, x(j) - lp.upper()[static_cast<std::size_t>(j)]);
  }
  for (const auto& r : lp.rows()) {
    double a = 0.0;
    for (const auto& t : r.terms) a += t.coef * x(t.var);
    if (r.sense != RowSense::Ge) worst = std::max(worst, a - r.rhs);
    if (r.sense != RowSense::Le) worst = std::max(worst, r.rhs - a);
  }
  return worst;
}

namespace {

// Fixed MPS fields start at columns 2, 5, 15, 25, 40, 50 (1-based).
void field(std::string& line, std::size_t column, const std::string& text) {
  if (line.size() < column - 1) line.append(column - 1 - line.size(), ' ');
  else if (!line.empty() && line.back() != ' ') line.push_back(' ');
  line += text;
}

std::string data_line(const std::string& f1, const std::string& n1, const std::string& n2, const std::string& v2,
                      const std::string& n3 = {}, const std::string& v3 = {}) {
  std::string line;
  field(line, 2, f1);
  field(line, 5, n1);
  field(line, 15, n2);
  field(line, 25, v2);
  if (!n3.empty()) {
    field(line, 40, n3);
    field(line, 50, v3);
  }
  while (!line.empty() && line.back() == ' ') line.pop_back();
  return line;
}

constexpr const char* kObjRow = "COST";

}  // namespace

std::string export_mps(const LinearProgram& lp) {
  lp.validate();
  std::ostringstream out;
  out << "NAME          " << lp.name() << '\n';
  out << "ROWS\n";
  out << " N  " << kObjRow << '\n';
  for (const auto& r : lp.rows())
    out << ' ' << (r.sense == RowSense::Le ? 'L' : r.sense == RowSense::Ge ? 'G' : 'E') << "  " << r.label << '\n';
  out << "COLUMNS\n";
  std::vector<std::vector<std::pair<std::size_t, double>>> cols(static_cast<std::size_t>(lp.num_vars()));
  for (std::size_t i = 0; i < lp.rows().size(); ++i)
    for (const auto& t : lp.rows()[i].terms) cols[static_cast<std::size_t>(t.var)].emplace_back(i, t.coef);
  for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
    const auto& name = lp.labels()[static_cast<std::size_t>(j)];
    const double c = lp.cost()[static_cast<std::size_t>(j)];
    auto& col = cols[static_cast<std::size_t>(j)];
    if (c != 0.0 || col.empty()) out << data_line("", name, kObjRow, exact_decimal(c)) << '\n';
    for (const auto& [i, v] : col) out << data_line("", name, lp.rows()[i].label, exact_decimal(v)) << '\n';
  }
  out << "RHS\n";
  if (lp.offset() != 0.0) out << data_line("", "RHS", kObjRow, exact_decimal(-lp.offset())) << '\n';
  for (const auto& r : lp.rows())
    if (r.rhs != 0.0) out << data_line("", "RHS", r.label, exact_decimal(r.rhs)) << '\n';
  out << "BOUNDS\n";
  for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
    const auto& name = lp.labels()[static_cast<std::size_t>(j)];
    const double lo = lp.lower()[static_cast<std::size_t>(j)], hi = lp.upper()[static_cast<std::size_t>(j)];
    if (lo == hi) {
      out << data_line("FX", "BND", name, exact_decimal(lo)) << '\n';
      continue;
    }
    if (lo == -kInf && hi == kInf) {
      out << data_line("FR", "BND", name, "") << '\n';
      continue;
    }
    if (lo == -kInf)
      out << data_line("MI", "BND", name, "") << '\n';
    else
      out << data_line("LO", "BND", name, exact_decimal(lo)) << '\n';
    if (hi != kInf) out << data_line("UP", "BND", name, exact_decimal(hi)) << '\n';
  }
  out << "ENDATA\n";
  return out.str();
}

LinearProgram parse_mps(const std::string& text) {
  std::istringstream in(text);
  std::string line, section, obj_row;
  std::unordered_map<std::string, Eigen::Index> row_index;
  std::vector<LpRow> rows;
  double offset = 0.0;
  bool saw_end = false;
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Format, "MPS: " + msg); };
  auto num = [&](const std::string& s) {
    try {
      return parse_exact_decimal(s);
    } catch (const Error&) {
      fail("bad number '" + s + "'");
    }
    return 0.0;
  };
  std::string name = "lp";
  std::vector<std::string> vars;
  std::unordered_map<std::string, Eigen::Index> var_index;
  std::vector<double> costs, los, his;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '*') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (line[0] != ' ' && line[0] != '\t') {
      section = tok[0];
      if (section == "NAME") name = tok.size() > 1 ? tok[1] : "lp";
      if (section == "ENDATA") saw_end = true;
      continue;
    }
    if (section == "ROWS") {
      if (tok.size() != 2) fail("ROWS entry needs a type and a name");
      if (tok[0] == "N") {
        if (obj_row.empty()) obj_row = tok[1];
        continue;
      }
      const RowSense s = tok[0] == "L" ? RowSense::Le : tok[0] == "G" ? RowSense::Ge : tok[0] == "E" ? RowSense::Eq
                                                                                                     : (fail("bad row type " + tok[0]), RowSense::Le);
      row_index[tok[1]] = static_cast<Eigen::Index>(rows.size());
      rows.push_back({tok[1], {}, s, 0.0});
    } else if (section == "COLUMNS") {
      if (tok.size() != 3 && tok.size() != 5) fail("COLUMNS entry has " + std::to_string(tok.size()) + " fields");
      auto it = var_index.find(tok[0]);
      if (it == var_index.end()) {
        it = var_index.emplace(tok[0], static_cast<Eigen::Index>(vars.size())).first;
        vars.push_back(tok[0]);
        costs.push_back(0.0);
        los.push_back(0.0);
        his.push_back(kInf);
      }
      for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
        const double v = num(tok[k + 1]);
        if (tok[k] == obj_row) {
          costs[static_cast<std::size_t>(it->second)] = v;
        } else {
          const auto r = row_index.find(tok[k]);
          if (r == row_index.end()) fail("unknown row " + tok[k]);
          rows[static_cast<std::size_t>(r->second)].terms.push_back({it->second, v});
        }
      }
    } else if (section == "RHS") {
      if (tok.size() != 3 && tok.size() != 5) fail("RHS entry has " + std::to_string(tok.size()) + " fields");
      for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
        const double v = num(tok[k + 1]);
        if (tok[k] == obj_row) {
          offset = -v;
        } else {
          const auto r = row_index.find(tok[k]);
          if (r == row_index.end()) fail("unknown row " + tok[k]);
          rows[static_cast<std::size_t>(r->second)].rhs = v;
        }
      }
    } else if (section == "BOUNDS") {
      if (tok.size() < 3) fail("BOUNDS entry too short");
      const auto it = var_index.find(tok[2]);
      if (it == var_index.end()) fail("bound on unknown column " + tok[2]);
      const auto j = static_cast<std::size_t>(it->second);
      const std::string& type = tok[0];
      const double v = tok.size() > 3 ? num(tok[3]) : 0.0;
      if (type == "LO") los[j] = v;
      else if (type == "UP") his[j] = v;
      else if (type == "FX") los[j] = his[j] = v;
      else if (type == "FR") los[j] = -kInf, his[j] = kInf;
      else if (type == "MI") los[j] = -kInf;
      else if (type == "PL") his[j] = kInf;
      else fail("unsupported bound type " + type);
    } else {
      fail("data outside a known section");
    }
  }
  if (!saw_end) fail("missing ENDATA");
  LinearProgram out(name);
  for (std::size_t j = 0; j < vars.size(); ++j) out.add_variable(vars[j], los[j], his[j], costs[j]);
  for (auto& r : rows) out.add_row(r.label, std::move(r.terms), r.sense, r.rhs);
  out.set_offset(offset);
  return out;
}

}  // namespace rted
