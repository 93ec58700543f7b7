#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "rted/data_ingest.hpp"
#include "rted/error.hpp"

namespace rted {

struct Bus {
  int id = 0;
  double load_share = 0.0;  // fraction of system load drawn at this bus
};

struct Line {
  int from = 0;
  int to = 0;
  double reactance = 0.0;  // p.u.
  double limit_mw = 0.0;   // <= 0 means unmonitored
  std::string name;
  bool monitored() const { return limit_mw > 0.0; }
};

/// DC shift factors k(l, b) = flow on l per MW injected at b and withdrawn
/// at the slack. Rows follow `from`/`to` index pairs into the bus list.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> compute_ptdf(Eigen::Index bus_count,
                                                                   const std::vector<std::pair<Eigen::Index, Eigen::Index>>& ends,
                                                                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& reactance,
                                                                   Eigen::Index slack) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const auto n_lines = static_cast<Eigen::Index>(ends.size());
  Matrix a = Matrix::Zero(n_lines, bus_count);  // incidence, +1 at from, -1 at to
  for (Eigen::Index l = 0; l < n_lines; ++l) {
    a(l, ends[static_cast<std::size_t>(l)].first) += Scalar(1);
    a(l, ends[static_cast<std::size_t>(l)].second) -= Scalar(1);
  }
  const Matrix b_line = reactance.cwiseInverse().asDiagonal() * a;
  const Matrix b_bus = a.transpose() * b_line;

  std::vector<Eigen::Index> keep;
  for (Eigen::Index b = 0; b < bus_count; ++b)
    if (b != slack) keep.push_back(b);
  const auto m = static_cast<Eigen::Index>(keep.size());
  Matrix b_red(m, m), bl_red(n_lines, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    bl_red.col(c) = b_line.col(keep[static_cast<std::size_t>(c)]);
    for (Eigen::Index r = 0; r < m; ++r) b_red(r, c) = b_bus(keep[static_cast<std::size_t>(r)], keep[static_cast<std::size_t>(c)]);
  }
  Matrix out = Matrix::Zero(n_lines, bus_count);
  if (m == 0) return out;
  Eigen::LLT<Matrix> llt(b_red);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::Numerical, "reduced susceptance matrix is not positive definite");
  // k_red = B_line_red * B_red^-1, computed as (B_red^-1 * B_line_red^T)^T.
  const Matrix k_red = llt.solve(bl_red.transpose()).transpose();
  for (Eigen::Index c = 0; c < m; ++c) out.col(keep[static_cast<std::size_t>(c)]) = k_red.col(c);
  return out;
}

class NetworkModel {
 public:
  NetworkModel() = default;
  /// Validates topology and computes the shift-factor matrix.
  NetworkModel(std::string name, std::vector<Bus> buses, std::vector<Line> lines, int slack_bus, std::string notes = {});

  const std::string& name() const { return name_; }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  Eigen::Index bus_count() const { return static_cast<Eigen::Index>(buses_.size()); }
  Eigen::Index line_count() const { return static_cast<Eigen::Index>(lines_.size()); }
  int slack_bus() const { return slack_; }
  Eigen::Index slack_index() const { return bus_index(slack_); }
  const std::string& notes() const { return notes_; }

  /// Position of an external bus id; Topology error if absent.
  Eigen::Index bus_index(int id) const;
  bool has_bus(int id) const;

  /// line x bus, cached at construction.
  const Eigen::MatrixXd& ptdf() const { return ptdf_; }
  Eigen::VectorXd load_shares() const;
  std::vector<Eigen::Index> monitored_lines() const;

 private:
  std::string name_;
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  int slack_ = 0;
  std::string notes_;
  Eigen::MatrixXd ptdf_;
};

Eigen::MatrixXd compute_ptdf(const NetworkModel& net);

/// flow_l = sum_b k(l, b) injection_b, per-bus MW in bus-list order.
Eigen::VectorXd line_flow(const NetworkModel& net, const Eigen::VectorXd& injections);

/// Shift factor of each line with respect to each plant's bus (line x plant).
Eigen::MatrixXd plant_shift_factors(const NetworkModel& net, const std::vector<PlantId>& plants);

/// Throws Topology if any plant's bus is missing from the network.
void check_plant_buses(const NetworkModel& net, const std::vector<PlantId>& plants);

void to_json(nlohmann::json& j, const NetworkModel& net);
NetworkModel network_from_json(const nlohmann::json& j);
NetworkModel load_network(const std::filesystem::path& path);

/// Minimal MATPOWER case reader: `mpc.bus`, `mpc.branch` (and optional
/// `mpc.baseMVA`). Load shares come from bus Pd, the slack from bus type 3,
/// limits from branch RATE_A (0 means unmonitored). Out-of-service branches
/// are dropped.
NetworkModel import_matpower(const std::filesystem::path& path);
NetworkModel parse_matpower(const std::string& text, const std::string& name = "matpower");

}  // namespace rted
