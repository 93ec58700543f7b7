#pragma once

#include <string>
#include <vector>

#include "rted/dispatch.hpp"

namespace rted::detail {

inline std::string tag(const std::string& name, Eigen::Index t) { return "[" + name + ",t" + std::to_string(t) + "]"; }
inline std::string tag(Eigen::Index t) { return "[t" + std::to_string(t) + "]"; }

// Adds p, r_up, r_down for every unit and interval (indexed t * units + i)
// with the range, ramp and reserve-limit rows.
void add_schedule_block(LinearProgram& lp, const DispatchCase& c, std::vector<Eigen::Index>& p,
                        std::vector<Eigen::Index>& ru, std::vector<Eigen::Index>& rd);

// line x unit shift factors.
Eigen::MatrixXd unit_shift_factors(const DispatchCase& c, const NetworkModel& net);

}  // namespace rted::detail
