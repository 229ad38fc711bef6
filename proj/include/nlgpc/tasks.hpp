#pragma once

#include <array>
#include <string>

#include "nlgpc/linalg.hpp"

namespace nlgpc {

struct TrajectoryParams {
  double A = 1.0;
  double B = 1.0;
  double C = 1.0;
  double omega = 1.0;  // rad/s for the eight, cycle frequency multiplier for the others
  std::array<double, 3> y0 = {0.0, 0.0, 0.0};
};

/// Figure-eight: {A sin^2(wt), B sin(wt) cos(wt), C sin(wt)} + offsets.
Vec eight_ref(double t, const TrajectoryParams& p);

/// Circle in (y1, y2) riding a hyperbolic-paraboloid first component built
/// from the offset-relative deviations. Degenerate when B or C is zero.
Vec pringle_ref(double t, const TrajectoryParams& p);

/// Shared-phase chirped segment: y1 and y2 move in lockstep, the first
/// component follows the same paraboloid as the pringle.
Vec line_ref(double t, const TrajectoryParams& p);

/// Shipped parameter sets, aligned with the synthetic plant's rest pose and
/// reachable surface so closed-loop runs start settled.
TrajectoryParams default_eight();
TrajectoryParams default_pringle();
TrajectoryParams default_line();

using TaskFn = Vec (*)(double, const TrajectoryParams&);
TaskFn task_by_name(const std::string& name);  // "eight" | "pringle" | "line"
TrajectoryParams default_params_by_name(const std::string& name);

}  // namespace nlgpc
