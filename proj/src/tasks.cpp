#include "nlgpc/tasks.hpp"

#include <cmath>

#include "nlgpc/errors.hpp"

namespace nlgpc {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_nondegenerate(const TrajectoryParams& p) {
  if (p.B == 0.0 || p.C == 0.0)
    throw ConfigError("trajectory: B and C must be nonzero for paraboloid paths");
}

double paraboloid(double dev1, double dev2, const TrajectoryParams& p) {
  return p.A * (dev2 * dev2 / (p.B * p.B) - dev1 * dev1 / (p.C * p.C)) + p.y0[0];
}

}  // namespace

Vec eight_ref(double t, const TrajectoryParams& p) {
  const double s = std::sin(p.omega * t);
  const double c = std::cos(p.omega * t);
  return {p.A * s * s + p.y0[0], p.B * s * c + p.y0[1], p.C * s + p.y0[2]};
}

Vec pringle_ref(double t, const TrajectoryParams& p) {
  require_nondegenerate(p);
  const double phase = kTwoPi * p.omega * t;
  const double y1 = p.B * std::cos(phase) + p.y0[1];
  const double y2 = p.C * std::sin(phase) + p.y0[2];
  return {paraboloid(y1 - p.y0[1], y2 - p.y0[2], p), y1, y2};
}

Vec line_ref(double t, const TrajectoryParams& p) {
  require_nondegenerate(p);
  const double phase = kTwoPi * p.omega * t + 1e-6 * t * t;
  const double y1 = p.B * std::sin(phase) + p.y0[1];
  const double y2 = p.C * std::sin(phase) + p.y0[2];
  return {paraboloid(y1 - p.y0[1], y2 - p.y0[2], p), y1, y2};
}

// Defaults sit on (eight, line) or across (pringle) the plant's saddle
// surface, centered on its rest pose, spanning roughly 60% of the envelope.

TrajectoryParams default_eight() {
  TrajectoryParams p;
  p.A = 4.32;
  p.B = 16.0;
  p.C = 12.0;
  p.omega = 0.5;
  p.y0 = {8.0, 14.0, 17.5};
  return p;
}

TrajectoryParams default_pringle() {
  TrajectoryParams p;
  p.A = 0.27;
  p.B = 3.0;
  p.C = 12.24744871391589;
  p.omega = 0.08;
  p.y0 = {8.0, 14.0, 17.5};
  return p;
}

TrajectoryParams default_line() {
  TrajectoryParams p;
  p.A = 2.3288123076923077;
  p.B = 8.0;
  p.C = 12.0;
  p.omega = 0.08;
  p.y0 = {8.0, 14.0, 17.5};
  return p;
}

TaskFn task_by_name(const std::string& name) {
  if (name == "eight") return &eight_ref;
  if (name == "pringle") return &pringle_ref;
  if (name == "line") return &line_ref;
  throw ConfigError("unknown task: " + name);
}

TrajectoryParams default_params_by_name(const std::string& name) {
  if (name == "eight") return default_eight();
  if (name == "pringle") return default_pringle();
  if (name == "line") return default_line();
  throw ConfigError("unknown task: " + name);
}

}  // namespace nlgpc
