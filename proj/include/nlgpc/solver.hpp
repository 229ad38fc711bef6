#pragma once

#include <cstdint>
#include <vector>

#include "nlgpc/cost.hpp"
#include "nlgpc/derivatives.hpp"
#include "nlgpc/predictor.hpp"

namespace nlgpc {

struct SolverConfig {
  int newton_iters = 2;
  double damping = 0.0;       // Levenberg diagonal boost added to the Hessian
  double clip_margin = 0.05;  // distance kept from the barrier bounds, input units
  bool line_search = true;    // halve the step while the cost increases

  void validate(const CostSpec& spec) const {
    if (newton_iters < 1) throw ConfigError("solver: newton_iters must be >= 1");
    if (damping < 0.0) throw ConfigError("solver: damping must be >= 0");
    if (!(clip_margin > 0.0 && clip_margin < spec.r / 2.0))
      throw ConfigError("solver: clip_margin must lie in (0, r/2)");
  }
};

/// Solve (H + damping I) dU = -g and return u_flat + dU. A failed
/// factorization multiplies the damping by 10 (from a 1e-8 floor when it
/// starts at zero) and retries, up to 8 times.
Vec newton_step(const Mat& hessian, const Vec& gradient, const Vec& u_flat, double damping,
                double* damping_used = nullptr);

/// Clamp every entry to [b - r/2 + margin, b + r/2 - margin].
ControlSequence clip_controls(ControlSequence U, const CostSpec& spec, double clip_margin);

struct StepDiagnostics {
  double j_before = 0.0;
  double j_after = 0.0;
  double step_norm = 0.0;
  double damping_used = 0.0;
  int newton_iters = 0;
  int halvings = 0;
  std::uint64_t predict_us = 0;
  std::uint64_t first_deriv_us = 0;
  std::uint64_t second_deriv_us = 0;
  std::uint64_t solve_us = 0;
};

struct ControlStepResult {
  Vec u_apply;                   // first row of the accepted sequence
  ControlSequence u_next;        // warm start: shifted one row, last row duplicated
  std::vector<Vec> predictions;  // rollout at the accepted sequence
  StepDiagnostics diag;
};

/// One full sense-predict-optimize cycle: rollout, control-block
/// sensitivities (first and second, shared evaluations), then newton_iters
/// damped Newton updates with clipping (and optional backtracking) before
/// the first row is released for actuation.
ControlStepResult control_step(ChildModel& model, const QueueState& q,
                               const ControlSequence& u_warm, const ReferenceWindow& ref,
                               const Vec& u_prev, const CostSpec& spec, const SolverConfig& sol,
                               const StencilConfig& sc, const HorizonConfig& h);

}  // namespace nlgpc
