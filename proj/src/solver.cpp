#include "nlgpc/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace nlgpc {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t us_since(Clock::time_point t0) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count());
}

}  // namespace

Vec newton_step(const Mat& hessian, const Vec& gradient, const Vec& u_flat, double damping,
                double* damping_used) {
  const std::size_t dim = gradient.size();
  if (hessian.rows != dim || hessian.cols != dim || u_flat.size() != dim)
    throw DimensionError("newton_step: system dimensions disagree");

  double lam = damping;
  for (int attempt = 0; attempt <= 8; ++attempt) {
    Mat damped = hessian;
    for (std::size_t i = 0; i < dim; ++i) damped(i, i) += lam;
    if (auto lower = cholesky(damped)) {
      Vec rhs(dim);
      for (std::size_t i = 0; i < dim; ++i) rhs[i] = -gradient[i];
      Vec delta = cholesky_solve(*lower, rhs);
      Vec next = u_flat;
      bool finite = true;
      for (std::size_t i = 0; i < dim; ++i) {
        next[i] += delta[i];
        finite = finite && std::isfinite(next[i]);
      }
      if (finite) {
        if (damping_used) *damping_used = lam;
        return next;
      }
    }
    lam = std::max(10.0 * lam, 1e-8);
  }
  throw SolverError("newton_step: Hessian stayed singular after damping retries", lam, 9);
}

ControlSequence clip_controls(ControlSequence U, const CostSpec& spec, double clip_margin) {
  const double lo = spec.lo() + clip_margin;
  const double hi = spec.hi() - clip_margin;
  for (double& v : U.U.a) v = std::clamp(v, lo, hi);
  return U;
}

namespace {

// Cost at U, with barrier-domain violations treated as +inf so the line
// search backs away from the poles instead of throwing mid-iteration.
double guarded_cost(ChildModel& model, const QueueState& q, const ControlSequence& U,
                    const ReferenceWindow& ref, const Vec& u_prev, const CostSpec& spec,
                    const HorizonConfig& h, std::vector<Vec>* predictions_out) {
  std::vector<Vec> preds = rollout(model, q, U, h);
  double j;
  try {
    j = cost_value(preds, ref, U, u_prev, spec, h);
  } catch (const BarrierDomainError&) {
    j = std::numeric_limits<double>::infinity();
  }
  if (predictions_out) *predictions_out = std::move(preds);
  return j;
}

}  // namespace

ControlStepResult control_step(ChildModel& model, const QueueState& q,
                               const ControlSequence& u_warm, const ReferenceWindow& ref,
                               const Vec& u_prev, const CostSpec& spec, const SolverConfig& sol,
                               const StencilConfig& sc, const HorizonConfig& h) {
  ref.validate(h);
  ControlStepResult result;
  StepDiagnostics& diag = result.diag;

  ControlSequence U = clip_controls(u_warm, spec, sol.clip_margin);

  auto t0 = Clock::now();
  std::vector<Vec> predictions;
  double j_cur = guarded_cost(model, q, U, ref, u_prev, spec, h, &predictions);
  diag.predict_us += us_since(t0);
  diag.j_before = j_cur;

  // Sensitivities once per control step, at the warm-started sequence.
  model.reset_state();
  t0 = Clock::now();
  const ControlDerivatives der = control_derivatives_shared(model, q, U, h, sc);
  const std::uint64_t shared_us = us_since(t0);
  // The +/- sweep serves both derivative orders; attribute it evenly.
  diag.first_deriv_us += shared_us / 2;
  diag.second_deriv_us += shared_us - shared_us / 2;

  for (int it = 0; it < sol.newton_iters; ++it) {
    t0 = Clock::now();
    const Mat grad = cost_jacobian(der.dy_du, predictions, ref, U, u_prev, spec, h);
    const Mat hess = cost_hessian(der.dy_du, der.d2y_du2, predictions, ref, U, u_prev, spec, h);
    Vec proposal = newton_step(hess, grad.a, U.flat(), sol.damping, &diag.damping_used);
    diag.solve_us += us_since(t0);

    Vec delta(proposal.size());
    const Vec base = U.flat();
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = proposal[i] - base[i];
    diag.step_norm = norm2(delta);

    ControlSequence candidate =
        clip_controls(ControlSequence::from_flat(proposal, U.steps(), U.channels()), spec,
                      sol.clip_margin);
    t0 = Clock::now();
    std::vector<Vec> cand_preds;
    double j_cand = guarded_cost(model, q, candidate, ref, u_prev, spec, h, &cand_preds);

    if (sol.line_search) {
      double scale = 1.0;
      while (j_cand > j_cur && diag.halvings < 10) {
        scale *= 0.5;
        ++diag.halvings;
        Vec shorter = base;
        for (std::size_t i = 0; i < shorter.size(); ++i) shorter[i] += scale * delta[i];
        candidate = clip_controls(ControlSequence::from_flat(shorter, U.steps(), U.channels()),
                                  spec, sol.clip_margin);
        j_cand = guarded_cost(model, q, candidate, ref, u_prev, spec, h, &cand_preds);
      }
      if (j_cand > j_cur) {
        diag.predict_us += us_since(t0);
        ++diag.newton_iters;
        break;  // keep the current iterate; no acceptable step this iteration
      }
    }
    diag.predict_us += us_since(t0);

    U = candidate;
    predictions = std::move(cand_preds);
    j_cur = j_cand;
    ++diag.newton_iters;
  }

  diag.j_after = j_cur;
  result.u_apply = U.row(0);

  ControlSequence shifted(U.steps(), U.channels());
  for (int j = 0; j < U.steps(); ++j) {
    const int src = std::min(j + 1, U.steps() - 1);
    for (int i = 0; i < U.channels(); ++i) shifted.U(j, i) = U.U(src, i);
  }
  result.u_next = shifted;
  result.predictions = std::move(predictions);
  return result;
}

}  // namespace nlgpc
