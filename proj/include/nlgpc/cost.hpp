#pragma once

#include <vector>

#include "nlgpc/horizon.hpp"
#include "nlgpc/linalg.hpp"
#include "nlgpc/predictor.hpp"

namespace nlgpc {

/// Weights and soft input-constraint parameters of the stage cost.
/// q_diag/lambda_diag are the diagonals of Q and Lambda. The barrier has
/// poles at b +/- r/2, sharpness s, and a -4/r offset that zeroes it at the
/// center when s = 1; s = 0 disables the barrier sum entirely, offset
/// included.
struct CostSpec {
  Vec q_diag;       // n entries, >= 0
  Vec lambda_diag;  // m entries, >= 0
  double s = 1e-3;
  double r = 1.0;
  double b = 0.0;

  enum class TrackingHessian { GaussNewton, Literal };
  TrackingHessian hessian_form = TrackingHessian::GaussNewton;

  double lo() const { return b - r / 2.0; }
  double hi() const { return b + r / 2.0; }

  void validate() const {
    if (r <= 0.0) throw ConfigError("cost: barrier width r must be > 0");
    if (s < 0.0) throw ConfigError("cost: barrier sharpness s must be >= 0");
    for (double v : q_diag)
      if (v < 0.0) throw ConfigError("cost: Q entries must be >= 0");
    for (double v : lambda_diag)
      if (v < 0.0) throw ConfigError("cost: Lambda entries must be >= 0");
  }
};

/// Targets for the cost window, y_ref[j - N1] belonging to prediction step j.
struct ReferenceWindow {
  std::vector<Vec> y_ref;
  int first_step = 1;  // N1

  void validate(const HorizonConfig& h) const {
    if (first_step != h.N1 || static_cast<int>(y_ref.size()) != h.N2 - h.N1 + 1)
      throw DimensionError("reference window must cover steps N1..N2");
  }
};

double barrier(double u, const CostSpec& spec);
double barrier_grad(double u, const CostSpec& spec);
double barrier_hess(double u, const CostSpec& spec);

/// Stage cost: tracking term over the window, input-change term with
/// du_0 = U row 0 - u_prev, and the barrier over every control entry.
double cost_value(const std::vector<Vec>& predictions, const ReferenceWindow& ref,
                  const ControlSequence& U, const Vec& u_prev, const CostSpec& spec,
                  const HorizonConfig& h);

/// Gradient of the frozen-sensitivity cost over U, one row per control step.
/// dy_du is the Eq.-6 style n x m sensitivity, attributed to the control row
/// each prediction step consumes.
Mat cost_jacobian(const Mat& dy_du, const std::vector<Vec>& predictions,
                  const ReferenceWindow& ref, const ControlSequence& U, const Vec& u_prev,
                  const CostSpec& spec, const HorizonConfig& h);

/// Full (Nc*m)^2 Hessian: per-row tracking blocks (Gauss-Newton by default,
/// the literal Hadamard form behind the switch), the tridiagonal
/// input-change chain, barrier second derivatives on the diagonal;
/// symmetrized as (H + H^T)/2.
Mat cost_hessian(const Mat& dy_du, const std::vector<Mat>& d2y_du2,
                 const std::vector<Vec>& predictions, const ReferenceWindow& ref,
                 const ControlSequence& U, const Vec& u_prev, const CostSpec& spec,
                 const HorizonConfig& h);

}  // namespace nlgpc
