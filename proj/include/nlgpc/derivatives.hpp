#pragma once

#include <functional>
#include <vector>

#include "nlgpc/predictor.hpp"

namespace nlgpc {

/// Central-difference stencil configuration. The per-slot step is
/// epsilon * max(1, |x_i|) when relative is set, plain epsilon otherwise.
struct StencilConfig {
  double epsilon = 1e-4;
  bool relative = true;

  double step_for(double xi) const {
    const double mag = xi < 0 ? -xi : xi;
    return relative && mag > 1.0 ? epsilon * mag : epsilon;
  }
};

using VecFn = std::function<Vec(const Vec&)>;

/// Sensitivity of every model output to every flattened input slot:
/// theta[i][j] = (g(x + e_i h_i)[j] - g(x - e_i h_i)[j]) / (2 h_i),
/// returned as a p x n matrix (rows index input slots). Non-finite
/// evaluations raise NumericError naming the offending slot.
Mat central_jacobian(const VecFn& g, const Vec& x, const StencilConfig& sc);

/// Second partials of g over the selected slots, one slots x slots matrix
/// per output component. Diagonal terms use the three-point stencil,
/// off-diagonal terms the four-point cross stencil.
std::vector<Mat> central_second(const VecFn& g, const Vec& x, const std::vector<int>& slots,
                                const StencilConfig& sc);

/// Collapse the control rows of theta into the n x m sensitivity of the
/// prediction to a control held constant across its history taps:
/// column i sums theta rows m*k+i for k = 0..n_d.
Mat assemble_dy_du(const Mat& theta, int n_d, int m);

/// Evaluate the child once per perturbation, restoring recurrent state
/// around every call so repeated jacobians are bit-identical.
Mat child_input_jacobian(ChildModel& model, const Vec& x, const StencilConfig& sc);

/// The flattened input the first prediction step sees: q with the newest
/// control tap replaced by U row 0.
Vec level1_input(const QueueState& q, const ControlSequence& U);

/// Per-output m x m second derivatives of the prediction with respect to
/// the control channels: the slot-pair second partials over the control
/// block of the input, summed over history-tap pairs exactly as in
/// assemble_dy_du.
std::vector<Mat> assemble_d2y_du2(ChildModel& model, const QueueState& q,
                                  const ControlSequence& U, const HorizonConfig& h,
                                  const StencilConfig& sc);

/// Both control derivatives from one evaluation sweep: the +/- single-slot
/// evaluations feed the jacobian and the diagonal of the second-derivative
/// stencil, so this costs less than the two separate passes.
struct ControlDerivatives {
  Mat dy_du;                 // n x m
  std::vector<Mat> d2y_du2;  // n matrices, m x m
};
ControlDerivatives control_derivatives_shared(ChildModel& model, const QueueState& q,
                                              const ControlSequence& U, const HorizonConfig& h,
                                              const StencilConfig& sc);

}  // namespace nlgpc
