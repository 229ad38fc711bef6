#include "nlgpc/cost.hpp"

#include <cmath>

namespace nlgpc {

namespace {

void check_inside(double u, const CostSpec& spec) {
  if (!(u > spec.lo() && u < spec.hi()))
    throw BarrierDomainError("barrier: control input at or outside (b-r/2, b+r/2)");
}

// Tracking error for prediction step j, or nullptr when the window asks for
// a step the rollout cannot produce (j = 0).
const Vec* prediction_for_step(const std::vector<Vec>& predictions, int j) {
  if (j < 1 || j > static_cast<int>(predictions.size())) return nullptr;
  return &predictions[static_cast<std::size_t>(j - 1)];
}

}  // namespace

double barrier(double u, const CostSpec& spec) {
  if (spec.s == 0.0) return 0.0;
  check_inside(u, spec);
  return spec.s / (u + spec.r / 2.0 - spec.b) + spec.s / (spec.r / 2.0 + spec.b - u) -
         4.0 / spec.r;
}

double barrier_grad(double u, const CostSpec& spec) {
  if (spec.s == 0.0) return 0.0;
  check_inside(u, spec);
  const double a = u + spec.r / 2.0 - spec.b;
  const double c = spec.r / 2.0 + spec.b - u;
  return -spec.s / (a * a) + spec.s / (c * c);
}

double barrier_hess(double u, const CostSpec& spec) {
  if (spec.s == 0.0) return 0.0;
  check_inside(u, spec);
  const double a = u + spec.r / 2.0 - spec.b;
  const double c = spec.r / 2.0 + spec.b - u;
  return 2.0 * spec.s / (a * a * a) + 2.0 * spec.s / (c * c * c);
}

double cost_value(const std::vector<Vec>& predictions, const ReferenceWindow& ref,
                  const ControlSequence& U, const Vec& u_prev, const CostSpec& spec,
                  const HorizonConfig& h) {
  double j_total = 0.0;

  for (int j = h.N1; j <= h.N2; ++j) {
    const Vec* yhat = prediction_for_step(predictions, j);
    if (yhat == nullptr) continue;
    const Vec& target = ref.y_ref[static_cast<std::size_t>(j - ref.first_step)];
    for (std::size_t o = 0; o < target.size(); ++o) {
      const double e = target[o] - (*yhat)[o];
      j_total += spec.q_diag[o] * e * e;
    }
  }

  const int m = U.channels();
  for (int jj = 0; jj < U.steps(); ++jj) {
    for (int i = 0; i < m; ++i) {
      const double prev = jj == 0 ? u_prev[static_cast<std::size_t>(i)] : U.U(jj - 1, i);
      const double du = U.U(jj, i) - prev;
      j_total += spec.lambda_diag[static_cast<std::size_t>(i)] * du * du;
    }
  }

  if (spec.s != 0.0)
    for (int jj = 0; jj < U.steps(); ++jj)
      for (int i = 0; i < m; ++i) j_total += barrier(U.U(jj, i), spec);

  return j_total;
}

Mat cost_jacobian(const Mat& dy_du, const std::vector<Vec>& predictions,
                  const ReferenceWindow& ref, const ControlSequence& U, const Vec& u_prev,
                  const CostSpec& spec, const HorizonConfig& h) {
  const int nc = U.steps();
  const int m = U.channels();
  Mat grad(static_cast<std::size_t>(nc), static_cast<std::size_t>(m));

  // -2 (y_ref - yhat)^T Q dy_du, credited to the control row step j consumes.
  for (int j = h.N1; j <= h.N2; ++j) {
    const Vec* yhat = prediction_for_step(predictions, j);
    if (yhat == nullptr) continue;
    const Vec& target = ref.y_ref[static_cast<std::size_t>(j - ref.first_step)];
    const int row = control_row_for_step(j, nc);
    for (int i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < target.size(); ++o)
        acc += (target[o] - (*yhat)[o]) * spec.q_diag[o] * dy_du(o, static_cast<std::size_t>(i));
      grad(row, i) += -2.0 * acc;
    }
  }

  // 2 du_j Lambda d(du_j)/dU: du_j touches rows j and j-1 with signs +1/-1.
  for (int jj = 0; jj < nc; ++jj)
    for (int i = 0; i < m; ++i) {
      const double lam = spec.lambda_diag[static_cast<std::size_t>(i)];
      const double prev = jj == 0 ? u_prev[static_cast<std::size_t>(i)] : U.U(jj - 1, i);
      grad(jj, i) += 2.0 * lam * (U.U(jj, i) - prev);
      if (jj + 1 < nc) grad(jj, i) -= 2.0 * lam * (U.U(jj + 1, i) - U.U(jj, i));
    }

  if (spec.s != 0.0)
    for (int jj = 0; jj < nc; ++jj)
      for (int i = 0; i < m; ++i) grad(jj, i) += barrier_grad(U.U(jj, i), spec);

  return grad;
}

Mat cost_hessian(const Mat& dy_du, const std::vector<Mat>& d2y_du2,
                 const std::vector<Vec>& predictions, const ReferenceWindow& ref,
                 const ControlSequence& U, const Vec& /*u_prev: du chain curvature is constant*/,
                 const CostSpec& spec, const HorizonConfig& h) {
  const int nc = U.steps();
  const int m = U.channels();
  const std::size_t dim = static_cast<std::size_t>(nc) * static_cast<std::size_t>(m);
  Mat hess(dim, dim);
  const std::size_t n = dy_du.rows;

  // First-order tracking block, shared by every step attributed to a row.
  Mat track_block(static_cast<std::size_t>(m), static_cast<std::size_t>(m));
  if (spec.hessian_form == CostSpec::TrackingHessian::GaussNewton) {
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) {
        double acc = 0.0;
        for (std::size_t o = 0; o < n; ++o)
          acc += dy_du(o, static_cast<std::size_t>(i)) * spec.q_diag[o] *
                 dy_du(o, static_cast<std::size_t>(k));
        track_block(i, k) = acc;
      }
  } else {
    // Literal Hadamard form: Q (dy_du o dy_du) column-summed onto the diagonal.
    for (int i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < n; ++o) {
        const double d = dy_du(o, static_cast<std::size_t>(i));
        acc += spec.q_diag[o] * d * d;
      }
      track_block(i, i) = acc;
    }
  }

  for (int j = h.N1; j <= h.N2; ++j) {
    const Vec* yhat = prediction_for_step(predictions, j);
    if (yhat == nullptr) continue;
    const Vec& target = ref.y_ref[static_cast<std::size_t>(j - ref.first_step)];
    const int row = control_row_for_step(j, nc);
    const std::size_t base = static_cast<std::size_t>(row) * m;
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) {
        double second = 0.0;
        for (std::size_t o = 0; o < n; ++o)
          second += (target[o] - (*yhat)[o]) * spec.q_diag[o] *
                    d2y_du2[o](static_cast<std::size_t>(i), static_cast<std::size_t>(k));
        hess(base + i, base + k) += 2.0 * (track_block(i, k) - second);
      }
  }

  // Input-change chain: d^2/dU^2 of sum_j ||du_j||^2_Lambda is tridiagonal.
  for (int jj = 0; jj < nc; ++jj)
    for (int i = 0; i < m; ++i) {
      const double lam = spec.lambda_diag[static_cast<std::size_t>(i)];
      const std::size_t idx = static_cast<std::size_t>(jj) * m + i;
      hess(idx, idx) += 2.0 * lam;            // from du_jj
      if (jj + 1 < nc) {
        const std::size_t nxt = idx + static_cast<std::size_t>(m);
        hess(idx, idx) += 2.0 * lam;          // from du_{jj+1}
        hess(idx, nxt) -= 2.0 * lam;
        hess(nxt, idx) -= 2.0 * lam;
      }
    }

  if (spec.s != 0.0)
    for (int jj = 0; jj < nc; ++jj)
      for (int i = 0; i < m; ++i) {
        const std::size_t idx = static_cast<std::size_t>(jj) * m + i;
        hess(idx, idx) += barrier_hess(U.U(jj, i), spec);
      }

  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t bb = a + 1; bb < dim; ++bb) {
      const double sym = 0.5 * (hess(a, bb) + hess(bb, a));
      hess(a, bb) = sym;
      hess(bb, a) = sym;
    }
  return hess;
}

}  // namespace nlgpc
