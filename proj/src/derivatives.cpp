#include "nlgpc/derivatives.hpp"

#include <cmath>
#include <string>

#include "nlgpc/errors.hpp"

namespace nlgpc {

namespace {

void check_finite(const Vec& y, int slot) {
  for (double v : y)
    if (!std::isfinite(v))
      throw NumericError("stencil evaluation produced a non-finite value at perturbation slot " +
                             std::to_string(slot),
                         slot);
}

Vec eval_at(const VecFn& g, Vec x, int slot, double delta) {
  x[static_cast<std::size_t>(slot)] += delta;
  Vec y = g(x);
  check_finite(y, slot);
  return y;
}

}  // namespace

Mat central_jacobian(const VecFn& g, const Vec& x, const StencilConfig& sc) {
  const int p = static_cast<int>(x.size());
  Mat theta;
  for (int i = 0; i < p; ++i) {
    const double h = sc.step_for(x[static_cast<std::size_t>(i)]);
    const Vec plus = eval_at(g, x, i, +h);
    const Vec minus = eval_at(g, x, i, -h);
    if (theta.rows == 0) theta = Mat(static_cast<std::size_t>(p), plus.size());
    for (std::size_t j = 0; j < plus.size(); ++j)
      theta(static_cast<std::size_t>(i), j) = (plus[j] - minus[j]) / (2.0 * h);
  }
  return theta;
}

std::vector<Mat> central_second(const VecFn& g, const Vec& x, const std::vector<int>& slots,
                                const StencilConfig& sc) {
  const std::size_t s = slots.size();
  const Vec center = g(x);
  check_finite(center, -1);
  const std::size_t n = center.size();
  std::vector<Mat> out(n, Mat(s, s));

  for (std::size_t a = 0; a < s; ++a) {
    const double ha = sc.step_for(x[static_cast<std::size_t>(slots[a])]);
    const Vec plus = eval_at(g, x, slots[a], +ha);
    const Vec minus = eval_at(g, x, slots[a], -ha);
    for (std::size_t o = 0; o < n; ++o)
      out[o](a, a) = (plus[o] - 2.0 * center[o] + minus[o]) / (ha * ha);

    for (std::size_t b = a + 1; b < s; ++b) {
      const double hb = sc.step_for(x[static_cast<std::size_t>(slots[b])]);
      Vec xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[slots[a]] += ha; xpp[slots[b]] += hb;
      xpm[slots[a]] += ha; xpm[slots[b]] -= hb;
      xmp[slots[a]] -= ha; xmp[slots[b]] += hb;
      xmm[slots[a]] -= ha; xmm[slots[b]] -= hb;
      const Vec ypp = g(xpp), ypm = g(xpm), ymp = g(xmp), ymm = g(xmm);
      check_finite(ypp, slots[a]);
      check_finite(ypm, slots[a]);
      check_finite(ymp, slots[b]);
      check_finite(ymm, slots[b]);
      for (std::size_t o = 0; o < n; ++o) {
        const double v = (ypp[o] - ypm[o] - ymp[o] + ymm[o]) / (4.0 * ha * hb);
        out[o](a, b) = v;
        out[o](b, a) = v;
      }
    }
  }
  return out;
}

Mat assemble_dy_du(const Mat& theta, int n_d, int m) {
  const std::size_t control_rows = static_cast<std::size_t>(n_d + 1) * static_cast<std::size_t>(m);
  if (theta.rows < control_rows)
    throw DimensionError("assemble_dy_du: theta has fewer rows than control slots");
  const std::size_t n = theta.cols;
  Mat dy_du(n, static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    for (int k = 0; k <= n_d; ++k) {
      const std::size_t row = static_cast<std::size_t>(m) * k + i;
      for (std::size_t o = 0; o < n; ++o) dy_du(o, static_cast<std::size_t>(i)) += theta(row, o);
    }
  return dy_du;
}

Mat child_input_jacobian(ChildModel& model, const Vec& x, const StencilConfig& sc) {
  const auto snapshot = model.save_state();
  const VecFn g = [&model, &snapshot](const Vec& xi) {
    model.restore_state(snapshot);
    return model.forward(xi);
  };
  Mat theta = central_jacobian(g, x, sc);
  model.restore_state(snapshot);
  return theta;
}

Vec level1_input(const QueueState& q, const ControlSequence& U) {
  QueueState q1 = q;
  if (q1.tau.empty()) throw DimensionError("level1_input: empty control queue");
  q1.tau.front() = U.row(0);
  return build_input_vector(q1);
}

namespace {

std::vector<Mat> sum_tap_pairs(const std::vector<Mat>& slot_pairs, int n_d, int m) {
  std::vector<Mat> out(slot_pairs.size(), Mat(static_cast<std::size_t>(m), static_cast<std::size_t>(m)));
  for (std::size_t o = 0; o < slot_pairs.size(); ++o)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double acc = 0.0;
        for (int k = 0; k <= n_d; ++k)
          for (int kk = 0; kk <= n_d; ++kk) acc += slot_pairs[o](m * k + i, m * kk + j);
        out[o](i, j) = acc;
      }
  return out;
}

}  // namespace

std::vector<Mat> assemble_d2y_du2(ChildModel& model, const QueueState& q,
                                  const ControlSequence& U, const HorizonConfig& h,
                                  const StencilConfig& sc) {
  const Vec x1 = level1_input(q, U);
  const int m = U.channels();
  std::vector<int> slots(static_cast<std::size_t>(h.n_d + 1) * m);
  for (std::size_t s = 0; s < slots.size(); ++s) slots[s] = static_cast<int>(s);

  const auto snapshot = model.save_state();
  const VecFn g = [&model, &snapshot](const Vec& xi) {
    model.restore_state(snapshot);
    return model.forward(xi);
  };
  std::vector<Mat> slot_pairs = central_second(g, x1, slots, sc);
  model.restore_state(snapshot);
  return sum_tap_pairs(slot_pairs, h.n_d, m);
}

ControlDerivatives control_derivatives_shared(ChildModel& model, const QueueState& q,
                                              const ControlSequence& U, const HorizonConfig& h,
                                              const StencilConfig& sc) {
  const Vec x1 = level1_input(q, U);
  const int m = U.channels();
  const int n_ctrl = (h.n_d + 1) * m;

  const auto snapshot = model.save_state();
  const VecFn g = [&model, &snapshot](const Vec& xi) {
    model.restore_state(snapshot);
    return model.forward(xi);
  };

  const Vec center = g(x1);
  check_finite(center, -1);
  const std::size_t n = center.size();

  // One +/- sweep over the control slots feeds both stencils.
  std::vector<Vec> plus(n_ctrl), minus(n_ctrl);
  std::vector<double> steps(n_ctrl);
  for (int s = 0; s < n_ctrl; ++s) {
    steps[s] = sc.step_for(x1[static_cast<std::size_t>(s)]);
    plus[s] = eval_at(g, x1, s, +steps[s]);
    minus[s] = eval_at(g, x1, s, -steps[s]);
  }

  Mat theta_ctrl(static_cast<std::size_t>(n_ctrl), n);
  std::vector<Mat> slot_pairs(n, Mat(static_cast<std::size_t>(n_ctrl), static_cast<std::size_t>(n_ctrl)));
  for (int s = 0; s < n_ctrl; ++s)
    for (std::size_t o = 0; o < n; ++o) {
      theta_ctrl(s, o) = (plus[s][o] - minus[s][o]) / (2.0 * steps[s]);
      slot_pairs[o](s, s) = (plus[s][o] - 2.0 * center[o] + minus[s][o]) / (steps[s] * steps[s]);
    }

  for (int a = 0; a < n_ctrl; ++a)
    for (int b = a + 1; b < n_ctrl; ++b) {
      Vec xpp = x1, xpm = x1, xmp = x1, xmm = x1;
      xpp[a] += steps[a]; xpp[b] += steps[b];
      xpm[a] += steps[a]; xpm[b] -= steps[b];
      xmp[a] -= steps[a]; xmp[b] += steps[b];
      xmm[a] -= steps[a]; xmm[b] -= steps[b];
      const Vec ypp = g(xpp), ypm = g(xpm), ymp = g(xmp), ymm = g(xmm);
      check_finite(ypp, a);
      check_finite(ypm, a);
      check_finite(ymp, b);
      check_finite(ymm, b);
      for (std::size_t o = 0; o < n; ++o) {
        const double v = (ypp[o] - ypm[o] - ymp[o] + ymm[o]) / (4.0 * steps[a] * steps[b]);
        slot_pairs[o](a, b) = v;
        slot_pairs[o](b, a) = v;
      }
    }
  model.restore_state(snapshot);

  ControlDerivatives out;
  out.dy_du = assemble_dy_du(theta_ctrl, h.n_d, m);
  out.d2y_du2 = sum_tap_pairs(slot_pairs, h.n_d, m);
  return out;
}

}  // namespace nlgpc
