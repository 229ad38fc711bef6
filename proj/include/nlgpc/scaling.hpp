#pragma once

#include "nlgpc/linalg.hpp"

namespace nlgpc {

/// Affine maps between physical units (rad, mm) and the normalized signals
/// the models are trained on: x_n = (x - center) / half, per channel.
struct UnitScaling {
  Vec u_center, u_half;
  Vec y_center, y_half;

  static UnitScaling identity(int m, int n) {
    UnitScaling s;
    s.u_center.assign(m, 0.0);
    s.u_half.assign(m, 1.0);
    s.y_center.assign(n, 0.0);
    s.y_half.assign(n, 1.0);
    return s;
  }

  Vec normalize_u(const Vec& u) const {
    Vec out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = (u[i] - u_center[i]) / u_half[i];
    return out;
  }
  Vec denormalize_u(const Vec& u) const {
    Vec out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * u_half[i] + u_center[i];
    return out;
  }
  Vec normalize_y(const Vec& y) const {
    Vec out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = (y[i] - y_center[i]) / y_half[i];
    return out;
  }
  Vec denormalize_y(const Vec& y) const {
    Vec out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] * y_half[i] + y_center[i];
    return out;
  }
};

}  // namespace nlgpc
