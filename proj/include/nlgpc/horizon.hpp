#pragma once

#include "nlgpc/errors.hpp"

namespace nlgpc {

/// Horizon and history lengths that shape every prediction and optimization.
///   N      prediction horizon (recursive model calls per control step)
///   N1,N2  cost window: tracking errors counted for steps N1..N2
///   Nc     control horizon: rows of the decision variable; the last row
///          repeats for steps beyond it
///   n_d    input-history depth (the control queue holds n_d+1 taps)
///   d_d    output-history depth
struct HorizonConfig {
  int N = 3;
  int N1 = 1;
  int N2 = 3;
  int Nc = 2;
  int n_d = 2;
  int d_d = 2;

  void validate() const {
    if (N < 1 || N2 < 1 || Nc < 1 || n_d < 0 || d_d < 0 || N1 < 0)
      throw ConfigError("horizon: N, N2, Nc must be >= 1; N1, n_d, d_d >= 0");
    if (!(N1 < N2 && N2 <= N)) throw ConfigError("horizon: require N1 < N2 <= N");
    if (Nc > N) throw ConfigError("horizon: require Nc <= N");
  }
};

/// Channel counts of the controlled system.
struct Dims {
  int m = 2;   // actuator channels
  int n = 3;   // output (pose) channels
  int w = 11;  // sensor channels

  void validate() const {
    if (m < 1 || n < 1 || w < 1) throw ConfigError("dims: all channel counts must be >= 1");
  }
};

/// Flattened network input length for a given horizon: the control queue
/// contributes n_d+1 taps of m channels, the output queue d_d taps of n,
/// plus w sensor channels. Always derived, never stored.
inline int input_length(const Dims& d, const HorizonConfig& h) {
  return (h.n_d + 1) * d.m + h.d_d * d.n + d.w;
}

}  // namespace nlgpc
