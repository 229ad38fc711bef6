#pragma once

#include <vector>

#include "nlgpc/horizon.hpp"
#include "nlgpc/linalg.hpp"
#include "nlgpc/recnn.hpp"

namespace nlgpc {

/// Rolling histories fed to the model. Both queues store the newest entry
/// first: tau holds n_d+1 control taps (tau[0] is the slot the candidate
/// control occupies during prediction), alpha holds the d_d most recent
/// output measurements, l is the current sensor vector with every channel
/// in [0, 1].
struct QueueState {
  std::vector<Vec> tau;
  std::vector<Vec> alpha;
  Vec l;

  static QueueState filled(const Dims& d, const HorizonConfig& h, const Vec& u0, const Vec& y0,
                           const Vec& l0);
  static QueueState from_flat(const Vec& flat, const Dims& d, const HorizonConfig& h);

  void validate(const Dims& d, const HorizonConfig& h) const;
};

/// Flatten to the network input: control taps newest-first (channels
/// contiguous within a tap), then output taps newest-first, then sensors.
Vec build_input_vector(const QueueState& q);

/// FIFO shift: u_new becomes the newest control tap, y_new the newest
/// output tap; the sensor vector is held fixed across the prediction tree.
QueueState roll_queues(QueueState q, const Vec& u_new, const Vec& y_new);

/// Candidate control inputs over the control horizon, one row per step.
struct ControlSequence {
  Mat U;  // Nc x m

  ControlSequence() = default;
  ControlSequence(int nc, int m) : U(nc, m) {}
  static ControlSequence constant(int nc, const Vec& u);

  int steps() const { return static_cast<int>(U.rows); }
  int channels() const { return static_cast<int>(U.cols); }
  Vec row(int j) const;
  /// Step-major flattening (row j, then channel i), used by the solver.
  Vec flat() const { return U.a; }
  static ControlSequence from_flat(const Vec& flat, int nc, int m);
};

/// Control row consumed by prediction step j in 1..N: rows advance with the
/// step until the control horizon is exhausted, then the last row repeats.
inline int control_row_for_step(int j, int nc) { return j - 1 < nc - 1 ? j - 1 : nc - 1; }

/// N-step recursive prediction. Step 1 runs the model on q0 with the newest
/// control tap replaced by U row 0; every later step pushes the previous
/// prediction into alpha and the step's control row into tau. Recurrent
/// state is reset on entry, making the call a pure function of its inputs.
std::vector<Vec> rollout(ChildModel& model, const QueueState& q0, const ControlSequence& U,
                         const HorizonConfig& h);

}  // namespace nlgpc
