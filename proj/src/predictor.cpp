#include "nlgpc/predictor.hpp"

#include <algorithm>

namespace nlgpc {

QueueState QueueState::filled(const Dims& d, const HorizonConfig& h, const Vec& u0, const Vec& y0,
                              const Vec& l0) {
  QueueState q;
  q.tau.assign(static_cast<std::size_t>(h.n_d) + 1, u0);
  q.alpha.assign(static_cast<std::size_t>(h.d_d), y0);
  q.l = l0;
  q.validate(d, h);
  return q;
}

QueueState QueueState::from_flat(const Vec& flat, const Dims& d, const HorizonConfig& h) {
  if (static_cast<int>(flat.size()) != input_length(d, h))
    throw DimensionError("QueueState::from_flat: wrong flat length");
  QueueState q;
  std::size_t pos = 0;
  for (int k = 0; k <= h.n_d; ++k) {
    q.tau.emplace_back(flat.begin() + pos, flat.begin() + pos + d.m);
    pos += d.m;
  }
  for (int k = 0; k < h.d_d; ++k) {
    q.alpha.emplace_back(flat.begin() + pos, flat.begin() + pos + d.n);
    pos += d.n;
  }
  q.l.assign(flat.begin() + pos, flat.end());
  return q;
}

void QueueState::validate(const Dims& d, const HorizonConfig& h) const {
  if (static_cast<int>(tau.size()) != h.n_d + 1)
    throw DimensionError("QueueState: tau must hold n_d+1 taps");
  if (static_cast<int>(alpha.size()) != h.d_d)
    throw DimensionError("QueueState: alpha must hold d_d taps");
  for (const Vec& u : tau)
    if (static_cast<int>(u.size()) != d.m) throw DimensionError("QueueState: tau tap width != m");
  for (const Vec& y : alpha)
    if (static_cast<int>(y.size()) != d.n) throw DimensionError("QueueState: alpha tap width != n");
  if (static_cast<int>(l.size()) != d.w) throw DimensionError("QueueState: sensor width != w");
  for (double v : l)
    if (v < 0.0 || v > 1.0) throw DimensionError("QueueState: sensor channel outside [0,1]");
}

Vec build_input_vector(const QueueState& q) {
  Vec x;
  std::size_t total = q.l.size();
  for (const Vec& u : q.tau) total += u.size();
  for (const Vec& y : q.alpha) total += y.size();
  x.reserve(total);
  for (const Vec& u : q.tau) x.insert(x.end(), u.begin(), u.end());
  for (const Vec& y : q.alpha) x.insert(x.end(), y.begin(), y.end());
  x.insert(x.end(), q.l.begin(), q.l.end());
  return x;
}

QueueState roll_queues(QueueState q, const Vec& u_new, const Vec& y_new) {
  if (!q.tau.empty()) {
    q.tau.pop_back();
    q.tau.insert(q.tau.begin(), u_new);
  }
  if (!q.alpha.empty()) {
    q.alpha.pop_back();
    q.alpha.insert(q.alpha.begin(), y_new);
  }
  return q;
}

ControlSequence ControlSequence::constant(int nc, const Vec& u) {
  ControlSequence cs(nc, static_cast<int>(u.size()));
  for (int j = 0; j < nc; ++j)
    for (std::size_t i = 0; i < u.size(); ++i) cs.U(j, i) = u[i];
  return cs;
}

Vec ControlSequence::row(int j) const {
  Vec r(U.cols);
  for (std::size_t i = 0; i < U.cols; ++i) r[i] = U(j, i);
  return r;
}

ControlSequence ControlSequence::from_flat(const Vec& flat, int nc, int m) {
  if (flat.size() != static_cast<std::size_t>(nc) * static_cast<std::size_t>(m))
    throw DimensionError("ControlSequence::from_flat: wrong length");
  ControlSequence cs(nc, m);
  cs.U.a = flat;
  return cs;
}

std::vector<Vec> rollout(ChildModel& model, const QueueState& q0, const ControlSequence& U,
                         const HorizonConfig& h) {
  const int p_expected = model.input_width();
  QueueState q = q0;
  if (q.tau.empty() || U.channels() != static_cast<int>(q.tau.front().size()) ||
      U.steps() != h.Nc)
    throw DimensionError("rollout: control sequence does not match queues/horizon");

  model.reset_state();
  std::vector<Vec> predictions;
  predictions.reserve(static_cast<std::size_t>(h.N));
  for (int j = 1; j <= h.N; ++j) {
    const Vec u_j = U.row(control_row_for_step(j, h.Nc));
    if (j == 1)
      q.tau.front() = u_j;
    else
      q = roll_queues(std::move(q), u_j, predictions.back());
    const Vec x = build_input_vector(q);
    if (static_cast<int>(x.size()) != p_expected)
      throw DimensionError("rollout: queue layout does not match model input width");
    predictions.push_back(model.forward(x));
  }
  return predictions;
}

}  // namespace nlgpc
