#include "nlgpc/plant.hpp"

#include <cmath>
#include <random>

#include "nlgpc/errors.hpp"

namespace nlgpc {

namespace {

// Pose geometry of the synthetic block (fixed; the envelope is part of the
// testbed's identity, dynamical knobs live in PlantParams).
constexpr double kRest0 = 8.0, kRest1 = 14.0, kRest2 = 17.5;
constexpr double kGain1 = 13.0, kGain2 = 17.0;
constexpr double kTanhScale = 1.2;
constexpr double kSaddle2 = 0.03;    // curvature over the y2 deviation
constexpr double kSaddle1 = 0.0018;  // curvature over the y1 deviation
constexpr double kMix00 = 1.0, kMix01 = 0.15, kMix10 = 0.15, kMix11 = 1.0;

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

Plant::Plant(PlantParams params) : params_(params) {
  state_.y = rest_pose();
  state_.z.assign(kInputs, 0.0);
  state_.em_noise_amp = params_.noise_amp;
  last_u_ = rest_input();

  std::mt19937 rng(params_.seed);
  auto uniform = [&rng](double lo, double hi) {
    const double u01 = static_cast<double>(rng() >> 5) * 0x1.0p-27;
    return lo + (hi - lo) * u01;
  };
  sensor_mix_ = Mat(kSensors, 6);
  sensor_bias_.assign(kSensors, 0.0);
  for (int k = 0; k < kSensors; ++k) {
    for (int c = 0; c < 6; ++c) sensor_mix_(k, c) = uniform(-1.0, 1.0);
    sensor_bias_[static_cast<std::size_t>(k)] = uniform(-0.6, 0.6);
  }
  const std::uint32_t nseed = params_.noise_seed != 0 ? params_.noise_seed : params_.seed;
  noise_state_ = (static_cast<std::uint64_t>(nseed) << 21) ^ 0x9E3779B97F4A7C15ull;
}

Vec Plant::target_pose(const Vec& u, const Vec& z, double load_mass) const {
  // memory opposes the motion, so the output trails the input on each pass
  const double center = 0.5 * (kInputMin + kInputMax);
  const double v0 = (u[0] - center) - params_.hyst_gain * z[0];
  const double v1 = (u[1] - center) - params_.hyst_gain * z[1];
  const double w0 = kMix00 * v0 + kMix01 * v1;
  const double w1 = kMix10 * v0 + kMix11 * v1;

  const double dev1 = kGain1 * std::tanh(w0 / kTanhScale);
  const double dev2 = kGain2 * std::tanh(w1 / kTanhScale);

  Vec yt(kOutputs);
  yt[0] = kRest0 + kSaddle2 * dev2 * dev2 - kSaddle1 * dev1 * dev1;
  yt[1] = kRest1 + dev1;
  yt[2] = kRest2 + dev2 - params_.load_gain * load_mass;
  for (int i = 0; i < kOutputs; ++i) {
    if (yt[static_cast<std::size_t>(i)] < 0.0) yt[static_cast<std::size_t>(i)] = 0.0;
    if (yt[static_cast<std::size_t>(i)] > kRange[static_cast<std::size_t>(i)])
      yt[static_cast<std::size_t>(i)] = kRange[static_cast<std::size_t>(i)];
  }
  return yt;
}

Vec Plant::static_map(const Vec& u) const {
  if (u.size() != kInputs) throw DimensionError("static_map: input width != m");
  return target_pose(u, Vec(kInputs, 0.0), 0.0);
}

double Plant::noise_draw() {
  // splitmix64; mt19937 is reserved for the construction-time sensor map
  noise_state_ += 0x9E3779B97F4A7C15ull;
  std::uint64_t x = noise_state_;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  x ^= x >> 31;
  return static_cast<double>(x >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

Vec Plant::read_sensors() {
  const double v0 = params_.hyst_gain * state_.z[0];
  const double v1 = params_.hyst_gain * state_.z[1];
  const double f1 = (state_.y[1] - kRest1) / kGain1;
  const double f2 = (state_.y[2] - kRest2) / kGain2;
  const double f0 = (state_.y[0] - kRest0) / 6.0;

  Vec l(kSensors);
  for (int k = 0; k < kSensors; ++k) {
    const double mix = sensor_mix_(k, 0) * f1 + sensor_mix_(k, 1) * f2 +
                       sensor_mix_(k, 2) * v0 + sensor_mix_(k, 3) * v1 +
                       sensor_mix_(k, 4) * f0 +
                       sensor_mix_(k, 5) * f1 * f2;
    double value = sigmoid(2.0 * params_.sensor_gain * mix +
                           2.0 * sensor_bias_[static_cast<std::size_t>(k)]);
    if (state_.em_noise_amp > 0.0) value += state_.em_noise_amp * noise_draw();
    l[static_cast<std::size_t>(k)] = clamp01(value);
  }
  return l;
}

std::pair<Vec, Vec> Plant::step(const Vec& u, double dt) {
  if (u.size() != kInputs) throw DimensionError("plant step: input width != m");
  for (double v : u)
    if (!std::isfinite(v)) throw NumericError("plant step: non-finite input", -1);
  if (!(dt > 0.0)) throw ConfigError("plant step: dt must be > 0");

  // Rate-independent Bouc-Wen memory advance, driven by the input motion.
  for (int c = 0; c < kInputs; ++c) {
    const double du = u[static_cast<std::size_t>(c)] - last_u_[static_cast<std::size_t>(c)];
    double& z = state_.z[static_cast<std::size_t>(c)];
    z += du - params_.hyst_beta * std::fabs(du) * z - params_.hyst_gamma * du * std::fabs(z);
  }
  last_u_ = u;

  const Vec yt = target_pose(u, state_.z, state_.load_mass_g);
  const double alpha = 1.0 - std::exp(-dt / params_.lag_tau);
  for (int i = 0; i < kOutputs; ++i)
    state_.y[static_cast<std::size_t>(i)] +=
        alpha * (yt[static_cast<std::size_t>(i)] - state_.y[static_cast<std::size_t>(i)]);

  return {state_.y, read_sensors()};
}

void Plant::apply_disturbance(double mass_g, double em_amp) {
  if (mass_g < 0.0) throw ConfigError("apply_disturbance: mass must be >= 0");
  state_.load_mass_g = mass_g;
  state_.em_noise_amp = em_amp;
}

UnitScaling Plant::scaling() const {
  UnitScaling s;
  const double center = 0.5 * (kInputMin + kInputMax);
  s.u_center.assign(kInputs, center);
  s.u_half.assign(kInputs, 0.5 * (kInputMax - kInputMin));
  s.y_center = {kRest0 + 2.8, kRest1, kRest2};
  s.y_half = {5.0, 15.0, 18.0};
  return s;
}

}  // namespace nlgpc
