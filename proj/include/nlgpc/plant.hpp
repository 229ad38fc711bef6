#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "nlgpc/horizon.hpp"
#include "nlgpc/linalg.hpp"
#include "nlgpc/scaling.hpp"

namespace nlgpc {

/// Tunables of the synthetic tendon-driven testbed.
struct PlantParams {
  std::uint32_t seed = 1;        // testbed identity: fixes the sensor map
  std::uint32_t noise_seed = 0;  // noise stream; 0 means follow seed
  double noise_amp = 0.0;        // baseline sensor noise amplitude
  double sensor_gain = 1.0;  // pre-squash gain of the sensor mixtures
  double lag_tau = 0.1;      // pose first-order lag, seconds
  double load_gain = 0.02;   // mm of y2 bias per gram of load
  double hyst_gain = 0.25;   // hysteretic strain contribution, rad per unit memory
  double hyst_beta = 1.0;    // Bouc-Wen beta
  double hyst_gamma = 0.5;   // Bouc-Wen gamma
};

struct PlantState {
  Vec y;                     // pose, mm
  Vec z;                     // hysteresis memory per input channel
  double load_mass_g = 0.0;
  double em_noise_amp = 0.0;
};

/// Two-tendon soft block with eleven optical strain channels. The pose
/// target is a saturating mix of the hysteretic strains; the first pose
/// channel rides a curved (saddle) surface over the other two, which is
/// what makes the shipped reference paths reachable with two inputs. The
/// pose follows the target through a first-order lag. Everything is
/// deterministic per seed.
class Plant {
 public:
  static constexpr int kInputs = 2;
  static constexpr int kOutputs = 3;
  static constexpr int kSensors = 11;
  static constexpr double kInputMin = 0.0;  // rad
  static constexpr double kInputMax = 3.0;  // rad

  /// Motion envelope per pose channel, mm.
  static constexpr std::array<double, 3> kRange = {40.4, 28.3, 35.0};

  explicit Plant(PlantParams params = {});

  /// Advance one step under input u held for dt seconds; returns the new
  /// pose and sensor vector.
  std::pair<Vec, Vec> step(const Vec& u, double dt);

  /// Attach a load (static y2 bias, negative) and set the sensor noise
  /// amplitude.
  void apply_disturbance(double mass_g, double em_amp);

  const PlantState& state() const { return state_; }
  const PlantParams& params() const { return params_; }

  /// Pose the target map produces at input u with zero hysteresis memory
  /// and no load; pure, used for calibration and sanity checks.
  Vec static_map(const Vec& u) const;

  Vec rest_input() const { return Vec(kInputs, 0.5 * (kInputMin + kInputMax)); }
  Vec rest_pose() const { return static_map(rest_input()); }

  /// Sensor vector at the current state without advancing time.
  Vec read_sensors();

  Dims dims() const { return Dims{kInputs, kOutputs, kSensors}; }

  /// Normalization the controller and trainer use for this testbed.
  UnitScaling scaling() const;

 private:
  PlantParams params_;
  PlantState state_;
  Vec last_u_;       // previous applied input, drives the hysteresis rate
  Mat sensor_mix_;   // kSensors x 6 seeded coefficients
  Vec sensor_bias_;  // kSensors
  std::uint64_t noise_state_;

  Vec target_pose(const Vec& u, const Vec& z, double load_mass) const;
  double noise_draw();
};

}  // namespace nlgpc
