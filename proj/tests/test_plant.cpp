#include <doctest.h>

#include <cmath>

#include "nlgpc/plant.hpp"

using namespace nlgpc;

namespace {

constexpr double kDt = 1.0 / 120.0;

}  // namespace

TEST_CASE("constant input settles to a fixed point") {
  Plant plant;
  const Vec u = {2.0, 1.2};
  Vec y;
  for (int k = 0; k < 600; ++k) y = plant.step(u, kDt).first;  // 5 s >> lag
  const Vec y2 = plant.step(u, kDt).first;
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::fabs(y2[i] - y[i]) < 1e-6);
  // settled onto the hysteretic target, not wandering
  Vec y3 = y2;
  for (int k = 0; k < 120; ++k) y3 = plant.step(u, kDt).first;
  for (std::size_t i = 0; i < y3.size(); ++i) CHECK(std::fabs(y3[i] - y2[i]) < 1e-9);
}

TEST_CASE("triangle sweep traces a hysteresis loop with positive area") {
  Plant plant;
  const int half = 600;
  std::vector<double> us, ys;
  // settle at the low end first
  for (int k = 0; k < 400; ++k) plant.step({0.3, 1.5}, kDt);
  for (int k = 0; k <= 2 * half; ++k) {
    const double frac = k <= half ? static_cast<double>(k) / half : 2.0 - static_cast<double>(k) / half;
    const double u0 = 0.3 + frac * 2.4;
    const auto [y, l] = plant.step({u0, 1.5}, kDt);
    us.push_back(u0);
    ys.push_back(y[1]);  // the channel u0 drives directly
  }
  // shoelace area of the closed u-y loop
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < us.size(); ++k)
    area += us[k] * ys[k + 1] - us[k + 1] * ys[k];
  area = std::fabs(0.5 * area);
  CHECK(area > 1.0);  // mm*rad, clearly open loop
}

TEST_CASE("deterministic replay under a fixed seed") {
  PlantParams params;
  params.seed = 123;
  params.noise_amp = 0.01;
  Plant a(params), b(params);
  for (int k = 0; k < 200; ++k) {
    const Vec u = {1.5 + std::sin(0.05 * k), 1.5 + std::cos(0.08 * k)};
    const auto [ya, la] = a.step(u, kDt);
    const auto [yb, lb] = b.step(u, kDt);
    for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya[i] == yb[i]);
    for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i] == lb[i]);
  }
}

TEST_CASE("sensor channels stay inside [0,1]") {
  PlantParams params;
  params.noise_amp = 0.2;  // exaggerated noise still clamps
  Plant plant(params);
  for (int k = 0; k < 500; ++k) {
    const Vec u = {1.5 + 1.4 * std::sin(0.1 * k), 1.5 - 1.4 * std::cos(0.13 * k)};
    const auto [y, l] = plant.step(u, kDt);
    for (double v : l) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("pose stays inside the motion envelope") {
  Plant plant;
  for (int k = 0; k < 2000; ++k) {
    const Vec u = {1.5 + 1.5 * std::sin(0.21 * k), 1.5 + 1.5 * std::sin(0.17 * k + 1.0)};
    const Vec y = plant.step(u, kDt).first;
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(y[i] >= 0.0);
      CHECK(y[i] <= Plant::kRange[i]);
    }
  }
}

TEST_CASE("static map is monotone in each input for the driven channels") {
  Plant plant;
  for (int ch = 0; ch < 2; ++ch) {
    double prev1 = -1e9, prev2 = -1e9;
    for (int k = 0; k <= 40; ++k) {
      Vec u = {1.1, 1.9};
      u[static_cast<std::size_t>(ch)] = 3.0 * k / 40.0;
      const Vec y = plant.static_map(u);
      CHECK(y[1] >= prev1 - 1e-12);
      CHECK(y[2] >= prev2 - 1e-12);
      prev1 = y[1];
      prev2 = y[2];
    }
  }
}

TEST_CASE("rest pose matches the static map at the centered input") {
  Plant plant;
  const Vec rest = plant.rest_pose();
  const Vec mapped = plant.static_map(plant.rest_input());
  for (std::size_t i = 0; i < rest.size(); ++i) CHECK(rest[i] == doctest::Approx(mapped[i]));
  // the state starts there
  for (std::size_t i = 0; i < rest.size(); ++i)
    CHECK(plant.state().y[i] == doctest::Approx(rest[i]));
}

TEST_CASE("disturbance: immediate negative y2 offset, linear in mass") {
  const Vec u = {1.5, 1.5};
  auto settle = [&u](Plant& p) {
    Vec y;
    for (int k = 0; k < 1200; ++k) y = p.step(u, kDt).first;
    return y;
  };

  Plant clean;
  const Vec y_clean = settle(clean);

  Plant loaded;
  settle(loaded);
  loaded.apply_disturbance(137.0, 0.0);
  const Vec y_loaded = settle(loaded);
  const double offset = y_loaded[2] - y_clean[2];
  CHECK(offset < 0.0);
  CHECK(std::fabs(offset + loaded.params().load_gain * 137.0) < 1e-6);

  Plant doubled;
  settle(doubled);
  doubled.apply_disturbance(274.0, 0.0);
  const Vec y_doubled = settle(doubled);
  CHECK((y_doubled[2] - y_clean[2]) == doctest::Approx(2.0 * offset).epsilon(1e-6));

  // zero disturbance is a no-op
  Plant z1, z2;
  z2.apply_disturbance(0.0, 0.0);
  for (int k = 0; k < 200; ++k) {
    const auto [ya, la] = z1.step(u, kDt);
    const auto [yb, lb] = z2.step(u, kDt);
    for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya[i] == yb[i]);
    for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i] == lb[i]);
  }
}

TEST_CASE("plant rejects invalid input") {
  Plant plant;
  CHECK_THROWS_AS(plant.step({1.0}, kDt), DimensionError);
  CHECK_THROWS_AS(plant.step({std::nan(""), 1.0}, kDt), NumericError);
  CHECK_THROWS_AS(plant.step({1.0, 1.0}, 0.0), ConfigError);
  CHECK_THROWS_AS(plant.apply_disturbance(-5.0, 0.0), ConfigError);
}
