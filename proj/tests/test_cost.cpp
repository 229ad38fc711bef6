#include <doctest.h>

#include <cmath>

#include "nlgpc/cost.hpp"
#include "nlgpc/rng.hpp"

using namespace nlgpc;

namespace {

bool close_rel(double a, double b, double tol) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= tol * scale;
}

CostSpec spec_1d(double q, double lam, double s, double r, double b) {
  CostSpec spec;
  spec.q_diag = {q};
  spec.lambda_diag = {lam};
  spec.s = s;
  spec.r = r;
  spec.b = b;
  return spec;
}

// Frozen-sensitivity surrogate the jacobian/hessian differentiate: step j's
// prediction responds through dy_du to the control row it consumes.
std::vector<Vec> surrogate_predictions(const std::vector<Vec>& base, const Mat& dy_du,
                                       const ControlSequence& u0, const ControlSequence& u,
                                       const HorizonConfig& h) {
  std::vector<Vec> out = base;
  for (int j = 1; j <= h.N; ++j) {
    const int row = control_row_for_step(j, u.steps());
    for (std::size_t o = 0; o < out[static_cast<std::size_t>(j - 1)].size(); ++o) {
      double bump = 0.0;
      for (int i = 0; i < u.channels(); ++i)
        bump += dy_du(o, static_cast<std::size_t>(i)) * (u.U(row, i) - u0.U(row, i));
      out[static_cast<std::size_t>(j - 1)][o] += bump;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("barrier value at the cited points") {
  // center cancels the offset at s = 1
  for (double r : {0.5, 2.0, 7.0}) {
    const CostSpec spec = spec_1d(1.0, 0.0, 1.0, r, 0.3);
    CHECK(barrier(0.3, spec) == doctest::Approx(0.0).epsilon(1e-12));
  }
  const CostSpec spec = spec_1d(1.0, 0.0, 1.0, 2.0, 0.0);
  CHECK(barrier(0.5, spec) == doctest::Approx(1.0 / 1.5 + 1.0 / 0.5 - 2.0));

  // pole: large near the bound
  const CostSpec unit = spec_1d(1.0, 0.0, 1.0, 1.0, 0.0);
  CHECK(barrier(0.5 - 1e-7, unit) > 1e6);
  CHECK_THROWS_AS(barrier(0.5, unit), BarrierDomainError);
  CHECK_THROWS_AS(barrier(0.7, unit), BarrierDomainError);
}

TEST_CASE("barrier derivatives at the center and against finite differences") {
  const CostSpec spec = spec_1d(1.0, 0.0, 0.7, 3.0, 1.5);
  CHECK(barrier_grad(1.5, spec) == doctest::Approx(0.0));
  CHECK(barrier_hess(1.5, spec) == doctest::Approx(32.0 * spec.s / (27.0)));  // 32 s / r^3

  const double u = spec.b + spec.r / 4.0;
  const double h = spec.r * 1e-5;
  const double fd_grad = (barrier(u + h, spec) - barrier(u - h, spec)) / (2.0 * h);
  const double fd_hess = (barrier(u + h, spec) - 2.0 * barrier(u, spec) + barrier(u - h, spec)) / (h * h);
  CHECK(close_rel(barrier_grad(u, spec), fd_grad, 1e-6));
  CHECK(close_rel(barrier_hess(u, spec), fd_hess, 1e-6));
}

TEST_CASE("barrier floor: value at the center is 4(s-1)/r") {
  for (double s : {0.1, 1.0, 3.0}) {
    const CostSpec spec = spec_1d(1.0, 0.0, s, 2.5, -0.2);
    CHECK(barrier(spec.b, spec) == doctest::Approx(4.0 * (s - 1.0) / spec.r));
    SplitMix64 rng(4);
    for (int k = 0; k < 50; ++k) {
      const double u = rng.uniform(spec.lo() + 0.01, spec.hi() - 0.01);
      CHECK(barrier(u, spec) >= 4.0 * (s - 1.0) / spec.r - 1e-12);
    }
  }
}

TEST_CASE("cost_value: perfect tracking at the barrier center is zero") {
  HorizonConfig h{1, 0, 1, 1, 0, 0};
  CostSpec spec = spec_1d(2.0, 1.0, 1.0, 2.0, 0.0);
  const std::vector<Vec> preds = {{0.7}};
  ReferenceWindow ref;
  ref.first_step = h.N1;
  ref.y_ref = {{0.7}, {0.7}};  // window covers steps 0..1; step 0 unreachable
  ref.y_ref.resize(static_cast<std::size_t>(h.N2 - h.N1 + 1), Vec{0.7});
  const ControlSequence U = ControlSequence::constant(1, Vec{0.0});
  const double j = cost_value(preds, ref, U, Vec{0.0}, spec, h);
  CHECK(j == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cost_value tracking term: weighted squared error") {
  HorizonConfig h{1, 1, 1, 1, 0, 0};
  // s = 0 disables the whole barrier sum including the -4/r offset
  CostSpec spec = spec_1d(2.0, 0.0, 0.0, 2.0, 0.0);
  const std::vector<Vec> preds = {{1.0}};
  ReferenceWindow ref;
  ref.first_step = 1;
  ref.y_ref = {{4.0}};  // error 3
  const ControlSequence U = ControlSequence::constant(1, Vec{0.0});
  const double j = cost_value(preds, ref, U, Vec{0.0}, spec, h);
  CHECK(j == doctest::Approx(18.0));

  CostSpec doubled = spec;
  doubled.q_diag[0] *= 2.0;
  CHECK(cost_value(preds, ref, U, Vec{0.0}, doubled, h) == doctest::Approx(36.0));
}

TEST_CASE("cost_jacobian: stationary at perfect symmetric tracking") {
  HorizonConfig h{2, 1, 2, 2, 0, 0};
  CostSpec spec;
  spec.q_diag = {1.0, 2.0};
  spec.lambda_diag = {0.5};
  spec.s = 1.0;
  spec.r = 2.0;
  spec.b = 0.25;
  const std::vector<Vec> preds = {{0.5, -0.1}, {0.5, -0.1}};
  ReferenceWindow ref;
  ref.first_step = 1;
  ref.y_ref = {{0.5, -0.1}, {0.5, -0.1}};
  const ControlSequence U = ControlSequence::constant(2, Vec{0.25});
  Mat dy(2, 1);
  dy(0, 0) = 0.8;
  dy(1, 0) = -0.3;
  const Mat grad = cost_jacobian(dy, preds, ref, U, Vec{0.25}, spec, h);
  for (double v : grad.a) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cost_jacobian tracking-only single step matches the closed form") {
  HorizonConfig h{1, 1, 1, 1, 0, 0};
  CostSpec spec;
  spec.q_diag = {1.5, 0.5, 2.0};
  spec.lambda_diag = {0.0, 0.0};
  spec.s = 0.0;
  spec.r = 2.0;
  spec.b = 0.0;
  const std::vector<Vec> preds = {{0.2, -0.4, 1.0}};
  ReferenceWindow ref;
  ref.first_step = 1;
  ref.y_ref = {{0.5, 0.0, 0.4}};
  Mat dy(3, 2);
  double fill = -0.4;
  for (double& v : dy.a) v = (fill += 0.23);
  const ControlSequence U = ControlSequence::constant(1, Vec{0.1, -0.2});
  const Mat grad = cost_jacobian(dy, preds, ref, U, Vec{0.1, -0.2}, spec, h);
  for (int i = 0; i < 2; ++i) {
    double expect = 0.0;
    for (int o = 0; o < 3; ++o)
      expect += -2.0 * (ref.y_ref[0][o] - preds[0][o]) * spec.q_diag[o] * dy(o, i);
    CHECK(grad(0, i) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("cost_jacobian matches finite differences of the surrogate cost") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    HorizonConfig h;
    h.N = 3;
    h.N1 = 1;
    h.N2 = 3;
    h.Nc = 1 + static_cast<int>(rng.next() % 2);
    h.n_d = 1;
    h.d_d = 1;
    const int m = 2, n = 3;

    CostSpec spec;
    spec.q_diag = {rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0)};
    spec.lambda_diag = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    spec.s = trial % 3 == 0 ? 0.0 : rng.uniform(0.001, 0.5);
    spec.r = 2.0;
    spec.b = 0.0;

    std::vector<Vec> base;
    for (int j = 0; j < h.N; ++j) {
      Vec y(n);
      for (double& v : y) v = rng.uniform(-0.5, 0.5);
      base.push_back(y);
    }
    ReferenceWindow ref;
    ref.first_step = h.N1;
    for (int j = h.N1; j <= h.N2; ++j) {
      Vec y(n);
      for (double& v : y) v = rng.uniform(-0.5, 0.5);
      ref.y_ref.push_back(y);
    }
    Mat dy(n, m);
    for (double& v : dy.a) v = rng.uniform(-0.8, 0.8);
    ControlSequence U0(h.Nc, m);
    for (double& v : U0.U.a) v = rng.uniform(-0.5, 0.5);
    Vec u_prev(m);
    for (double& v : u_prev) v = rng.uniform(-0.5, 0.5);

    const Mat grad = cost_jacobian(dy, base, ref, U0, u_prev, spec, h);

    const auto j_of = [&](const ControlSequence& u) {
      return cost_value(surrogate_predictions(base, dy, U0, u, h), ref, u, u_prev, spec, h);
    };
    const double eps = 1e-6;
    for (int jj = 0; jj < h.Nc; ++jj)
      for (int i = 0; i < m; ++i) {
        ControlSequence up = U0, um = U0;
        up.U(jj, i) += eps;
        um.U(jj, i) -= eps;
        const double fd = (j_of(up) - j_of(um)) / (2.0 * eps);
        CHECK(close_rel(grad(jj, i), fd, 5e-4));
      }
  }
}

TEST_CASE("cost_value floor: J >= Nc*m*4(s-1)/r") {
  SplitMix64 rng(88);
  HorizonConfig h{3, 1, 3, 2, 0, 0};
  for (int trial = 0; trial < 60; ++trial) {
    CostSpec spec;
    spec.q_diag = {rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)};
    spec.lambda_diag = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    spec.s = rng.uniform(0.05, 3.0);
    spec.r = rng.uniform(0.5, 4.0);
    spec.b = rng.uniform(-1.0, 1.0);

    std::vector<Vec> preds;
    ReferenceWindow ref;
    ref.first_step = h.N1;
    for (int j = 0; j < h.N; ++j)
      preds.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    for (int j = h.N1; j <= h.N2; ++j)
      ref.y_ref.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    ControlSequence u(h.Nc, 2);
    for (double& v : u.U.a) v = rng.uniform(spec.lo() + 0.01 * spec.r, spec.hi() - 0.01 * spec.r);
    Vec u_prev = {rng.uniform(spec.lo(), spec.hi()), rng.uniform(spec.lo(), spec.hi())};

    const double j_total = cost_value(preds, ref, u, u_prev, spec, h);
    const double floor = h.Nc * 2 * 4.0 * (spec.s - 1.0) / spec.r;
    CHECK(j_total >= floor - 1e-9);
  }
}

TEST_CASE("cost_hessian: input-change block is the exact quadratic-form hessian") {
  HorizonConfig h{2, 1, 2, 2, 0, 0};
  CostSpec spec;
  spec.q_diag = {0.0};
  spec.lambda_diag = {1.0};
  spec.s = 0.0;
  spec.r = 2.0;
  spec.b = 0.0;
  const std::vector<Vec> preds = {{0.0}, {0.0}};
  ReferenceWindow ref;
  ref.first_step = 1;
  ref.y_ref = {{0.0}, {0.0}};
  const ControlSequence U = ControlSequence::constant(2, Vec{0.4});
  Mat dy(1, 1);
  std::vector<Mat> d2(1, Mat(1, 1));
  const Mat hess = cost_hessian(dy, d2, preds, ref, U, Vec{0.1}, spec, h);
  REQUIRE(hess.rows == 2);
  CHECK(hess(0, 0) == doctest::Approx(4.0));
  CHECK(hess(0, 1) == doctest::Approx(-2.0));
  CHECK(hess(1, 0) == doctest::Approx(-2.0));
  CHECK(hess(1, 1) == doctest::Approx(2.0));
}

TEST_CASE("cost_hessian: barrier-only diagonal at the center") {
  HorizonConfig h{1, 1, 1, 1, 0, 0};  // window term vanishes with Q = 0
  CostSpec spec;
  spec.q_diag = {0.0, 0.0};
  spec.lambda_diag = {0.0, 0.0};
  spec.s = 0.4;
  spec.r = 2.0;
  spec.b = -0.1;
  const std::vector<Vec> preds = {{0.0, 0.0}};
  ReferenceWindow ref;
  ref.first_step = 1;
  ref.y_ref = {{0.0, 0.0}};
  const ControlSequence U = ControlSequence::constant(1, Vec{-0.1, -0.1});
  Mat dy(2, 2);
  std::vector<Mat> d2(2, Mat(2, 2));
  const Mat hess = cost_hessian(dy, d2, preds, ref, U, Vec{-0.1, -0.1}, spec, h);
  const double expect = 32.0 * spec.s / (spec.r * spec.r * spec.r);
  CHECK(hess(0, 0) == doctest::Approx(expect));
  CHECK(hess(1, 1) == doctest::Approx(expect));
  CHECK(hess(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("cost_hessian is symmetric and the literal form matches at m=1") {
  SplitMix64 rng(31);
  HorizonConfig h{3, 1, 3, 2, 0, 0};
  CostSpec spec;
  spec.q_diag = {rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)};
  spec.lambda_diag = {0.3};
  spec.s = 0.2;
  spec.r = 2.0;
  spec.b = 0.0;

  std::vector<Vec> preds;
  ReferenceWindow ref;
  ref.first_step = 1;
  for (int j = 0; j < 3; ++j) {
    preds.push_back({rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)});
    ref.y_ref.push_back({rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)});
  }
  ControlSequence U(2, 1);
  U.U(0, 0) = 0.2;
  U.U(1, 0) = -0.3;
  Mat dy(2, 1);
  dy(0, 0) = 0.7;
  dy(1, 0) = -0.2;
  std::vector<Mat> d2(2, Mat(1, 1));
  d2[0](0, 0) = 0.05;
  d2[1](0, 0) = -0.08;

  const Mat gauss = cost_hessian(dy, d2, preds, ref, U, Vec{0.0}, spec, h);
  for (std::size_t a = 0; a < gauss.rows; ++a)
    for (std::size_t b = 0; b < gauss.cols; ++b) CHECK(gauss(a, b) == gauss(b, a));

  CostSpec lit = spec;
  lit.hessian_form = CostSpec::TrackingHessian::Literal;
  const Mat literal = cost_hessian(dy, d2, preds, ref, U, Vec{0.0}, lit, h);
  REQUIRE(literal.a.size() == gauss.a.size());
  for (std::size_t i = 0; i < gauss.a.size(); ++i)
    CHECK(literal.a[i] == doctest::Approx(gauss.a[i]).epsilon(1e-12));
}
