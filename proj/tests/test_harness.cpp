#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "nlgpc/harness.hpp"

using namespace nlgpc;

namespace {

ChildModel fresh_fc(const ExperimentConfig& cfg, std::uint32_t seed) {
  const Dims dims{Plant::kInputs, Plant::kOutputs, Plant::kSensors};
  return ChildModel::seeded(arch_preset("fc"), input_length(dims, cfg.horizon), seed);
}

RunLog synthetic_log(int rows, double offset2) {
  RunLog log;
  for (int k = 0; k < rows; ++k) {
    LogRow row;
    row.t = (k + 1) / 120.0;
    row.u = {1.5, 1.5};
    row.y_true = {8.0, 14.0, 17.5 + offset2};
    row.y_pred = row.y_true;
    row.y_ref = {8.0, 14.0, 17.5};
    row.l.assign(Plant::kSensors, 0.5);
    row.j = 0.1 * k;
    log.rows.push_back(std::move(row));
  }
  return log;
}

}  // namespace

TEST_CASE("config parsing: values, defaults, unknown keys") {
  Config good = Config::from_string(
      "horizon.N = 4\n"
      "# comment line\n"
      "cost.q_diag = 1.0, 0.5, 2.0\n"
      "solver.newton_iters = 3\n"
      "plant.seed = 9\n");
  const ExperimentConfig cfg = experiment_config_from(good);
  CHECK(cfg.horizon.N == 4);
  CHECK(cfg.horizon.N1 == 1);  // default kept
  CHECK(cfg.q_diag_mm[1] == doctest::Approx(0.5));
  CHECK(cfg.solver.newton_iters == 3);
  CHECK(cfg.plant.seed == 9);

  Config unknown = Config::from_string("horizon.N = 3\nnot.a.key = 1\n");
  CHECK_THROWS_AS(experiment_config_from(unknown), ConfigError);

  CHECK_THROWS_AS(Config::from_string("horizon.N 3\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_string("a = 1\na = 2\n"), ConfigError);

  Config bad_value = Config::from_string("horizon.N = banana\n");
  CHECK_THROWS_AS(experiment_config_from(bad_value), ConfigError);

  Config bad_horizon = Config::from_string("horizon.N2 = 9\n");
  CHECK_THROWS_AS(experiment_config_from(bad_horizon), ConfigError);
}

TEST_CASE("zero-duration run produces an empty log") {
  ExperimentConfig cfg;
  cfg.duration_s = 0.0;
  ChildModel model = fresh_fc(cfg, 1);
  const RunLog log = run_experiment(cfg, model);
  CHECK(log.rows.empty());
}

TEST_CASE("run_experiment is bit-deterministic under a fixed seed") {
  ExperimentConfig cfg;
  cfg.duration_s = 0.5;
  cfg.plant.noise_amp = 0.005;
  ChildModel m1 = fresh_fc(cfg, 5);
  ChildModel m2 = fresh_fc(cfg, 5);
  const RunLog a = run_experiment(cfg, m1);
  const RunLog b = run_experiment(cfg, m2);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].t == b.rows[k].t);
    for (std::size_t i = 0; i < a.rows[k].u.size(); ++i) CHECK(a.rows[k].u[i] == b.rows[k].u[i]);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a.rows[k].y_true[i] == b.rows[k].y_true[i]);
      CHECK(a.rows[k].y_pred[i] == b.rows[k].y_pred[i]);
      CHECK(a.rows[k].y_ref[i] == b.rows[k].y_ref[i]);
    }
    for (std::size_t i = 0; i < a.rows[k].l.size(); ++i) CHECK(a.rows[k].l[i] == b.rows[k].l[i]);
    CHECK(a.rows[k].j == b.rows[k].j);
  }
}

TEST_CASE("compute_rmse closed forms") {
  CHECK(compute_rmse(synthetic_log(40, 0.0)) == doctest::Approx(0.0));
  CHECK(compute_rmse(synthetic_log(40, 3.0)) == doctest::Approx(3.0));
  CHECK_THROWS_AS(compute_rmse(RunLog{}), DataError);
}

TEST_CASE("aggregate_stats over identical runs has zero spread") {
  const std::vector<RunLog> logs = {synthetic_log(20, 1.0), synthetic_log(20, 1.0),
                                    synthetic_log(20, 1.0)};
  const RmseStats stats = aggregate_stats(logs, "eight");
  CHECK(stats.runs == 3);
  CHECK(stats.mean == doctest::Approx(1.0));
  CHECK(stats.stddev == doctest::Approx(0.0));
}

TEST_CASE("log csv round trip preserves the data columns") {
  const RunLog log = synthetic_log(15, 2.0);
  const std::string path = "harness_roundtrip.csv";
  export_log_csv(log, path);
  const RunLog back = read_log_csv(path);
  REQUIRE(back.rows.size() == log.rows.size());
  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    CHECK(back.rows[k].t == log.rows[k].t);
    for (std::size_t i = 0; i < log.rows[k].u.size(); ++i)
      CHECK(back.rows[k].u[i] == log.rows[k].u[i]);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back.rows[k].y_true[i] == log.rows[k].y_true[i]);
      CHECK(back.rows[k].y_pred[i] == log.rows[k].y_pred[i]);
      CHECK(back.rows[k].y_ref[i] == log.rows[k].y_ref[i]);
    }
    for (std::size_t i = 0; i < log.rows[k].l.size(); ++i)
      CHECK(back.rows[k].l[i] == log.rows[k].l[i]);
    CHECK(back.rows[k].j == log.rows[k].j);
  }
  std::remove(path.c_str());

  // header is the documented schema
  export_log_csv(log, path);
  {
    std::FILE* f = std::fopen(path.c_str(), "r");
    REQUIRE(f != nullptr);
    char line[512];
    REQUIRE(std::fgets(line, sizeof(line), f) != nullptr);
    std::fclose(f);
    const std::string header(line);
    CHECK(header.rfind("t,u0,u1,y0,y1,y2,yhat0,yhat1,yhat2,yref0,yref1,yref2,l0", 0) == 0);
  }
  std::remove(path.c_str());
}

TEST_CASE("config accepts the literal hessian form") {
  Config cfg = Config::from_string("cost.hessian_form = literal\n");
  const ExperimentConfig e = experiment_config_from(cfg);
  CHECK(e.hessian_form == CostSpec::TrackingHessian::Literal);
  Config bad = Config::from_string("cost.hessian_form = other\n");
  CHECK_THROWS_AS(experiment_config_from(bad), ConfigError);
}

TEST_CASE("benchmark phases are ordered by the work they contain") {
  ExperimentConfig cfg;
  ChildModel model = fresh_fc(cfg, 11);
  const BenchReport report = benchmark_timing(model, cfg, 400);
  CHECK(report.steps == 400);
  CHECK(report.predict_us > 0.0);
  CHECK(report.predict_us <= report.jacobian_us);
  CHECK(report.jacobian_us <= report.full_us);
  // shared evaluations beat running the two derivative passes separately
  CHECK(report.shared_us <= report.jacobian_us + report.full_us);
}

TEST_CASE("rmse recomputed from the exported csv matches the aggregate") {
  ExperimentConfig cfg;
  cfg.duration_s = 0.4;
  ChildModel model = fresh_fc(cfg, 3);
  const RunLog log = run_experiment(cfg, model);
  const std::string path = "harness_rmse.csv";
  export_log_csv(log, path);
  const RunLog back = read_log_csv(path);
  CHECK(compute_rmse(back) == doctest::Approx(compute_rmse(log)).epsilon(1e-15));
  std::remove(path.c_str());
}
