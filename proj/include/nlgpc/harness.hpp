#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlgpc/config.hpp"
#include "nlgpc/cost.hpp"
#include "nlgpc/plant.hpp"
#include "nlgpc/solver.hpp"
#include "nlgpc/tasks.hpp"
#include "nlgpc/trainer.hpp"

namespace nlgpc {

enum class FailurePolicy { HoldLastInput, Abort };

/// Everything a closed-loop run or training session needs, parsed from the
/// `key = value` config file. Cost and barrier values are given in physical
/// units (mm, rad) and converted onto the normalized signals internally.
struct ExperimentConfig {
  HorizonConfig horizon;
  Vec q_diag_mm = {1.0, 1.0, 1.0};    // 1/mm^2, n entries
  Vec lambda_diag_rad = {0.02, 0.02}; // 1/rad^2, m entries
  double barrier_s = 1e-3;
  double barrier_r = Plant::kInputMax - Plant::kInputMin;  // rad
  double barrier_b = 0.5 * (Plant::kInputMin + Plant::kInputMax);
  CostSpec::TrackingHessian hessian_form = CostSpec::TrackingHessian::GaussNewton;
  SolverConfig solver;       // clip_margin in rad here
  StencilConfig stencil;
  PlantParams plant;
  double dt = 1.0 / 120.0;
  double duration_s = 30.0;
  int runs = 1;
  FailurePolicy on_solver_failure = FailurePolicy::HoldLastInput;
  std::string task = "eight";
  TrajectoryParams trajectory;     // defaults resolved per task
  double disturb_t0 = 5.0;         // seconds
  double disturb_mass_g = 137.0;
  double disturb_em_amp = 0.01;
  TrainConfig train;
  double stage_duration_s = 60.0;
  bool run_kfold = true;

  /// Cost spec on normalized inputs/outputs for a given plant scaling.
  CostSpec normalized_cost(const UnitScaling& s) const;
  double normalized_clip_margin(const UnitScaling& s) const;
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from(Config& cfg);

struct LogRow {
  double t = 0.0;
  Vec u;       // applied input, rad
  Vec y_true;  // measured pose, mm
  Vec y_pred;  // one-step model prediction, mm
  Vec y_ref;   // reference, mm
  Vec l;       // sensors
  double j = 0.0;
  std::uint64_t predict_us = 0, first_deriv_us = 0, second_deriv_us = 0, solve_us = 0;
};

struct RunLog {
  std::vector<LogRow> rows;
};

/// Closed loop: plant at rest, queues filled with the rest state, then
/// measure -> control_step -> actuate -> log until the duration elapses.
RunLog run_experiment(const ExperimentConfig& cfg, ChildModel& model, std::uint32_t run_index = 0);

/// Fixed setpoint at the rest pose; at disturb_t0 the configured load mass
/// and sensor noise switch on.
RunLog disturbance_scenario(const ExperimentConfig& cfg, ChildModel& model,
                            std::uint32_t run_index = 0);

double compute_rmse(const RunLog& log);

struct RmseStats {
  std::string task;
  int runs = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::vector<double> per_run;
};

RmseStats aggregate_stats(const std::vector<RunLog>& logs, const std::string& task);

struct BenchReport {
  int steps = 0;
  double predict_us = 0.0;      // one rollout
  double jacobian_us = 0.0;     // full input jacobian of the child
  double full_us = 0.0;         // rollout + jacobian + second derivatives
  double shared_us = 0.0;       // both control derivatives, shared evaluations
};

/// Per-phase mean times over `steps` repetitions at a representative
/// operating point.
BenchReport benchmark_timing(ChildModel& model, const ExperimentConfig& cfg, int steps = 5000);

/// Deterministic data columns (t, u, y, yhat, yref, l, J). Wall-clock phase
/// timings go to the sidecar so run CSVs are bit-identical under a fixed
/// seed.
void export_log_csv(const RunLog& log, const std::string& path);
void export_timing_csv(const RunLog& log, const std::string& path);
RunLog read_log_csv(const std::string& path);
void write_stats_csv(const RmseStats& stats, const std::string& path);

/// Data collection + training as the CLI runs it: three excitation stages
/// through a fresh plant, teacher-forced pairs, gradient descent.
struct TrainOutcome {
  ChildModel model;
  TrainResult result;
  std::optional<FoldStats> folds;
  std::size_t sample_count = 0;
};
TrainOutcome train_pipeline(const ExperimentConfig& cfg, const std::string& arch);

/// The three child presets: "fc", "gru", "lstm".
std::vector<LayerSpec> arch_preset(const std::string& arch);

}  // namespace nlgpc
