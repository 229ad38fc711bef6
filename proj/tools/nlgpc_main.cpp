#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlgpc/harness.hpp"

namespace fs = std::filesystem;
using namespace nlgpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

void print_hardware_reference(const std::string& task) {
  // Published figures from the original tendon-actuator hardware, shown for
  // context only; the synthetic testbed is not expected to reproduce them.
  std::printf("hardware baseline (reported, mm): ");
  if (task == "eight")
    std::printf("fc 1.36+/-0.21, gru 1.29+/-0.28, lstm 1.42+/-0.39\n");
  else if (task == "pringle")
    std::printf("fc 1.93+/-0.48, gru 1.56+/-0.58, lstm 2.35+/-0.23\n");
  else if (task == "line")
    std::printf("fc 2.02+/-1.24, gru 2.01+/-1.19, lstm 2.56+/-1.44\n");
  else
    std::printf("n/a\n");
}

int cmd_run(const std::string& config_path, const std::string& task, const std::string& model_path,
            int runs, const std::string& out_dir) {
  ExperimentConfig cfg =
      config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
  if (!task.empty()) {
    cfg.task = task;
    if (task != "disturbance") cfg.trajectory = default_params_by_name(task);
  }
  if (runs > 0) cfg.runs = runs;

  ChildModel model = load_weights(model_path);
  fs::create_directories(out_dir);

  std::vector<RunLog> logs;
  for (int k = 0; k < cfg.runs; ++k) {
    RunLog log = cfg.task == "disturbance"
                     ? disturbance_scenario(cfg, model, static_cast<std::uint32_t>(k))
                     : run_experiment(cfg, model, static_cast<std::uint32_t>(k));
    char name[64];
    std::snprintf(name, sizeof(name), "run_%02d.csv", k);
    export_log_csv(log, (fs::path(out_dir) / name).string());
    std::snprintf(name, sizeof(name), "run_%02d_timing.csv", k);
    export_timing_csv(log, (fs::path(out_dir) / name).string());
    logs.push_back(std::move(log));
  }

  if (!logs.empty() && !logs.front().rows.empty()) {
    const RmseStats stats = aggregate_stats(logs, cfg.task);
    write_stats_csv(stats, (fs::path(out_dir) / "stats.csv").string());
    std::printf("%s: rmse %.4f +/- %.4f mm over %d run(s)\n", stats.task.c_str(), stats.mean,
                stats.stddev, stats.runs);
    print_hardware_reference(cfg.task);
  } else {
    std::printf("%s: empty run (duration 0), no stats written\n", cfg.task.c_str());
  }
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& arch,
              const std::string& out_path, const std::string& dataset_out) {
  ExperimentConfig cfg =
      config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
  TrainOutcome outcome = train_pipeline(cfg, arch);
  save_weights(outcome.model, out_path);

  std::printf("arch %s: %zu pairs, %zu parameters (%.2f kB), final loss %.3e\n", arch.c_str(),
              outcome.sample_count, outcome.model.parameter_count(),
              static_cast<double>(flash_bytes(outcome.model.parameter_count())) / 1024.0,
              outcome.result.loss_history.back());
  if (outcome.folds) {
    std::printf("forward-chaining folds: L2 %.4f +/- %.4f mm over %zu folds\n",
                outcome.folds->mean, outcome.folds->stddev, outcome.folds->fold_errors.size());
    std::printf(
        "hardware baseline (reported, mm): fc 2.52+/-1.52, gru 0.26+/-0.04, lstm 0.26+/-0.04\n");
  }

  if (!dataset_out.empty()) {
    // Re-collect with the same seed so the archived dataset matches training.
    Plant plant(cfg.plant);
    const std::vector<Vec> excitation =
        generate_excitation(3, cfg.stage_duration_s, cfg.dt, cfg.plant.seed, Plant::kInputMin,
                            Plant::kInputMax, Plant::kInputs);
    const Vec y0 = plant.state().y;
    const Vec l0 = plant.read_sensors();
    const Dataset data = collect_dataset(
        [&plant](const Vec& u, double dt) { return plant.step(u, dt); }, y0, l0, excitation,
        cfg.dt, cfg.plant.seed);
    write_dataset_csv(data, dataset_out);
  }
  return kExitOk;
}

int cmd_bench(const std::string& model_path, const std::string& config_path, int steps) {
  ExperimentConfig cfg =
      config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
  ChildModel model = load_weights(model_path);
  const BenchReport report = benchmark_timing(model, cfg, steps);
  std::printf("steps: %d\n", report.steps);
  std::printf("prediction:        %10.3f us\n", report.predict_us);
  std::printf("input jacobian:    %10.3f us\n", report.jacobian_us);
  std::printf("full (pred+d1+d2): %10.3f us\n", report.full_us);
  std::printf("shared derivatives:%10.3f us\n", report.shared_us);
  return kExitOk;
}

int cmd_count_params(const std::string& model_path) {
  ChildModel model = load_weights(model_path);
  const std::size_t count = model.parameter_count();
  std::printf("parameters: %zu\n", count);
  std::printf("flash bytes (float32): %zu (%.2f kB)\n", flash_bytes(count),
              static_cast<double>(flash_bytes(count)) / 1024.0);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural predictive control testbed"};
  app.require_subcommand(1);

  std::string config_path, task, model_path, out_dir = "out", out_path = "model.rnmc";
  std::string dataset_out, arch = "fc";
  int runs = 0, steps = 5000;

  CLI::App* run = app.add_subcommand("run", "closed-loop experiment batch");
  run->add_option("--config", config_path, "config file");
  run->add_option("--task", task, "eight | pringle | line | disturbance");
  run->add_option("--model", model_path, "weight file")->required();
  run->add_option("--runs", runs, "number of runs (overrides config)");
  run->add_option("--out", out_dir, "output directory");

  CLI::App* train = app.add_subcommand("train", "collect data and fit a child model");
  train->add_option("--config", config_path, "config file");
  train->add_option("--arch", arch, "fc | gru | lstm");
  train->add_option("--out", out_path, "weight file to write")->required();
  train->add_option("--dataset-out", dataset_out, "also write the collected dataset CSV");

  CLI::App* bench = app.add_subcommand("bench", "per-phase timing");
  bench->add_option("--model", model_path, "weight file")->required();
  bench->add_option("--config", config_path, "config file");
  bench->add_option("--steps", steps, "timing repetitions");

  CLI::App* count = app.add_subcommand("count-params", "parameter and flash accounting");
  count->add_option("--model", model_path, "weight file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, task, model_path, runs, out_dir);
    if (train->parsed()) return cmd_train(config_path, arch, out_path, dataset_out);
    if (bench->parsed()) return cmd_bench(model_path, config_path, steps);
    if (count->parsed()) return cmd_count_params(model_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const DimensionError& e) {
    // model and config disagree about shapes
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  } catch (const SerializationError& e) {
    std::fprintf(stderr, "model file error: %s\n", e.what());
    return kExitIo;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
