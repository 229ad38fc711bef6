#include "nlgpc/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace nlgpc {

CostSpec ExperimentConfig::normalized_cost(const UnitScaling& s) const {
  CostSpec spec;
  spec.q_diag.resize(q_diag_mm.size());
  for (std::size_t i = 0; i < q_diag_mm.size(); ++i)
    spec.q_diag[i] = q_diag_mm[i] * s.y_half[i] * s.y_half[i];
  spec.lambda_diag.resize(lambda_diag_rad.size());
  for (std::size_t i = 0; i < lambda_diag_rad.size(); ++i)
    spec.lambda_diag[i] = lambda_diag_rad[i] * s.u_half[i] * s.u_half[i];
  // Barrier mapped into normalized input space; poles and curvature follow,
  // only the constant offset changes scale.
  const double uh = s.u_half[0];
  const double uc = s.u_center[0];
  spec.s = barrier_s / uh;
  spec.r = barrier_r / uh;
  spec.b = (barrier_b - uc) / uh;
  spec.hessian_form = hessian_form;
  spec.validate();
  return spec;
}

double ExperimentConfig::normalized_clip_margin(const UnitScaling& s) const {
  return solver.clip_margin / s.u_half[0];
}

ExperimentConfig experiment_config_from(Config& cfg) {
  ExperimentConfig e;
  e.horizon.N = cfg.get_int("horizon.N", e.horizon.N);
  e.horizon.N1 = cfg.get_int("horizon.N1", e.horizon.N1);
  e.horizon.N2 = cfg.get_int("horizon.N2", e.horizon.N2);
  e.horizon.Nc = cfg.get_int("horizon.Nc", e.horizon.Nc);
  e.horizon.n_d = cfg.get_int("horizon.n_d", e.horizon.n_d);
  e.horizon.d_d = cfg.get_int("horizon.d_d", e.horizon.d_d);
  e.horizon.validate();

  e.q_diag_mm = cfg.get_vec("cost.q_diag", e.q_diag_mm, Plant::kOutputs);
  e.lambda_diag_rad = cfg.get_vec("cost.lambda_diag", e.lambda_diag_rad, Plant::kInputs);
  e.barrier_s = cfg.get_double("cost.barrier_s", e.barrier_s);
  e.barrier_r = cfg.get_double("cost.barrier_r", e.barrier_r);
  e.barrier_b = cfg.get_double("cost.barrier_b", e.barrier_b);
  const std::string hf = cfg.get_string("cost.hessian_form", "gauss_newton");
  if (hf == "gauss_newton")
    e.hessian_form = CostSpec::TrackingHessian::GaussNewton;
  else if (hf == "literal")
    e.hessian_form = CostSpec::TrackingHessian::Literal;
  else
    throw ConfigError("config: cost.hessian_form must be gauss_newton or literal");

  e.solver.newton_iters = cfg.get_int("solver.newton_iters", e.solver.newton_iters);
  e.solver.damping = cfg.get_double("solver.damping", e.solver.damping);
  e.solver.clip_margin = cfg.get_double("solver.clip_margin", 0.05);
  e.solver.line_search = cfg.get_bool("solver.line_search", e.solver.line_search);

  e.stencil.epsilon = cfg.get_double("stencil.epsilon", e.stencil.epsilon);
  if (!(e.stencil.epsilon > 0.0)) throw ConfigError("config: stencil.epsilon must be > 0");

  e.plant.seed = static_cast<std::uint32_t>(cfg.get_int("plant.seed", 1));
  e.plant.noise_seed = static_cast<std::uint32_t>(cfg.get_int("plant.noise_seed", 0));
  e.plant.noise_amp = cfg.get_double("plant.noise_amp", e.plant.noise_amp);
  e.plant.sensor_gain = cfg.get_double("plant.sensor_gain", e.plant.sensor_gain);
  e.plant.lag_tau = cfg.get_double("plant.lag_tau", e.plant.lag_tau);
  e.plant.load_gain = cfg.get_double("plant.load_gain", e.plant.load_gain);
  e.plant.hyst_gain = cfg.get_double("plant.hyst_gain", e.plant.hyst_gain);
  e.plant.hyst_beta = cfg.get_double("plant.hyst_beta", e.plant.hyst_beta);
  e.plant.hyst_gamma = cfg.get_double("plant.hyst_gamma", e.plant.hyst_gamma);

  e.dt = cfg.get_double("run.dt", e.dt);
  if (!(e.dt > 0.0)) throw ConfigError("config: run.dt must be > 0");
  e.duration_s = cfg.get_double("run.duration_s", e.duration_s);
  if (e.duration_s < 0.0) throw ConfigError("config: run.duration_s must be >= 0");
  e.runs = cfg.get_int("run.runs", e.runs);
  if (e.runs < 1) throw ConfigError("config: run.runs must be >= 1");
  const std::string policy = cfg.get_string("run.on_solver_failure", "hold");
  if (policy == "hold")
    e.on_solver_failure = FailurePolicy::HoldLastInput;
  else if (policy == "abort")
    e.on_solver_failure = FailurePolicy::Abort;
  else
    throw ConfigError("config: run.on_solver_failure must be hold or abort");

  e.task = cfg.get_string("task.name", e.task);
  if (e.task != "disturbance") e.trajectory = default_params_by_name(e.task);
  e.trajectory.A = cfg.get_double("task.A", e.trajectory.A);
  e.trajectory.B = cfg.get_double("task.B", e.trajectory.B);
  e.trajectory.C = cfg.get_double("task.C", e.trajectory.C);
  e.trajectory.omega = cfg.get_double("task.omega", e.trajectory.omega);
  const Vec y0 = cfg.get_vec("task.y0", Vec(e.trajectory.y0.begin(), e.trajectory.y0.end()), 3);
  e.trajectory.y0 = {y0[0], y0[1], y0[2]};

  e.disturb_t0 = cfg.get_double("disturbance.t0", e.disturb_t0);
  e.disturb_mass_g = cfg.get_double("disturbance.mass_g", e.disturb_mass_g);
  e.disturb_em_amp = cfg.get_double("disturbance.em_amp", e.disturb_em_amp);

  e.train.epochs = cfg.get_int("train.epochs", e.train.epochs);
  e.train.learning_rate = cfg.get_double("train.learning_rate", e.train.learning_rate);
  e.train.momentum = cfg.get_double("train.momentum", e.train.momentum);
  e.train.warmup_steps = cfg.get_int("train.warmup_steps", e.horizon.N);
  e.train.batch_size = cfg.get_int("train.batch_size", e.train.batch_size);
  e.train.folds = cfg.get_int("train.folds", e.train.folds);
  e.train.teacher_forcing = cfg.get_bool("train.teacher_forcing", e.train.teacher_forcing);
  e.train.seed = static_cast<std::uint32_t>(cfg.get_int("train.seed", 7));
  e.stage_duration_s = cfg.get_double("train.stage_duration_s", e.stage_duration_s);
  e.run_kfold = cfg.get_bool("train.kfold", e.run_kfold);

  cfg.finish();
  return e;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  Config cfg = Config::from_file(path);
  return experiment_config_from(cfg);
}

namespace {

using RefFn = std::function<Vec(double)>;           // physical reference at time t
using StepHook = std::function<void(Plant&, double)>;  // called before each step

RunLog closed_loop(const ExperimentConfig& cfg, ChildModel& model, Plant& plant,
                   const RefFn& reference, const StepHook& hook) {
  const Dims dims = plant.dims();
  const UnitScaling scaling = plant.scaling();
  const HorizonConfig& h = cfg.horizon;
  const CostSpec spec = cfg.normalized_cost(scaling);
  SolverConfig sol = cfg.solver;
  sol.clip_margin = cfg.normalized_clip_margin(scaling);
  sol.validate(spec);

  model.reset_state();
  Vec y = plant.state().y;
  Vec l = plant.read_sensors();
  Vec u_prev_n = scaling.normalize_u(plant.rest_input());
  QueueState q = QueueState::filled(dims, h, u_prev_n, scaling.normalize_y(y), l);
  ControlSequence warm = ControlSequence::constant(h.Nc, u_prev_n);

  const std::size_t steps = static_cast<std::size_t>(std::llround(cfg.duration_s / cfg.dt));
  RunLog log;
  log.rows.reserve(steps);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t_k = static_cast<double>(k) * cfg.dt;
    if (hook) hook(plant, t_k);

    ReferenceWindow ref;
    ref.first_step = h.N1;
    for (int j = h.N1; j <= h.N2; ++j)
      ref.y_ref.push_back(scaling.normalize_y(reference(t_k + j * cfg.dt)));

    Vec u_apply_n = u_prev_n;
    LogRow row;
    bool solved = false;
    ControlStepResult res;
    try {
      res = control_step(model, q, warm, ref, u_prev_n, spec, sol, cfg.stencil, h);
      solved = true;
    } catch (const SolverError&) {
      if (cfg.on_solver_failure == FailurePolicy::Abort) throw;
    }
    if (solved) {
      u_apply_n = res.u_apply;
      warm = res.u_next;
      row.y_pred = scaling.denormalize_y(res.predictions.front());
      row.j = res.diag.j_after;
      row.predict_us = res.diag.predict_us;
      row.first_deriv_us = res.diag.first_deriv_us;
      row.second_deriv_us = res.diag.second_deriv_us;
      row.solve_us = res.diag.solve_us;
    } else {
      row.y_pred = y;  // hold: no fresh prediction to report
    }

    const Vec u_phys = scaling.denormalize_u(u_apply_n);
    auto [y_next, l_next] = plant.step(u_phys, cfg.dt);

    row.t = t_k + cfg.dt;
    row.u = u_phys;
    row.y_true = y_next;
    row.y_ref = reference(t_k + cfg.dt);
    row.l = l_next;
    log.rows.push_back(std::move(row));

    q.tau.front() = u_apply_n;  // record what was actually applied
    q = roll_queues(std::move(q), u_apply_n, scaling.normalize_y(y_next));
    q.l = l_next;
    u_prev_n = u_apply_n;
    y = y_next;
    l = l_next;
  }
  return log;
}

}  // namespace

RunLog run_experiment(const ExperimentConfig& cfg, ChildModel& model, std::uint32_t run_index) {
  // run index perturbs only the noise stream; the testbed (sensor map) is
  // the one the model was trained on
  PlantParams pp = cfg.plant;
  pp.noise_seed = (cfg.plant.noise_seed != 0 ? cfg.plant.noise_seed : cfg.plant.seed) + run_index;
  Plant plant(pp);
  const TaskFn task = task_by_name(cfg.task);
  const TrajectoryParams traj = cfg.trajectory;
  return closed_loop(cfg, model, plant, [&task, &traj](double t) { return task(t, traj); },
                     nullptr);
}

RunLog disturbance_scenario(const ExperimentConfig& cfg, ChildModel& model,
                            std::uint32_t run_index) {
  PlantParams pp = cfg.plant;
  pp.noise_seed = (cfg.plant.noise_seed != 0 ? cfg.plant.noise_seed : cfg.plant.seed) + run_index;
  Plant plant(pp);
  const Vec hold = plant.rest_pose();
  bool applied = false;
  const StepHook hook = [&cfg, &applied](Plant& p, double t) {
    if (!applied && t >= cfg.disturb_t0) {
      p.apply_disturbance(cfg.disturb_mass_g, cfg.disturb_em_amp);
      applied = true;
    }
  };
  return closed_loop(cfg, model, plant, [&hold](double) { return hold; }, hook);
}

double compute_rmse(const RunLog& log) {
  if (log.rows.empty()) throw DataError("compute_rmse: empty log");
  double acc = 0.0;
  for (const LogRow& row : log.rows) {
    for (std::size_t i = 0; i < row.y_true.size(); ++i) {
      const double e = row.y_true[i] - row.y_ref[i];
      acc += e * e;
    }
  }
  return std::sqrt(acc / static_cast<double>(log.rows.size()));
}

RmseStats aggregate_stats(const std::vector<RunLog>& logs, const std::string& task) {
  if (logs.empty()) throw DataError("aggregate_stats: no runs");
  RmseStats stats;
  stats.task = task;
  stats.runs = static_cast<int>(logs.size());
  for (const RunLog& log : logs) stats.per_run.push_back(compute_rmse(log));
  double mean = 0.0;
  for (double v : stats.per_run) mean += v;
  mean /= static_cast<double>(stats.per_run.size());
  double var = 0.0;
  for (double v : stats.per_run) var += (v - mean) * (v - mean);
  var /= static_cast<double>(stats.per_run.size());
  stats.mean = mean;
  stats.stddev = std::sqrt(var);
  return stats;
}

BenchReport benchmark_timing(ChildModel& model, const ExperimentConfig& cfg, int steps) {
  using Clock = std::chrono::steady_clock;
  const HorizonConfig& h = cfg.horizon;
  const Dims dims{Plant::kInputs, Plant::kOutputs, Plant::kSensors};
  if (model.input_width() != input_length(dims, h))
    throw DimensionError("benchmark_timing: model width does not match the horizon");

  QueueState q = QueueState::filled(dims, h, Vec(dims.m, 0.0), Vec(dims.n, 0.0),
                                    Vec(dims.w, 0.5));
  ControlSequence U = ControlSequence::constant(h.Nc, Vec(dims.m, 0.0));

  BenchReport report;
  report.steps = steps;
  double pred_total = 0.0, jac_total = 0.0, full_total = 0.0, shared_total = 0.0;
  double sink = 0.0;

  for (int k = 0; k < steps; ++k) {
    auto t0 = Clock::now();
    const auto preds = rollout(model, q, U, h);
    auto t1 = Clock::now();
    sink += preds.back().front();
    pred_total += std::chrono::duration<double, std::micro>(t1 - t0).count();

    model.reset_state();
    const Vec x1 = level1_input(q, U);
    t0 = Clock::now();
    const Mat theta = child_input_jacobian(model, x1, cfg.stencil);
    t1 = Clock::now();
    sink += theta(0, 0);
    jac_total += std::chrono::duration<double, std::micro>(t1 - t0).count();

    t0 = Clock::now();
    const auto preds2 = rollout(model, q, U, h);
    model.reset_state();
    const Mat theta2 = child_input_jacobian(model, x1, cfg.stencil);
    const auto d2 = assemble_d2y_du2(model, q, U, h, cfg.stencil);
    t1 = Clock::now();
    sink += preds2.back().front() + theta2(0, 0) + d2.front()(0, 0);
    full_total += std::chrono::duration<double, std::micro>(t1 - t0).count();

    model.reset_state();
    t0 = Clock::now();
    const ControlDerivatives der = control_derivatives_shared(model, q, U, h, cfg.stencil);
    t1 = Clock::now();
    sink += der.dy_du(0, 0);
    shared_total += std::chrono::duration<double, std::micro>(t1 - t0).count();
  }
  if (!std::isfinite(sink)) throw NumericError("benchmark_timing: non-finite evaluation", -1);

  report.predict_us = pred_total / steps;
  report.jacobian_us = jac_total / steps;
  report.full_us = full_total / steps;
  report.shared_us = shared_total / steps;
  return report;
}

namespace {

void put_csv_double(std::ofstream& f, double v, bool leading_comma = true) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  if (leading_comma) f << ',';
  f << buf;
}

}  // namespace

void export_log_csv(const RunLog& log, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("export_log_csv: cannot open " + path);
  const std::size_t m = Plant::kInputs, n = Plant::kOutputs, w = Plant::kSensors;
  f << "t";
  for (std::size_t i = 0; i < m; ++i) f << ",u" << i;
  for (std::size_t i = 0; i < n; ++i) f << ",y" << i;
  for (std::size_t i = 0; i < n; ++i) f << ",yhat" << i;
  for (std::size_t i = 0; i < n; ++i) f << ",yref" << i;
  for (std::size_t i = 0; i < w; ++i) f << ",l" << i;
  f << ",J\n";
  for (const LogRow& row : log.rows) {
    put_csv_double(f, row.t, false);
    for (double v : row.u) put_csv_double(f, v);
    for (double v : row.y_true) put_csv_double(f, v);
    for (double v : row.y_pred) put_csv_double(f, v);
    for (double v : row.y_ref) put_csv_double(f, v);
    for (double v : row.l) put_csv_double(f, v);
    put_csv_double(f, row.j);
    f << "\n";
  }
  if (!f) throw IoError("export_log_csv: write failed");
}

void export_timing_csv(const RunLog& log, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("export_timing_csv: cannot open " + path);
  f << "t,predict_us,first_deriv_us,second_deriv_us,solve_us\n";
  for (const LogRow& row : log.rows) {
    put_csv_double(f, row.t, false);
    f << ',' << row.predict_us << ',' << row.first_deriv_us << ',' << row.second_deriv_us << ','
      << row.solve_us << "\n";
  }
  if (!f) throw IoError("export_timing_csv: write failed");
}

RunLog read_log_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_log_csv: cannot open " + path);
  std::string header;
  if (!std::getline(f, header)) throw DataError("read_log_csv: empty file");

  RunLog log;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    auto next_value = [&ss, &cell]() {
      if (!std::getline(ss, cell, ',')) throw DataError("read_log_csv: short row");
      return std::stod(cell);
    };
    LogRow row;
    row.t = next_value();
    for (int i = 0; i < Plant::kInputs; ++i) row.u.push_back(next_value());
    for (int i = 0; i < Plant::kOutputs; ++i) row.y_true.push_back(next_value());
    for (int i = 0; i < Plant::kOutputs; ++i) row.y_pred.push_back(next_value());
    for (int i = 0; i < Plant::kOutputs; ++i) row.y_ref.push_back(next_value());
    for (int i = 0; i < Plant::kSensors; ++i) row.l.push_back(next_value());
    row.j = next_value();
    log.rows.push_back(std::move(row));
  }
  return log;
}

void write_stats_csv(const RmseStats& stats, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("write_stats_csv: cannot open " + path);
  f << "task,runs,rmse_mean_mm,rmse_std_mm,per_run_rmse_mm\n";
  f << stats.task << ',' << stats.runs;
  put_csv_double(f, stats.mean);
  put_csv_double(f, stats.stddev);
  f << ',';
  for (std::size_t i = 0; i < stats.per_run.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", stats.per_run[i]);
    if (i) f << ';';
    f << buf;
  }
  f << "\n";
  if (!f) throw IoError("write_stats_csv: write failed");
}

std::vector<LayerSpec> arch_preset(const std::string& arch) {
  if (arch == "fc")
    return {{LayerKind::Dense, 5, Activation::Relu}, {LayerKind::Dense, 3, Activation::Tanh}};
  if (arch == "gru")
    return {{LayerKind::Gru, 5, Activation::Linear},
            {LayerKind::Dense, 5, Activation::Relu},
            {LayerKind::Dense, 3, Activation::Linear}};
  if (arch == "lstm")
    return {{LayerKind::Lstm, 5, Activation::Linear},
            {LayerKind::Dense, 5, Activation::Tanh},
            {LayerKind::Dense, 3, Activation::Tanh}};
  throw ConfigError("unknown architecture: " + arch + " (expected fc, gru or lstm)");
}

TrainOutcome train_pipeline(const ExperimentConfig& cfg, const std::string& arch) {
  Plant plant(cfg.plant);
  const Dims dims = plant.dims();
  const UnitScaling scaling = plant.scaling();

  const std::vector<Vec> excitation =
      generate_excitation(3, cfg.stage_duration_s, cfg.dt, cfg.plant.seed, Plant::kInputMin,
                          Plant::kInputMax, dims.m);
  const Vec y0 = plant.state().y;
  const Vec l0 = plant.read_sensors();
  Dataset data = collect_dataset(
      [&plant](const Vec& u, double dt) { return plant.step(u, dt); }, y0, l0, excitation,
      cfg.dt, cfg.plant.seed);
  const std::size_t per_stage =
      static_cast<std::size_t>(std::llround(cfg.stage_duration_s / cfg.dt));
  data.stage_labels = {"slow-sweep", "fast-sine", "filtered-steps"};
  data.stage_bounds = {per_stage, 2 * per_stage, 3 * per_stage};

  const std::vector<TrainingPair> pairs =
      build_training_pairs(data, cfg.horizon, dims, &scaling);

  TrainOutcome out{ChildModel::seeded(arch_preset(arch), input_length(dims, cfg.horizon),
                                      cfg.train.seed),
                   {}, std::nullopt, pairs.size()};
  out.result = train_model(out.model, pairs, cfg.train);

  if (cfg.run_kfold) {
    const auto factory = [&cfg, &arch, &dims]() {
      return ChildModel::seeded(arch_preset(arch), input_length(dims, cfg.horizon),
                                cfg.train.seed);
    };
    out.folds = kfold_evaluate(factory, pairs, cfg.train, &scaling);
  }
  return out;
}

}  // namespace nlgpc
