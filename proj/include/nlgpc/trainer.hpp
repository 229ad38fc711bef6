#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nlgpc/horizon.hpp"
#include "nlgpc/predictor.hpp"
#include "nlgpc/recnn.hpp"
#include "nlgpc/scaling.hpp"

namespace nlgpc {

struct SampleRecord {
  double t = 0.0;
  Vec u;  // input applied from this sample onward
  Vec y;  // pose measured at t, before u acts
  Vec l;  // sensors measured at t
};

struct Dataset {
  std::vector<SampleRecord> records;
  double dt = 1.0 / 120.0;
  std::uint32_t seed = 0;
  std::vector<std::size_t> stage_bounds;  // cumulative sample counts per stage
  std::vector<std::string> stage_labels;
};

struct TrainConfig {
  int epochs = 150;
  double learning_rate = 0.05;
  double momentum = 0.0;  // classical momentum on the batch updates
  int batch_size = 32;
  int folds = 10;
  bool teacher_forcing = true;
  // recurrent cells see 0..warmup_steps-1 teacher-forced steps before each
  // gradient step, cycling, to match the partially warmed states the
  // prediction tree produces after its per-control-step reset
  int warmup_steps = 3;
  std::uint32_t seed = 7;

  void validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train: momentum must be in [0, 1)");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (folds < 2) throw ConfigError("train: folds must be >= 2");
    if (warmup_steps < 1) throw ConfigError("train: warmup_steps must be >= 1");
    if (!teacher_forcing)
      throw ConfigError("train: only teacher-forced one-step training is implemented");
  }
};

struct TrainingPair {
  Vec x;       // flattened queue layout at sample k
  Vec target;  // output at sample k+1
};

/// Three concatenated excitation stages: a slow full-range sweep, a fast
/// sinusoid, and filtered random steps, all inside [u_min, u_max] and
/// deterministic per seed. Stage boundaries fall at exact multiples of
/// stage_duration/dt samples.
std::vector<Vec> generate_excitation(int stages, double stage_duration, double dt,
                                     std::uint32_t seed, double u_min, double u_max, int m);

/// Drive the plant-like stepper with the excitation and record the stream.
Dataset collect_dataset(const std::function<std::pair<Vec, Vec>(const Vec&, double)>& step,
                        const Vec& y_init, const Vec& l_init, const std::vector<Vec>& excitation,
                        double dt, std::uint32_t seed);

/// Teacher-forced one-step pairs built through the queue layout; optional
/// scaling normalizes inputs/targets channelwise.
std::vector<TrainingPair> build_training_pairs(const Dataset& data, const HorizonConfig& h,
                                               const Dims& d, const UnitScaling* scaling = nullptr);

/// Forward one pair from the model's current recurrent state, accumulate
/// parameter gradients of the squared error into grads (same architecture),
/// advance the state, and return the sample loss. Gradients treat the
/// incoming recurrent state as constant (truncated depth 1).
double train_sample(ChildModel& model, const TrainingPair& pair, ChildModel& grads);

struct TrainResult {
  std::vector<double> loss_history;  // mean squared error per epoch
};

/// Plain batched gradient descent over the time-ordered pair stream;
/// recurrent carries reset at each epoch start. Deterministic per config.
TrainResult train_model(ChildModel& model, const std::vector<TrainingPair>& pairs,
                        const TrainConfig& tc);

struct FoldStats {
  std::vector<double> fold_errors;  // mean one-step L2 error per fold, output units
  double mean = 0.0;
  double stddev = 0.0;  // population
};

/// Forward-chaining evaluation: pairs split into folds+1 contiguous blocks,
/// fold f trains on blocks 1..f and tests on block f+1. Errors are reported
/// in physical units when a scaling is supplied.
FoldStats kfold_evaluate(const std::function<ChildModel()>& factory,
                         const std::vector<TrainingPair>& pairs, const TrainConfig& tc,
                         const UnitScaling* scaling = nullptr);

void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

}  // namespace nlgpc
