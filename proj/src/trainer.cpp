#include "nlgpc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nlgpc/rng.hpp"

namespace nlgpc {

std::vector<Vec> generate_excitation(int stages, double stage_duration, double dt,
                                     std::uint32_t seed, double u_min, double u_max, int m) {
  if (!(stage_duration > 0.0) || !(dt > 0.0))
    throw ConfigError("excitation: durations must be > 0");
  if (stages < 1) throw ConfigError("excitation: stages must be >= 1");

  const std::size_t per_stage = static_cast<std::size_t>(std::llround(stage_duration / dt));
  const double center = 0.5 * (u_min + u_max);
  const double half = 0.5 * (u_max - u_min);
  SplitMix64 rng(seed);

  std::vector<double> phase(static_cast<std::size_t>(m));
  for (int c = 0; c < m; ++c)
    phase[static_cast<std::size_t>(c)] = 2.0 * M_PI * c / m + rng.uniform(0.0, 0.4);

  std::vector<Vec> out;
  out.reserve(per_stage * static_cast<std::size_t>(stages));
  const double two_pi = 2.0 * M_PI;

  for (int stage = 0; stage < stages; ++stage) {
    const int kind = stage % 3;
    if (kind == 2) {
      // filtered random steps, new target roughly every quarter second
      Vec level(static_cast<std::size_t>(m), center);
      Vec target(static_cast<std::size_t>(m), center);
      const std::size_t hold = static_cast<std::size_t>(std::llround(0.25 / dt));
      const double alpha = 1.0 - std::exp(-dt / 0.12);
      for (std::size_t k = 0; k < per_stage; ++k) {
        if (hold == 0 || k % hold == 0)
          for (int c = 0; c < m; ++c)
            target[static_cast<std::size_t>(c)] =
                rng.uniform(center - 0.95 * half, center + 0.95 * half);
        Vec u(static_cast<std::size_t>(m));
        for (int c = 0; c < m; ++c) {
          level[static_cast<std::size_t>(c)] +=
              alpha * (target[static_cast<std::size_t>(c)] - level[static_cast<std::size_t>(c)]);
          u[static_cast<std::size_t>(c)] = level[static_cast<std::size_t>(c)];
        }
        out.push_back(std::move(u));
      }
      continue;
    }
    for (std::size_t k = 0; k < per_stage; ++k) {
      const double t = static_cast<double>(k) * dt;
      Vec u(static_cast<std::size_t>(m));
      for (int c = 0; c < m; ++c) {
        const double ph = phase[static_cast<std::size_t>(c)];
        double v;
        if (kind == 0) {
          // slow full-range sweep, just over one cycle per stage
          v = center + 0.9 * half * std::sin(two_pi * 1.25 * t / stage_duration + ph);
        } else {
          // fast sinusoid over a drifting center
          v = center + 0.5 * half * std::sin(two_pi * 2.0 * t + ph) +
              0.35 * half * std::sin(two_pi * 0.23 * t + 0.5 * ph);
        }
        u[static_cast<std::size_t>(c)] = std::min(u_max, std::max(u_min, v));
      }
      out.push_back(std::move(u));
    }
  }
  return out;
}

Dataset collect_dataset(const std::function<std::pair<Vec, Vec>(const Vec&, double)>& step,
                        const Vec& y_init, const Vec& l_init, const std::vector<Vec>& excitation,
                        double dt, std::uint32_t seed) {
  Dataset data;
  data.dt = dt;
  data.seed = seed;
  data.records.reserve(excitation.size());
  Vec y = y_init, l = l_init;
  for (std::size_t k = 0; k < excitation.size(); ++k) {
    SampleRecord rec;
    rec.t = static_cast<double>(k) * dt;
    rec.u = excitation[k];
    rec.y = y;
    rec.l = l;
    data.records.push_back(std::move(rec));
    auto [yn, ln] = step(excitation[k], dt);
    y = std::move(yn);
    l = std::move(ln);
  }
  return data;
}

std::vector<TrainingPair> build_training_pairs(const Dataset& data, const HorizonConfig& h,
                                               const Dims& d, const UnitScaling* scaling) {
  const std::size_t len = data.records.size();
  const int k_min = std::max(h.n_d, h.d_d - 1);
  if (len < static_cast<std::size_t>(k_min) + 2)
    throw DataError("build_training_pairs: dataset shorter than the required history");

  std::vector<TrainingPair> pairs;
  pairs.reserve(len - 1 - static_cast<std::size_t>(k_min));
  for (std::size_t k = static_cast<std::size_t>(k_min); k + 1 < len; ++k) {
    QueueState q;
    for (int tap = 0; tap <= h.n_d; ++tap) {
      const Vec& u = data.records[k - static_cast<std::size_t>(tap)].u;
      q.tau.push_back(scaling ? scaling->normalize_u(u) : u);
    }
    for (int tap = 0; tap < h.d_d; ++tap) {
      const Vec& y = data.records[k - static_cast<std::size_t>(tap)].y;
      q.alpha.push_back(scaling ? scaling->normalize_y(y) : y);
    }
    q.l = data.records[k].l;

    TrainingPair pair;
    pair.x = build_input_vector(q);
    if (static_cast<int>(pair.x.size()) != input_length(d, h))
      throw DimensionError("build_training_pairs: record widths disagree with dims");
    const Vec& target = data.records[k + 1].y;
    pair.target = scaling ? scaling->normalize_y(target) : target;
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

namespace {

double act_derivative(Activation act, double preact, double out) {
  switch (act) {
    case Activation::Linear: return 1.0;
    case Activation::Relu: return preact > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - out * out;
    case Activation::Sigmoid: return out * (1.0 - out);
  }
  return 1.0;
}

Vec sigmoid_vec(Vec z) {
  for (double& v : z) v = 1.0 / (1.0 + std::exp(-v));
  return z;
}
Vec tanh_vec(Vec z) {
  for (double& v : z) v = std::tanh(v);
  return z;
}

Vec gate_preact(const Mat& W, const Vec& x, const Mat& U, const Vec& h, const Vec& b) {
  Vec z = matvec(W, x);
  const Vec uh = matvec(U, h);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += uh[i] + b[i];
  return z;
}

void add_outer(Mat& acc, const Vec& col, const Vec& row) {
  for (std::size_t i = 0; i < col.size(); ++i)
    for (std::size_t j = 0; j < row.size(); ++j) acc(i, j) += col[i] * row[j];
}

void add_vec(Vec& acc, const Vec& v) {
  for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
}

Vec mat_t_vec(const Mat& m, const Vec& v) {
  Vec out(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += m(r, c) * v[r];
  return out;
}

struct DenseCache {
  Vec x, z, out;
};
struct GruCache {
  Vec x, h_in, z, r, c, h_out;
};
struct LstmCache {
  Vec x, h_in, c_in, f, i, o, g, c_out;
};

}  // namespace

double train_sample(ChildModel& model, const TrainingPair& pair, ChildModel& grads) {
  const std::size_t layers = model.layer_count();
  std::vector<DenseCache> dense_cache(layers);
  std::vector<GruCache> gru_cache(layers);
  std::vector<LstmCache> lstm_cache(layers);

  // Forward with caches, advancing the recurrent carries exactly as
  // ChildModel::forward does.
  Vec cur = pair.x;
  for (std::size_t li = 0; li < layers; ++li) {
    const LayerSpec& spec = model.specs()[li];
    switch (spec.kind) {
      case LayerKind::Dense: {
        const auto& w = std::get<DenseWeights>(model.layer(li));
        DenseCache& cc = dense_cache[li];
        cc.x = cur;
        cc.z = matvec(w.W, cur);
        for (std::size_t i = 0; i < cc.z.size(); ++i) cc.z[i] += w.b[i];
        cc.out.resize(cc.z.size());
        for (std::size_t i = 0; i < cc.z.size(); ++i) {
          switch (spec.activation) {
            case Activation::Linear: cc.out[i] = cc.z[i]; break;
            case Activation::Relu: cc.out[i] = cc.z[i] > 0.0 ? cc.z[i] : 0.0; break;
            case Activation::Tanh: cc.out[i] = std::tanh(cc.z[i]); break;
            case Activation::Sigmoid: cc.out[i] = 1.0 / (1.0 + std::exp(-cc.z[i])); break;
          }
        }
        cur = cc.out;
        break;
      }
      case LayerKind::Gru: {
        const auto& w = std::get<GruWeights>(model.layer(li));
        GruCache& cc = gru_cache[li];
        cc.x = cur;
        cc.h_in = model.state(li).h;
        cc.z = sigmoid_vec(gate_preact(w.Wz, cur, w.Uz, cc.h_in, w.bz));
        cc.r = sigmoid_vec(gate_preact(w.Wr, cur, w.Ur, cc.h_in, w.br));
        Vec rh(cc.h_in.size());
        for (std::size_t i = 0; i < rh.size(); ++i) rh[i] = cc.r[i] * cc.h_in[i];
        cc.c = tanh_vec(gate_preact(w.Wc, cur, w.Uc, rh, w.bc));
        cc.h_out.resize(cc.h_in.size());
        for (std::size_t i = 0; i < cc.h_out.size(); ++i)
          cc.h_out[i] = (1.0 - cc.z[i]) * cc.h_in[i] + cc.z[i] * cc.c[i];
        cur = cc.h_out;
        break;
      }
      case LayerKind::Lstm: {
        const auto& w = std::get<LstmWeights>(model.layer(li));
        LstmCache& cc = lstm_cache[li];
        cc.x = cur;
        cc.h_in = model.state(li).h;
        cc.c_in = model.state(li).c;
        cc.f = sigmoid_vec(gate_preact(w.Wf, cur, w.Uf, cc.h_in, w.bf));
        cc.i = sigmoid_vec(gate_preact(w.Wi, cur, w.Ui, cc.h_in, w.bi));
        cc.o = sigmoid_vec(gate_preact(w.Wo, cur, w.Uo, cc.h_in, w.bo));
        cc.g = tanh_vec(gate_preact(w.Wg, cur, w.Ug, cc.h_in, w.bg));
        cc.c_out.resize(cc.h_in.size());
        Vec h_out(cc.h_in.size());
        for (std::size_t i = 0; i < h_out.size(); ++i) {
          cc.c_out[i] = cc.f[i] * cc.c_in[i] + cc.i[i] * cc.g[i];
          h_out[i] = cc.o[i] * std::tanh(cc.c_out[i]);
        }
        cur = h_out;
        break;
      }
    }
  }

  // Sample loss and its gradient at the output.
  double loss = 0.0;
  Vec delta(cur.size());
  for (std::size_t o = 0; o < cur.size(); ++o) {
    const double e = pair.target[o] - cur[o];
    loss += e * e;
    delta[o] = 2.0 * (cur[o] - pair.target[o]);
  }

  // Backward, truncating at the recurrent-state inputs.
  for (std::size_t li = layers; li-- > 0;) {
    const LayerSpec& spec = model.specs()[li];
    switch (spec.kind) {
      case LayerKind::Dense: {
        const auto& w = std::get<DenseWeights>(model.layer(li));
        auto& gw = std::get<DenseWeights>(grads.layer(li));
        const DenseCache& cc = dense_cache[li];
        Vec dz(delta.size());
        for (std::size_t i = 0; i < dz.size(); ++i)
          dz[i] = delta[i] * act_derivative(spec.activation, cc.z[i], cc.out[i]);
        add_outer(gw.W, dz, cc.x);
        add_vec(gw.b, dz);
        delta = mat_t_vec(w.W, dz);
        break;
      }
      case LayerKind::Gru: {
        const auto& w = std::get<GruWeights>(model.layer(li));
        auto& gw = std::get<GruWeights>(grads.layer(li));
        const GruCache& cc = gru_cache[li];
        const std::size_t u = cc.h_in.size();
        Vec daz(u), dar(u), dac(u), rh(u);
        for (std::size_t i = 0; i < u; ++i) {
          const double dz_gate = delta[i] * (cc.c[i] - cc.h_in[i]);
          const double dc = delta[i] * cc.z[i];
          daz[i] = dz_gate * cc.z[i] * (1.0 - cc.z[i]);
          dac[i] = dc * (1.0 - cc.c[i] * cc.c[i]);
          rh[i] = cc.r[i] * cc.h_in[i];
        }
        const Vec drh = mat_t_vec(w.Uc, dac);
        for (std::size_t i = 0; i < u; ++i) {
          const double dr = drh[i] * cc.h_in[i];
          dar[i] = dr * cc.r[i] * (1.0 - cc.r[i]);
        }
        add_outer(gw.Wz, daz, cc.x);
        add_outer(gw.Wr, dar, cc.x);
        add_outer(gw.Wc, dac, cc.x);
        add_outer(gw.Uz, daz, cc.h_in);
        add_outer(gw.Ur, dar, cc.h_in);
        add_outer(gw.Uc, dac, rh);
        add_vec(gw.bz, daz);
        add_vec(gw.br, dar);
        add_vec(gw.bc, dac);
        Vec dx = mat_t_vec(w.Wz, daz);
        add_vec(dx, mat_t_vec(w.Wr, dar));
        add_vec(dx, mat_t_vec(w.Wc, dac));
        delta = std::move(dx);
        break;
      }
      case LayerKind::Lstm: {
        const auto& w = std::get<LstmWeights>(model.layer(li));
        auto& gw = std::get<LstmWeights>(grads.layer(li));
        const LstmCache& cc = lstm_cache[li];
        const std::size_t u = cc.h_in.size();
        Vec daf(u), dai(u), dao(u), dag(u);
        for (std::size_t i = 0; i < u; ++i) {
          const double tc = std::tanh(cc.c_out[i]);
          const double dc_out = delta[i] * cc.o[i] * (1.0 - tc * tc);
          const double df = dc_out * cc.c_in[i];
          const double di = dc_out * cc.g[i];
          const double dg = dc_out * cc.i[i];
          const double do_ = delta[i] * tc;
          daf[i] = df * cc.f[i] * (1.0 - cc.f[i]);
          dai[i] = di * cc.i[i] * (1.0 - cc.i[i]);
          dao[i] = do_ * cc.o[i] * (1.0 - cc.o[i]);
          dag[i] = dg * (1.0 - cc.g[i] * cc.g[i]);
        }
        add_outer(gw.Wf, daf, cc.x);
        add_outer(gw.Wi, dai, cc.x);
        add_outer(gw.Wo, dao, cc.x);
        add_outer(gw.Wg, dag, cc.x);
        add_outer(gw.Uf, daf, cc.h_in);
        add_outer(gw.Ui, dai, cc.h_in);
        add_outer(gw.Uo, dao, cc.h_in);
        add_outer(gw.Ug, dag, cc.h_in);
        add_vec(gw.bf, daf);
        add_vec(gw.bi, dai);
        add_vec(gw.bo, dao);
        add_vec(gw.bg, dag);
        Vec dx = mat_t_vec(w.Wf, daf);
        add_vec(dx, mat_t_vec(w.Wi, dai));
        add_vec(dx, mat_t_vec(w.Wo, dao));
        add_vec(dx, mat_t_vec(w.Wg, dag));
        delta = std::move(dx);
        break;
      }
    }
  }

  // Advance recurrent carries for the next sample in the stream.
  for (std::size_t li = 0; li < layers; ++li) {
    if (model.specs()[li].kind == LayerKind::Gru) {
      std::vector<LayerState> st = model.save_state();
      st[li].h = gru_cache[li].h_out;
      model.restore_state(std::move(st));
    } else if (model.specs()[li].kind == LayerKind::Lstm) {
      std::vector<LayerState> st = model.save_state();
      const LstmCache& cc = lstm_cache[li];
      st[li].h.resize(cc.h_in.size());
      for (std::size_t i = 0; i < cc.h_in.size(); ++i)
        st[li].h[i] = cc.o[i] * std::tanh(cc.c_out[i]);
      st[li].c = cc.c_out;
      model.restore_state(std::move(st));
    }
  }
  return loss;
}

namespace {

std::vector<std::vector<double>*> array_refs(ChildModel& model) {
  std::vector<std::vector<double>*> refs;
  model.for_each_array([&refs](std::vector<double>& arr) { refs.push_back(&arr); });
  return refs;
}

void zero_arrays(ChildModel& model) {
  model.for_each_array([](std::vector<double>& arr) {
    for (double& v : arr) v = 0.0;
  });
}

void apply_update(ChildModel& model, ChildModel& grads, ChildModel& velocity, double scale,
                  double momentum) {
  const auto wa = array_refs(model);
  const auto ga = array_refs(grads);
  const auto va = array_refs(velocity);
  for (std::size_t i = 0; i < wa.size(); ++i)
    for (std::size_t j = 0; j < wa[i]->size(); ++j) {
      (*va[i])[j] = momentum * (*va[i])[j] - scale * (*ga[i])[j];
      (*wa[i])[j] += (*va[i])[j];
    }
}

}  // namespace

TrainResult train_model(ChildModel& model, const std::vector<TrainingPair>& pairs,
                        const TrainConfig& tc) {
  tc.validate();
  if (pairs.empty()) throw DataError("train_model: no training pairs");

  ChildModel grads(std::vector<LayerSpec>(model.specs()), model.input_width());
  ChildModel velocity(std::vector<LayerSpec>(model.specs()), model.input_width());
  TrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(tc.epochs));

  bool recurrent = false;
  for (const LayerSpec& spec : model.specs())
    if (spec.kind != LayerKind::Dense) recurrent = true;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    zero_arrays(grads);
    double epoch_loss = 0.0;
    int in_batch = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      // deployment resets recurrent carries at every control step and then
      // warms them over the prediction tree; cycle the burn-in length so
      // training covers every tree level
      model.reset_state();
      if (recurrent) {
        const std::size_t burn =
            std::min(k % static_cast<std::size_t>(tc.warmup_steps), k);
        for (std::size_t b = burn; b >= 1; --b) model.forward(pairs[k - b].x);
      }
      epoch_loss += train_sample(model, pairs[k], grads);
      if (++in_batch == tc.batch_size) {
        apply_update(model, grads, velocity, tc.learning_rate / in_batch, tc.momentum);
        zero_arrays(grads);
        in_batch = 0;
      }
    }
    if (in_batch > 0) {
      apply_update(model, grads, velocity, tc.learning_rate / in_batch, tc.momentum);
      zero_arrays(grads);
    }
    epoch_loss /= static_cast<double>(pairs.size());
    if (!std::isfinite(epoch_loss))
      throw NumericError("train_model: loss diverged at epoch " + std::to_string(epoch), epoch);
    result.loss_history.push_back(epoch_loss);
  }
  return result;
}

FoldStats kfold_evaluate(const std::function<ChildModel()>& factory,
                         const std::vector<TrainingPair>& pairs, const TrainConfig& tc,
                         const UnitScaling* scaling) {
  tc.validate();
  const std::size_t blocks = static_cast<std::size_t>(tc.folds) + 1;
  if (pairs.size() < blocks * 2)
    throw DataError("kfold_evaluate: not enough pairs for the requested folds");
  const std::size_t block = pairs.size() / blocks;

  FoldStats stats;
  for (int f = 1; f <= tc.folds; ++f) {
    const std::size_t train_end = static_cast<std::size_t>(f) * block;
    const std::size_t test_end =
        f == tc.folds ? pairs.size() : train_end + block;  // remainder joins the last fold

    ChildModel model = factory();
    const std::vector<TrainingPair> train_pairs(pairs.begin(), pairs.begin() + train_end);
    train_model(model, train_pairs, tc);

    bool recurrent = false;
    for (const LayerSpec& spec : model.specs())
      if (spec.kind != LayerKind::Dense) recurrent = true;
    double err_sum = 0.0;
    for (std::size_t k = train_end; k < test_end; ++k) {
      model.reset_state();
      if (recurrent) {
        const std::size_t burn = std::min(k % static_cast<std::size_t>(tc.warmup_steps), k);
        for (std::size_t b = burn; b >= 1; --b) model.forward(pairs[k - b].x);
      }
      const Vec yhat = model.forward(pairs[k].x);
      double sq = 0.0;
      for (std::size_t o = 0; o < yhat.size(); ++o) {
        double e = pairs[k].target[o] - yhat[o];
        if (scaling) e *= scaling->y_half[o];
        sq += e * e;
      }
      err_sum += std::sqrt(sq);
    }
    stats.fold_errors.push_back(err_sum / static_cast<double>(test_end - train_end));
  }

  double mean = 0.0;
  for (double e : stats.fold_errors) mean += e;
  mean /= static_cast<double>(stats.fold_errors.size());
  double var = 0.0;
  for (double e : stats.fold_errors) var += (e - mean) * (e - mean);
  var /= static_cast<double>(stats.fold_errors.size());
  stats.mean = mean;
  stats.stddev = std::sqrt(var);
  return stats;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("write_dataset_csv: cannot open " + path);
  if (data.records.empty()) throw DataError("write_dataset_csv: empty dataset");
  const std::size_t m = data.records.front().u.size();
  const std::size_t n = data.records.front().y.size();
  const std::size_t w = data.records.front().l.size();
  f << "t";
  for (std::size_t i = 0; i < m; ++i) f << ",u" << i;
  for (std::size_t i = 0; i < n; ++i) f << ",y" << i;
  for (std::size_t i = 0; i < w; ++i) f << ",l" << i;
  f << "\n";
  char buf[32];
  auto put = [&f, &buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    f << ',' << buf;
  };
  for (const SampleRecord& rec : data.records) {
    std::snprintf(buf, sizeof(buf), "%.17g", rec.t);
    f << buf;
    for (double v : rec.u) put(v);
    for (double v : rec.y) put(v);
    for (double v : rec.l) put(v);
    f << "\n";
  }
  if (!f) throw IoError("write_dataset_csv: write failed");
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_dataset_csv: cannot open " + path);
  std::string header;
  if (!std::getline(f, header)) throw DataError("read_dataset_csv: empty file");

  std::size_t m = 0, n = 0, w = 0;
  {
    std::stringstream ss(header);
    std::string col;
    bool first = true;
    while (std::getline(ss, col, ',')) {
      if (first) {
        if (col != "t") throw DataError("read_dataset_csv: header must start with t");
        first = false;
      } else if (col.rfind("u", 0) == 0)
        ++m;
      else if (col.rfind("y", 0) == 0)
        ++n;
      else if (col.rfind("l", 0) == 0)
        ++w;
      else
        throw DataError("read_dataset_csv: unexpected column " + col);
    }
  }

  Dataset data;
  std::string line;
  double prev_t = 0.0;
  bool have_prev = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    SampleRecord rec;
    auto next_value = [&ss, &cell, &path]() {
      if (!std::getline(ss, cell, ',')) throw DataError("read_dataset_csv: short row in " + path);
      return std::stod(cell);
    };
    rec.t = next_value();
    for (std::size_t i = 0; i < m; ++i) rec.u.push_back(next_value());
    for (std::size_t i = 0; i < n; ++i) rec.y.push_back(next_value());
    for (std::size_t i = 0; i < w; ++i) rec.l.push_back(next_value());
    if (have_prev && !(rec.t > prev_t))
      throw DataError("read_dataset_csv: time not strictly increasing");
    if (have_prev && data.records.size() == 1) data.dt = rec.t - prev_t;
    prev_t = rec.t;
    have_prev = true;
    data.records.push_back(std::move(rec));
  }
  return data;
}

}  // namespace nlgpc
