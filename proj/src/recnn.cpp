#include "nlgpc/recnn.hpp"

#include <cmath>
#include <random>

#include "nlgpc/errors.hpp"

namespace nlgpc {

namespace {

double apply_act(Activation act, double z) {
  switch (act) {
    case Activation::Linear: return z;
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

Vec sigmoid_v(Vec z) {
  for (double& v : z) v = 1.0 / (1.0 + std::exp(-v));
  return z;
}

Vec tanh_v(Vec z) {
  for (double& v : z) v = std::tanh(v);
  return z;
}

Vec affine(const Mat& W, const Vec& x, const Mat& U, const Vec& h, const Vec& b) {
  Vec z = matvec(W, x);
  const Vec uh = matvec(U, h);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += uh[i] + b[i];
  return z;
}

}  // namespace

Vec dense_forward(const Mat& W, const Vec& b, Activation act, const Vec& x) {
  if (W.cols != x.size()) throw DimensionError("dense_forward: input length != W cols");
  if (W.rows != b.size()) throw DimensionError("dense_forward: bias length != W rows");
  Vec z = matvec(W, x);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = apply_act(act, z[i] + b[i]);
  return z;
}

Vec gru_step(const GruWeights& p, const Vec& x, const Vec& h) {
  if (p.Wz.cols != x.size() || p.Uz.cols != h.size() || p.Wz.rows != h.size())
    throw DimensionError("gru_step: shape mismatch");
  const Vec z = sigmoid_v(affine(p.Wz, x, p.Uz, h, p.bz));
  const Vec r = sigmoid_v(affine(p.Wr, x, p.Ur, h, p.br));
  Vec rh(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) rh[i] = r[i] * h[i];
  const Vec c = tanh_v(affine(p.Wc, x, p.Uc, rh, p.bc));
  Vec hn(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) hn[i] = (1.0 - z[i]) * h[i] + z[i] * c[i];
  return hn;
}

std::pair<Vec, Vec> lstm_step(const LstmWeights& p, const Vec& x, const Vec& h, const Vec& c) {
  if (p.Wf.cols != x.size() || p.Uf.cols != h.size() || p.Wf.rows != h.size() || c.size() != h.size())
    throw DimensionError("lstm_step: shape mismatch");
  const Vec f = sigmoid_v(affine(p.Wf, x, p.Uf, h, p.bf));
  const Vec i = sigmoid_v(affine(p.Wi, x, p.Ui, h, p.bi));
  const Vec o = sigmoid_v(affine(p.Wo, x, p.Uo, h, p.bo));
  const Vec g = tanh_v(affine(p.Wg, x, p.Ug, h, p.bg));
  Vec cn(h.size()), hn(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    cn[k] = f[k] * c[k] + i[k] * g[k];
    hn[k] = o[k] * std::tanh(cn[k]);
  }
  return {hn, cn};
}

std::size_t count_parameters(const std::vector<LayerSpec>& layers, int input_width) {
  std::size_t total = 0;
  int in = input_width;
  for (const LayerSpec& l : layers) {
    const std::size_t u = static_cast<std::size_t>(l.units);
    const std::size_t i = static_cast<std::size_t>(in);
    switch (l.kind) {
      case LayerKind::Dense: total += u * i + u; break;
      case LayerKind::Gru: total += 3 * (u * i + u * u + u); break;
      case LayerKind::Lstm: total += 4 * (u * i + u * u + u); break;
    }
    in = l.units;
  }
  return total;
}

std::size_t flash_bytes(std::size_t parameter_count) { return 4 * parameter_count; }

int ChildModel::layer_input_width(std::size_t i) const {
  return i == 0 ? input_width_ : specs_[i - 1].units;
}

ChildModel::ChildModel(std::vector<LayerSpec> layers, int input_width)
    : specs_(std::move(layers)), input_width_(input_width) {
  if (input_width_ < 1) throw DimensionError("ChildModel: input width must be >= 1");
  if (specs_.empty()) throw DimensionError("ChildModel: at least one layer required");
  int in = input_width_;
  for (const LayerSpec& l : specs_) {
    if (l.units < 1) throw DimensionError("ChildModel: layer units must be >= 1");
    const std::size_t u = static_cast<std::size_t>(l.units);
    const std::size_t i = static_cast<std::size_t>(in);
    switch (l.kind) {
      case LayerKind::Dense:
        weights_.push_back(DenseWeights{Mat(u, i), Vec(u, 0.0)});
        state_.push_back({});
        break;
      case LayerKind::Gru:
        weights_.push_back(GruWeights{Mat(u, i), Mat(u, i), Mat(u, i), Mat(u, u), Mat(u, u),
                                       Mat(u, u), Vec(u, 0.0), Vec(u, 0.0), Vec(u, 0.0)});
        state_.push_back({Vec(u, 0.0), {}});
        break;
      case LayerKind::Lstm:
        weights_.push_back(LstmWeights{Mat(u, i), Mat(u, i), Mat(u, i), Mat(u, i), Mat(u, u),
                                        Mat(u, u), Mat(u, u), Mat(u, u), Vec(u, 0.0), Vec(u, 0.0),
                                        Vec(u, 0.0), Vec(u, 0.0)});
        state_.push_back({Vec(u, 0.0), Vec(u, 0.0)});
        break;
    }
    in = l.units;
  }
}

ChildModel ChildModel::seeded(std::vector<LayerSpec> layers, int input_width, std::uint32_t seed) {
  ChildModel model(std::move(layers), input_width);
  std::mt19937 rng(seed);
  auto uniform01 = [&rng]() {
    // top 53 bits of two draws; avoids distribution-implementation drift
    const std::uint64_t hi = rng(), lo = rng();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  };
  int in = input_width;
  for (std::size_t li = 0; li < model.specs_.size(); ++li) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    auto fill_mat = [&](Mat& m) {
      for (double& v : m.a) v = static_cast<float>((uniform01() - 0.5) * scale);
    };
    auto fill_vec = [&](Vec& v) {
      for (double& e : v) e = static_cast<float>((uniform01() - 0.5) * scale);
    };
    std::visit(
        [&](auto& w) {
          using T = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<T, DenseWeights>) {
            fill_mat(w.W);
            fill_vec(w.b);
          } else if constexpr (std::is_same_v<T, GruWeights>) {
            fill_mat(w.Wz); fill_mat(w.Wr); fill_mat(w.Wc);
            fill_mat(w.Uz); fill_mat(w.Ur); fill_mat(w.Uc);
            fill_vec(w.bz); fill_vec(w.br); fill_vec(w.bc);
          } else {
            fill_mat(w.Wf); fill_mat(w.Wi); fill_mat(w.Wo); fill_mat(w.Wg);
            fill_mat(w.Uf); fill_mat(w.Ui); fill_mat(w.Uo); fill_mat(w.Ug);
            fill_vec(w.bf); fill_vec(w.bi); fill_vec(w.bo); fill_vec(w.bg);
          }
        },
        model.weights_[li]);
    in = model.specs_[li].units;
  }
  return model;
}

Vec ChildModel::forward(const Vec& x) {
  if (static_cast<int>(x.size()) != input_width_)
    throw DimensionError("ChildModel::forward: input length != model input width");
  Vec cur = x;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const LayerSpec& spec = specs_[i];
    switch (spec.kind) {
      case LayerKind::Dense: {
        const auto& w = std::get<DenseWeights>(weights_[i]);
        cur = dense_forward(w.W, w.b, spec.activation, cur);
        break;
      }
      case LayerKind::Gru: {
        const auto& w = std::get<GruWeights>(weights_[i]);
        state_[i].h = gru_step(w, cur, state_[i].h);
        cur = state_[i].h;
        break;
      }
      case LayerKind::Lstm: {
        const auto& w = std::get<LstmWeights>(weights_[i]);
        auto [hn, cn] = lstm_step(w, cur, state_[i].h, state_[i].c);
        state_[i].h = hn;
        state_[i].c = cn;
        cur = hn;
        break;
      }
    }
  }
  return cur;
}

void ChildModel::reset_state() {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    for (double& v : state_[i].h) v = 0.0;
    for (double& v : state_[i].c) v = 0.0;
  }
}

int ChildModel::output_width() const { return specs_.back().units; }

std::size_t ChildModel::parameter_count() const {
  std::size_t total = 0;
  for (const LayerWeights& lw : weights_) {
    std::visit(
        [&](const auto& w) {
          using T = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<T, DenseWeights>) {
            total += w.W.a.size() + w.b.size();
          } else if constexpr (std::is_same_v<T, GruWeights>) {
            total += w.Wz.a.size() + w.Wr.a.size() + w.Wc.a.size() + w.Uz.a.size() +
                     w.Ur.a.size() + w.Uc.a.size() + w.bz.size() + w.br.size() + w.bc.size();
          } else {
            total += w.Wf.a.size() + w.Wi.a.size() + w.Wo.a.size() + w.Wg.a.size() +
                     w.Uf.a.size() + w.Ui.a.size() + w.Uo.a.size() + w.Ug.a.size() +
                     w.bf.size() + w.bi.size() + w.bo.size() + w.bg.size();
          }
        },
        lw);
  }
  return total;
}

void ChildModel::for_each_array_const(
    const std::function<void(const std::vector<double>&)>& f) const {
  const_cast<ChildModel*>(this)->for_each_array(
      [&f](std::vector<double>& arr) { f(arr); });
}

void ChildModel::for_each_array(const std::function<void(std::vector<double>&)>& f) {
  for (LayerWeights& lw : weights_) {
    std::visit(
        [&](auto& w) {
          using T = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<T, DenseWeights>) {
            f(w.W.a);
            f(w.b);
          } else if constexpr (std::is_same_v<T, GruWeights>) {
            f(w.Wz.a); f(w.Wr.a); f(w.Wc.a);
            f(w.Uz.a); f(w.Ur.a); f(w.Uc.a);
            f(w.bz); f(w.br); f(w.bc);
          } else {
            f(w.Wf.a); f(w.Wi.a); f(w.Wo.a); f(w.Wg.a);
            f(w.Uf.a); f(w.Ui.a); f(w.Uo.a); f(w.Ug.a);
            f(w.bf); f(w.bi); f(w.bo); f(w.bg);
          }
        },
        lw);
  }
}

}  // namespace nlgpc
