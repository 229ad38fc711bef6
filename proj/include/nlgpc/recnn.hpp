#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nlgpc/errors.hpp"
#include "nlgpc/linalg.hpp"

namespace nlgpc {

enum class Activation : std::uint8_t { Linear, Relu, Tanh, Sigmoid };
enum class LayerKind : std::uint8_t { Dense, Gru, Lstm };

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int units = 1;
  Activation activation = Activation::Linear;  // ignored by gru/lstm (fixed gates)
};

struct DenseWeights {
  Mat W;  // units x in
  Vec b;  // units
};

// Gate order z (update), r (reset), c (candidate).
struct GruWeights {
  Mat Wz, Wr, Wc;  // units x in
  Mat Uz, Ur, Uc;  // units x units
  Vec bz, br, bc;  // units
};

// Gate order f, i, o, g; no peepholes.
struct LstmWeights {
  Mat Wf, Wi, Wo, Wg;
  Mat Uf, Ui, Uo, Ug;
  Vec bf, bi, bo, bg;
};

using LayerWeights = std::variant<DenseWeights, GruWeights, LstmWeights>;

/// Carried state of one recurrent layer (empty for dense).
struct LayerState {
  Vec h;
  Vec c;  // lstm cell only
};

Vec dense_forward(const Mat& W, const Vec& b, Activation act, const Vec& x);
Vec gru_step(const GruWeights& p, const Vec& x, const Vec& h);
std::pair<Vec, Vec> lstm_step(const LstmWeights& p, const Vec& x, const Vec& h, const Vec& c);

std::size_t count_parameters(const std::vector<LayerSpec>& layers, int input_width);
std::size_t flash_bytes(std::size_t parameter_count);  // float32 storage

/// The recursive child substructure: a stack of layers re-applied at every
/// prediction step, with recurrent layers carrying per-instance state.
class ChildModel {
 public:
  ChildModel() = default;
  ChildModel(std::vector<LayerSpec> layers, int input_width);

  /// Weights drawn uniform in [-0.5, 0.5] scaled by 1/sqrt(fan_in), rounded
  /// through float32 so a fresh model serializes bit-exactly.
  static ChildModel seeded(std::vector<LayerSpec> layers, int input_width, std::uint32_t seed);

  Vec forward(const Vec& x);  // advances recurrent state

  void reset_state();
  std::vector<LayerState> save_state() const { return state_; }
  void restore_state(std::vector<LayerState> s) { state_ = std::move(s); }

  int input_width() const { return input_width_; }
  int output_width() const;
  std::size_t layer_count() const { return specs_.size(); }
  const std::vector<LayerSpec>& specs() const { return specs_; }
  const LayerWeights& layer(std::size_t i) const { return weights_[i]; }
  LayerWeights& layer(std::size_t i) { return weights_[i]; }
  const LayerState& state(std::size_t i) const { return state_[i]; }

  /// Every stored scalar, enumerated from the actual allocations.
  std::size_t parameter_count() const;

  /// Apply f to each weight array (matrices first, then biases, in layer order).
  void for_each_array(const std::function<void(std::vector<double>&)>& f);
  void for_each_array_const(const std::function<void(const std::vector<double>&)>& f) const;

 private:
  std::vector<LayerSpec> specs_;
  std::vector<LayerWeights> weights_;
  std::vector<LayerState> state_;
  int input_width_ = 0;

  int layer_input_width(std::size_t i) const;
};

// Binary weight file, little-endian: magic "RNMC", version u16, layer count
// u16, per-layer {kind u8, units u16, in u16}, then all scalars as float32
// in layer order (dense: W row-major then b; gru: Wz,Wr,Wc,Uz,Ur,Uc,bz,br,bc;
// lstm: Wf,Wi,Wo,Wg,Uf,Ui,Uo,Ug,bf,bi,bo,bg), then CRC32 over everything
// after the magic.
void save_weights(const ChildModel& model, std::ostream& out);
void save_weights(const ChildModel& model, const std::string& path);
ChildModel load_weights(std::istream& in);
ChildModel load_weights(const std::string& path);

std::uint32_t crc32(const unsigned char* data, std::size_t len);

}  // namespace nlgpc
