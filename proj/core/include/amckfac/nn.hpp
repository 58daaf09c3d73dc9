#pragma once

#include <cstdint>
#include <vector>

#include "amckfac/linalg.hpp"

namespace amckfac {

// Fixed topology: 8x8x1 -> conv 3x3 (4 ch, valid) -> relu -> avgpool 2x2
// -> flatten 36 -> fc 4 -> softmax cross-entropy over 4 classes.
struct ModelDims {
  static constexpr std::size_t image_dim = 8;
  static constexpr std::size_t image_size = 64;
  static constexpr std::size_t kernel = 3;
  static constexpr std::size_t patch_dim = 9;     // a_conv
  static constexpr std::size_t channels = 4;      // g_conv
  static constexpr std::size_t conv_out = 6;      // per side
  static constexpr std::size_t positions = 36;    // conv_out^2
  static constexpr std::size_t pool_out = 3;      // per side
  static constexpr std::size_t feature_dim = 36;  // a_fc
  static constexpr std::size_t classes = 4;       // g_fc
};

struct Model {
  Matrix conv_w{ModelDims::channels, ModelDims::patch_dim, 0.0};
  Vector conv_b = Vector(ModelDims::channels, 0.0);
  Matrix fc_w{ModelDims::classes, ModelDims::feature_dim, 0.0};
  Vector fc_b = Vector(ModelDims::classes, 0.0);

  // Zero-mean uniform init with fan-in scaling.
  static Model init(std::uint64_t seed);
};

// Same shapes as Model; used for gradients and optimizer state.
using ParamDelta = Model;

// Forward-pass cache for one batch.
struct LayerTape {
  std::size_t batch = 0;
  Matrix patches;      // (B*36) x 9, per-position conv inputs
  Matrix conv_preact;  // (B*36) x 4
  Matrix fc_input;     // B x 36, flattened pool outputs (channel-major)
  Matrix logits;       // B x 4
};

struct Gradients {
  ParamDelta params;
  Matrix conv_preact_grads;  // (B*36) x 4, per-sample-loss convention
  Matrix logit_grads;        // B x 4
};

// images: B x 64 row-major 8x8 grids, pixels in [0,1].
LayerTape forward(const Model& model, const Matrix& images);

double batch_loss(const LayerTape& tape, const std::vector<int>& labels);

Gradients backward(const Model& model, const LayerTape& tape,
                   const std::vector<int>& labels);

struct SgdmState {
  ParamDelta velocity;
};

void sgd_m_step(Model& model, const ParamDelta& grads, double lr,
                double momentum, SgdmState& state);

struct AdamState {
  ParamDelta m, v;
  int t = 0;
};

void adam_step(Model& model, const ParamDelta& grads, double lr, double beta1,
               double beta2, double eps, AdamState& state);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  Matrix features;  // N x 36 penultimate activations
  std::vector<int> predictions;
};

EvalResult evaluate(const Model& model, const Matrix& images,
                    const std::vector<int>& labels);

}  // namespace amckfac
