#include "amckfac/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace amckfac {

namespace {

using D = ModelDims;

void softmax_row(const Matrix& logits, std::size_t row, double* out) {
  double mx = logits(row, 0);
  for (std::size_t c = 1; c < D::classes; ++c) mx = std::max(mx, logits(row, c));
  double z = 0.0;
  for (std::size_t c = 0; c < D::classes; ++c) {
    out[c] = std::exp(logits(row, c) - mx);
    z += out[c];
  }
  for (std::size_t c = 0; c < D::classes; ++c) out[c] /= z;
}

template <typename Fn>
void zip_params3(Model& a, ParamDelta& b, const ParamDelta& c, Fn fn) {
  for (std::size_t i = 0; i < a.conv_w.size(); ++i)
    fn(a.conv_w.data()[i], b.conv_w.data()[i], c.conv_w.data()[i]);
  for (std::size_t i = 0; i < a.conv_b.size(); ++i)
    fn(a.conv_b[i], b.conv_b[i], c.conv_b[i]);
  for (std::size_t i = 0; i < a.fc_w.size(); ++i)
    fn(a.fc_w.data()[i], b.fc_w.data()[i], c.fc_w.data()[i]);
  for (std::size_t i = 0; i < a.fc_b.size(); ++i)
    fn(a.fc_b[i], b.fc_b[i], c.fc_b[i]);
}

}  // namespace

Model Model::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Model m;
  const double s_conv = std::sqrt(3.0 / D::patch_dim);
  const double s_fc = std::sqrt(3.0 / D::feature_dim);
  std::uniform_real_distribution<double> u_conv(-s_conv, s_conv);
  std::uniform_real_distribution<double> u_fc(-s_fc, s_fc);
  for (double& v : m.conv_w.data()) v = u_conv(rng);
  for (double& v : m.fc_w.data()) v = u_fc(rng);
  return m;
}

LayerTape forward(const Model& model, const Matrix& images) {
  if (images.cols() != D::image_size)
    throw ContractViolation("forward: images must be B x 64");
  const std::size_t b = images.rows();

  LayerTape tape;
  tape.batch = b;
  tape.patches = Matrix(b * D::positions, D::patch_dim);
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t i = 0; i < D::conv_out; ++i) {
      for (std::size_t j = 0; j < D::conv_out; ++j) {
        const std::size_t row = s * D::positions + i * D::conv_out + j;
        for (std::size_t di = 0; di < D::kernel; ++di)
          for (std::size_t dj = 0; dj < D::kernel; ++dj)
            tape.patches(row, di * D::kernel + dj) =
                images(s, (i + di) * D::image_dim + (j + dj));
      }
    }
  }

  tape.conv_preact = tape.patches * model.conv_w.transposed();
  for (std::size_t r = 0; r < tape.conv_preact.rows(); ++r)
    for (std::size_t c = 0; c < D::channels; ++c)
      tape.conv_preact(r, c) += model.conv_b[c];

  // relu + 2x2 average pool, flattened channel-major
  tape.fc_input = Matrix(b, D::feature_dim, 0.0);
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t c = 0; c < D::channels; ++c) {
      for (std::size_t pi = 0; pi < D::pool_out; ++pi) {
        for (std::size_t pj = 0; pj < D::pool_out; ++pj) {
          double sum = 0.0;
          for (std::size_t di = 0; di < 2; ++di)
            for (std::size_t dj = 0; dj < 2; ++dj) {
              const std::size_t pos = (2 * pi + di) * D::conv_out + 2 * pj + dj;
              sum += std::max(0.0, tape.conv_preact(s * D::positions + pos, c));
            }
          tape.fc_input(s, c * D::pool_out * D::pool_out + pi * D::pool_out +
                               pj) = sum / 4.0;
        }
      }
    }
  }

  tape.logits = tape.fc_input * model.fc_w.transposed();
  for (std::size_t s = 0; s < b; ++s)
    for (std::size_t c = 0; c < D::classes; ++c)
      tape.logits(s, c) += model.fc_b[c];
  return tape;
}

double batch_loss(const LayerTape& tape, const std::vector<int>& labels) {
  if (labels.size() != tape.batch)
    throw ContractViolation("batch_loss: label count mismatch");
  double loss = 0.0;
  double p[D::classes];
  for (std::size_t s = 0; s < tape.batch; ++s) {
    softmax_row(tape.logits, s, p);
    loss -= std::log(std::max(p[labels[s]], 1e-300));
  }
  return loss / static_cast<double>(tape.batch);
}

Gradients backward(const Model& model, const LayerTape& tape,
                   const std::vector<int>& labels) {
  if (labels.size() != tape.batch || tape.batch == 0)
    throw ContractViolation("backward: stale or mismatched tape");
  const std::size_t b = tape.batch;
  const double inv_b = 1.0 / static_cast<double>(b);

  Gradients g;
  // per-sample loss gradients at the logits: softmax - onehot
  g.logit_grads = Matrix(b, D::classes);
  double p[D::classes];
  for (std::size_t s = 0; s < b; ++s) {
    softmax_row(tape.logits, s, p);
    for (std::size_t c = 0; c < D::classes; ++c)
      g.logit_grads(s, c) = p[c] - (static_cast<int>(c) == labels[s] ? 1.0 : 0.0);
  }

  g.params.fc_w = inv_b * (g.logit_grads.transposed() * tape.fc_input);
  for (std::size_t c = 0; c < D::classes; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < b; ++r) s += g.logit_grads(r, c);
    g.params.fc_b[c] = s * inv_b;
  }

  const Matrix d_fc_input = g.logit_grads * model.fc_w;  // B x 36

  // unpool (grad / 4) and relu mask back to conv pre-activations
  g.conv_preact_grads = Matrix(b * D::positions, D::channels, 0.0);
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t c = 0; c < D::channels; ++c) {
      for (std::size_t pi = 0; pi < D::pool_out; ++pi) {
        for (std::size_t pj = 0; pj < D::pool_out; ++pj) {
          const double dv =
              d_fc_input(s, c * D::pool_out * D::pool_out + pi * D::pool_out +
                                pj) /
              4.0;
          for (std::size_t di = 0; di < 2; ++di)
            for (std::size_t dj = 0; dj < 2; ++dj) {
              const std::size_t row =
                  s * D::positions + (2 * pi + di) * D::conv_out + 2 * pj + dj;
              if (tape.conv_preact(row, c) > 0.0)
                g.conv_preact_grads(row, c) = dv;
            }
        }
      }
    }
  }

  g.params.conv_w = inv_b * (g.conv_preact_grads.transposed() * tape.patches);
  for (std::size_t c = 0; c < D::channels; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < g.conv_preact_grads.rows(); ++r)
      s += g.conv_preact_grads(r, c);
    g.params.conv_b[c] = s * inv_b;
  }
  return g;
}

void sgd_m_step(Model& model, const ParamDelta& grads, double lr,
                double momentum, SgdmState& state) {
  if (!(lr > 0.0) || momentum < 0.0 || momentum >= 1.0)
    throw ContractViolation("sgd_m_step: bad hyperparameters");
  zip_params3(model, state.velocity, grads,
              [&](double& w, double& v, const double& g) {
                v = momentum * v + g;
                w -= lr * v;
              });
}

void adam_step(Model& model, const ParamDelta& grads, double lr, double beta1,
               double beta2, double eps, AdamState& state) {
  if (!(lr > 0.0) || beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 ||
      beta2 >= 1.0 || !(eps > 0.0))
    throw ContractViolation("adam_step: bad hyperparameters");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, state.t);
  const double bc2 = 1.0 - std::pow(beta2, state.t);
  auto apply = [&](std::vector<double>& w, std::vector<double>& m,
                   std::vector<double>& v, const std::vector<double>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  };
  apply(model.conv_w.data(), state.m.conv_w.data(), state.v.conv_w.data(),
        grads.conv_w.data());
  apply(model.conv_b, state.m.conv_b, state.v.conv_b, grads.conv_b);
  apply(model.fc_w.data(), state.m.fc_w.data(), state.v.fc_w.data(),
        grads.fc_w.data());
  apply(model.fc_b, state.m.fc_b, state.v.fc_b, grads.fc_b);
}

EvalResult evaluate(const Model& model, const Matrix& images,
                    const std::vector<int>& labels) {
  if (images.rows() == 0 || labels.size() != images.rows())
    throw ContractViolation("evaluate: empty dataset or label mismatch");
  const LayerTape tape = forward(model, images);
  EvalResult res;
  res.loss = batch_loss(tape, labels);
  res.features = tape.fc_input;
  res.predictions.resize(images.rows());
  std::size_t correct = 0;
  for (std::size_t s = 0; s < images.rows(); ++s) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < ModelDims::classes; ++c)
      if (tape.logits(s, c) > tape.logits(s, arg)) arg = c;
    res.predictions[s] = static_cast<int>(arg);
    if (static_cast<int>(arg) == labels[s]) ++correct;
  }
  res.accuracy = static_cast<double>(correct) / images.rows();
  return res;
}

}  // namespace amckfac
