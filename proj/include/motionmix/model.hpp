#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "motionmix/schedule.hpp"

namespace motionmix {

struct DenoiserConfig {
  int dim = 4;
  int frames = 32;
  int hidden_width = 128;
  int num_blocks = 2;
  int num_classes = 6;
  int time_embed_dim = 32;
  // Diffusion length T; sets the sinusoid periods of the time embedding.
  int diffusion_steps = 100;
  ParamKind param_kind = ParamKind::PredictX0;

  int input_size() const { return frames * dim; }
  void validate() const;

  bool operator==(const DenoiserConfig&) const = default;
};

nlohmann::json to_json(const DenoiserConfig& cfg);
DenoiserConfig denoiser_config_from_json(const nlohmann::json& j);

// Flat parameter storage. The buffer is aligned to Eigen's packet size and
// every tensor starts on a kParamAlign boundary, so vectorized kernels see the
// same alignment on every run and sum in the same order.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;
inline constexpr std::size_t kParamAlign = 8;

// Offsets of every tensor inside the flat parameter vector. Matrices are
// column-major. The order is also the checkpoint order:
//   input proj (W, b), blocks in order (W1, b1, W2, b2), output proj (W, b),
//   condition table (K+1 contiguous rows of H, row K = null),
//   time proj (H x E).
// Gaps between tensors stay zero and are not written to checkpoints.
struct ParamLayout {
  struct Block {
    std::size_t w1, b1, w2, b2;
  };
  std::size_t in_w = 0, in_b = 0;
  std::vector<Block> blocks;
  std::size_t out_w = 0, out_b = 0;
  std::size_t cond = 0;
  std::size_t time_w = 0;
  std::size_t total = 0;

  explicit ParamLayout(const DenoiserConfig& cfg);
};

struct DenoiserParams {
  DenoiserConfig config;
  ParamVector values;

  ParamLayout layout() const { return ParamLayout(config); }
  bool all_finite() const;
  bool operator==(const DenoiserParams&) const = default;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases. The output
// projection is scaled down so the untrained net starts near zero.
DenoiserParams init_denoiser(const DenoiserConfig& cfg, std::uint64_t seed);

// sin/cos features with periods log-spaced over [1, T].
void time_embedding(int t, int steps, std::span<double> out);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double silu(double x) { return x * sigmoid(x); }
inline double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig hyper;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  static OptimizerState for_size(std::size_t n, const AdamConfig& hyper = {});
};

// Bias-corrected Adam on a flat parameter vector.
void adam_update(std::span<double> params, std::span<const double> grads, OptimizerState& state);
void adam_step(DenoiserParams& params, std::span<const double> grads, OptimizerState& state);

}  // namespace motionmix
