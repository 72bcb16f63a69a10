#include "motionmix/model.hpp"

#include <cmath>

#include "motionmix/error.hpp"
#include "motionmix/rng.hpp"

namespace motionmix {

void DenoiserConfig::validate() const {
  require(dim >= 1 && frames >= 1, "denoiser needs frames >= 1 and dim >= 1");
  require(hidden_width >= 8, "hidden_width must be at least 8");
  require(num_blocks >= 1, "num_blocks must be at least 1");
  require(num_classes >= 1, "num_classes must be at least 1");
  require(time_embed_dim >= 2 && time_embed_dim % 2 == 0, "time_embed_dim must be even and >= 2");
  require(diffusion_steps >= 2, "diffusion_steps must be at least 2");
}

nlohmann::json to_json(const DenoiserConfig& cfg) {
  return {{"dim", cfg.dim},
          {"frames", cfg.frames},
          {"hidden_width", cfg.hidden_width},
          {"num_blocks", cfg.num_blocks},
          {"num_classes", cfg.num_classes},
          {"time_embed_dim", cfg.time_embed_dim},
          {"diffusion_steps", cfg.diffusion_steps},
          {"param_kind", to_string(cfg.param_kind)}};
}

DenoiserConfig denoiser_config_from_json(const nlohmann::json& j) {
  DenoiserConfig cfg;
  cfg.dim = j.at("dim").get<int>();
  cfg.frames = j.at("frames").get<int>();
  cfg.hidden_width = j.at("hidden_width").get<int>();
  cfg.num_blocks = j.at("num_blocks").get<int>();
  cfg.num_classes = j.at("num_classes").get<int>();
  cfg.time_embed_dim = j.at("time_embed_dim").get<int>();
  cfg.diffusion_steps = j.at("diffusion_steps").get<int>();
  cfg.param_kind = parse_param_kind(j.at("param_kind").get<std::string>());
  cfg.validate();
  return cfg;
}

ParamLayout::ParamLayout(const DenoiserConfig& cfg) {
  const std::size_t H = cfg.hidden_width;
  const std::size_t P = cfg.input_size();
  std::size_t at = 0;
  auto take = [&at](std::size_t n) {
    const std::size_t off = (at + kParamAlign - 1) / kParamAlign * kParamAlign;
    at = off + n;
    return off;
  };
  in_w = take(H * P);
  in_b = take(H);
  blocks.resize(cfg.num_blocks);
  for (auto& b : blocks) {
    b.w1 = take(H * H);
    b.b1 = take(H);
    b.w2 = take(H * H);
    b.b2 = take(H);
  }
  out_w = take(P * H);
  out_b = take(P);
  cond = take(static_cast<std::size_t>(cfg.num_classes + 1) * H);
  time_w = take(H * cfg.time_embed_dim);
  total = at;
}

bool DenoiserParams::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

DenoiserParams init_denoiser(const DenoiserConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const ParamLayout L(cfg);
  DenoiserParams p{cfg, ParamVector(L.total, 0.0)};
  Rng rng = make_rng(seed, streams::kInit);
  auto fill = [&](std::size_t off, std::size_t n, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < n; ++i) p.values[off + i] = dist(rng);
  };
  const std::size_t H = cfg.hidden_width;
  const std::size_t P = cfg.input_size();
  const std::size_t E = cfg.time_embed_dim;
  fill(L.in_w, H * P, 1.0 / std::sqrt(static_cast<double>(P)));
  for (const auto& b : L.blocks) {
    fill(b.w1, H * H, 1.0 / std::sqrt(static_cast<double>(H)));
    fill(b.w2, H * H, 1.0 / std::sqrt(static_cast<double>(H)));
  }
  fill(L.out_w, P * H, 0.1 / std::sqrt(static_cast<double>(H)));
  fill(L.cond, (cfg.num_classes + 1) * H, 1.0);
  fill(L.time_w, H * E, 1.0 / std::sqrt(static_cast<double>(E)));
  return p;
}

void time_embedding(int t, int steps, std::span<double> out) {
  const std::size_t half = out.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double expo = half > 1 ? static_cast<double>(i) / (half - 1) : 1.0;
    const double period = std::pow(static_cast<double>(steps), expo);
    const double arg = t / period;
    out[2 * i] = std::sin(arg);
    out[2 * i + 1] = std::cos(arg);
  }
}

OptimizerState OptimizerState::for_size(std::size_t n, const AdamConfig& hyper) {
  return {hyper, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0};
}

void adam_update(std::span<double> params, std::span<const double> grads, OptimizerState& state) {
  require(params.size() == grads.size() && state.m.size() == params.size() &&
              state.v.size() == params.size(),
          "adam: parameter, gradient, and moment sizes differ");
  const auto& h = state.hyper;
  state.step += 1;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  const double step_size = h.learning_rate / c1;
  const double inv_sqrt_c2 = 1.0 / std::sqrt(c2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
    params[i] -= step_size * state.m[i] / (std::sqrt(state.v[i]) * inv_sqrt_c2 + h.epsilon);
  }
}

void adam_step(DenoiserParams& params, std::span<const double> grads, OptimizerState& state) {
  adam_update(params.values, grads, state);
}

}  // namespace motionmix
