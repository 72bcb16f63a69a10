#include <cmath>

#include "doctest.h"
#include "motionmix/checkpoint.hpp"
#include "motionmix/error.hpp"
#include "motionmix/kernels.hpp"
#include "motionmix/model.hpp"
#include "motionmix/motion_io.hpp"
#include "motionmix/rng.hpp"
#include "test_util.hpp"

using namespace motionmix;

namespace {

DenoiserConfig default_config() { return DenoiserConfig{}; }

}  // namespace

TEST_CASE("init is deterministic in the seed") {
  const auto cfg = default_config();
  CHECK(init_denoiser(cfg, 5) == init_denoiser(cfg, 5));
  CHECK_FALSE(init_denoiser(cfg, 5) == init_denoiser(cfg, 6));
}

TEST_CASE("init zeroes the biases and sizes the condition table") {
  const auto cfg = default_config();
  const auto p = init_denoiser(cfg, 1);
  const ParamLayout L(cfg);
  const int H = cfg.hidden_width;
  for (int i = 0; i < cfg.input_size(); ++i) CHECK(p.values[L.out_b + i] == 0.0);
  for (int i = 0; i < H; ++i) CHECK(p.values[L.in_b + i] == 0.0);
  for (const auto& b : L.blocks)
    for (int i = 0; i < H; ++i) {
      CHECK(p.values[b.b1 + i] == 0.0);
      CHECK(p.values[b.b2 + i] == 0.0);
    }
  CHECK(L.time_w - L.cond >= static_cast<std::size_t>(H) * (cfg.num_classes + 1));
  CHECK(L.total == p.values.size());
  CHECK(L.total == L.time_w + static_cast<std::size_t>(H) * cfg.time_embed_dim);
}

TEST_CASE("layout offsets are aligned and ordered") {
  DenoiserConfig cfg;
  cfg.hidden_width = 9;
  cfg.num_blocks = 3;
  cfg.frames = 3;
  cfg.dim = 2;
  cfg.time_embed_dim = 6;
  const ParamLayout L(cfg);
  const std::size_t H = 9, P = 6;
  // (offset, length) in checkpoint order.
  std::vector<std::pair<std::size_t, std::size_t>> tensors{{L.in_w, H * P}, {L.in_b, H}};
  for (const auto& b : L.blocks) {
    tensors.push_back({b.w1, H * H});
    tensors.push_back({b.b1, H});
    tensors.push_back({b.w2, H * H});
    tensors.push_back({b.b2, H});
  }
  tensors.push_back({L.out_w, P * H});
  tensors.push_back({L.out_b, P});
  tensors.push_back({L.cond, H * 7});
  tensors.push_back({L.time_w, H * 6});
  std::size_t end = 0;
  for (const auto& [off, len] : tensors) {
    CHECK(off % kParamAlign == 0);
    CHECK(off >= end);
    CHECK(off - end < kParamAlign);
    end = off + len;
  }
  CHECK(L.total == end);
  const auto p = init_denoiser(cfg, 1);
  CHECK(reinterpret_cast<std::uintptr_t>(p.values.data()) % EIGEN_DEFAULT_ALIGN_BYTES == 0);
}

TEST_CASE("forward output is bounded at init") {
  const auto cfg = default_config();
  const auto p = init_denoiser(cfg, 3);
  Rng rng = make_rng(4);
  for (int i = 0; i < 100; ++i) {
    MotionSequence x(cfg.frames, cfg.dim);
    fill_standard_normal(rng, x.values());
    const int t = uniform_int(rng, 1, cfg.diffusion_steps);
    const auto y = denoise_forward(p, x, t, Condition::class_id(i % cfg.num_classes));
    CHECK(rms(y) <= 10.0 * rms(x));
  }
}

TEST_CASE("forward is pure and finite under fuzzing") {
  const auto cfg = default_config();
  const auto p = init_denoiser(cfg, 8);
  Rng rng = make_rng(9);
  for (int i = 0; i < 1000; ++i) {
    MotionSequence x(cfg.frames, cfg.dim);
    const double scale = std::pow(10.0, uniform01(rng) * 6.0 - 3.0);
    fill_standard_normal(rng, x.values());
    for (double& v : x.values()) v *= scale;
    const int t = uniform_int(rng, 1, cfg.diffusion_steps);
    const int k = uniform_int(rng, -1, cfg.num_classes - 1);
    const Condition c = k < 0 ? Condition::null() : Condition::class_id(k);
    const auto y = denoise_forward(p, x, t, c);
    CHECK(y.all_finite());
    if (i % 100 == 0) CHECK(denoise_forward(p, x, t, c) == y);
  }
}

TEST_CASE("null and class conditions give different outputs") {
  const auto cfg = default_config();
  const auto p = init_denoiser(cfg, 2);
  MotionSequence x(cfg.frames, cfg.dim);
  Rng rng = make_rng(1);
  fill_standard_normal(rng, x.values());
  CHECK_FALSE(denoise_forward(p, x, 50, Condition::null()) == denoise_forward(p, x, 50, Condition::class_id(0)));
}

TEST_CASE("forward rejects bad inputs") {
  const auto cfg = default_config();
  const auto p = init_denoiser(cfg, 2);
  CHECK_THROWS_AS(denoise_forward(p, MotionSequence(cfg.frames + 1, cfg.dim), 5, Condition::null()), ConfigError);
  CHECK_THROWS_AS(denoise_forward(p, MotionSequence(cfg.frames, cfg.dim), 0, Condition::null()), ConfigError);
  CHECK_THROWS_AS(denoise_forward(p, MotionSequence(cfg.frames, cfg.dim), 101, Condition::null()), ConfigError);
  CHECK_THROWS_AS(denoise_forward(p, MotionSequence(cfg.frames, cfg.dim), 5, Condition::class_id(6)), ConfigError);
}

TEST_CASE("config validation") {
  DenoiserConfig cfg;
  cfg.hidden_width = 7;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.num_blocks = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.num_classes = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.time_embed_dim = 7;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.param_kind = ParamKind::PredictEps;
  CHECK(denoiser_config_from_json(to_json(cfg)) == cfg);
}

TEST_CASE("time embedding is bounded and distinguishes timesteps") {
  std::vector<double> a(32), b(32);
  time_embedding(1, 100, a);
  time_embedding(2, 100, b);
  CHECK(a != b);
  for (double v : a) CHECK(std::abs(v) <= 1.0);
  // sin^2 + cos^2 pairs
  for (std::size_t i = 0; i < 16; ++i) CHECK(a[2 * i] * a[2 * i] + a[2 * i + 1] * a[2 * i + 1] == doctest::Approx(1.0));
}

TEST_CASE("adam with zero gradient leaves params unchanged") {
  std::vector<double> p{1.0, -2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  auto st = OptimizerState::for_size(3);
  adam_update(p, g, st);
  CHECK(p == std::vector<double>{1.0, -2.0, 3.0});
  CHECK(st.step == 1);
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
  std::vector<double> p{0.0, 0.0, 0.0};
  const std::vector<double> g{0.5, -3.0, 1e-3};
  AdamConfig hyper;
  hyper.learning_rate = 0.01;
  auto st = OptimizerState::for_size(3, hyper);
  adam_update(p, g, st);
  // With bias correction, m_hat = g and v_hat = g^2 on the first step.
  for (int i = 0; i < 3; ++i) {
    const double expected = -0.01 * g[i] / (std::abs(g[i]) + hyper.epsilon);
    CHECK(p[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("adam reaches the minimum of a quadratic in 100 steps") {
  // f(x, y) = (x - 3)^2 + 10 (y + 1)^2, minimizer (3, -1). Constant-step Adam
  // orbits the minimum at a radius set by the step size, so start and rate
  // are pinned.
  std::vector<double> p{2.5, -0.5};
  AdamConfig hyper;
  hyper.learning_rate = 0.02;
  auto st = OptimizerState::for_size(2, hyper);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> g{2.0 * (p[0] - 3.0), 20.0 * (p[1] + 1.0)};
    adam_update(p, g, st);
  }
  CHECK(std::abs(p[0] - 3.0) < 1e-3);
  CHECK(std::abs(p[1] + 1.0) < 1e-3);
  CHECK(st.step == 100);
}

TEST_CASE("adam rejects mismatched sizes") {
  std::vector<double> p(3);
  auto st = OptimizerState::for_size(3);
  CHECK_THROWS_AS(adam_update(p, std::vector<double>(2), st), ConfigError);
}

TEST_CASE("checkpoint round trip and corruption") {
  testutil::TempDir dir;
  DenoiserConfig cfg;
  cfg.hidden_width = 16;
  cfg.param_kind = ParamKind::PredictEps;
  const auto p = init_denoiser(cfg, 4);
  CheckpointMeta meta;
  meta.training_step = 1234;
  meta.t_star = 30;
  meta.schedule_steps = 100;
  meta.beta_start = 1e-3;
  meta.beta_end = 0.2;
  meta.provenance = {{"seed", 4}};
  save_checkpoint(dir / "a.mmck", p, meta);
  const auto ck = load_checkpoint(dir / "a.mmck");
  CHECK(ck.params == p);
  CHECK(ck.meta.training_step == 1234);
  CHECK(ck.meta.t_star == 30);
  CHECK(ck.meta.beta_start == 1e-3);
  CHECK(ck.meta.beta_end == 0.2);
  CHECK(ck.meta.provenance == meta.provenance);

  auto bytes = io::read_file(dir / "a.mmck");
  bytes[0] = 'X';
  io::write_file(dir / "b.mmck", bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "b.mmck"), IoError);
  bytes = io::read_file(dir / "a.mmck");
  bytes.resize(bytes.size() - 1);
  io::write_file(dir / "c.mmck", bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "c.mmck"), IoError);
}
