#include <cmath>
#include <vector>

#include "doctest.h"
#include "motionmix/error.hpp"
#include "motionmix/kernels.hpp"
#include "oracles.hpp"

using namespace motionmix;

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    const auto params = oracles::gradcheck_model(seed);
    const auto batch = oracles::random_batch(params.config, 6, seed);
    const auto fused = loss_and_grad(params, batch);
    const auto check = oracles::finite_difference_check(params, batch, fused.grads);
    CAPTURE(check.worst_index);
    CHECK(check.checked == params.values.size());
    CHECK(check.max_rel_error < 1e-4);
    CHECK(fused.loss == doctest::Approx(oracles::batch_loss(params, batch)).epsilon(1e-12));
  }
}

TEST_CASE("fused and reference kernels agree") {
  DenoiserConfig cfg;
  cfg.hidden_width = 24;
  cfg.num_blocks = 2;
  cfg.frames = 8;
  cfg.dim = 3;
  cfg.num_classes = 4;
  cfg.time_embed_dim = 16;
  const auto params = init_denoiser(cfg, 3);
  // 70 items spans several gradient chunks plus a partial one.
  const auto batch = oracles::random_batch(cfg, 70, 5);
  const auto fused = loss_and_grad(params, batch);
  const auto ref = reference::loss_and_grad(params, batch);
  CHECK(fused.loss == doctest::Approx(ref.loss).epsilon(1e-12));
  REQUIRE(fused.grads.size() == ref.grads.size());
  for (std::size_t i = 0; i < ref.grads.size(); ++i)
    CHECK(std::abs(fused.grads[i] - ref.grads[i]) <= 1e-11 * (1.0 + std::abs(ref.grads[i])));
  for (const auto& item : batch) {
    const auto a = denoise_forward(params, item.x_t, item.t, item.condition);
    const auto b = reference::denoise_forward(params, item.x_t, item.t, item.condition);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.values()[i] - b.values()[i]) < 1e-12);
  }
}

TEST_CASE("batch forward matches single forward") {
  DenoiserConfig cfg;
  cfg.hidden_width = 16;
  cfg.frames = 4;
  cfg.dim = 2;
  const auto params = init_denoiser(cfg, 1);
  const auto batch = oracles::random_batch(cfg, 5, 2);
  Eigen::MatrixXd inputs(cfg.input_size(), 5);
  std::vector<int> ts;
  std::vector<Condition> cs;
  for (int j = 0; j < 5; ++j) {
    for (int i = 0; i < cfg.input_size(); ++i) inputs(i, j) = batch[j].x_t.values()[i];
    ts.push_back(batch[j].t);
    cs.push_back(batch[j].condition);
  }
  const auto out = denoise_forward_batch(params, inputs, ts, cs);
  for (int j = 0; j < 5; ++j) {
    const auto single = denoise_forward(params, batch[j].x_t, ts[j], cs[j]);
    for (int i = 0; i < cfg.input_size(); ++i) CHECK(out(i, j) == doctest::Approx(single.values()[i]).epsilon(1e-13));
  }
}

TEST_CASE("loss and gradients are invariant to duplicating the batch") {
  const auto params = oracles::gradcheck_model(9);
  const auto batch = oracles::random_batch(params.config, 10, 9);
  auto doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());
  const auto a = loss_and_grad(params, batch);
  const auto b = loss_and_grad(params, doubled);
  CHECK(b.loss == doctest::Approx(a.loss).epsilon(1e-13));
  for (std::size_t i = 0; i < a.grads.size(); ++i)
    CHECK(std::abs(a.grads[i] - b.grads[i]) <= 1e-13 * (1.0 + std::abs(a.grads[i])));
}

TEST_CASE("exact targets give zero loss and zero gradient") {
  const auto params = oracles::gradcheck_model(2);
  auto batch = oracles::random_batch(params.config, 4, 2);
  for (auto& item : batch) item.target = reference::denoise_forward(params, item.x_t, item.t, item.condition);
  const auto r = loss_and_grad(params, batch);
  CHECK(r.loss < 1e-28);
  for (double g : r.grads) CHECK(std::abs(g) < 1e-14);
}

TEST_CASE("null row receives no gradient without null conditions") {
  const auto params = oracles::gradcheck_model(4);
  const auto batch = oracles::random_batch(params.config, 40, 4, /*include_null=*/false);
  const auto r = loss_and_grad(params, batch);
  const ParamLayout L(params.config);
  const int H = params.config.hidden_width;
  const std::size_t null_row = L.cond + static_cast<std::size_t>(params.config.num_classes) * H;
  for (int i = 0; i < H; ++i) CHECK(r.grads[null_row + i] == 0.0);
  bool class_rows_touched = false;
  for (std::size_t i = L.cond; i < null_row; ++i) class_rows_touched |= r.grads[i] != 0.0;
  CHECK(class_rows_touched);
}

TEST_CASE("loss_and_grad rejects bad batches") {
  const auto params = oracles::gradcheck_model(1);
  CHECK_THROWS_AS(loss_and_grad(params, {}), ConfigError);
  auto batch = oracles::random_batch(params.config, 2, 1);
  batch[1].target = MotionSequence(1, 1);
  CHECK_THROWS_AS(loss_and_grad(params, batch), ConfigError);
}
