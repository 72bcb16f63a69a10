#include "motionmix/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "motionmix/checkpoint.hpp"
#include "motionmix/error.hpp"
#include "motionmix/kernels.hpp"

namespace motionmix {

void TrainConfig::validate(int steps_T) const {
  require(t_star >= 0 && t_star <= steps_T, "T* must lie in [0, T]");
  require(steps >= 0, "training steps must be non-negative");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(cfg_mask_prob >= 0.0 && cfg_mask_prob < 1.0, "cfg_mask_prob must lie in [0, 1)");
  require(log_every >= 1, "log_every must be at least 1");
  require(checkpoint_every >= 0, "checkpoint_every must be non-negative");
  require(adam.learning_rate >= 0.0, "learning rate must be non-negative");
}

int sample_timestep(SourceTag source, int t_star, int steps, Rng& rng) {
  if (source == SourceTag::NoisyAnnotated) {
    if (t_star >= steps) {
      throw ConfigError("noisy examples need T* < T (range [T*+1, T] is empty)");
    }
    return uniform_int(rng, t_star + 1, steps);
  }
  if (t_star < 1) throw ConfigError("clean examples need T* >= 1 (range [1, T*] is empty)");
  return uniform_int(rng, 1, t_star);
}

std::pair<MotionSequence, MotionSequence> make_train_target(const TrainingExample& example, int t,
                                                            const NoiseSchedule& sched,
                                                            ParamKind kind, Rng& rng) {
  MotionSequence eps(example.motion.frames(), example.motion.dim());
  fill_standard_normal(rng, eps.values());
  MotionSequence x_t = forward_diffuse(example.motion, t, eps, sched);
  if (kind == ParamKind::PredictX0) return {std::move(x_t), example.motion};
  return {std::move(x_t), std::move(eps)};
}

Condition apply_cfg_dropout(Condition c, double prob, Rng& rng) {
  require(prob >= 0.0 && prob < 1.0, "cfg dropout probability must lie in [0, 1)");
  if (c.is_null()) return c;
  return uniform01(rng) < prob ? Condition::null() : c;
}

TrainResult train(const TrainConfig& cfg, const MixedDataset& ds, const NoiseSchedule& sched,
                  const TrainHooks& hooks) {
  ds.validate();
  const int T = sched.steps();
  require(ds.steps == T, "dataset was prepared for a different schedule length");
  cfg.validate(T);
  const bool baseline = cfg.mode == TrainMode::NaiveBaseline;

  std::vector<std::size_t> noisy, clean;
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    (ds.examples[i].source == SourceTag::NoisyAnnotated ? noisy : clean).push_back(i);
  }

  TrainResult result;
  if (!baseline) {
    if (!clean.empty() && cfg.t_star == 0) {
      std::cerr << "warning: T* = 0 leaves no timesteps for clean examples; training on the "
                << noisy.size() << " noisy examples only\n";
      clean.clear();
      result.clean_examples_excluded = true;
    }
    if (!noisy.empty() && cfg.t_star >= T) {
      throw ConfigError("noisy examples need T* < T");
    }
  }
  require(!noisy.empty() || !clean.empty(), "no trainable examples");

  const double pool_frac =
      static_cast<double>(noisy.size()) / static_cast<double>(noisy.size() + clean.size());
  int noisy_per_batch = static_cast<int>(std::lround(pool_frac * cfg.batch_size));
  if (clean.empty()) noisy_per_batch = cfg.batch_size;
  if (noisy.empty()) noisy_per_batch = 0;

  DenoiserConfig mcfg;
  mcfg.dim = ds.dim;
  mcfg.frames = ds.frames;
  mcfg.hidden_width = cfg.hidden_width;
  mcfg.num_blocks = cfg.num_blocks;
  mcfg.num_classes = ds.num_classes;
  mcfg.time_embed_dim = cfg.time_embed_dim;
  mcfg.diffusion_steps = T;
  mcfg.param_kind = cfg.param_kind;
  result.params = init_denoiser(mcfg, cfg.seed);
  OptimizerState opt = OptimizerState::for_size(result.params.values.size(), cfg.adam);

  CheckpointMeta meta;
  meta.t_star = baseline ? 0 : cfg.t_star;
  meta.schedule_steps = T;
  meta.beta_start = sched.beta_start();
  meta.beta_end = sched.beta_end();
  meta.provenance = cfg.provenance;

  Rng rng = make_rng(cfg.seed, streams::kTrain);
  std::vector<BatchItem> batch(cfg.batch_size);
  const auto t0 = std::chrono::steady_clock::now();

  for (int step = 1; step <= cfg.steps; ++step) {
    for (int j = 0; j < cfg.batch_size; ++j) {
      const bool take_noisy = j < noisy_per_batch;
      const auto& pool = take_noisy ? noisy : clean;
      const TrainingExample& ex =
          ds.examples[pool[uniform_int(rng, 0, static_cast<int>(pool.size()) - 1)]];
      const int t = baseline ? uniform_int(rng, 1, T) : sample_timestep(ex.source, cfg.t_star, T, rng);
      if (hooks.on_timestep) hooks.on_timestep(ex.source, t);
      BatchItem& item = batch[j];
      item.t = t;
      item.condition = apply_cfg_dropout(ex.condition, cfg.cfg_mask_prob, rng);
      auto [x_t, target] = make_train_target(ex, t, sched, cfg.param_kind, rng);
      item.x_t = std::move(x_t);
      item.target = std::move(target);
    }

    LossAndGrad lg = loss_and_grad(result.params, batch);
    if (!std::isfinite(lg.loss)) {
      throw NumericError(fmt::format("non-finite loss at step {} (T* = {}, batch {})", step,
                                     cfg.t_star, cfg.batch_size));
    }
    adam_step(result.params, lg.grads, opt);

    if (step % cfg.log_every == 0 || step == 1 || step == cfg.steps) {
      TrainLogRow row;
      row.step = step;
      row.loss = lg.loss;
      row.noisy_frac = static_cast<double>(noisy_per_batch) / cfg.batch_size;
      if (cfg.record_wall_time) {
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                          .count();
      }
      result.log.push_back(row);
      if (hooks.on_log) hooks.on_log(row);
    }
    if (cfg.checkpoint_every > 0 && cfg.checkpoint_dir && step % cfg.checkpoint_every == 0) {
      meta.training_step = step;
      save_checkpoint(*cfg.checkpoint_dir / fmt::format("ckpt_{}.mmck", step), result.params, meta);
    }
  }
  return result;
}

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log) {
  std::string text = "step,loss,noisy_frac,wall_ms\n";
  for (const auto& r : log) {
    text += fmt::format("{},{:.17g},{:.17g},{:.3f}\n", r.step, r.loss, r.noisy_frac, r.wall_ms);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace motionmix
