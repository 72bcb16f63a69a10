#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "motionmix/dataset.hpp"
#include "motionmix/model.hpp"
#include "motionmix/rng.hpp"

namespace motionmix {

enum class TrainMode {
  // Noisy examples at t in [T*+1, T], clean examples at t in [1, T*].
  MotionMix,
  // Every example at t in [1, T] with its label kept.
  NaiveBaseline,
};

struct TrainConfig {
  int t_star = 30;
  int steps = 20000;
  int batch_size = 64;
  AdamConfig adam;
  double cfg_mask_prob = 0.1;
  ParamKind param_kind = ParamKind::PredictX0;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::MotionMix;
  int hidden_width = 128;
  int num_blocks = 2;
  int time_embed_dim = 32;
  int log_every = 100;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::optional<std::filesystem::path> checkpoint_dir;
  bool record_wall_time = false;  // off keeps the log byte-reproducible
  nlohmann::json provenance = nlohmann::json::object();

  void validate(int steps_T) const;
};

struct TrainLogRow {
  std::int64_t step = 0;
  double loss = 0.0;
  double noisy_frac = 0.0;
  double wall_ms = 0.0;
};

struct TrainHooks {
  // Called for every (source, t) drawn during training.
  std::function<void(SourceTag, int)> on_timestep;
  std::function<void(const TrainLogRow&)> on_log;
};

struct TrainResult {
  DenoiserParams params;
  std::vector<TrainLogRow> log;
  bool clean_examples_excluded = false;
};

int sample_timestep(SourceTag source, int t_star, int steps, Rng& rng);

// Returns (x_t, target); the example's motion plays x0 even when it was
// produced by corruption.
std::pair<MotionSequence, MotionSequence> make_train_target(const TrainingExample& example, int t,
                                                            const NoiseSchedule& sched,
                                                            ParamKind kind, Rng& rng);

Condition apply_cfg_dropout(Condition c, double prob, Rng& rng);

TrainResult train(const TrainConfig& cfg, const MixedDataset& ds, const NoiseSchedule& sched,
                  const TrainHooks& hooks = {});

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log);

}  // namespace motionmix
