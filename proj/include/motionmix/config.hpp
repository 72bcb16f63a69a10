#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "motionmix/dataset.hpp"
#include "motionmix/eval.hpp"
#include "motionmix/sampling.hpp"
#include "motionmix/schedule.hpp"
#include "motionmix/training.hpp"

namespace motionmix {

// Everything one run needs. Loaded from a JSON file whose sections mirror the
// struct; missing keys keep their defaults.
struct RunConfig {
  struct Data {
    int num_classes = 6;
    int per_class = 500;
    int frames = 32;
    int dim = 4;
    std::uint64_t seed = 7;
  } data;

  struct Schedule {
    int steps = 100;
    // Unset means NoiseSchedule::scaled_linear(steps).
    std::optional<double> beta_start;
    std::optional<double> beta_end;
  } schedule;

  struct Prepare {
    double noisy_ratio = 0.5;
    int t1 = 10;
    int t2 = 30;
  } prepare;

  struct Model {
    int hidden_width = 128;
    int num_blocks = 2;
    int time_embed_dim = 32;
    ParamKind param_kind = ParamKind::PredictX0;
  } model;

  struct Train {
    int t_star = 30;
    int steps = 20000;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double cfg_mask_prob = 0.1;
    std::string baseline = "none";  // "none" | "naive"
    int log_every = 100;
    int checkpoint_every = 0;
    bool record_wall_time = false;
  } train;

  struct Sample {
    double guidance = 2.5;
    bool classifier_free = true;
    std::optional<double> clamp = 4.0;
    int per_class = 100;
  } sample;

  struct Eval {
    int repeats = 5;
    int diversity_pairs = 300;
    int multimodality_pairs = 20;
    int extractor_hidden = 32;
  } eval;

  std::uint64_t seed = 0;

  void validate() const;

  NoiseSchedule make_schedule() const;
  CorruptionSpec corruption() const { return {prepare.t1, prepare.t2}; }
  TrainConfig train_config() const;
  SamplerConfig sampler_config() const;
  ExtractorConfig extractor_config() const;
  EvalSettings eval_settings() const;

  std::uint64_t split_seed() const;
  std::uint64_t train_seed() const;
  std::uint64_t sample_seed() const;
  std::uint64_t eval_seed() const;
  std::uint64_t extractor_seed() const;
};

nlohmann::json to_json(const RunConfig& cfg);
// Overlays `j` onto `base`; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path);

// MOTIONMIX_SEED when set and numeric, otherwise `fallback`.
std::uint64_t default_seed(std::uint64_t fallback = 0);

}  // namespace motionmix
