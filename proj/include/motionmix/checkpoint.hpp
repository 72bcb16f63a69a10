#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "motionmix/model.hpp"

namespace motionmix {

struct CheckpointMeta {
  std::int64_t training_step = 0;
  int t_star = 0;
  int schedule_steps = 100;
  double beta_start = 0.0;
  double beta_end = 0.0;
  nlohmann::json provenance = nlohmann::json::object();
};

struct Checkpoint {
  DenoiserParams params;
  CheckpointMeta meta;
};

void save_checkpoint(const std::filesystem::path& path, const DenoiserParams& params,
                     const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace motionmix
