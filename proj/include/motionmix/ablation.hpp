#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "motionmix/config.hpp"
#include "motionmix/eval.hpp"

namespace motionmix {

enum class AblationAxis { Pivot, Ratio, Range };

AblationAxis parse_ablation_axis(const std::string& s);  // pivot | ratio | range
std::string to_string(AblationAxis axis);

// Grid points are kept as text: "30" for pivot, "0.5" for ratio, "10:30" for
// range (the pivot follows T2 on the range axis).
RunConfig apply_grid_point(const RunConfig& base, AblationAxis axis, const std::string& point);

struct MetricSummary {
  double mean = 0.0;
  double spread = 0.0;  // sample standard deviation over repeats
};

struct AblationRow {
  std::string point;
  bool ok = false;
  std::string error;
  MetricSummary fid, accuracy, diversity, multimodality;
  std::uint64_t seed = 0;
  nlohmann::json run_config;
};

struct AblationTable {
  AblationAxis axis = AblationAxis::Pivot;
  std::vector<AblationRow> rows;
};

struct AblationOptions {
  bool parallel = false;
  std::filesystem::path out_dir;  // per-row artifacts when non-empty
};

// For each point: prepare the shared corpus with a fresh split, train,
// generate sample.per_class motions per class, and evaluate eval.repeats
// times with distinct sampler seeds. A failing point is recorded and the
// sweep continues.
AblationTable run_ablation(const RunConfig& base, AblationAxis axis,
                           const std::vector<std::string>& grid,
                           const AblationOptions& options = {});

std::string ablation_csv(const AblationTable& table);
std::string ablation_text(const AblationTable& table);

}  // namespace motionmix
