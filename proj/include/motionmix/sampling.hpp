#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "motionmix/dataset.hpp"
#include "motionmix/model.hpp"
#include "motionmix/rng.hpp"

namespace motionmix {

struct SamplerConfig {
  int t_star = 30;
  double guidance_w = 2.5;
  // When false stage 1 evaluates only the conditional branch.
  bool classifier_free = true;
  ParamKind param_kind = ParamKind::PredictX0;
  std::uint64_t seed = 0;
  std::optional<double> clamp = 4.0;

  void validate(int steps) const;
};

// Coordinates marked true are held to the reference motion.
struct EditMask {
  int frames = 0;
  int dim = 0;
  std::vector<bool> fixed;  // row-major, frames x dim

  static EditMask none(int frames, int dim);
  static EditMask all(int frames, int dim);
  // Holds the first and last `fraction` of frames.
  static EditMask in_between(int frames, int dim, double fraction = 0.25);
  // Holds every frame of the listed channels.
  static EditMask channels(int frames, int dim, std::span<const int> fixed_channels);

  bool any() const;
};

// w * cond + (1 - w) * uncond, exact at w = 0, w = 1, and cond == uncond.
MotionSequence cfg_combine(const MotionSequence& pred_cond, const MotionSequence& pred_uncond,
                           double w);

// Receives the condition actually passed to the network at each t.
using ConditionTrace = std::function<void(int t, Condition)>;
using Predictor = std::function<MotionSequence(const MotionSequence& x_t, int t)>;
// Runs after each reverse step with the new state x_{t-1} and t-1.
using PostStep = std::function<void(MotionSequence& x_prev, int t_prev)>;

// Plain ancestral loop from x_T ~ N(0, I) down to x_0 with a caller-supplied
// predictor. Consumes frames*dim normals for x_T and then per step t > 1.
MotionSequence reverse_chain(const NoiseSchedule& sched, int frames, int dim,
                             const Predictor& predict, ParamKind kind,
                             std::optional<double> clamp, Rng& rng,
                             const PostStep& post_step = {});

// Stage 1 (t = T..T*+1) conditions on c, CFG-weighted when enabled; stage 2
// (t = T*..1) evaluates the null condition only. The result is mapped back
// through `norm` when given.
MotionSequence two_stage_sample(const DenoiserParams& params, const NoiseSchedule& sched,
                                Condition c, const SamplerConfig& scfg, Rng& rng,
                                const Normalization* norm = nullptr,
                                const ConditionTrace& trace = {});

// One chain per condition; chain i uses make_rng(scfg.seed, i), so the result
// equals running two_stage_sample chain by chain. Chains run under OpenMP.
std::vector<MotionSequence> sample_many(const DenoiserParams& params, const NoiseSchedule& sched,
                                        std::span<const Condition> conditions,
                                        const SamplerConfig& scfg,
                                        const Normalization* norm = nullptr);
// Same contract, single-threaded.
std::vector<MotionSequence> sample_many_serial(const DenoiserParams& params,
                                               const NoiseSchedule& sched,
                                               std::span<const Condition> conditions,
                                               const SamplerConfig& scfg,
                                               const Normalization* norm = nullptr);

// Replacement-method editing: after every reverse step the fixed coordinates
// are overwritten with the reference diffused to t-1 (the reference itself at
// t-1 = 0). `reference` is in the same frame as the output, i.e. raw units
// when `norm` is given. Overwrite noise comes from a separate stream
// (kEditOffset), so an empty mask reproduces two_stage_sample.
MotionSequence edit_sample(const DenoiserParams& params, const NoiseSchedule& sched,
                           const MotionSequence& reference, const EditMask& mask, Condition c,
                           const SamplerConfig& scfg, Rng& rng, std::uint64_t chain = 0,
                           const Normalization* norm = nullptr, const ConditionTrace& trace = {});

}  // namespace motionmix
