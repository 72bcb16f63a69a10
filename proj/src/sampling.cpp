#include "motionmix/sampling.hpp"

#include <cmath>
#include <exception>

#include "motionmix/error.hpp"
#include "motionmix/kernels.hpp"

namespace motionmix {

void SamplerConfig::validate(int steps) const {
  require(t_star >= 0 && t_star <= steps, "sampler T* must lie in [0, T]");
  require(std::isfinite(guidance_w), "guidance weight must be finite");
  if (clamp) require(*clamp > 0.0, "clamp bound must be positive");
}

EditMask EditMask::none(int frames, int dim) {
  require(frames >= 1 && dim >= 1, "edit mask needs a positive shape");
  return {frames, dim, std::vector<bool>(static_cast<std::size_t>(frames) * dim, false)};
}

EditMask EditMask::all(int frames, int dim) {
  EditMask m = none(frames, dim);
  m.fixed.assign(m.fixed.size(), true);
  return m;
}

EditMask EditMask::in_between(int frames, int dim, double fraction) {
  require(fraction >= 0.0 && fraction <= 0.5, "in-between fraction must lie in [0, 0.5]");
  EditMask m = none(frames, dim);
  const int keep = static_cast<int>(std::lround(fraction * frames));
  for (int f = 0; f < frames; ++f) {
    if (f < keep || f >= frames - keep) {
      for (int d = 0; d < dim; ++d) m.fixed[static_cast<std::size_t>(f) * dim + d] = true;
    }
  }
  return m;
}

EditMask EditMask::channels(int frames, int dim, std::span<const int> fixed_channels) {
  EditMask m = none(frames, dim);
  for (int c : fixed_channels) {
    require(c >= 0 && c < dim, "edit channel out of range");
    for (int f = 0; f < frames; ++f) m.fixed[static_cast<std::size_t>(f) * dim + c] = true;
  }
  return m;
}

bool EditMask::any() const {
  for (bool b : fixed)
    if (b) return true;
  return false;
}

MotionSequence cfg_combine(const MotionSequence& pred_cond, const MotionSequence& pred_uncond,
                           double w) {
  require_same_shape(pred_cond, pred_uncond, "cfg_combine");
  MotionSequence out(pred_cond.frames(), pred_cond.dim());
  auto o = out.values();
  auto c = pred_cond.values();
  auto u = pred_uncond.values();
  // Equal branches return u itself: w*u + (1-w)*u can round away from u.
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = c[i] == u[i] ? u[i] : w * c[i] + (1.0 - w) * u[i];
  return out;
}

MotionSequence reverse_chain(const NoiseSchedule& sched, int frames, int dim,
                             const Predictor& predict, ParamKind kind,
                             std::optional<double> clamp, Rng& rng, const PostStep& post_step) {
  MotionSequence x(frames, dim);
  fill_standard_normal(rng, x.values());
  MotionSequence noise(frames, dim);
  for (int t = sched.steps(); t >= 1; --t) {
    MotionSequence pred = predict(x, t);
    if (t > 1) fill_standard_normal(rng, noise.values());
    x = reverse_step(x, pred, kind, t, sched, noise, clamp);
    if (post_step) post_step(x, t - 1);
  }
  return x;
}

namespace {

void check_sampling_args(const DenoiserParams& params, const NoiseSchedule& sched, Condition c,
                         const SamplerConfig& scfg) {
  scfg.validate(sched.steps());
  require(params.config.diffusion_steps == sched.steps(),
          "model was built for a different schedule length");
  require(params.config.param_kind == scfg.param_kind,
          "sampler prediction kind does not match the model");
  require(c.is_null() || c.id() < params.config.num_classes, "condition out of range");
}

Predictor two_stage_predictor(const DenoiserParams& params, Condition c, const SamplerConfig& scfg,
                              const ConditionTrace& trace) {
  return [&params, c, &scfg, &trace](const MotionSequence& x, int t) {
    if (t > scfg.t_star && !c.is_null()) {
      if (trace) trace(t, c);
      MotionSequence cond = denoise_forward(params, x, t, c);
      if (!scfg.classifier_free) return cond;
      return cfg_combine(cond, denoise_forward(params, x, t, Condition::null()), scfg.guidance_w);
    }
    // Stage 2, or a fully unconditional run: both CFG branches are f(x, t, null).
    if (trace) trace(t, Condition::null());
    return denoise_forward(params, x, t, Condition::null());
  };
}

}  // namespace

MotionSequence two_stage_sample(const DenoiserParams& params, const NoiseSchedule& sched,
                                Condition c, const SamplerConfig& scfg, Rng& rng,
                                const Normalization* norm, const ConditionTrace& trace) {
  check_sampling_args(params, sched, c, scfg);
  const auto& cfg = params.config;
  MotionSequence x = reverse_chain(sched, cfg.frames, cfg.dim,
                                   two_stage_predictor(params, c, scfg, trace), scfg.param_kind,
                                   scfg.clamp, rng);
  return norm ? norm->invert(x) : x;
}

std::vector<MotionSequence> sample_many(const DenoiserParams& params, const NoiseSchedule& sched,
                                        std::span<const Condition> conditions,
                                        const SamplerConfig& scfg, const Normalization* norm) {
  for (Condition c : conditions) check_sampling_args(params, sched, c, scfg);
  std::vector<MotionSequence> out(conditions.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(conditions.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      Rng rng = make_rng(scfg.seed, static_cast<std::uint64_t>(i));
      out[i] = two_stage_sample(params, sched, conditions[i], scfg, rng, norm);
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<MotionSequence> sample_many_serial(const DenoiserParams& params,
                                               const NoiseSchedule& sched,
                                               std::span<const Condition> conditions,
                                               const SamplerConfig& scfg,
                                               const Normalization* norm) {
  std::vector<MotionSequence> out;
  out.reserve(conditions.size());
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    Rng rng = make_rng(scfg.seed, i);
    out.push_back(two_stage_sample(params, sched, conditions[i], scfg, rng, norm));
  }
  return out;
}

MotionSequence edit_sample(const DenoiserParams& params, const NoiseSchedule& sched,
                           const MotionSequence& reference, const EditMask& mask, Condition c,
                           const SamplerConfig& scfg, Rng& rng, std::uint64_t chain,
                           const Normalization* norm, const ConditionTrace& trace) {
  check_sampling_args(params, sched, c, scfg);
  const auto& cfg = params.config;
  require(reference.frames() == cfg.frames && reference.dim() == cfg.dim,
          "edit reference shape does not match the model");
  require(mask.frames == cfg.frames && mask.dim == cfg.dim &&
              mask.fixed.size() == reference.size(),
          "edit mask shape does not match the model");

  const MotionSequence ref = norm ? norm->apply(reference) : reference;
  Rng edit_rng = make_rng(scfg.seed, streams::kEditOffset + chain);
  MotionSequence noise(cfg.frames, cfg.dim);
  PostStep overwrite;
  if (mask.any()) {
    overwrite = [&](MotionSequence& x, int t_prev) {
      auto xs = x.values();
      if (t_prev == 0) {
        auto rs = ref.values();
        for (std::size_t i = 0; i < xs.size(); ++i)
          if (mask.fixed[i]) xs[i] = rs[i];
        return;
      }
      fill_standard_normal(edit_rng, noise.values());
      const MotionSequence diffused = forward_diffuse(ref, t_prev, noise, sched);
      auto ds = diffused.values();
      for (std::size_t i = 0; i < xs.size(); ++i)
        if (mask.fixed[i]) xs[i] = ds[i];
    };
  }
  MotionSequence x = reverse_chain(sched, cfg.frames, cfg.dim,
                                   two_stage_predictor(params, c, scfg, trace), scfg.param_kind,
                                   scfg.clamp, rng, overwrite);
  MotionSequence out = norm ? norm->invert(x) : x;
  // De-normalizing is not an exact inverse; restore the held values verbatim.
  auto os = out.values();
  auto rs = reference.values();
  for (std::size_t i = 0; i < os.size(); ++i)
    if (mask.fixed[i]) os[i] = rs[i];
  return out;
}

}  // namespace motionmix
