#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motionmix/motion.hpp"

namespace motionmix {

enum class ParamKind { PredictX0, PredictEps };

std::string to_string(ParamKind kind);
ParamKind parse_param_kind(const std::string& s);  // "x0" | "eps"

// Discrete-time DDPM constants. All accessors take the 1-based timestep t in
// [1, T]; alpha_bar_prev(1) == 1.
class NoiseSchedule {
 public:
  static NoiseSchedule linear(int steps, double beta_start, double beta_end);
  // The DDPM linear schedule rescaled to `steps`: betas run from
  // 1e-4 * 1000/steps to 0.02 * 1000/steps, which is the original schedule at
  // 1000 steps and keeps alpha_bar(T) small for short chains.
  static NoiseSchedule scaled_linear(int steps);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta_start() const { return betas_.front(); }
  double beta_end() const { return betas_.back(); }

  double beta(int t) const { return betas_[slot(t)]; }
  double alpha(int t) const { return alphas_[slot(t)]; }
  double alpha_bar(int t) const { return alpha_bars_[slot(t)]; }
  double alpha_bar_prev(int t) const { return t == 1 ? 1.0 : alpha_bars_[slot(t) - 1]; }
  // beta_tilde_t = beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)
  double posterior_variance(int t) const;
  double posterior_coef_x0(int t) const;
  double posterior_coef_xt(int t) const;

  std::span<const double> betas() const { return betas_; }
  std::span<const double> alpha_bars() const { return alpha_bars_; }

  void check_timestep(int t) const;

  // Terminal smallness (alpha_bar(T) < 1e-2) is reported separately because a
  // valid schedule may still be too short to reach pure noise.
  bool terminal_is_small() const { return alpha_bars_.back() < 1e-2; }

 private:
  NoiseSchedule() = default;
  std::size_t slot(int t) const { return static_cast<std::size_t>(t - 1); }

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

// x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps
MotionSequence forward_diffuse(const MotionSequence& x0, int t, const MotionSequence& eps,
                               const NoiseSchedule& sched);
void forward_diffuse_into(std::span<double> out, std::span<const double> x0, int t,
                          std::span<const double> eps, const NoiseSchedule& sched);

MotionSequence pred_to_x0(const MotionSequence& x_t, const MotionSequence& pred, ParamKind kind,
                          int t, const NoiseSchedule& sched);

// One ancestral step x_t -> x_{t-1}. `clamp` bounds the recovered x0
// symmetrically; nullopt disables it. The noise is ignored at t == 1.
MotionSequence reverse_step(const MotionSequence& x_t, const MotionSequence& pred, ParamKind kind,
                            int t, const NoiseSchedule& sched, const MotionSequence& noise,
                            std::optional<double> clamp = std::nullopt);

}  // namespace motionmix
