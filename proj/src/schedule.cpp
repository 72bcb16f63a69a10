#include "motionmix/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "motionmix/error.hpp"

namespace motionmix {

std::string to_string(ParamKind kind) { return kind == ParamKind::PredictX0 ? "x0" : "eps"; }

ParamKind parse_param_kind(const std::string& s) {
  if (s == "x0") return ParamKind::PredictX0;
  if (s == "eps") return ParamKind::PredictEps;
  throw ConfigError("unknown prediction kind '" + s + "' (expected x0 or eps)");
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  require(steps >= 2, "schedule needs at least 2 steps");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
          "betas must satisfy 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.betas_.resize(steps);
  s.alphas_.resize(steps);
  s.alpha_bars_.resize(steps);
  double running = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double frac = static_cast<double>(i) / (steps - 1);
    const double beta = i == steps - 1 ? beta_end : beta_start + (beta_end - beta_start) * frac;
    s.betas_[i] = beta;
    s.alphas_[i] = 1.0 - beta;
    running *= s.alphas_[i];
    s.alpha_bars_[i] = running;
  }
  return s;
}

NoiseSchedule NoiseSchedule::scaled_linear(int steps) {
  require(steps >= 2, "schedule needs at least 2 steps");
  const double scale = 1000.0 / steps;
  const double end = 0.02 * scale;
  require(end < 1.0, "scaled linear schedule needs at least 21 steps");
  return linear(steps, 1e-4 * scale, end);
}

void NoiseSchedule::check_timestep(int t) const {
  if (t < 1 || t > steps()) {
    throw ConfigError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(steps()) +
                      "]");
  }
}

double NoiseSchedule::posterior_variance(int t) const {
  return beta(t) * (1.0 - alpha_bar_prev(t)) / (1.0 - alpha_bar(t));
}

double NoiseSchedule::posterior_coef_x0(int t) const {
  return std::sqrt(alpha_bar_prev(t)) * beta(t) / (1.0 - alpha_bar(t));
}

double NoiseSchedule::posterior_coef_xt(int t) const {
  return std::sqrt(alpha(t)) * (1.0 - alpha_bar_prev(t)) / (1.0 - alpha_bar(t));
}

void forward_diffuse_into(std::span<double> out, std::span<const double> x0, int t,
                          std::span<const double> eps, const NoiseSchedule& sched) {
  sched.check_timestep(t);
  require(x0.size() == eps.size() && out.size() == x0.size(), "forward_diffuse: shape mismatch");
  const double a = std::sqrt(sched.alpha_bar(t));
  const double b = std::sqrt(1.0 - sched.alpha_bar(t));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
}

MotionSequence forward_diffuse(const MotionSequence& x0, int t, const MotionSequence& eps,
                               const NoiseSchedule& sched) {
  require_same_shape(x0, eps, "forward_diffuse");
  MotionSequence out(x0.frames(), x0.dim());
  forward_diffuse_into(out.values(), x0.values(), t, eps.values(), sched);
  return out;
}

MotionSequence pred_to_x0(const MotionSequence& x_t, const MotionSequence& pred, ParamKind kind,
                          int t, const NoiseSchedule& sched) {
  require_same_shape(x_t, pred, "pred_to_x0");
  sched.check_timestep(t);
  if (kind == ParamKind::PredictX0) return pred;
  const double ab = sched.alpha_bar(t);
  const double inv_a = 1.0 / std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  MotionSequence out(x_t.frames(), x_t.dim());
  auto o = out.values();
  auto x = x_t.values();
  auto p = pred.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (x[i] - b * p[i]) * inv_a;
  return out;
}

MotionSequence reverse_step(const MotionSequence& x_t, const MotionSequence& pred, ParamKind kind,
                            int t, const NoiseSchedule& sched, const MotionSequence& noise,
                            std::optional<double> clamp) {
  sched.check_timestep(t);
  require_same_shape(x_t, pred, "reverse_step");
  MotionSequence x0 = pred_to_x0(x_t, pred, kind, t, sched);
  if (clamp) {
    for (double& v : x0.values()) v = std::clamp(v, -*clamp, *clamp);
  }
  const double cx0 = sched.posterior_coef_x0(t);
  const double cxt = sched.posterior_coef_xt(t);
  MotionSequence out(x_t.frames(), x_t.dim());
  auto o = out.values();
  auto xs = x_t.values();
  auto x0s = x0.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = cx0 * x0s[i] + cxt * xs[i];
  if (t > 1) {
    require_same_shape(x_t, noise, "reverse_step noise");
    const double sigma = std::sqrt(sched.posterior_variance(t));
    auto n = noise.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += sigma * n[i];
  }
  return out;
}

}  // namespace motionmix
