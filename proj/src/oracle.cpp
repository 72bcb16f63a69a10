#include "motionmix/oracle.hpp"

#include <cmath>

#include "motionmix/error.hpp"
#include "motionmix/sampling.hpp"

namespace motionmix {

void GaussianWorld::validate() const {
  require(!mu.empty(), "Gaussian world needs at least one dimension");
  require(sigma > 0.0, "Gaussian world sigma must be positive");
}

std::vector<double> gaussian_optimal_x0(std::span<const double> x_t, int t,
                                        const NoiseSchedule& sched, const GaussianWorld& world) {
  world.validate();
  sched.check_timestep(t);
  require(x_t.size() == world.mu.size(), "gaussian_optimal_x0: dimension mismatch");
  const double ab = sched.alpha_bar(t);
  const double s2 = world.sigma * world.sigma;
  const double denom = (1.0 - ab) + ab * s2;
  const double slope = std::sqrt(ab) * s2 / denom;
  const double offset = (1.0 - ab) / denom;
  std::vector<double> out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = offset * world.mu[i] + slope * x_t[i];
  return out;
}

Eigen::MatrixXd oracle_sample(const NoiseSchedule& sched, const GaussianWorld& world, int n,
                              Rng& rng) {
  world.validate();
  require(n >= 1, "oracle_sample needs n >= 1");
  const int d = world.dim();
  const std::uint64_t base = rng();
  const Predictor predict = [&](const MotionSequence& x, int t) {
    return MotionSequence(1, d, gaussian_optimal_x0(x.values(), t, sched, world));
  };
  Eigen::MatrixXd out(n, d);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    Rng chain = make_rng(base, static_cast<std::uint64_t>(i));
    const MotionSequence x =
        reverse_chain(sched, 1, d, predict, ParamKind::PredictX0, std::nullopt, chain);
    for (int j = 0; j < d; ++j) out(i, j) = x(0, j);
  }
  return out;
}

}  // namespace motionmix
