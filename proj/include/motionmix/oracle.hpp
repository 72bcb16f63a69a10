#pragma once

#include <vector>

#include <Eigen/Core>

#include "motionmix/rng.hpp"
#include "motionmix/schedule.hpp"

namespace motionmix {

// Isotropic Gaussian data distribution N(mu, sigma^2 I).
struct GaussianWorld {
  std::vector<double> mu;
  double sigma = 1.0;

  int dim() const { return static_cast<int>(mu.size()); }
  void validate() const;
};

// E[x0 | x_t] = ((1 - ab) mu + sqrt(ab) sigma^2 x_t) / ((1 - ab) + ab sigma^2)
std::vector<double> gaussian_optimal_x0(std::span<const double> x_t, int t,
                                        const NoiseSchedule& sched, const GaussianWorld& world);

// n independent reverse chains driven by the closed-form predictor, no clamp.
// Chain i draws from make_rng(base, i) with base taken from `rng`. Rows are
// samples.
Eigen::MatrixXd oracle_sample(const NoiseSchedule& sched, const GaussianWorld& world, int n,
                              Rng& rng);

}  // namespace motionmix
