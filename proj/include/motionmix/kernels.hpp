#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "motionmix/dataset.hpp"
#include "motionmix/model.hpp"

namespace motionmix {

struct BatchItem {
  MotionSequence x_t;
  int t = 1;
  Condition condition;
  MotionSequence target;
};

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grads;
};

// Fused batch kernels. The batch is split into fixed chunks of kGradChunk
// examples; chunks run in parallel under OpenMP, and the per-chunk losses and
// gradients are summed in chunk order, so results do not depend on the thread
// count.
inline constexpr int kGradChunk = 32;

MotionSequence denoise_forward(const DenoiserParams& params, const MotionSequence& x_t, int t,
                               Condition c);

// Columns of `inputs` are flattened x_t.
Eigen::MatrixXd denoise_forward_batch(const DenoiserParams& params, const Eigen::MatrixXd& inputs,
                                      std::span<const int> timesteps,
                                      std::span<const Condition> conditions);

// loss = mean over items of the per-coordinate mean squared error.
LossAndGrad loss_and_grad(const DenoiserParams& params, std::span<const BatchItem> batch);

// Straight-loop versions: single-threaded, one example at a time, no Eigen.
// Kept as the oracle for the fused kernels and as the benchmark baseline.
namespace reference {

MotionSequence denoise_forward(const DenoiserParams& params, const MotionSequence& x_t, int t,
                               Condition c);
LossAndGrad loss_and_grad(const DenoiserParams& params, std::span<const BatchItem> batch);

}  // namespace reference

}  // namespace motionmix
