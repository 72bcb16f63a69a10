#include "motionmix/motion.hpp"

#include <cmath>
#include <string>

#include "motionmix/error.hpp"

namespace motionmix {

MotionSequence::MotionSequence(int frames, int dim)
    : MotionSequence(frames, dim,
                     std::vector<double>(static_cast<std::size_t>(frames > 0 ? frames : 0) *
                                         (dim > 0 ? dim : 0))) {}

MotionSequence::MotionSequence(int frames, int dim, std::vector<double> values)
    : frames_(frames), dim_(dim), values_(std::move(values)) {
  require(frames >= 1 && dim >= 1, "motion must have at least one frame and one channel");
  require(values_.size() == static_cast<std::size_t>(frames) * dim,
          "motion value count does not match frames x dim");
}

bool MotionSequence::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_same_shape(const MotionSequence& a, const MotionSequence& b, std::string_view what) {
  if (!a.same_shape(b)) {
    throw ConfigError(std::string(what) + ": shape mismatch (" + std::to_string(a.frames()) + "x" +
                      std::to_string(a.dim()) + " vs " + std::to_string(b.frames()) + "x" +
                      std::to_string(b.dim()) + ")");
  }
}

double rms(const MotionSequence& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return m.empty() ? 0.0 : std::sqrt(s / static_cast<double>(m.size()));
}

}  // namespace motionmix
