#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace motionmix {

// A frames x dim array of pose vectors stored row-major (frame-major), so the
// flat view is the network input layout.
class MotionSequence {
 public:
  MotionSequence() = default;
  MotionSequence(int frames, int dim);
  MotionSequence(int frames, int dim, std::vector<double> values);

  int frames() const { return frames_; }
  int dim() const { return dim_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(int frame, int channel) { return values_[index(frame, channel)]; }
  double operator()(int frame, int channel) const { return values_[index(frame, channel)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const MotionSequence& other) const {
    return frames_ == other.frames_ && dim_ == other.dim_;
  }
  bool all_finite() const;

  bool operator==(const MotionSequence&) const = default;

 private:
  std::size_t index(int frame, int channel) const {
    return static_cast<std::size_t>(frame) * dim_ + channel;
  }

  int frames_ = 0;
  int dim_ = 0;
  std::vector<double> values_;
};

// Throws ConfigError naming `what` when the shapes differ.
void require_same_shape(const MotionSequence& a, const MotionSequence& b, std::string_view what);

double rms(const MotionSequence& m);

}  // namespace motionmix
