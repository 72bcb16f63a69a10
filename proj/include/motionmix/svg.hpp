#pragma once

#include <string>

#include "motionmix/motion.hpp"

namespace motionmix {

// Polyline of channels 0/1 in a fixed 512x512 viewport, with a tick every
// `tick_every` frames.
std::string trajectory_svg(const MotionSequence& motion, int tick_every = 4,
                           const std::string& title = "");

}  // namespace motionmix
