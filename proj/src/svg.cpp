#include "motionmix/svg.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "motionmix/error.hpp"

namespace motionmix {

std::string trajectory_svg(const MotionSequence& motion, int tick_every, const std::string& title) {
  require(motion.dim() >= 2, "trajectory plot needs two planar channels");
  require(tick_every >= 1, "tick spacing must be positive");
  constexpr double kSize = 512.0;
  constexpr double kMargin = 32.0;

  double lo_x = motion(0, 0), hi_x = lo_x, lo_y = motion(0, 1), hi_y = lo_y;
  for (int f = 0; f < motion.frames(); ++f) {
    lo_x = std::min(lo_x, motion(f, 0));
    hi_x = std::max(hi_x, motion(f, 0));
    lo_y = std::min(lo_y, motion(f, 1));
    hi_y = std::max(hi_y, motion(f, 1));
  }
  // Equal scale on both axes, centred.
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
  const double scale = (kSize - 2 * kMargin) / span;
  const double cx = 0.5 * (lo_x + hi_x);
  const double cy = 0.5 * (lo_y + hi_y);
  auto px = [&](double x) { return kSize / 2 + (x - cx) * scale; };
  auto py = [&](double y) { return kSize / 2 - (y - cy) * scale; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"512\" height=\"512\" viewBox=\"0 0 512 512\">\n"
      "<rect width=\"512\" height=\"512\" fill=\"white\"/>\n");
  if (!title.empty()) {
    out += fmt::format("<text x=\"8\" y=\"18\" font-family=\"monospace\" font-size=\"14\">{}</text>\n", title);
  }
  out += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (int f = 0; f < motion.frames(); ++f) {
    out += fmt::format("{}{:.2f},{:.2f}", f ? " " : "", px(motion(f, 0)), py(motion(f, 1)));
  }
  out += "\"/>\n";
  for (int f = 0; f < motion.frames(); f += tick_every) {
    out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(motion(f, 0)),
                       py(motion(f, 1)), f == 0 ? "#2ca02c" : "#d62728");
  }
  out += "</svg>\n";
  return out;
}

}  // namespace motionmix
