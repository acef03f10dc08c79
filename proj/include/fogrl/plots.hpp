#pragma once

#include <span>
#include <string>

#include "fogrl/trainer.hpp"

namespace fogrl {

// Per-episode return polyline with a 100-episode moving-average overlay.
// Self-contained SVG; empty input yields a placeholder with a notice.
std::string learning_curve_svg(const LearningCurve& curve);

// Box plot comparing the longest prediction horizons of the two evaluation
// modes. Whiskers at min/max, box at quartiles, line at the median.
std::string horizon_boxplot_svg(std::span<const double> dependent,
                                std::span<const double> independent);

}  // namespace fogrl
