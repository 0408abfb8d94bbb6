#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gaitforge/ad/array.hpp"

namespace gf::sim {

// Piecewise height field h(x). Families: flat, slope, stairs (monotonic),
// steps (random step field), wave (sine).
struct Terrain {
  enum class Kind { kFlat, kSlope, kStairs, kSteps, kWave };

  Kind kind = Kind::kFlat;
  double slope = 0.0;          // tan(angle), slope family
  double step_height = 0.0;    // stairs/steps
  double step_run = 0.3;       // stairs horizontal run
  double amplitude = 0.0;      // wave
  double wavelength = 2.0;     // wave
  double phase = 0.0;          // wave
  double origin = 0.5;         // x where the feature starts
  std::vector<double> cells;   // steps family: per-cell heights
  double cell_size = 0.4;

  double height(double x) const {
    switch (kind) {
      case Kind::kFlat:
        return 0.0;
      case Kind::kSlope:
        return x > origin ? (x - origin) * slope : 0.0;
      case Kind::kStairs: {
        if (x <= origin) return 0.0;
        const double n = std::floor((x - origin) / step_run) + 1.0;
        return n * step_height;
      }
      case Kind::kSteps: {
        if (x <= origin || cells.empty()) return 0.0;
        const long i = static_cast<long>(std::floor((x - origin) / cell_size));
        if (i < 0) return 0.0;
        return cells[static_cast<size_t>(i) % cells.size()];
      }
      case Kind::kWave:
        if (x <= origin) return 0.0;
        return amplitude * std::sin(2.0 * M_PI * (x - origin) / wavelength + phase);
    }
    return 0.0;
  }

  // d h / d x (one-sided at discontinuities; used only for penetration rate).
  double slope_at(double x) const {
    switch (kind) {
      case Kind::kSlope:
        return x > origin ? slope : 0.0;
      case Kind::kWave:
        return x > origin
                   ? amplitude * 2.0 * M_PI / wavelength *
                         std::cos(2.0 * M_PI * (x - origin) / wavelength + phase)
                   : 0.0;
      default:
        return 0.0;
    }
  }

  std::string family_name() const {
    switch (kind) {
      case Kind::kFlat: return "flat";
      case Kind::kSlope: return "slope";
      case Kind::kStairs: return "stairs";
      case Kind::kSteps: return "steps";
      case Kind::kWave: return "wave";
    }
    return "?";
  }
};

}  // namespace gf::sim
