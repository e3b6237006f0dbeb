#pragma once

#include <compare>
#include <string>

namespace keyboard {

/// Dose combination (j, k): level j of agent A, level k of agent B, both 1-based.
struct DoseCoord {
  int j = 1;
  int k = 1;

  friend auto operator<=>(const DoseCoord&, const DoseCoord&) = default;
  std::string str() const { return "(" + std::to_string(j) + "," + std::to_string(k) + ")"; }
};

/// Closed acceptability band [phi - eps1, phi + eps2], with 1e-12 slack so
/// decimal inputs such as 0.2 + 0.03 classify 0.23 as inside.
inline bool in_target_band(double p, double phi, double eps1, double eps2) {
  constexpr double slack = 1e-12;
  return p >= phi - eps1 - slack && p <= phi + eps2 + slack;
}

}  // namespace keyboard
