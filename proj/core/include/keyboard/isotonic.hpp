#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "keyboard/grid.hpp"

namespace keyboard {

/// Input to the matrix isotonic fit. Only cells with active != 0 take part;
/// their weights must be positive.
struct WeightedMatrix {
  Grid<double> values;
  Grid<double> weights;
  Grid<std::uint8_t> active;

  /// Unit weights, every cell active.
  static WeightedMatrix uniform(const Grid<double>& values);
  void validate() const;
};

struct IsotonicOptions {
  double tolerance = 1e-10;  // max-norm change over one full Dykstra cycle
  int max_cycles = 10000;
};

/// Weighted pool-adjacent-violators fit, nondecreasing, in place.
void pava(std::span<double> values, std::span<const double> weights);

/// Weighted least-squares projection onto matrices that are nondecreasing
/// along rows and columns, restricted to the active cells (the order between
/// two active cells is the matrix partial order, even when the cells linking
/// them are inactive). Cyclic projections with Dykstra's correction onto the
/// row cone, the column cone and any leftover pairwise constraints.
///
/// Inactive cells come back as NaN. Throws ConvergenceError when the cycle cap
/// is hit before the change drops below tolerance.
Grid<double> matrix_isotonic(const WeightedMatrix& input, const IsotonicOptions& options = {});

}  // namespace keyboard
