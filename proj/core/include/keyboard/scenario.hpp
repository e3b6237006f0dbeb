#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <vector>

#include "keyboard/dose.hpp"
#include "keyboard/errors.hpp"
#include "keyboard/grid.hpp"
#include "keyboard/rng.hpp"

namespace keyboard {

/// True toxicity probabilities of a J x K combination, nondecreasing along
/// rows and columns, with exactly one cell (mtd_location) equal to phi.
struct ToxScenario {
  Grid<double> p;
  DoseCoord mtd_location;
  double phi = 0.0;
  double p_max = 0.0;

  int rows() const { return p.rows(); }
  int cols() const { return p.cols(); }
  double at(DoseCoord d) const { return p(d.j - 1, d.k - 1); }
};

struct GeneratorConfig {
  int rows = 1;
  int cols = 1;
  double phi = 0.3;
  double eps1 = 0.05;
  double eps2 = 0.05;
  std::optional<int> target_mtd_count;
  int max_attempts = 100000;
  std::uint64_t seed = 0;
  bool fix_p_max = false;  // use the Beta mean instead of drawing p_max

  void validate() const;
};

/// Where the generator's randomness comes from. Draws are consumed in this
/// fixed order: cell(J*K) for the phi location, p_max(mu), the path cells
/// below phi, the path cells above phi, the upper block (row j-1 up to row 1,
/// left to right) and finally the lower block (row j+1 down to row J, right
/// to left).
template <typename D>
concept ScenarioDrawSource = requires(D d, std::uint64_t n, double lo, double hi, double mu) {
  { d.cell(n) } -> std::convertible_to<std::uint64_t>;
  { d.uniform(lo, hi) } -> std::convertible_to<double>;
  { d.p_max(mu) } -> std::convertible_to<double>;
};

/// Production draws: p_max ~ Beta(mu, 1 - mu) unless fixed at mu.
class RngDraws {
 public:
  explicit RngDraws(Rng& rng, bool fix_p_max = false) : rng_(rng), fix_p_max_(fix_p_max) {}
  std::uint64_t cell(std::uint64_t n) { return rng_.below(n); }
  double uniform(double lo, double hi) { return rng_.uniform(lo, hi); }
  double p_max(double mu) { return fix_p_max_ ? mu : rng_.beta(mu, 1.0 - mu); }

 private:
  Rng& rng_;
  bool fix_p_max_;
};

/// Replays a recorded list of draw results (cell index, p_max, then cell values).
class ScriptedDraws {
 public:
  explicit ScriptedDraws(std::vector<double> values) : values_(std::move(values)) {}
  std::uint64_t cell(std::uint64_t n);
  double uniform(double lo, double hi);
  double p_max(double mu);
  std::size_t consumed() const { return pos_; }

 private:
  double next();
  std::vector<double> values_;
  std::size_t pos_ = 0;
};

/// Mean of the p_max law for a J x K matrix: 1 - exp(-J K / 8).
inline double p_max_mean(int rows, int cols) { return 1.0 - std::exp(-(rows * cols) / 8.0); }

/// p_max is kept in [phi + 0.05, 1 - 1e-9] so Unif(phi, p_max) is non-degenerate and < 1.
double clamp_p_max(double p_max, double phi);

template <ScenarioDrawSource D>
ToxScenario generate_scenario(int rows, int cols, double phi, D& draws) {
  if (rows < 1 || cols < 1) throw DomainError("scenario needs at least one row and column");
  if (!(phi > 0.0 && phi < 1.0)) throw DomainError("phi must lie in (0, 1)");

  ToxScenario sc;
  sc.phi = phi;
  sc.p = Grid<double>(rows, cols, 0.0);

  const auto idx = static_cast<int>(draws.cell(static_cast<std::uint64_t>(rows * cols)));
  const int j = idx / cols;
  const int k = idx % cols;
  sc.mtd_location = {j + 1, k + 1};
  sc.p_max = clamp_p_max(draws.p_max(p_max_mean(rows, cols)), phi);

  auto bounded = [&draws](double lo, double hi) { return std::clamp(draws.uniform(lo, hi), lo, hi); };

  // Pivotal path: down column 1 to row j, along row j, down column K.
  std::vector<std::pair<int, int>> path;
  for (int r = 0; r <= j; ++r) path.emplace_back(r, 0);
  for (int c = 1; c < cols; ++c) path.emplace_back(j, c);
  for (int r = j + 1; r < rows; ++r) path.emplace_back(r, cols - 1);
  const std::size_t pivot = static_cast<std::size_t>(j + k);

  std::vector<double> below(pivot);
  for (auto& v : below) v = bounded(0.0, phi);
  std::sort(below.begin(), below.end());
  std::vector<double> above(path.size() - pivot - 1);
  for (auto& v : above) v = bounded(phi, sc.p_max);
  std::sort(above.begin(), above.end());

  for (std::size_t i = 0; i < pivot; ++i) sc.p(path[i].first, path[i].second) = below[i];
  sc.p(j, k) = phi;
  for (std::size_t i = 0; i < above.size(); ++i) {
    sc.p(path[pivot + 1 + i].first, path[pivot + 1 + i].second) = above[i];
  }

  // Upper block: bounded by the left neighbour and the cell below.
  for (int r = j - 1; r >= 0; --r) {
    for (int c = 1; c < cols; ++c) sc.p(r, c) = bounded(sc.p(r, c - 1), sc.p(r + 1, c));
  }
  // Lower block: bounded by the cell above and the right neighbour.
  for (int r = j + 1; r < rows; ++r) {
    for (int c = cols - 2; c >= 0; --c) sc.p(r, c) = bounded(sc.p(r - 1, c), sc.p(r, c + 1));
  }
  return sc;
}

/// Convenience overload drawing from `rng`.
ToxScenario generate_scenario(int rows, int cols, double phi, Rng& rng, bool fix_p_max = false);

/// Number of cells with p in [phi - eps1, phi + eps2].
int count_mtds(const ToxScenario& scenario, double phi, double eps1, double eps2);

/// Rejection-samples generate_scenario until count_mtds hits the target
/// (or returns the first draw when no target is set).
/// Throws ExhaustionError after config.max_attempts failures.
ToxScenario generate_with_mtd_count(const GeneratorConfig& config, Rng& rng);

/// Checks the partial order (<=, no tolerance), (0,1) bounds and that the phi cell holds phi.
bool is_valid_scenario(const ToxScenario& scenario);

/// Builds a scenario from explicit probabilities (no phi-cell requirement).
ToxScenario scenario_from_matrix(const std::vector<std::vector<double>>& rows, double phi);

}  // namespace keyboard
