#include "keyboard/scenario.hpp"

#include <cmath>
#include <string>

namespace keyboard {

void GeneratorConfig::validate() const {
  if (rows < 1 || cols < 1) throw DomainError("generator: rows and cols must be >= 1");
  if (!(phi > 0.0 && phi < 1.0)) throw DomainError("generator: phi must lie in (0, 1)");
  if (eps1 < 0.0 || eps2 < 0.0) throw DomainError("generator: eps1 and eps2 must be >= 0");
  if (target_mtd_count && *target_mtd_count < 1) throw DomainError("generator: target MTD count must be >= 1");
  if (max_attempts < 1) throw DomainError("generator: max_attempts must be >= 1");
}

double ScriptedDraws::next() {
  if (pos_ >= values_.size()) throw ExhaustionError("scripted draws exhausted");
  return values_[pos_++];
}

std::uint64_t ScriptedDraws::cell(std::uint64_t n) {
  const double v = next();
  if (v < 0.0 || v >= static_cast<double>(n)) throw DomainError("scripted cell index out of range");
  return static_cast<std::uint64_t>(v);
}

double ScriptedDraws::uniform(double lo, double hi) {
  const double v = next();
  if (v < lo || v > hi) {
    throw DomainError("scripted draw " + std::to_string(v) + " outside (" + std::to_string(lo) +
                      ", " + std::to_string(hi) + ")");
  }
  return v;
}

double ScriptedDraws::p_max(double) { return next(); }

double clamp_p_max(double p_max, double phi) {
  const double floor = std::min(phi + 0.05, 0.5 * (phi + 1.0));
  return std::clamp(p_max, floor, 1.0 - 1e-9);
}

ToxScenario generate_scenario(int rows, int cols, double phi, Rng& rng, bool fix_p_max) {
  RngDraws draws(rng, fix_p_max);
  return generate_scenario(rows, cols, phi, draws);
}

int count_mtds(const ToxScenario& scenario, double phi, double eps1, double eps2) {
  int count = 0;
  for (double p : scenario.p) {
    if (in_target_band(p, phi, eps1, eps2)) ++count;
  }
  return count;
}

ToxScenario generate_with_mtd_count(const GeneratorConfig& config, Rng& rng) {
  config.validate();
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    ToxScenario sc = generate_scenario(config.rows, config.cols, config.phi, rng, config.fix_p_max);
    if (!config.target_mtd_count ||
        count_mtds(sc, config.phi, config.eps1, config.eps2) == *config.target_mtd_count) {
      return sc;
    }
  }
  throw ExhaustionError("no scenario with " + std::to_string(config.target_mtd_count.value_or(0)) +
                        " MTDs after " + std::to_string(config.max_attempts) + " attempts");
}

bool is_valid_scenario(const ToxScenario& sc) {
  const auto& p = sc.p;
  for (int r = 0; r < p.rows(); ++r) {
    for (int c = 0; c < p.cols(); ++c) {
      const double v = p(r, c);
      if (!(v > 0.0 && v < 1.0)) return false;
      if (c + 1 < p.cols() && v > p(r, c + 1)) return false;
      if (r + 1 < p.rows() && v > p(r + 1, c)) return false;
    }
  }
  const auto [j, k] = sc.mtd_location;
  if (!p.contains(j - 1, k - 1)) return false;
  if (p(j - 1, k - 1) != sc.phi) return false;
  int equal = 0;
  for (double v : p) equal += (v == sc.phi);
  return equal == 1;
}

ToxScenario scenario_from_matrix(const std::vector<std::vector<double>>& rows, double phi) {
  if (rows.empty() || rows.front().empty()) throw DomainError("scenario matrix is empty");
  const int nr = static_cast<int>(rows.size());
  const int nc = static_cast<int>(rows.front().size());
  ToxScenario sc;
  sc.phi = phi;
  sc.p = Grid<double>(nr, nc);
  double best = 2.0;
  for (int r = 0; r < nr; ++r) {
    if (static_cast<int>(rows[r].size()) != nc) throw DomainError("scenario matrix is ragged");
    for (int c = 0; c < nc; ++c) {
      const double v = rows[r][c];
      if (!(v > 0.0 && v < 1.0)) throw DomainError("scenario probabilities must lie in (0, 1)");
      sc.p(r, c) = v;
      if (std::fabs(v - phi) < best) {
        best = std::fabs(v - phi);
        sc.mtd_location = {r + 1, c + 1};
      }
    }
  }
  sc.p_max = *std::max_element(sc.p.begin(), sc.p.end());
  return sc;
}

}  // namespace keyboard
