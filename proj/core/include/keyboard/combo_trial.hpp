#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "keyboard/beta_math.hpp"
#include "keyboard/decision_cache.hpp"
#include "keyboard/dose.hpp"
#include "keyboard/errors.hpp"
#include "keyboard/grid.hpp"
#include "keyboard/keyboard.hpp"
#include "keyboard/rng.hpp"

namespace keyboard {

/// Dose-transition variants for two-agent trials.
///   key1: escalate within {(j+1,k),(j,k+1)}, de-escalate within {(j-1,k),(j,k-1)}
///   key2: as key1, but de-escalation may also move diagonally to (j-1,k-1)
///   key3: both directions may move diagonally
///   key4: key1 sets, choice randomised in proportion to target-key probability
///   key5: key3 sets, randomised
enum class Algorithm { Key1, Key2, Key3, Key4, Key5 };

std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view s);
bool diagonal_escalation(Algorithm a);
bool diagonal_deescalation(Algorithm a);
bool randomized(Algorithm a);

enum class TrialStatus {
  Active,
  StoppedSafety,   // lowest combination eliminated
  CompletedMaxN,   // sample size exhausted
  Closed,          // closed early by the investigator (forced finalisation)
};

std::string_view to_string(TrialStatus s);
TrialStatus status_from_string(std::string_view s);

struct TrialConfig {
  int rows = 1;  // J, levels of agent A
  int cols = 1;  // K, levels of agent B
  double phi = 0.3;
  double eps1 = 0.05;
  double eps2 = 0.05;
  double cutoff = 0.95;  // elimination when Pr(p > phi | data) >= cutoff
  int max_n = 48;
  int cohort_size = 1;
  Algorithm algorithm = Algorithm::Key1;
  std::uint64_t seed = 0;
  /// Beta(a, a) prior used only for the final MTD estimates.
  double selection_prior = 0.05;

  std::vector<FieldError> check() const;
  /// Throws ValidationError listing every problem found by check().
  void validate() const;
  friend bool operator==(const TrialConfig&, const TrialConfig&) = default;
};

struct HistoryEntry {
  DoseCoord dose;            // dose the cohort was treated at
  int cohort_size = 0;
  int cohort_dlts = 0;
  DoseData tally;            // cumulative data at `dose` after this cohort
  std::optional<Decision> decision;  // empty when the trial stopped for safety
  bool eliminated = false;   // `dose` (and everything above it) removed this step
  DoseCoord next;
  std::vector<double> draws; // uniform draws consumed choosing `next`

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct TrialState {
  Grid<DoseData> tallies;
  DoseCoord current{1, 1};
  Grid<std::uint8_t> eliminated;
  TrialStatus status = TrialStatus::Active;
  std::vector<HistoryEntry> history;

  int rows() const { return tallies.rows(); }
  int cols() const { return tallies.cols(); }
  const DoseData& at(DoseCoord d) const { return tallies(d.j - 1, d.k - 1); }
  bool is_eliminated(DoseCoord d) const { return eliminated(d.j - 1, d.k - 1) != 0; }
  std::vector<DoseCoord> eliminated_doses() const;
  int total_patients() const;

  friend bool operator==(const TrialState&, const TrialState&) = default;
};

struct MtdSelection {
  std::optional<DoseCoord> selected;
  Grid<double> estimates;    // isotonic estimates, NaN outside the candidate set
  std::string reason;        // "selected" or "safety_stop"
  std::vector<double> draws; // tie-break draws

  friend bool operator==(const MtdSelection& a, const MtdSelection& b);
};

/// Admissible moves from `from`, clipped to the matrix and excluding eliminated doses.
std::vector<DoseCoord> admissible_escalation(DoseCoord from, Algorithm algorithm, const TrialState& state);
std::vector<DoseCoord> admissible_deescalation(DoseCoord from, Algorithm algorithm, const TrialState& state);

/// Seed of the RNG stream used for cohort number `step` (0-based) of a trial.
std::uint64_t step_seed(std::uint64_t trial_seed, std::size_t step);
/// Seed of the RNG stream used by the final MTD selection.
std::uint64_t selection_seed(std::uint64_t trial_seed);

/// A configured combination-trial design. Transitions are pure functions of
/// (state, input, rng); the design itself is immutable and shareable.
class TrialDesign {
 public:
  explicit TrialDesign(TrialConfig config);

  const TrialConfig& config() const { return config_; }
  /// Same design with another trial seed; shares the memoised rule.
  TrialDesign with_seed(std::uint64_t seed) const;
  const DecisionCache& rule() const { return *rule_; }

  /// Empty tallies, current dose (1,1), Active.
  TrialState start() const;

  /// Chooses the next dose after `decision` at the current dose. Retain keeps
  /// the current dose; otherwise the admissible dose with the largest
  /// target-key probability (ties uniformly at random) for key1-key3, or a
  /// draw proportional to that probability for key4/key5. An empty admissible
  /// set keeps the current dose. Uniform draws are appended to `draws`.
  DoseCoord next_dose(const TrialState& state, Decision decision, Rng& rng,
                      std::vector<double>* draws = nullptr) const;

  /// Records a cohort with `dlts` toxicities at the current dose, applies the
  /// elimination and early-stopping rules and moves to the next dose.
  /// Throws StateError when the trial is not Active or the cohort would exceed
  /// max_n, DomainError when dlts is outside [0, cohort_size].
  TrialState apply_cohort(TrialState state, int dlts, Rng& rng) const;

  /// apply_cohort with the trial's own stream for this step (step_seed).
  TrialState apply_cohort(TrialState state, int dlts) const;

  /// Final recommendation: isotonic estimates over tried, non-eliminated
  /// doses, closest to phi, ties uniformly at random. Requires a terminal status.
  MtdSelection select_mtd(const TrialState& state, Rng& rng) const;
  MtdSelection select_mtd(const TrialState& state) const;

  /// Rebuilds a state from cohort outcomes alone, using the trial's streams.
  TrialState replay(const std::vector<int>& cohort_dlts) const;

  /// True when replaying the outcomes recorded in `state.history` reproduces
  /// `state` exactly (tallies, moves, draws, eliminations and status).
  bool verify(const TrialState& state) const;

  /// Ends an Active trial early (status Closed).
  TrialState close(TrialState state) const;

 private:
  DoseCoord choose(const std::vector<DoseCoord>& candidates, const TrialState& state, Rng& rng,
                   std::vector<double>* draws) const;

  TrialConfig config_;
  std::shared_ptr<const DecisionCache> rule_;
};

}  // namespace keyboard
