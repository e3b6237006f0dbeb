#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "keyboard/combo_trial.hpp"
#include "keyboard/scenario.hpp"

namespace keyboard {

/// How scenarios are produced when none are listed explicitly.
struct GeneratorSettings {
  std::optional<int> mtds;
  int max_attempts = 100000;
  bool fix_p_max = false;
};

struct SimSpec {
  static constexpr int kVersion = 1;

  TrialConfig trial;                  // trial.seed is ignored; seeds derive from `seed`
  std::vector<ToxScenario> scenarios; // explicit list; used when non-empty
  GeneratorSettings generator;        // otherwise n_scenarios generated scenarios
  int n_scenarios = 1000;
  int trials_per_scenario = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  bool keep_records = false;

  bool explicit_scenarios() const { return !scenarios.empty(); }
  int scenario_count() const { return explicit_scenarios() ? static_cast<int>(scenarios.size()) : n_scenarios; }
  std::vector<FieldError> check() const;
  void validate() const;
};

struct TrialRecord {
  int scenario_id = 0;
  std::uint64_t seed = 0;
  std::optional<DoseCoord> selected;
  bool correct_selection = false;
  bool safety_stop = false;
  Grid<int> patients;        // patients treated per dose
  int total_patients = 0;
  int patients_in_band = 0;  // true p in [phi - eps1, phi + eps2]
  int patients_above = 0;    // true p > phi + eps2
  int patients_below = 0;    // true p < phi - eps1
  int escalations = 0;       // history entries whose decision was Escalate
  int incoherent_escalations = 0;  // ... with y/n > phi at the escalating dose

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Percentages for one scenario (trials pooled) or averaged across scenarios.
struct ScenarioMetrics {
  int scenario_id = 0;
  double pcs = 0.0;
  double pca = 0.0;
  double overdose_pct = 0.0;
  double underdose_pct = 0.0;
  double incoherent_pct = 0.0;
  double safety_stop_pct = 0.0;
  long escalations = 0;
  long incoherent_escalations = 0;
  int trials = 0;

  friend bool operator==(const ScenarioMetrics&, const ScenarioMetrics&) = default;
};

struct StudyMetrics {
  double pcs = 0.0;
  double pca = 0.0;
  double overdose_pct = 0.0;
  double underdose_pct = 0.0;
  double incoherent_escalation_pct = 0.0;
  double safety_stop_pct = 0.0;
  long total_escalations = 0;
  long incoherent_escalations = 0;
  long trials = 0;
  std::vector<ScenarioMetrics> per_scenario;

  friend bool operator==(const StudyMetrics&, const StudyMetrics&) = default;
};

struct StudyResult {
  StudyMetrics metrics;
  std::vector<ToxScenario> scenarios;
  std::vector<TrialRecord> records;  // only when spec.keep_records
};

/// Runs one trial to termination against the true toxicities in `scenario`.
/// Patient outcomes are Bernoulli draws from a stream derived from `seed`;
/// the trial's own decisions use `seed` as the trial seed.
TrialRecord simulate_trial(const TrialDesign& design, const ToxScenario& scenario, std::uint64_t seed,
                           int scenario_id = 0);
TrialRecord simulate_trial(const TrialConfig& config, const ToxScenario& scenario, std::uint64_t seed);

/// Seeds are pure functions of (spec.seed, scenario index, trial index), and
/// the reduction runs in index order, so results do not depend on threads.
/// Propagates ExhaustionError from the scenario generator.
StudyResult run_study(const SimSpec& spec);

/// Progress hook for long studies: called with (scenarios done, total).
using ProgressFn = std::function<void(int done, int total)>;
StudyResult run_study(const SimSpec& spec, const ProgressFn& progress);

/// Header: scenario_id,pcs,pca,overdose_pct,underdose_pct,incoherent_pct,safety_stop_pct
/// One row per scenario, then a final row with scenario_id "all".
std::string summary_csv(const StudyMetrics& metrics);

/// Writes summary.csv and results.json into `dir` (created if needed).
/// Throws std::runtime_error naming the path on I/O failure.
void export_results(const std::filesystem::path& dir, const SimSpec& spec, const StudyResult& result);

}  // namespace keyboard
