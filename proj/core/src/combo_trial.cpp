#include "keyboard/combo_trial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "keyboard/isotonic.hpp"

namespace keyboard {
namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kSelectionTieTolerance = 1e-10;
constexpr int kMemoLimit = 200;
constexpr std::uint64_t kStepStream = 0x5354455000000000ULL;
constexpr std::uint64_t kSelectStream = 0x53454c4543540000ULL;

void add_if_open(std::vector<DoseCoord>& out, const TrialState& state, int j, int k) {
  if (j < 1 || k < 1 || j > state.rows() || k > state.cols()) return;
  const DoseCoord d{j, k};
  if (!state.is_eliminated(d)) out.push_back(d);
}

std::size_t pick_index(double u, std::size_t n) {
  return std::min(static_cast<std::size_t>(u * static_cast<double>(n)), n - 1);
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Key1: return "key1";
    case Algorithm::Key2: return "key2";
    case Algorithm::Key3: return "key3";
    case Algorithm::Key4: return "key4";
    case Algorithm::Key5: return "key5";
  }
  return "key1";
}

Algorithm algorithm_from_string(std::string_view s) {
  if (s == "key1") return Algorithm::Key1;
  if (s == "key2") return Algorithm::Key2;
  if (s == "key3") return Algorithm::Key3;
  if (s == "key4") return Algorithm::Key4;
  if (s == "key5") return Algorithm::Key5;
  throw DomainError("unknown algorithm: " + std::string(s));
}

bool diagonal_escalation(Algorithm a) { return a == Algorithm::Key3 || a == Algorithm::Key5; }
bool diagonal_deescalation(Algorithm a) {
  return a == Algorithm::Key2 || a == Algorithm::Key3 || a == Algorithm::Key5;
}
bool randomized(Algorithm a) { return a == Algorithm::Key4 || a == Algorithm::Key5; }

std::string_view to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::Active: return "active";
    case TrialStatus::StoppedSafety: return "stopped_safety";
    case TrialStatus::CompletedMaxN: return "completed_max_n";
    case TrialStatus::Closed: return "closed";
  }
  return "active";
}

TrialStatus status_from_string(std::string_view s) {
  if (s == "active") return TrialStatus::Active;
  if (s == "stopped_safety") return TrialStatus::StoppedSafety;
  if (s == "completed_max_n") return TrialStatus::CompletedMaxN;
  if (s == "closed") return TrialStatus::Closed;
  throw DomainError("unknown trial status: " + std::string(s));
}

std::vector<FieldError> TrialConfig::check() const {
  std::vector<FieldError> errs;
  if (rows < 1) errs.push_back({"rows", "must be >= 1"});
  if (cols < 1) errs.push_back({"cols", "must be >= 1"});
  if (!(phi > 0.0 && phi < 1.0)) errs.push_back({"phi", "must lie in (0, 1)"});
  if (!(eps1 > 0.0)) errs.push_back({"eps1", "must be positive"});
  if (!(eps2 > 0.0)) errs.push_back({"eps2", "must be positive"});
  if (eps1 > 0.0 && !(phi - eps1 > 0.0)) errs.push_back({"eps1", "phi - eps1 must be > 0"});
  if (eps2 > 0.0 && !(phi + eps2 < 1.0)) errs.push_back({"eps2", "phi + eps2 must be < 1"});
  if (!(cutoff > 0.0 && cutoff < 1.0)) errs.push_back({"cutoff", "must lie in (0, 1)"});
  if (cohort_size < 1) errs.push_back({"cohort_size", "must be >= 1"});
  if (max_n < cohort_size) errs.push_back({"max_n", "must be >= cohort_size"});
  if (!(selection_prior > 0.0)) errs.push_back({"selection_prior", "must be positive"});
  return errs;
}

void TrialConfig::validate() const {
  auto errs = check();
  if (!errs.empty()) throw ValidationError(std::move(errs));
}

std::vector<DoseCoord> TrialState::eliminated_doses() const {
  std::vector<DoseCoord> out;
  for (int j = 1; j <= rows(); ++j)
    for (int k = 1; k <= cols(); ++k)
      if (is_eliminated({j, k})) out.push_back({j, k});
  return out;
}

int TrialState::total_patients() const {
  int total = 0;
  for (const auto& d : tallies) total += d.n;
  return total;
}

bool operator==(const MtdSelection& a, const MtdSelection& b) {
  if (a.selected != b.selected || a.reason != b.reason || a.draws != b.draws) return false;
  if (a.estimates.rows() != b.estimates.rows() || a.estimates.cols() != b.estimates.cols()) return false;
  for (std::size_t i = 0; i < a.estimates.size(); ++i) {
    const double x = a.estimates.values()[i];
    const double y = b.estimates.values()[i];
    if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
  }
  return true;
}

std::vector<DoseCoord> admissible_escalation(DoseCoord from, Algorithm algorithm, const TrialState& state) {
  std::vector<DoseCoord> out;
  add_if_open(out, state, from.j + 1, from.k);
  add_if_open(out, state, from.j, from.k + 1);
  if (diagonal_escalation(algorithm)) add_if_open(out, state, from.j + 1, from.k + 1);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<DoseCoord> admissible_deescalation(DoseCoord from, Algorithm algorithm, const TrialState& state) {
  std::vector<DoseCoord> out;
  add_if_open(out, state, from.j - 1, from.k);
  add_if_open(out, state, from.j, from.k - 1);
  if (diagonal_deescalation(algorithm)) add_if_open(out, state, from.j - 1, from.k - 1);
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t step_seed(std::uint64_t trial_seed, std::size_t step) {
  return derive_seed(trial_seed, {kStepStream, static_cast<std::uint64_t>(step)});
}

std::uint64_t selection_seed(std::uint64_t trial_seed) { return derive_seed(trial_seed, {kSelectStream}); }

TrialDesign::TrialDesign(TrialConfig config) : config_(config) {
  config_.validate();
  rule_ = std::make_shared<const DecisionCache>(config_.phi, config_.eps1, config_.eps2, config_.cutoff,
                                                std::min(config_.max_n, kMemoLimit));
}

TrialDesign TrialDesign::with_seed(std::uint64_t seed) const {
  TrialDesign copy = *this;
  copy.config_.seed = seed;
  return copy;
}

TrialState TrialDesign::start() const {
  TrialState s;
  s.tallies = Grid<DoseData>(config_.rows, config_.cols);
  s.eliminated = Grid<std::uint8_t>(config_.rows, config_.cols, 0);
  s.current = {1, 1};
  s.status = TrialStatus::Active;
  return s;
}

DoseCoord TrialDesign::choose(const std::vector<DoseCoord>& candidates, const TrialState& state, Rng& rng,
                              std::vector<double>* draws) const {
  if (candidates.size() == 1) return candidates.front();
  std::vector<double> probs;
  probs.reserve(candidates.size());
  for (const auto& d : candidates) probs.push_back(rule_->target_prob(state.at(d)));

  auto draw = [&]() {
    const double u = rng.uniform01();
    if (draws) draws->push_back(u);
    return u;
  };

  if (randomized(config_.algorithm)) {
    double total = 0.0;
    for (double p : probs) total += p;
    const double u = draw();
    if (!(total > 0.0)) return candidates[pick_index(u, candidates.size())];
    double cum = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      cum += probs[i];
      if (u * total < cum) return candidates[i];
    }
    return candidates.back();
  }

  const double best = *std::max_element(probs.begin(), probs.end());
  std::vector<DoseCoord> tied;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (probs[i] >= best - kTieTolerance) tied.push_back(candidates[i]);
  if (tied.size() == 1) return tied.front();
  return tied[pick_index(draw(), tied.size())];
}

DoseCoord TrialDesign::next_dose(const TrialState& state, Decision decision, Rng& rng,
                                 std::vector<double>* draws) const {
  if (decision == Decision::Retain) return state.current;
  const auto candidates = decision == Decision::Escalate
                              ? admissible_escalation(state.current, config_.algorithm, state)
                              : admissible_deescalation(state.current, config_.algorithm, state);
  if (candidates.empty()) return state.current;
  return choose(candidates, state, rng, draws);
}

TrialState TrialDesign::apply_cohort(TrialState state, int dlts, Rng& rng) const {
  if (state.status != TrialStatus::Active) {
    throw StateError("trial is not active (status " + std::string(to_string(state.status)) + ")");
  }
  if (dlts < 0 || dlts > config_.cohort_size) {
    throw DomainError("DLT count " + std::to_string(dlts) + " outside [0, " +
                      std::to_string(config_.cohort_size) + "]");
  }
  if (state.total_patients() + config_.cohort_size > config_.max_n) {
    throw StateError("cohort would exceed the maximum sample size");
  }

  const DoseCoord dose = state.current;
  DoseData& tally = state.tallies(dose.j - 1, dose.k - 1);
  tally.n += config_.cohort_size;
  tally.y += dlts;

  HistoryEntry entry;
  entry.dose = dose;
  entry.cohort_size = config_.cohort_size;
  entry.cohort_dlts = dlts;
  entry.tally = tally;

  if (rule_->eliminate(tally)) {
    entry.eliminated = true;
    for (int j = dose.j; j <= state.rows(); ++j)
      for (int k = dose.k; k <= state.cols(); ++k) state.eliminated(j - 1, k - 1) = 1;
    if (dose == DoseCoord{1, 1}) {
      state.status = TrialStatus::StoppedSafety;
      entry.next = dose;
      state.history.push_back(std::move(entry));
      return state;
    }
    // The lower neighbours of an eliminated dose are never eliminated
    // themselves, so this set is non-empty.
    entry.decision = Decision::Deescalate;
    entry.next = next_dose(state, Decision::Deescalate, rng, &entry.draws);
  } else {
    entry.decision = rule_->decision(tally);
    entry.next = next_dose(state, *entry.decision, rng, &entry.draws);
  }

  state.current = entry.next;
  state.history.push_back(std::move(entry));
  if (state.total_patients() >= config_.max_n) state.status = TrialStatus::CompletedMaxN;
  return state;
}

TrialState TrialDesign::apply_cohort(TrialState state, int dlts) const {
  Rng rng(step_seed(config_.seed, state.history.size()));
  return apply_cohort(std::move(state), dlts, rng);
}

MtdSelection TrialDesign::select_mtd(const TrialState& state, Rng& rng) const {
  if (state.status == TrialStatus::Active) throw StateError("MTD selection requires a finished trial");
  MtdSelection sel;
  sel.estimates = Grid<double>(state.rows(), state.cols(), std::numeric_limits<double>::quiet_NaN());
  if (state.status == TrialStatus::StoppedSafety) {
    sel.reason = "safety_stop";
    return sel;
  }

  const double a = config_.selection_prior;
  WeightedMatrix wm{Grid<double>(state.rows(), state.cols(), 0.0),
                    Grid<double>(state.rows(), state.cols(), 1.0),
                    Grid<std::uint8_t>(state.rows(), state.cols(), 0)};
  bool any = false;
  for (int r = 0; r < state.rows(); ++r) {
    for (int c = 0; c < state.cols(); ++c) {
      const DoseData& d = state.tallies(r, c);
      if (d.n == 0 || state.eliminated(r, c)) continue;
      wm.values(r, c) = (d.y + a) / (d.n + 2.0 * a);
      wm.weights(r, c) = d.n + 2.0 * a;
      wm.active(r, c) = 1;
      any = true;
    }
  }
  if (!any) throw StateError("no tried, non-eliminated dose to select from");

  sel.estimates = matrix_isotonic(wm);
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < state.rows(); ++r)
    for (int c = 0; c < state.cols(); ++c)
      if (wm.active(r, c)) best = std::min(best, std::fabs(sel.estimates(r, c) - config_.phi));
  std::vector<DoseCoord> tied;
  for (int r = 0; r < state.rows(); ++r)
    for (int c = 0; c < state.cols(); ++c)
      if (wm.active(r, c) && std::fabs(sel.estimates(r, c) - config_.phi) <= best + kSelectionTieTolerance)
        tied.push_back({r + 1, c + 1});
  if (tied.size() == 1) {
    sel.selected = tied.front();
  } else {
    const double u = rng.uniform01();
    sel.draws.push_back(u);
    sel.selected = tied[pick_index(u, tied.size())];
  }
  sel.reason = "selected";
  return sel;
}

MtdSelection TrialDesign::select_mtd(const TrialState& state) const {
  Rng rng(selection_seed(config_.seed));
  return select_mtd(state, rng);
}

TrialState TrialDesign::replay(const std::vector<int>& cohort_dlts) const {
  TrialState s = start();
  for (int dlts : cohort_dlts) s = apply_cohort(std::move(s), dlts);
  return s;
}

bool TrialDesign::verify(const TrialState& state) const {
  if (state.rows() != config_.rows || state.cols() != config_.cols) return false;
  std::vector<int> outcomes;
  outcomes.reserve(state.history.size());
  for (const auto& h : state.history) outcomes.push_back(h.cohort_dlts);
  try {
    TrialState rebuilt = replay(outcomes);
    if (state.status == TrialStatus::Closed && rebuilt.status == TrialStatus::Active) {
      rebuilt = close(std::move(rebuilt));
    }
    return rebuilt == state;
  } catch (const std::exception&) {
    return false;
  }
}

TrialState TrialDesign::close(TrialState state) const {
  if (state.status != TrialStatus::Active) throw StateError("only an active trial can be closed");
  if (state.total_patients() == 0) throw StateError("cannot close a trial before any cohort is treated");
  state.status = TrialStatus::Closed;
  return state;
}

}  // namespace keyboard
