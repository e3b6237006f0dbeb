#include "keyboard/simulation.hpp"

#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "keyboard/serialization.hpp"

namespace keyboard {
namespace {

constexpr std::uint64_t kScenarioStream = 0x5343454e00000000ULL;
constexpr std::uint64_t kTrialStream = 0x545249414c000000ULL;
constexpr std::uint64_t kOutcomeStream = 0x4f5554434f4d4500ULL;

double pct(double num, double den) { return den > 0.0 ? 100.0 * num / den : 0.0; }

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct ScenarioOutcome {
  ToxScenario scenario;
  ScenarioMetrics metrics;
  std::vector<TrialRecord> records;
};

ScenarioOutcome run_scenario(const SimSpec& spec, const TrialDesign& design, int index) {
  ScenarioOutcome out;
  if (spec.explicit_scenarios()) {
    out.scenario = spec.scenarios[static_cast<std::size_t>(index)];
  } else {
    GeneratorConfig gen;
    gen.rows = spec.trial.rows;
    gen.cols = spec.trial.cols;
    gen.phi = spec.trial.phi;
    gen.eps1 = spec.trial.eps1;
    gen.eps2 = spec.trial.eps2;
    gen.target_mtd_count = spec.generator.mtds;
    gen.max_attempts = spec.generator.max_attempts;
    gen.fix_p_max = spec.generator.fix_p_max;
    Rng rng(derive_seed(spec.seed, {kScenarioStream, static_cast<std::uint64_t>(index)}));
    out.scenario = generate_with_mtd_count(gen, rng);
  }

  long correct = 0, stops = 0, patients = 0, in_band = 0, above = 0, below = 0, esc = 0, incoh = 0;
  for (int t = 0; t < spec.trials_per_scenario; ++t) {
    const auto seed = derive_seed(spec.seed, {kTrialStream, static_cast<std::uint64_t>(index),
                                              static_cast<std::uint64_t>(t)});
    TrialRecord rec = simulate_trial(design, out.scenario, seed, index);
    correct += rec.correct_selection;
    stops += rec.safety_stop;
    patients += rec.total_patients;
    in_band += rec.patients_in_band;
    above += rec.patients_above;
    below += rec.patients_below;
    esc += rec.escalations;
    incoh += rec.incoherent_escalations;
    if (spec.keep_records) out.records.push_back(std::move(rec));
  }
  const double trials = spec.trials_per_scenario;
  auto& m = out.metrics;
  m.scenario_id = index;
  m.trials = spec.trials_per_scenario;
  m.pcs = pct(static_cast<double>(correct), trials);
  m.safety_stop_pct = pct(static_cast<double>(stops), trials);
  m.pca = pct(static_cast<double>(in_band), static_cast<double>(patients));
  m.overdose_pct = pct(static_cast<double>(above), static_cast<double>(patients));
  m.underdose_pct = pct(static_cast<double>(below), static_cast<double>(patients));
  m.escalations = esc;
  m.incoherent_escalations = incoh;
  m.incoherent_pct = pct(static_cast<double>(incoh), static_cast<double>(esc));
  return out;
}

}  // namespace

std::vector<FieldError> SimSpec::check() const {
  std::vector<FieldError> errs;
  for (auto e : trial.check()) {
    e.field = "trial." + e.field;
    errs.push_back(std::move(e));
  }
  if (!explicit_scenarios() && n_scenarios < 1) errs.push_back({"n_scenarios", "must be >= 1"});
  if (trials_per_scenario < 1) errs.push_back({"trials_per_scenario", "must be >= 1"});
  if (threads < 1) errs.push_back({"threads", "must be >= 1"});
  if (generator.mtds && *generator.mtds < 1) errs.push_back({"scenarios.mtds", "must be >= 1"});
  if (generator.max_attempts < 1) errs.push_back({"scenarios.max_attempts", "must be >= 1"});
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (scenarios[i].rows() != trial.rows || scenarios[i].cols() != trial.cols) {
      errs.push_back({"scenarios[" + std::to_string(i) + "]", "dimensions do not match the trial"});
    }
  }
  return errs;
}

void SimSpec::validate() const {
  auto errs = check();
  if (!errs.empty()) throw ValidationError(std::move(errs));
}

TrialRecord simulate_trial(const TrialDesign& base, const ToxScenario& scenario, std::uint64_t seed,
                           int scenario_id) {
  const TrialConfig& cfg = base.config();
  if (scenario.rows() != cfg.rows || scenario.cols() != cfg.cols) {
    throw DomainError("scenario dimensions do not match the trial configuration");
  }
  const TrialDesign design = base.with_seed(seed);
  Rng outcomes(derive_seed(seed, {kOutcomeStream}));

  TrialState state = design.start();
  while (state.status == TrialStatus::Active) {
    const double p = scenario.at(state.current);
    int dlts = 0;
    for (int i = 0; i < cfg.cohort_size; ++i) dlts += outcomes.uniform01() < p;
    state = design.apply_cohort(std::move(state), dlts);
  }

  TrialRecord rec;
  rec.scenario_id = scenario_id;
  rec.seed = seed;
  rec.safety_stop = state.status == TrialStatus::StoppedSafety;
  rec.patients = Grid<int>(cfg.rows, cfg.cols, 0);
  for (int r = 0; r < cfg.rows; ++r) {
    for (int c = 0; c < cfg.cols; ++c) {
      const int n = state.tallies(r, c).n;
      const double p = scenario.p(r, c);
      rec.patients(r, c) = n;
      rec.total_patients += n;
      if (in_target_band(p, cfg.phi, cfg.eps1, cfg.eps2)) rec.patients_in_band += n;
      else if (p > cfg.phi) rec.patients_above += n;
      else rec.patients_below += n;
    }
  }
  for (const auto& h : state.history) {
    if (h.decision != Decision::Escalate) continue;
    ++rec.escalations;
    if (static_cast<double>(h.tally.y) > cfg.phi * h.tally.n) ++rec.incoherent_escalations;
  }
  const MtdSelection sel = design.select_mtd(state);
  rec.selected = sel.selected;
  rec.correct_selection = sel.selected && in_target_band(scenario.at(*sel.selected), cfg.phi, cfg.eps1, cfg.eps2);
  return rec;
}

TrialRecord simulate_trial(const TrialConfig& config, const ToxScenario& scenario, std::uint64_t seed) {
  return simulate_trial(TrialDesign(config), scenario, seed);
}

StudyResult run_study(const SimSpec& spec) { return run_study(spec, nullptr); }

StudyResult run_study(const SimSpec& spec, const ProgressFn& progress) {
  spec.validate();
  const TrialDesign design(spec.trial);
  const int total = spec.scenario_count();
  std::vector<ScenarioOutcome> outcomes(static_cast<std::size_t>(total));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mu;

  auto worker = [&]() {
    for (int i = next++; i < total; i = next++) {
      try {
        outcomes[static_cast<std::size_t>(i)] = run_scenario(spec, design, i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
      const int d = ++done;
      if (progress) {
        std::lock_guard lock(progress_mu);
        progress(d, total);
      }
    }
  };
  const int nthreads = std::min(spec.threads, total);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  StudyResult result;
  StudyMetrics& m = result.metrics;
  for (auto& o : outcomes) {
    m.pcs += o.metrics.pcs;
    m.pca += o.metrics.pca;
    m.overdose_pct += o.metrics.overdose_pct;
    m.underdose_pct += o.metrics.underdose_pct;
    m.incoherent_escalation_pct += o.metrics.incoherent_pct;
    m.safety_stop_pct += o.metrics.safety_stop_pct;
    m.total_escalations += o.metrics.escalations;
    m.incoherent_escalations += o.metrics.incoherent_escalations;
    m.trials += o.metrics.trials;
    m.per_scenario.push_back(o.metrics);
    result.scenarios.push_back(std::move(o.scenario));
    for (auto& r : o.records) result.records.push_back(std::move(r));
  }
  const double n = total;
  m.pcs /= n;
  m.pca /= n;
  m.overdose_pct /= n;
  m.underdose_pct /= n;
  m.incoherent_escalation_pct /= n;
  m.safety_stop_pct /= n;
  return result;
}

std::string summary_csv(const StudyMetrics& metrics) {
  std::ostringstream os;
  os << "scenario_id,pcs,pca,overdose_pct,underdose_pct,incoherent_pct,safety_stop_pct\n";
  for (const auto& s : metrics.per_scenario) {
    os << s.scenario_id << ',' << fmt(s.pcs) << ',' << fmt(s.pca) << ',' << fmt(s.overdose_pct) << ','
       << fmt(s.underdose_pct) << ',' << fmt(s.incoherent_pct) << ',' << fmt(s.safety_stop_pct) << '\n';
  }
  os << "all," << fmt(metrics.pcs) << ',' << fmt(metrics.pca) << ',' << fmt(metrics.overdose_pct) << ','
     << fmt(metrics.underdose_pct) << ',' << fmt(metrics.incoherent_escalation_pct) << ','
     << fmt(metrics.safety_stop_pct) << '\n';
  return os.str();
}

void export_results(const std::filesystem::path& dir, const SimSpec& spec, const StudyResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
  };
  write(dir / "summary.csv", summary_csv(result.metrics));
  write(dir / "results.json", study_to_json(spec, result).dump(2) + "\n");
}

}  // namespace keyboard
