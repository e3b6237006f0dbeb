#include "keyboard/serialization.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <charconv>

namespace keyboard {
namespace {

class FieldReader {
 public:
  FieldReader(const json& doc, std::string prefix, std::vector<FieldError>& errs)
      : doc_(doc), prefix_(std::move(prefix)), errs_(errs) {}

  template <typename T>
  void required(const char* name, T& out) {
    if (!doc_.is_object() || !doc_.contains(name)) {
      errs_.push_back({prefix_ + name, "is required"});
      return;
    }
    read(name, out);
  }

  template <typename T>
  void optional(const char* name, T& out) {
    if (doc_.is_object() && doc_.contains(name) && !doc_.at(name).is_null()) read(name, out);
  }

 private:
  template <typename T>
  void read(const char* name, T& out) {
    const json& v = doc_.at(name);
    bool ok = false;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v.is_boolean();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    } else if constexpr (std::is_integral_v<T>) {
      ok = v.is_number_integer();
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = v.is_number();
    } else if constexpr (std::is_same_v<T, std::string>) {
      ok = v.is_string();
    }
    if (!ok) {
      errs_.push_back({prefix_ + name, "has the wrong type"});
      return;
    }
    out = v.get<T>();
  }

  const json& doc_;
  std::string prefix_;
  std::vector<FieldError>& errs_;
};

template <typename T, typename F>
json grid_to_json(const Grid<T>& g, F&& cell) {
  json rows = json::array();
  for (int r = 0; r < g.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < g.cols(); ++c) row.push_back(cell(g(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T, typename F>
Grid<T> grid_from_json(const json& j, F&& cell) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) throw DomainError("expected a non-empty matrix");
  const int nr = static_cast<int>(j.size());
  const int nc = static_cast<int>(j.front().size());
  Grid<T> g(nr, nc);
  for (int r = 0; r < nr; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != nc) throw DomainError("ragged matrix");
    for (int c = 0; c < nc; ++c) g(r, c) = cell(j[r][c]);
  }
  return g;
}

double nullable_double(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

json nan_as_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

void to_json(json& j, const DoseData& d) { j = json{{"n", d.n}, {"y", d.y}}; }
void from_json(const json& j, DoseData& d) {
  d.n = j.at("n").get<int>();
  d.y = j.at("y").get<int>();
  if (!d.valid()) throw DomainError("invalid dose data in document");
}

void to_json(json& j, const DoseCoord& d) { j = json::array({d.j, d.k}); }
void from_json(const json& j, DoseCoord& d) {
  if (!j.is_array() || j.size() != 2) throw DomainError("dose coordinate must be [j, k]");
  d.j = j[0].get<int>();
  d.k = j[1].get<int>();
}

void to_json(json& j, const HistoryEntry& h) {
  j = json{{"dose", h.dose},
           {"cohort_size", h.cohort_size},
           {"cohort_dlts", h.cohort_dlts},
           {"tally", h.tally},
           {"decision", h.decision ? json(std::string(to_string(*h.decision))) : json(nullptr)},
           {"eliminated", h.eliminated},
           {"next", h.next},
           {"draws", h.draws}};
}

void from_json(const json& j, HistoryEntry& h) {
  h.dose = j.at("dose").get<DoseCoord>();
  h.cohort_size = j.at("cohort_size").get<int>();
  h.cohort_dlts = j.at("cohort_dlts").get<int>();
  h.tally = j.at("tally").get<DoseData>();
  const auto& d = j.at("decision");
  h.decision = d.is_null() ? std::nullopt : std::optional(decision_from_string(d.get<std::string>()));
  h.eliminated = j.at("eliminated").get<bool>();
  h.next = j.at("next").get<DoseCoord>();
  h.draws = j.at("draws").get<std::vector<double>>();
}

void to_json(json& j, const TrialState& s) {
  j = json{{"schema_version", kTrialStateSchemaVersion},
           {"rows", s.rows()},
           {"cols", s.cols()},
           {"tallies", grid_to_json(s.tallies, [](const DoseData& d) { return json(d); })},
           {"current", s.current},
           {"eliminated", s.eliminated_doses()},
           {"status", std::string(to_string(s.status))},
           {"total_patients", s.total_patients()},
           {"history", s.history}};
}

void from_json(const json& j, TrialState& s) {
  const int version = j.at("schema_version").get<int>();
  if (version != kTrialStateSchemaVersion) {
    throw DomainError("unsupported trial state schema version " + std::to_string(version));
  }
  s.tallies = grid_from_json<DoseData>(j.at("tallies"), [](const json& v) { return v.get<DoseData>(); });
  if (s.rows() != j.at("rows").get<int>() || s.cols() != j.at("cols").get<int>()) {
    throw DomainError("trial state dimensions disagree with tallies");
  }
  s.current = j.at("current").get<DoseCoord>();
  s.eliminated = Grid<std::uint8_t>(s.rows(), s.cols(), 0);
  for (const auto& d : j.at("eliminated").get<std::vector<DoseCoord>>()) {
    if (!s.eliminated.contains(d.j - 1, d.k - 1)) throw DomainError("eliminated dose out of range");
    s.eliminated(d.j - 1, d.k - 1) = 1;
  }
  s.status = status_from_string(j.at("status").get<std::string>());
  s.history = j.at("history").get<std::vector<HistoryEntry>>();
}

void to_json(json& j, const MtdSelection& s) {
  j = json{{"selected", s.selected ? json(*s.selected) : json(nullptr)},
           {"reason", s.reason},
           {"estimates", grid_to_json(s.estimates, nan_as_null)},
           {"draws", s.draws}};
}

void from_json(const json& j, MtdSelection& s) {
  const auto& sel = j.at("selected");
  s.selected = sel.is_null() ? std::nullopt : std::optional(sel.get<DoseCoord>());
  s.reason = j.at("reason").get<std::string>();
  s.estimates = grid_from_json<double>(j.at("estimates"), nullable_double);
  s.draws = j.at("draws").get<std::vector<double>>();
}

void to_json(json& j, const TrialConfig& c) {
  j = json{{"rows", c.rows},
           {"cols", c.cols},
           {"phi", c.phi},
           {"eps1", c.eps1},
           {"eps2", c.eps2},
           {"cutoff", c.cutoff},
           {"max_n", c.max_n},
           {"cohort_size", c.cohort_size},
           {"algorithm", std::string(to_string(c.algorithm))},
           {"seed", c.seed},
           {"selection_prior", c.selection_prior}};
}

TrialConfig trial_config_from_json(const json& j) {
  std::vector<FieldError> errs;
  if (!j.is_object()) throw ValidationError(std::vector<FieldError>{{"config", "must be a JSON object"}});
  TrialConfig c;
  FieldReader r(j, "", errs);
  r.required("rows", c.rows);
  r.required("cols", c.cols);
  r.required("phi", c.phi);
  r.required("eps1", c.eps1);
  r.required("eps2", c.eps2);
  r.required("max_n", c.max_n);
  r.optional("cutoff", c.cutoff);
  r.optional("cohort_size", c.cohort_size);
  r.optional("seed", c.seed);
  r.optional("selection_prior", c.selection_prior);
  std::string algorithm = std::string(to_string(c.algorithm));
  r.optional("algorithm", algorithm);
  try {
    c.algorithm = algorithm_from_string(algorithm);
  } catch (const DomainError&) {
    errs.push_back({"algorithm", "must be one of key1..key5"});
  }
  if (errs.empty()) errs = c.check();
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return c;
}

void to_json(json& j, const DecisionTable& t) {
  json rows = json::array();
  for (int n = 1; n <= t.n_max; ++n) {
    rows.push_back({{"n", n}, {"escalate_le", t.escalate_le(n)}, {"deescalate_ge", t.deescalate_ge(n)}});
  }
  j = json{{"phi", t.phi}, {"eps1", t.eps1}, {"eps2", t.eps2}, {"n_max", t.n_max}, {"rows", rows}};
}

void to_json(json& j, const ScenarioMetrics& m) {
  j = json{{"scenario_id", m.scenario_id},       {"pcs", m.pcs},
           {"pca", m.pca},                       {"overdose_pct", m.overdose_pct},
           {"underdose_pct", m.underdose_pct},   {"incoherent_pct", m.incoherent_pct},
           {"safety_stop_pct", m.safety_stop_pct}, {"escalations", m.escalations},
           {"incoherent_escalations", m.incoherent_escalations}, {"trials", m.trials}};
}

void from_json(const json& j, ScenarioMetrics& m) {
  j.at("scenario_id").get_to(m.scenario_id);
  j.at("pcs").get_to(m.pcs);
  j.at("pca").get_to(m.pca);
  j.at("overdose_pct").get_to(m.overdose_pct);
  j.at("underdose_pct").get_to(m.underdose_pct);
  j.at("incoherent_pct").get_to(m.incoherent_pct);
  j.at("safety_stop_pct").get_to(m.safety_stop_pct);
  j.at("escalations").get_to(m.escalations);
  j.at("incoherent_escalations").get_to(m.incoherent_escalations);
  j.at("trials").get_to(m.trials);
}

void to_json(json& j, const StudyMetrics& m) {
  j = json{{"pcs", m.pcs},
           {"pca", m.pca},
           {"overdose_pct", m.overdose_pct},
           {"underdose_pct", m.underdose_pct},
           {"incoherent_escalation_pct", m.incoherent_escalation_pct},
           {"safety_stop_pct", m.safety_stop_pct},
           {"total_escalations", m.total_escalations},
           {"incoherent_escalations", m.incoherent_escalations},
           {"trials", m.trials},
           {"per_scenario", m.per_scenario}};
}

void from_json(const json& j, StudyMetrics& m) {
  j.at("pcs").get_to(m.pcs);
  j.at("pca").get_to(m.pca);
  j.at("overdose_pct").get_to(m.overdose_pct);
  j.at("underdose_pct").get_to(m.underdose_pct);
  j.at("incoherent_escalation_pct").get_to(m.incoherent_escalation_pct);
  j.at("safety_stop_pct").get_to(m.safety_stop_pct);
  j.at("total_escalations").get_to(m.total_escalations);
  j.at("incoherent_escalations").get_to(m.incoherent_escalations);
  j.at("trials").get_to(m.trials);
  j.at("per_scenario").get_to(m.per_scenario);
}

void to_json(json& j, const TrialRecord& r) {
  j = json{{"scenario_id", r.scenario_id},
           {"seed", r.seed},
           {"selected", r.selected ? json(*r.selected) : json(nullptr)},
           {"correct_selection", r.correct_selection},
           {"safety_stop", r.safety_stop},
           {"patients", grid_to_json(r.patients, [](int n) { return json(n); })},
           {"total_patients", r.total_patients},
           {"escalations", r.escalations},
           {"incoherent_escalations", r.incoherent_escalations}};
}

void to_json(json& j, const ToxScenario& s) {
  j = json{{"rows", s.rows()},
           {"cols", s.cols()},
           {"phi", s.phi},
           {"mtd_location", s.mtd_location},
           {"p_max", s.p_max},
           {"p", grid_to_json(s.p, [](double v) { return json(v); })}};
}

SimSpec sim_spec_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError(std::vector<FieldError>{{"spec", "must be a JSON object"}});
  std::vector<FieldError> errs;
  SimSpec spec;
  int version = 0;
  FieldReader r(j, "", errs);
  r.required("version", version);
  if (errs.empty() && version != SimSpec::kVersion) {
    errs.push_back({"version", "unsupported spec version " + std::to_string(version)});
  }
  if (!j.contains("trial")) {
    errs.push_back({"trial", "is required"});
  } else {
    try {
      spec.trial = trial_config_from_json(j.at("trial"));
    } catch (const ValidationError& e) {
      for (auto f : e.errors()) errs.push_back({"trial." + f.field, f.message});
    }
  }
  r.optional("n_scenarios", spec.n_scenarios);
  r.optional("trials_per_scenario", spec.trials_per_scenario);
  r.optional("seed", spec.seed);
  r.optional("threads", spec.threads);
  r.optional("keep_records", spec.keep_records);

  if (j.contains("scenarios")) {
    const json& s = j.at("scenarios");
    FieldReader sr(s, "scenarios.", errs);
    std::string source = "generator";
    sr.optional("source", source);
    if (source == "generator") {
      int mtds = 0;
      sr.optional("mtds", mtds);
      if (mtds > 0) spec.generator.mtds = mtds;
      else if (s.contains("mtds") && !s.at("mtds").is_null()) errs.push_back({"scenarios.mtds", "must be >= 1"});
      sr.optional("max_attempts", spec.generator.max_attempts);
      sr.optional("fix_p_max", spec.generator.fix_p_max);
    } else if (source == "explicit") {
      if (!s.contains("matrices") || !s.at("matrices").is_array() || s.at("matrices").empty()) {
        errs.push_back({"scenarios.matrices", "must be a non-empty array of matrices"});
      } else {
        for (std::size_t i = 0; i < s.at("matrices").size(); ++i) {
          try {
            const auto rows = s.at("matrices")[i].get<std::vector<std::vector<double>>>();
            spec.scenarios.push_back(scenario_from_matrix(rows, spec.trial.phi));
          } catch (const std::exception& e) {
            errs.push_back({"scenarios.matrices[" + std::to_string(i) + "]", e.what()});
          }
        }
      }
    } else {
      errs.push_back({"scenarios.source", "must be \"generator\" or \"explicit\""});
    }
  }
  if (errs.empty()) errs = spec.check();
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return spec;
}

json sim_spec_to_json(const SimSpec& spec) {
  json trial = spec.trial;
  trial.erase("seed");
  json scen;
  if (spec.explicit_scenarios()) {
    json mats = json::array();
    for (const auto& s : spec.scenarios) mats.push_back(grid_to_json(s.p, [](double v) { return json(v); }));
    scen = json{{"source", "explicit"}, {"matrices", mats}};
  } else {
    scen = json{{"source", "generator"},
                {"mtds", spec.generator.mtds ? json(*spec.generator.mtds) : json(nullptr)},
                {"max_attempts", spec.generator.max_attempts},
                {"fix_p_max", spec.generator.fix_p_max}};
  }
  return json{{"version", SimSpec::kVersion},
              {"trial", trial},
              {"scenarios", scen},
              {"n_scenarios", spec.scenario_count()},
              {"trials_per_scenario", spec.trials_per_scenario},
              {"seed", spec.seed},
              {"keep_records", spec.keep_records}};
}

json study_to_json(const SimSpec& spec, const StudyResult& result) {
  json doc{{"spec", sim_spec_to_json(spec)},
           {"metrics", result.metrics},
           {"scenarios", scenarios_to_json(result.scenarios, spec.trial.eps1, spec.trial.eps2)}};
  if (spec.keep_records) doc["records"] = result.records;
  return doc;
}

json scenarios_to_json(const std::vector<ToxScenario>& scenarios, double eps1, double eps2) {
  json arr = json::array();
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    json s = scenarios[i];
    s["id"] = i;
    s["mtd_count"] = count_mtds(scenarios[i], scenarios[i].phi, eps1, eps2);
    arr.push_back(std::move(s));
  }
  return arr;
}

std::string scenarios_csv(const std::vector<ToxScenario>& scenarios) {
  std::ostringstream os;
  os << "scenario_id,j,k,p\n";
  char buf[32];
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& p = scenarios[i].p;
    for (int r = 0; r < p.rows(); ++r)
      for (int c = 0; c < p.cols(); ++c) {
        const auto res = std::to_chars(buf, buf + sizeof buf, p(r, c));
        os << i << ',' << r + 1 << ',' << c + 1 << ',' << std::string_view(buf, res.ptr) << '\n';
      }
  }
  return os.str();
}

}  // namespace keyboard
