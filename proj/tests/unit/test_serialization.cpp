#include <doctest.h>

#include <cmath>

#include "keyboard/errors.hpp"
#include "keyboard/serialization.hpp"

using namespace keyboard;

namespace {
TrialConfig cfg() {
  TrialConfig c;
  c.rows = 2;
  c.cols = 3;
  c.phi = 0.3;
  c.max_n = 20;
  c.seed = 99;
  c.algorithm = Algorithm::Key3;
  return c;
}
}  // namespace

TEST_CASE("trial state round trip") {
  const TrialDesign d(cfg());
  TrialState s = d.start();
  for (int y : {0, 0, 1, 0, 1, 1, 0}) s = d.apply_cohort(s, y);
  const json j = s;
  CHECK(j.at("schema_version") == kTrialStateSchemaVersion);
  CHECK(j.at("status") == "active");
  CHECK(j.at("total_patients") == 7);
  const auto back = j.get<TrialState>();
  CHECK(back == s);
  CHECK(json::parse(j.dump()).get<TrialState>() == s);

  json wrong = j;
  wrong["schema_version"] = 2;
  CHECK_THROWS_AS(wrong.get<TrialState>(), DomainError);
}

TEST_CASE("selection round trip keeps NaN estimates") {
  const TrialDesign d(cfg());
  TrialState s = d.start();
  for (int y : {0, 0, 1}) s = d.apply_cohort(s, y);
  s = d.close(s);
  const MtdSelection sel = d.select_mtd(s);
  const json j = sel;
  CHECK(json::parse(j.dump()).get<MtdSelection>() == sel);
  bool has_null = false;
  for (const auto& row : j.at("estimates"))
    for (const auto& v : row) has_null = has_null || v.is_null();
  CHECK(has_null);
}

TEST_CASE("config parsing collects every field error") {
  const json good = cfg();
  CHECK(trial_config_from_json(good) == cfg());

  json bad = good;
  bad.erase("rows");
  bad["phi"] = "high";
  bad["algorithm"] = "key9";
  try {
    trial_config_from_json(bad);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.errors().size() == 3);
  }
  json range = good;
  range["phi"] = 0.05;
  range["eps1"] = 0.06;
  CHECK_THROWS_AS(trial_config_from_json(range), ValidationError);
  CHECK_THROWS_AS(trial_config_from_json(json::array()), ValidationError);
}

TEST_CASE("simulation spec documents") {
  const json doc = json::parse(R"({
    "version": 1,
    "trial": {"rows": 2, "cols": 4, "phi": 0.3, "eps1": 0.05, "eps2": 0.05, "max_n": 48},
    "scenarios": {"source": "generator", "mtds": 2},
    "n_scenarios": 10, "trials_per_scenario": 5, "seed": 12, "threads": 2
  })");
  const SimSpec s = sim_spec_from_json(doc);
  CHECK(s.generator.mtds == 2);
  CHECK(s.n_scenarios == 10);
  CHECK(s.threads == 2);
  const SimSpec again = sim_spec_from_json(sim_spec_to_json(s));
  CHECK(again.trial == s.trial);
  CHECK(again.seed == s.seed);
  CHECK(again.generator.mtds == s.generator.mtds);

  const json expl = json::parse(R"({
    "version": 1,
    "trial": {"rows": 1, "cols": 3, "phi": 0.3, "eps1": 0.05, "eps2": 0.05, "max_n": 12},
    "scenarios": {"source": "explicit", "matrices": [[[0.1, 0.3, 0.5]], [[0.2, 0.25, 0.3]]]}
  })");
  CHECK(sim_spec_from_json(expl).scenarios.size() == 2);

  json bad = doc;
  bad["version"] = 3;
  bad["threads"] = 0;
  bad["scenarios"]["source"] = "magic";
  try {
    sim_spec_from_json(bad);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.errors().size() >= 2);
  }
}

TEST_CASE("decision table and scenario exports") {
  const json t = build_decision_table(0.3, 0.05, 0.05, 4);
  CHECK(t.at("rows").size() == 4);
  CHECK(t.at("rows")[2] == json{{"n", 3}, {"escalate_le", 0}, {"deescalate_ge", 2}});

  const auto sc = scenario_from_matrix({{0.1, 0.3}}, 0.3);
  const json arr = scenarios_to_json({sc}, 0.05, 0.05);
  CHECK(arr[0].at("mtd_count") == 1);
  CHECK(arr[0].at("id") == 0);
  CHECK(scenarios_csv({sc}) == "scenario_id,j,k,p\n0,1,1,0.1\n0,1,2,0.3\n");
}
