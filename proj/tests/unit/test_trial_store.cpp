#include <doctest.h>

#include <fstream>

#include "keyboard/errors.hpp"
#include "keyboard/serialization.hpp"
#include "keyboard/trial_service.hpp"
#include "keyboard/trial_store.hpp"
#include "temp_dir.hpp"

using namespace keyboard;
namespace fs = std::filesystem;

namespace {

json config_doc() {
  return json{{"rows", 2}, {"cols", 3}, {"phi", 0.3}, {"eps1", 0.05}, {"eps2", 0.05}, {"max_n", 30}, {"seed", 17}};
}

void check_same(const TrialResource& a, const TrialResource& b) {
  CHECK(a.id == b.id);
  CHECK(a.revision == b.revision);
  CHECK(a.config == b.config);
  CHECK(a.state == b.state);
  CHECK(a.created_at == b.created_at);
  CHECK(a.updated_at == b.updated_at);
  CHECK(a.idempotency_key == b.idempotency_key);
  CHECK(a.selection.has_value() == b.selection.has_value());
  if (a.selection && b.selection) CHECK(*a.selection == *b.selection);
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("reload reproduces the in-memory state") {
  TempDir dir;
  TrialResource last;
  std::string id;
  {
    TrialService svc(dir.path);
    auto r = svc.create_trial(config_doc(), std::string("key-1"));
    id = r.id;
    const int ys[] = {0, 0, 1, 0, 0, 1, 1, 0};
    for (int y : ys) r = svc.record_cohort(id, y, r.revision).trial;
    last = svc.finalize(id, true);
  }
  TrialStore store(dir.path);
  check_same(store.load(id), last);
  TrialService reopened(dir.path);
  check_same(reopened.get_state(id), last);
  bool created = true;
  CHECK(reopened.create_trial(config_doc(), std::string("key-1"), &created).id == id);
  CHECK_FALSE(created);
}

TEST_CASE("compaction keeps loads exact") {
  TempDir dir;
  ServiceOptions opts;
  opts.compact_every = 3;
  TrialResource last;
  std::vector<std::string> early;
  {
    TrialService svc(dir.path, opts);
    last = svc.create_trial(config_doc());
    last = svc.record_cohort(last.id, 0, last.revision).trial;
    early = lines(dir.path / "trials" / last.id / "events.jsonl");
    for (int i = 1; i < 10; ++i) last = svc.record_cohort(last.id, i % 4 == 3, last.revision).trial;
  }
  REQUIRE(early.size() == 2);
  const fs::path tdir = dir.path / "trials" / last.id;
  CHECK(fs::exists(tdir / "snapshot.json"));
  CHECK(lines(tdir / "events.jsonl").size() < 3);
  TrialStore store(dir.path);
  check_same(store.load(last.id), last);

  // A crash between writing the snapshot and truncating the log leaves
  // events the snapshot already covers; they must be skipped.
  const auto tail = lines(tdir / "events.jsonl");
  {
    std::ofstream out(tdir / "events.jsonl", std::ios::trunc);
    for (const auto& l : early) out << l << "\n";
    for (const auto& l : tail) out << l << "\n";
  }
  TrialService svc(dir.path, opts);
  check_same(svc.get_state(last.id), last);
}

TEST_CASE("torn final line is ignored and repaired") {
  TempDir dir;
  TrialResource last;
  {
    TrialService svc(dir.path);
    last = svc.create_trial(config_doc());
    last = svc.record_cohort(last.id, 0, 1).trial;
  }
  const fs::path log = dir.path / "trials" / last.id / "events.jsonl";
  { std::ofstream(log, std::ios::app) << R"({"type":"cohort","revis)"; }
  TrialService svc(dir.path);
  check_same(svc.get_state(last.id), last);
  const auto next = svc.record_cohort(last.id, 0, last.revision).trial;
  TrialStore store(dir.path);
  check_same(store.load(last.id), next);
}

TEST_CASE("tampered logs are rejected") {
  TempDir dir;
  std::string id;
  {
    TrialService svc(dir.path);
    auto r = svc.create_trial(config_doc());
    id = r.id;
    r = svc.record_cohort(id, 0, 1).trial;
    r = svc.record_cohort(id, 0, 2).trial;
  }
  const fs::path log = dir.path / "trials" / id / "events.jsonl";
  auto ls = lines(log);
  REQUIRE(ls.size() == 3);
  auto ev = json::parse(ls[2]);
  ev["next"] = json::array({2, 3});
  ls[2] = ev.dump();
  {
    std::ofstream out(log, std::ios::trunc);
    for (const auto& l : ls) out << l << "\n";
  }
  TrialStore store(dir.path);
  CHECK_THROWS_AS(store.load(id), StoreError);
  CHECK_THROWS_AS(TrialService{dir.path}, StoreError);

  ev = json::parse(ls[2]);
  ev["revision"] = 7;
  {
    std::ofstream out(log, std::ios::trunc);
    out << ls[0] << "\n" << ls[1] << "\n" << ev.dump() << "\n";
  }
  CHECK_THROWS_AS(store.load(id), StoreError);
  CHECK_THROWS_AS(store.load("nope"), NotFoundError);
  CHECK_THROWS_AS(store.load("../x"), NotFoundError);
}

TEST_CASE("resource json round trip") {
  TempDir dir;
  TrialService svc(dir.path);
  auto r = svc.create_trial(config_doc(), std::string("k"));
  r = svc.record_cohort(r.id, 1, 1).trial;
  const json j = r;
  check_same(resource_from_json(json::parse(j.dump())), r);
}
