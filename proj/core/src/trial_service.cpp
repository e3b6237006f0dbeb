#include "keyboard/trial_service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>

#include "keyboard/errors.hpp"
#include "keyboard/serialization.hpp"

namespace keyboard {

namespace fs = std::filesystem;

namespace {

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

std::uint64_t entropy64() {
  static thread_local std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string new_id(char prefix) {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%c%016llx", prefix, static_cast<unsigned long long>(entropy64()));
  return buf;
}

bool terminal(TrialStatus s) { return s != TrialStatus::Active; }

}  // namespace

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Queued: return "queued";
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
  }
  return "unknown";
}

void to_json(json& j, const TrialSummary& s) {
  j = json{{"id", s.id},
           {"revision", s.revision},
           {"status", std::string(to_string(s.status))},
           {"current", s.current},
           {"total_patients", s.total_patients},
           {"rows", s.rows},
           {"cols", s.cols},
           {"phi", s.phi},
           {"finalized", s.finalized},
           {"updated_at", s.updated_at}};
}

void to_json(json& j, const SimulationJob& job) {
  j = json{{"id", job.id},
           {"status", std::string(to_string(job.status))},
           {"revision", job.revision},
           {"progress", {{"done", job.done}, {"total", job.total}}},
           {"spec", job.spec}};
  if (job.result) j["result"] = *job.result;
  if (!job.error.empty()) j["error"] = job.error;
}

struct TrialService::Job {
  std::mutex mu;
  SimulationJob data;
  SimSpec spec;
};

TrialService::TrialService(fs::path data_dir, ServiceOptions options)
    : store_(std::move(data_dir)), options_(options) {
  for (const auto& id : store_.ids()) {
    auto e = std::make_shared<Entry>();
    TrialResource r = store_.load(id);
    e->design = std::make_shared<const TrialDesign>(r.config);
    if (r.idempotency_key) idempotency_[*r.idempotency_key] = r.id;
    e->current = std::make_shared<const TrialResource>(std::move(r));
    trials_.emplace(id, std::move(e));
  }
  const int workers = std::max(1, options_.simulation_workers);
  for (int i = 0; i < workers; ++i) {
    workers_.emplace_back([this](std::stop_token st) { worker_loop(st); });
  }
}

TrialService::~TrialService() {
  for (auto& w : workers_) w.request_stop();
  jobs_cv_.notify_all();
  workers_.clear();
}

std::shared_ptr<TrialService::Entry> TrialService::find(const std::string& id) const {
  std::shared_lock lock(trials_mutex_);
  auto it = trials_.find(id);
  if (it == trials_.end()) throw NotFoundError("no trial " + id);
  return it->second;
}

std::shared_ptr<const TrialResource> TrialService::snapshot(const Entry& e) const {
  return std::atomic_load(&e.current);
}

// Caller holds e.writer. Persist first; readers see the new state only once it is durable.
void TrialService::publish(Entry& e, TrialResource next, const json& event) {
  store_.append(next.id, event);
  auto ptr = std::make_shared<const TrialResource>(std::move(next));
  std::atomic_store(&e.current, ptr);
  if (++e.events_since_snapshot >= options_.compact_every) {
    store_.compact(*ptr);
    e.events_since_snapshot = 0;
  }
}

TrialResource TrialService::create_trial(const json& config, const std::optional<std::string>& idempotency_key,
                                         bool* created) {
  json cfg = config;
  if (cfg.is_object() && (!cfg.contains("seed") || cfg.at("seed").is_null())) cfg["seed"] = entropy64();
  const TrialConfig c = trial_config_from_json(cfg);
  if (idempotency_key && idempotency_key->empty()) {
    throw ValidationError(std::vector<FieldError>{{"idempotency_key", "must not be empty"}});
  }

  std::unique_lock lock(trials_mutex_);
  if (idempotency_key) {
    if (auto it = idempotency_.find(*idempotency_key); it != idempotency_.end()) {
      if (created) *created = false;
      return *snapshot(*trials_.at(it->second));
    }
  }

  auto e = std::make_shared<Entry>();
  e->design = std::make_shared<const TrialDesign>(c);
  TrialResource r;
  do r.id = new_id('t');
  while (trials_.count(r.id) || fs::exists(store_.root() / "trials" / r.id));
  r.config = c;
  r.state = e->design->start();
  r.created_at = r.updated_at = iso_now();
  r.revision = 1;
  r.idempotency_key = idempotency_key;

  const json event{{"type", "created"},
                   {"revision", 1},
                   {"at", r.created_at},
                   {"id", r.id},
                   {"config", r.config},
                   {"idempotency_key", idempotency_key ? json(*idempotency_key) : json(nullptr)}};
  std::lock_guard w(e->writer);
  publish(*e, r, event);
  trials_.emplace(r.id, e);
  if (idempotency_key) idempotency_[*idempotency_key] = r.id;
  if (created) *created = true;
  return r;
}

CohortOutcome TrialService::record_cohort(const std::string& id, int dlt_count, long expected_revision) {
  auto e = find(id);
  std::lock_guard w(e->writer);
  const auto cur = snapshot(*e);
  if (expected_revision != cur->revision) {
    throw ConflictError("trial " + id + " is at revision " + std::to_string(cur->revision) + ", not " +
                            std::to_string(expected_revision),
                        cur->revision);
  }
  TrialResource next = *cur;
  next.state = e->design->apply_cohort(std::move(next.state), dlt_count);
  next.revision = cur->revision + 1;
  next.updated_at = iso_now();

  const HistoryEntry& step = next.state.history.back();
  const json event{{"type", "cohort"},
                   {"revision", next.revision},
                   {"at", next.updated_at},
                   {"dlt_count", dlt_count},
                   {"decision", step.decision ? json(std::string(to_string(*step.decision))) : json(nullptr)},
                   {"next", step.next}};

  CohortOutcome out;
  out.step = step;
  for (const auto& d : next.state.eliminated_doses()) {
    if (!cur->state.is_eliminated(d)) out.newly_eliminated.push_back(d);
  }
  publish(*e, next, event);
  out.trial = std::move(next);
  return out;
}

TrialResource TrialService::get_state(const std::string& id) const { return *snapshot(*find(id)); }

std::vector<TrialSummary> TrialService::list_trials() const {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::shared_lock lock(trials_mutex_);
    for (const auto& [id, e] : trials_) entries.push_back(e);
  }
  std::vector<TrialSummary> out;
  for (const auto& e : entries) {
    const auto r = snapshot(*e);
    out.push_back({r->id, r->revision, r->state.status, r->state.current, r->state.total_patients(), r->config.rows,
                   r->config.cols, r->config.phi, r->selection.has_value(), r->updated_at});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

TrialResource TrialService::finalize(const std::string& id, bool force) {
  auto e = find(id);
  std::lock_guard w(e->writer);
  const auto cur = snapshot(*e);
  if (cur->selection) return *cur;
  if (!terminal(cur->state.status) && !force) {
    throw StateError("trial " + id + " is still active; finalize with force to close it");
  }
  TrialResource next = *cur;
  const bool forced = !terminal(next.state.status);
  if (forced) next.state = e->design->close(std::move(next.state));
  next.selection = e->design->select_mtd(next.state);
  next.revision = cur->revision + 1;
  next.updated_at = iso_now();
  const json event{{"type", "finalized"},
                   {"revision", next.revision},
                   {"at", next.updated_at},
                   {"forced", forced},
                   {"selection", *next.selection}};
  publish(*e, next, event);
  return next;
}

DecisionTable TrialService::decision_table(const std::string& id) const {
  const auto r = snapshot(*find(id));
  return build_decision_table(r->config.phi, r->config.eps1, r->config.eps2, r->config.max_n);
}

SimulationJob TrialService::submit_simulation(const json& spec_doc) {
  SimSpec spec = sim_spec_from_json(spec_doc);
  int cap = options_.max_simulation_threads;
  if (cap <= 0) cap = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  spec.threads = std::min(spec.threads, cap);

  auto job = std::make_shared<Job>();
  job->spec = std::move(spec);
  job->data.spec = spec_doc;
  job->data.total = job->spec.scenario_count();
  {
    std::lock_guard lock(jobs_mutex_);
    do job->data.id = new_id('s');
    while (jobs_.count(job->data.id));
    jobs_.emplace(job->data.id, job);
    queue_.push_back(job);
  }
  jobs_cv_.notify_one();
  std::lock_guard jl(job->mu);
  return job->data;
}

SimulationJob TrialService::simulation(const std::string& job_id) const {
  std::shared_ptr<Job> job;
  {
    std::lock_guard lock(jobs_mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw NotFoundError("no simulation " + job_id);
    job = it->second;
  }
  std::lock_guard jl(job->mu);
  return job->data;
}

void TrialService::worker_loop(std::stop_token stop) {
  while (true) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock lock(jobs_mutex_);
      if (!jobs_cv_.wait(lock, stop, [this] { return !queue_.empty(); })) return;
      job = queue_.front();
      queue_.pop_front();
    }
    {
      std::lock_guard jl(job->mu);
      job->data.status = JobStatus::Running;
      ++job->data.revision;
    }
    try {
      StudyResult result = run_study(job->spec, [&](int done, int total) {
        std::lock_guard jl(job->mu);
        job->data.done = done;
        job->data.total = total;
        ++job->data.revision;
      });
      json doc = study_to_json(job->spec, result);
      std::string csv = summary_csv(result.metrics);
      export_results(store_.root() / "simulations" / job->data.id, job->spec, result);
      std::lock_guard jl(job->mu);
      job->data.result = std::move(doc);
      job->data.summary_csv = std::move(csv);
      job->data.status = JobStatus::Done;
      ++job->data.revision;
    } catch (const std::exception& ex) {
      std::lock_guard jl(job->mu);
      job->data.status = JobStatus::Failed;
      job->data.error = ex.what();
      ++job->data.revision;
    }
  }
}

json TrialService::schema() {
  const json coord{{"type", "array"}, {"items", {{"type", "integer"}, {"minimum", 1}}}, {"minItems", 2}, {"maxItems", 2}};
  const json config{
      {"type", "object"},
      {"required", {"rows", "cols", "phi", "eps1", "eps2", "max_n"}},
      {"properties",
       {{"rows", {{"type", "integer"}, {"minimum", 1}}},
        {"cols", {{"type", "integer"}, {"minimum", 1}}},
        {"phi", {{"type", "number"}, {"exclusiveMinimum", 0}, {"exclusiveMaximum", 1}}},
        {"eps1", {{"type", "number"}, {"exclusiveMinimum", 0}}},
        {"eps2", {{"type", "number"}, {"exclusiveMinimum", 0}}},
        {"cutoff", {{"type", "number"}, {"default", 0.95}}},
        {"max_n", {{"type", "integer"}, {"minimum", 1}}},
        {"cohort_size", {{"type", "integer"}, {"minimum", 1}, {"default", 1}}},
        {"algorithm", {{"enum", {"key1", "key2", "key3", "key4", "key5"}}, {"default", "key1"}}},
        {"seed", {{"type", "integer"}, {"minimum", 0}, {"description", "assigned by the server when omitted"}}},
        {"selection_prior", {{"type", "number"}, {"default", 0.05}}}}}};
  const json state{
      {"type", "object"},
      {"required", {"schema_version", "rows", "cols", "tallies", "current", "eliminated", "status", "history"}},
      {"properties",
       {{"schema_version", {{"const", kTrialStateSchemaVersion}}},
        {"tallies", {{"type", "array"}, {"description", "rows x cols of {n, y}"}}},
        {"current", coord},
        {"eliminated", {{"type", "array"}, {"items", coord}}},
        {"status", {{"enum", {"active", "stopped_safety", "completed_max_n", "closed"}}}},
        {"total_patients", {{"type", "integer"}}},
        {"history", {{"type", "array"}}}}}};
  const json selection{{"type", {"object", "null"}},
                       {"properties",
                        {{"selected", {{"oneOf", {coord, {{"type", "null"}}}}}},
                         {"reason", {{"enum", {"selected", "safety_stop"}}}},
                         {"estimates", {{"type", "array"}}},
                         {"draws", {{"type", "array"}, {"items", {{"type", "number"}}}}}}}};
  return json{
      {"version", 1},
      {"trial_config", config},
      {"create_trial_request",
       {{"type", "object"},
        {"properties", {{"config", config}, {"idempotency_key", {{"type", "string"}}}}},
        {"description", "config may also be given at top level; Idempotency-Key header is accepted too"}}},
      {"cohort_request",
       {{"type", "object"},
        {"required", {"dlt_count", "expected_revision"}},
        {"properties",
         {{"dlt_count", {{"type", "integer"}, {"minimum", 0}}}, {"expected_revision", {{"type", "integer"}}}}}}},
      {"finalize_request", {{"type", "object"}, {"properties", {{"force", {{"type", "boolean"}, {"default", false}}}}}}},
      {"trial_resource",
       {{"type", "object"},
        {"required", {"id", "revision", "config", "state"}},
        {"properties",
         {{"id", {{"type", "string"}}},
          {"revision", {{"type", "integer"}, {"minimum", 1}}},
          {"created_at", {{"type", "string"}}},
          {"updated_at", {{"type", "string"}}},
          {"idempotency_key", {{"type", {"string", "null"}}}},
          {"config", config},
          {"state", state},
          {"selection", selection}}}}},
      {"simulation_spec",
       {{"type", "object"},
        {"required", {"version", "trial"}},
        {"properties",
         {{"version", {{"const", SimSpec::kVersion}}},
          {"trial", config},
          {"scenarios",
           {{"type", "object"},
            {"properties",
             {{"source", {{"enum", {"generator", "explicit"}}}},
              {"mtds", {{"type", {"integer", "null"}}, {"minimum", 1}}},
              {"max_attempts", {{"type", "integer"}}},
              {"fix_p_max", {{"type", "boolean"}}},
              {"matrices", {{"type", "array"}}}}}}},
          {"n_scenarios", {{"type", "integer"}, {"minimum", 1}}},
          {"trials_per_scenario", {{"type", "integer"}, {"minimum", 1}}},
          {"seed", {{"type", "integer"}, {"minimum", 0}}},
          {"threads", {{"type", "integer"}, {"minimum", 1}}},
          {"keep_records", {{"type", "boolean"}}}}}}},
      {"error",
       {{"type", "object"},
        {"properties",
         {{"error",
           {{"type", "object"},
            {"properties",
             {{"code", {{"enum", {"validation", "conflict", "invalid_state", "not_found", "bad_request", "internal"}}}},
              {"message", {{"type", "string"}}},
              {"fields", {{"type", "array"}}}}}}},
          {"revision", {{"type", "integer"}}}}}}}};
}

}  // namespace keyboard
