#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "keyboard/combo_trial.hpp"
#include "keyboard/keyboard.hpp"
#include "keyboard/simulation.hpp"
#include "keyboard/trial_store.hpp"

namespace keyboard {

struct ServiceOptions {
  int compact_every = 64;       // snapshot after this many logged events
  int simulation_workers = 1;   // concurrent simulation jobs
  int max_simulation_threads = 0;  // cap on a job's threads; 0 = hardware concurrency
};

struct CohortOutcome {
  TrialResource trial;
  HistoryEntry step;
  std::vector<DoseCoord> newly_eliminated;
};

struct TrialSummary {
  std::string id;
  long revision = 0;
  TrialStatus status = TrialStatus::Active;
  DoseCoord current;
  int total_patients = 0;
  int rows = 0;
  int cols = 0;
  double phi = 0.0;
  bool finalized = false;
  std::string updated_at;
};

enum class JobStatus { Queued, Running, Done, Failed };
std::string_view to_string(JobStatus s);

struct SimulationJob {
  std::string id;
  JobStatus status = JobStatus::Queued;
  long revision = 1;  // bumped on every status or progress change
  int done = 0;
  int total = 0;
  nlohmann::json spec;
  std::optional<nlohmann::json> result;
  std::string summary_csv;
  std::string error;
};

void to_json(nlohmann::json& j, const TrialSummary& s);
void to_json(nlohmann::json& j, const SimulationJob& job);

/// Trial conduct over a directory store. Mutations on one trial are
/// serialized by that trial's writer lock; reads take the latest immutable
/// snapshot without waiting for writers. Simulation jobs run on their own
/// worker threads.
class TrialService {
 public:
  explicit TrialService(std::filesystem::path data_dir, ServiceOptions options = {});
  ~TrialService();
  TrialService(const TrialService&) = delete;
  TrialService& operator=(const TrialService&) = delete;

  /// Validates `config` (ValidationError), assigns a seed when none is given
  /// and persists the new trial at (1,1). A repeated idempotency key returns
  /// the trial created by the first call; `created` reports which happened.
  TrialResource create_trial(const nlohmann::json& config, const std::optional<std::string>& idempotency_key = {},
                             bool* created = nullptr);

  /// Throws NotFoundError, ConflictError (stale revision), StateError
  /// (terminal trial or max_n reached) or DomainError (dlt_count out of range).
  CohortOutcome record_cohort(const std::string& id, int dlt_count, long expected_revision);

  TrialResource get_state(const std::string& id) const;
  std::vector<TrialSummary> list_trials() const;

  /// Selects the MTD of a terminal trial with its recorded seed. An Active
  /// trial needs `force`, which closes it at its current sample size. Once
  /// finalized, further calls return the stored selection unchanged.
  TrialResource finalize(const std::string& id, bool force = false);

  DecisionTable decision_table(const std::string& id) const;

  /// Validates the spec synchronously (ValidationError) and queues the run.
  SimulationJob submit_simulation(const nlohmann::json& spec);
  SimulationJob simulation(const std::string& job_id) const;

  /// JSON schemas of the request and response documents.
  static nlohmann::json schema();

  const std::filesystem::path& data_dir() const { return store_.root(); }

 private:
  struct Entry {
    std::mutex writer;
    std::shared_ptr<const TrialResource> current;  // swapped atomically
    std::shared_ptr<const TrialDesign> design;
    int events_since_snapshot = 0;
  };
  struct Job;

  std::shared_ptr<Entry> find(const std::string& id) const;
  std::shared_ptr<const TrialResource> snapshot(const Entry& e) const;
  void publish(Entry& e, TrialResource next, const nlohmann::json& event);
  void worker_loop(std::stop_token stop);

  TrialStore store_;
  ServiceOptions options_;

  mutable std::shared_mutex trials_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> trials_;
  std::unordered_map<std::string, std::string> idempotency_;

  mutable std::mutex jobs_mutex_;
  std::condition_variable_any jobs_cv_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::deque<std::shared_ptr<Job>> queue_;
  std::vector<std::jthread> workers_;
};

}  // namespace keyboard
