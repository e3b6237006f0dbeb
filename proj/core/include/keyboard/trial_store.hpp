#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "keyboard/combo_trial.hpp"

namespace keyboard {

/// A trial as held by the service: configuration, state and bookkeeping.
struct TrialResource {
  std::string id;
  TrialConfig config;
  TrialState state;
  std::string created_at;
  std::string updated_at;
  long revision = 1;  // 1 on creation, +1 per mutation
  std::optional<std::string> idempotency_key;
  std::optional<MtdSelection> selection;  // set once finalized
};

void to_json(nlohmann::json& j, const TrialResource& r);
/// Reads a snapshot document. Validates the configuration; does not replay.
TrialResource resource_from_json(const nlohmann::json& j);

/// Directory-backed event store. Each trial owns a subdirectory with an
/// append-only `events.jsonl` and an optional `snapshot.json`. Events carry
/// the revision they produce:
///   {"type":"created",  "revision":1, "at", "id", "config", "idempotency_key"}
///   {"type":"cohort",   "revision":r, "at", "dlt_count", "decision", "next"}
///   {"type":"finalized","revision":r, "at", "forced", "selection"}
/// A snapshot holds the full resource at some revision; on load, events with a
/// later revision are folded on top and the result is checked by replay.
class TrialStore {
 public:
  explicit TrialStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// Appends one event line and syncs it to disk.
  void append(const std::string& id, const nlohmann::json& event);

  /// Writes `resource` as the snapshot (temp file + rename), then truncates
  /// the event log. Events already covered are skipped on load, so a crash
  /// between the two steps is harmless.
  void compact(const TrialResource& resource);

  /// Rebuilds one trial. Throws NotFoundError for an unknown id and StoreError
  /// when the log is unreadable or the history does not replay exactly.
  TrialResource load(const std::string& id) const;

  std::vector<std::string> ids() const;

 private:
  std::filesystem::path dir(const std::string& id) const;

  std::filesystem::path root_;
};

/// Applies a single logged event to `resource`, checking logged outcomes
/// against the recomputed ones. Used by load and by tests.
void apply_event(TrialResource& resource, const TrialDesign& design, const nlohmann::json& event);

}  // namespace keyboard
