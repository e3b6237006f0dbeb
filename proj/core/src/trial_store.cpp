#include "keyboard/trial_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "keyboard/errors.hpp"
#include "keyboard/serialization.hpp"

namespace keyboard {

namespace fs = std::filesystem;

void to_json(json& j, const TrialResource& r) {
  j = json{{"id", r.id},
           {"revision", r.revision},
           {"created_at", r.created_at},
           {"updated_at", r.updated_at},
           {"idempotency_key", r.idempotency_key ? json(*r.idempotency_key) : json(nullptr)},
           {"config", r.config},
           {"state", r.state},
           {"selection", r.selection ? json(*r.selection) : json(nullptr)}};
}

TrialResource resource_from_json(const json& j) {
  TrialResource r;
  r.id = j.at("id").get<std::string>();
  r.revision = j.at("revision").get<long>();
  r.created_at = j.at("created_at").get<std::string>();
  r.updated_at = j.at("updated_at").get<std::string>();
  if (const auto& k = j.at("idempotency_key"); !k.is_null()) r.idempotency_key = k.get<std::string>();
  r.config = trial_config_from_json(j.at("config"));
  r.state = j.at("state").get<TrialState>();
  if (const auto& s = j.at("selection"); !s.is_null()) r.selection = s.get<MtdSelection>();
  return r;
}

namespace {

void throw_errno(const std::string& what, const fs::path& p) {
  throw StoreError(what + " " + p.string() + ": " + std::strerror(errno));
}

void write_all(int fd, const std::string& data, const fs::path& p) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("write", p);
    }
    off += static_cast<std::size_t>(n);
  }
}

void sync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// Write-then-rename so readers only ever see a complete file.
void replace_file(const fs::path& target, const std::string& contents) {
  fs::path tmp = target;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw_errno("open", tmp);
  try {
    write_all(fd, contents, tmp);
    if (::fsync(fd) != 0) throw_errno("fsync", tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw StoreError("rename " + tmp.string() + ": " + ec.message());
  sync_dir(target.parent_path());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StoreError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A crash mid-append can leave a partial last line; drop it before appending.
void trim_partial_line(const fs::path& log) {
  std::error_code ec;
  const auto size = fs::file_size(log, ec);
  if (ec || size == 0) return;
  const std::string data = read_file(log);
  if (data.back() == '\n') return;
  const auto nl = data.rfind('\n');
  fs::resize_file(log, nl == std::string::npos ? 0 : nl + 1);
}

}  // namespace

TrialStore::TrialStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "trials", ec);
  if (ec) throw StoreError("cannot create " + (root_ / "trials").string() + ": " + ec.message());
}

fs::path TrialStore::dir(const std::string& id) const {
  if (id.empty() || id.find_first_of("/\\.") != std::string::npos) throw NotFoundError("no trial " + id);
  return root_ / "trials" / id;
}

void TrialStore::append(const std::string& id, const json& event) {
  const fs::path d = dir(id);
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw StoreError("cannot create " + d.string() + ": " + ec.message());
  const fs::path log = d / "events.jsonl";
  trim_partial_line(log);
  const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw_errno("open", log);
  try {
    write_all(fd, event.dump() + "\n", log);
    if (::fsync(fd) != 0) throw_errno("fsync", log);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
}

void TrialStore::compact(const TrialResource& resource) {
  const fs::path d = dir(resource.id);
  replace_file(d / "snapshot.json", json(resource).dump());
  replace_file(d / "events.jsonl", "");
}

void apply_event(TrialResource& r, const TrialDesign& design, const json& event) {
  const std::string type = event.at("type").get<std::string>();
  const long revision = event.at("revision").get<long>();
  if (revision != r.revision + 1) {
    throw StoreError("trial " + r.id + ": event revision " + std::to_string(revision) + " follows " +
                     std::to_string(r.revision));
  }
  if (type == "cohort") {
    r.state = design.apply_cohort(std::move(r.state), event.at("dlt_count").get<int>());
    const auto& step = r.state.history.back();
    const auto& logged = event.at("decision");
    const bool decision_ok = logged.is_null() ? !step.decision
                                              : step.decision && to_string(*step.decision) == logged.get<std::string>();
    if (!decision_ok || step.next != event.at("next").get<DoseCoord>()) {
      throw StoreError("trial " + r.id + ": cohort at revision " + std::to_string(revision) +
                       " does not reproduce the logged decision");
    }
  } else if (type == "finalized") {
    if (r.selection) throw StoreError("trial " + r.id + ": finalized twice");
    if (event.at("forced").get<bool>() && r.state.status == TrialStatus::Active) r.state = design.close(std::move(r.state));
    MtdSelection sel = design.select_mtd(r.state);
    if (!(sel == event.at("selection").get<MtdSelection>())) {
      throw StoreError("trial " + r.id + ": logged selection does not reproduce");
    }
    r.selection = std::move(sel);
  } else {
    throw StoreError("trial " + r.id + ": unexpected event type '" + type + "'");
  }
  r.revision = revision;
  r.updated_at = event.at("at").get<std::string>();
}

TrialResource TrialStore::load(const std::string& id) const {
  const fs::path d = dir(id);
  if (!fs::is_directory(d)) throw NotFoundError("no trial " + id);
  try {
    std::optional<TrialResource> r;
    if (fs::exists(d / "snapshot.json")) r = resource_from_json(json::parse(read_file(d / "snapshot.json")));

    std::optional<TrialDesign> design;
    if (r) design.emplace(r->config);

    std::vector<json> events;
    if (fs::exists(d / "events.jsonl")) {
      std::istringstream lines(read_file(d / "events.jsonl"));
      std::string line;
      while (std::getline(lines, line)) {
        if (line.empty()) continue;
        json ev = json::parse(line, nullptr, false);
        if (ev.is_discarded()) {
          if (lines.eof()) break;  // torn final write
          throw StoreError("trial " + id + ": corrupt event line");
        }
        events.push_back(std::move(ev));
      }
    }

    for (const auto& ev : events) {
      if (!r) {
        if (ev.at("type") != "created") throw StoreError("trial " + id + ": log does not start with creation");
        TrialResource fresh;
        fresh.id = ev.at("id").get<std::string>();
        fresh.config = trial_config_from_json(ev.at("config"));
        design.emplace(fresh.config);
        fresh.state = design->start();
        fresh.created_at = fresh.updated_at = ev.at("at").get<std::string>();
        fresh.revision = ev.at("revision").get<long>();
        if (const auto& k = ev.at("idempotency_key"); !k.is_null()) fresh.idempotency_key = k.get<std::string>();
        r = std::move(fresh);
        continue;
      }
      if (ev.at("revision").get<long>() <= r->revision) continue;  // covered by the snapshot
      apply_event(*r, *design, ev);
    }
    if (!r) throw StoreError("trial " + id + ": empty log");
    if (r->id != id) throw StoreError("trial " + id + ": stored id is " + r->id);
    if (!design->verify(r->state)) throw StoreError("trial " + id + ": history does not replay to the stored state");
    if (r->selection && !(design->select_mtd(r->state) == *r->selection)) {
      throw StoreError("trial " + id + ": stored selection does not reproduce");
    }
    return std::move(*r);
  } catch (const StoreError&) {
    throw;
  } catch (const std::exception& e) {
    throw StoreError("trial " + id + ": " + e.what());
  }
}

std::vector<std::string> TrialStore::ids() const {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(root_ / "trials")) {
    if (entry.is_directory()) out.push_back(entry.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace keyboard
