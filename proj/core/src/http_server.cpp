#include "keyboard/http_server.hpp"

#include <httplib.h>

#include "keyboard/errors.hpp"
#include "keyboard/serialization.hpp"

namespace keyboard {

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  if (body.is_object() && body.contains("revision")) res.set_header("X-Revision", std::to_string(body["revision"].get<long>()));
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string code, const std::string& message,
                const std::vector<FieldError>& fields = {}, std::optional<long> revision = {}) {
  json f = json::array();
  for (const auto& e : fields) f.push_back({{"field", e.field}, {"message", e.message}});
  json body{{"error", {{"code", std::move(code)}, {"message", message}, {"fields", f}}}};
  if (revision) body["revision"] = *revision;
  send_json(res, status, body);
}

json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.empty()) {
    if (allow_empty) return json::object();
    throw std::invalid_argument("request body is required");
  }
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("request body is not valid JSON");
  if (!j.is_object()) throw std::invalid_argument("request body must be a JSON object");
  return j;
}

json cohort_response(const CohortOutcome& out) {
  const HistoryEntry& s = out.step;
  json step{{"dose", s.dose},
            {"cohort_size", s.cohort_size},
            {"dlt_count", s.cohort_dlts},
            {"tally", s.tally},
            {"decision", s.decision ? json(std::string(to_string(*s.decision))) : json(nullptr)},
            {"eliminated", out.newly_eliminated},
            {"next", s.next},
            {"draws", s.draws},
            {"status", std::string(to_string(out.trial.state.status))}};
  return json{{"revision", out.trial.revision}, {"step", step}, {"trial", out.trial}};
}

json finalize_response(const TrialResource& r) {
  return json{{"revision", r.revision},
              {"trial_id", r.id},
              {"status", std::string(to_string(r.state.status))},
              {"seed", r.config.seed},
              {"selection", *r.selection}};
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(TrialService& s) : service(s) { routes(); }

  // Maps the library's exception types onto status codes.
  template <typename F>
  httplib::Server::Handler guard(F f) {
    return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const ValidationError& e) {
        send_error(res, 422, "validation", e.what(), e.errors());
      } catch (const DomainError& e) {
        send_error(res, 422, "validation", e.what());
      } catch (const NotFoundError& e) {
        send_error(res, 404, "not_found", e.what());
      } catch (const ConflictError& e) {
        send_error(res, 409, "conflict", e.what(), {}, e.current_revision());
      } catch (const StateError& e) {
        send_error(res, 409, "invalid_state", e.what());
      } catch (const std::invalid_argument& e) {
        send_error(res, 400, "bad_request", e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, "bad_request", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    svr.Post("/trials", guard([this](const httplib::Request& req, httplib::Response& res) {
      json body = parse_body(req, false);
      std::optional<std::string> key;
      if (req.has_header("Idempotency-Key")) key = req.get_header_value("Idempotency-Key");
      if (body.contains("idempotency_key") && !body.at("idempotency_key").is_null()) {
        if (!body.at("idempotency_key").is_string()) {
          throw ValidationError(std::vector<FieldError>{{"idempotency_key", "must be a string"}});
        }
        key = body.at("idempotency_key").get<std::string>();
      }
      json config = body.contains("config") ? body.at("config") : body;
      if (config.is_object()) config.erase("idempotency_key");
      bool created = false;
      TrialResource r = service.create_trial(config, key, &created);
      send_json(res, created ? 201 : 200, r);
    }));

    svr.Get("/trials", guard([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, json{{"trials", service.list_trials()}});
    }));

    svr.Get(R"(/trials/([A-Za-z0-9_-]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, service.get_state(req.matches[1]));
    }));

    svr.Post(R"(/trials/([A-Za-z0-9_-]+)/cohorts)", guard([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req, false);
      std::vector<FieldError> errs;
      if (!body.contains("dlt_count") || !body.at("dlt_count").is_number_integer()) {
        errs.push_back({"dlt_count", "integer is required"});
      }
      if (!body.contains("expected_revision") || !body.at("expected_revision").is_number_integer()) {
        errs.push_back({"expected_revision", "integer is required"});
      }
      if (!errs.empty()) throw ValidationError(std::move(errs));
      const CohortOutcome out = service.record_cohort(req.matches[1], body.at("dlt_count").get<int>(),
                                                      body.at("expected_revision").get<long>());
      send_json(res, 200, cohort_response(out));
    }));

    svr.Post(R"(/trials/([A-Za-z0-9_-]+)/finalize)", guard([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req, true);
      bool force = false;
      if (body.contains("force")) {
        if (!body.at("force").is_boolean()) throw ValidationError(std::vector<FieldError>{{"force", "must be a boolean"}});
        force = body.at("force").get<bool>();
      }
      send_json(res, 200, finalize_response(service.finalize(req.matches[1], force)));
    }));

    svr.Get(R"(/trials/([A-Za-z0-9_-]+)/decision-table)",
            guard([this](const httplib::Request& req, httplib::Response& res) {
              const std::string id = req.matches[1];
              const long revision = service.get_state(id).revision;
              const DecisionTable table = service.decision_table(id);
              const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
              if (format == "csv") {
                res.set_header("X-Revision", std::to_string(revision));
                res.set_content(decision_table_csv(table), "text/csv");
              } else if (format == "json") {
                send_json(res, 200, json{{"revision", revision}, {"trial_id", id}, {"table", table}});
              } else {
                throw ValidationError(std::vector<FieldError>{{"format", "must be json or csv"}});
              }
            }));

    svr.Post("/simulations", guard([this](const httplib::Request& req, httplib::Response& res) {
      const SimulationJob job = service.submit_simulation(parse_body(req, false));
      res.set_header("Location", "/simulations/" + job.id);
      send_json(res, 202, job);
    }));

    svr.Get(R"(/simulations/([A-Za-z0-9_-]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, service.simulation(req.matches[1]));
    }));

    svr.Get(R"(/simulations/([A-Za-z0-9_-]+)/summary\.csv)",
            guard([this](const httplib::Request& req, httplib::Response& res) {
              const SimulationJob job = service.simulation(req.matches[1]);
              if (job.status != JobStatus::Done) throw StateError("simulation " + job.id + " has not finished");
              res.set_header("X-Revision", std::to_string(job.revision));
              res.set_content(job.summary_csv, "text/csv");
            }));

    svr.Get("/schema", guard([](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, TrialService::schema());
    }));
  }

  TrialService& service;
  httplib::Server svr;
  bool bound = false;
};

HttpServer::HttpServer(TrialService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->svr.bind_to_any_port(host);
    if (p < 0) throw std::runtime_error("cannot bind " + host);
    impl_->bound = true;
    return p;
  }
  if (!impl_->svr.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return port;
}

void HttpServer::run() {
  if (!impl_->bound) throw StateError("HttpServer::run before bind");
  impl_->svr.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_) impl_->svr.stop();
}

bool HttpServer::running() const { return impl_->svr.is_running(); }

}  // namespace keyboard
