#pragma once

#include <memory>
#include <string>

#include "keyboard/trial_service.hpp"

namespace keyboard {

/// JSON-over-HTTP front end for a TrialService.
///   POST /trials                      create (Idempotency-Key header or body field)
///   GET  /trials                      list summaries
///   GET  /trials/{id}                 resource
///   POST /trials/{id}/cohorts         {"dlt_count", "expected_revision"}
///   POST /trials/{id}/finalize        {"force": bool}
///   GET  /trials/{id}/decision-table  ?format=json|csv
///   POST /simulations                 simulation spec, runs in the background
///   GET  /simulations/{id}            job status and results
///   GET  /simulations/{id}/summary.csv
///   GET  /schema
/// Errors: 400 malformed JSON, 404 unknown id, 409 revision conflict or
/// terminal state, 422 validation or range error. Trial responses carry the
/// revision in the body and in the X-Revision header.
class HttpServer {
 public:
  explicit HttpServer(TrialService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without serving yet. Port 0 picks a free port; returns the port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires bind().
  void run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace keyboard
