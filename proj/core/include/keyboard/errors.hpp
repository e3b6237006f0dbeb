#pragma once

#include <stdexcept>
#include <string>

namespace keyboard {

// Invalid argument to a numeric or design routine (x outside [0,1], key leaving (0,1), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Rejection sampling gave up before hitting the requested MTD count.
class ExhaustionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation not allowed in the trial's current status.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optimistic-concurrency failure; carries the revision actually stored.
class ConflictError : public std::runtime_error {
 public:
  ConflictError(const std::string& what, long current_revision)
      : std::runtime_error(what), current_revision_(current_revision) {}
  long current_revision() const { return current_revision_; }

 private:
  long current_revision_;
};

// Persisted trial data that cannot be read back or fails the replay check.
class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace keyboard

#include <vector>

namespace keyboard {

struct FieldError {
  std::string field;
  std::string message;
};

/// Configuration rejected; carries one message per offending field.
class ValidationError : public DomainError {
 public:
  explicit ValidationError(std::vector<FieldError> errors)
      : DomainError(summarize(errors)), errors_(std::move(errors)) {}
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  static std::string summarize(const std::vector<FieldError>& errors) {
    std::string s = "invalid configuration";
    for (const auto& e : errors) s += "; " + e.field + ": " + e.message;
    return s;
  }
  std::vector<FieldError> errors_;
};

}  // namespace keyboard
