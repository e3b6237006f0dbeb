#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "keyboard/beta_math.hpp"

namespace keyboard {

struct Key {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  friend bool operator==(const Key&, const Key&) = default;
};

/// Equal-width keys tiling (0, 1) outward from the target key (phi - eps1, phi + eps2).
/// Residual ends narrower than one key are not covered.
struct KeyPartition {
  double phi = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  std::vector<Key> keys;  // ascending, contiguous
  std::size_t target_index = 0;

  const Key& target() const { return keys[target_index]; }
  /// keys[0].lo, keys[0].hi, keys[1].hi, ..., keys.back().hi
  std::vector<double> boundaries() const;
};

enum class Decision { Escalate, Retain, Deescalate };

std::string_view to_string(Decision d);
Decision decision_from_string(std::string_view s);

/// Pre-tabulated boundaries for n = 1..n_max patients at the current dose.
/// Escalate when y <= escalate_le(n), de-escalate when y >= deescalate_ge(n).
/// "Never escalate" is stored as -1 and "never de-escalate" as n + 1.
struct DecisionTable {
  double phi = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  int n_max = 0;
  std::vector<int> escalate_if_at_most;     // [n - 1]
  std::vector<int> deescalate_if_at_least;  // [n - 1]

  int escalate_le(int n) const { return escalate_if_at_most.at(static_cast<std::size_t>(n - 1)); }
  int deescalate_ge(int n) const { return deescalate_if_at_least.at(static_cast<std::size_t>(n - 1)); }
};

/// Throws DomainError unless 0 < phi - eps1 and phi + eps2 < 1 with eps1, eps2 > 0.
KeyPartition build_keys(double phi, double eps1, double eps2);

/// Index of the key with the largest posterior probability. Ties (relative 1e-12)
/// go to the key closest to the target, then to the higher-toxicity key.
std::size_t strongest_key(DoseData data, const KeyPartition& partition);

/// Posterior probability of every key, in partition order.
std::vector<double> key_probabilities(DoseData data, const KeyPartition& partition);

Decision decide(DoseData data, const KeyPartition& partition);

/// Three-key form of the rule: compares only the target key and its two
/// neighbours. Requires phi - 2 eps1 - eps2 > 0 and phi + eps1 + 2 eps2 < 1.
Decision decide_three_key(DoseData data, double phi, double eps1, double eps2);

DecisionTable build_decision_table(double phi, double eps1, double eps2, int n_max);

/// True iff Pr(p > phi | data) >= cutoff.
bool should_eliminate(DoseData data, double phi, double cutoff);

std::string decision_table_csv(const DecisionTable& table);
std::string decision_table_markdown(const DecisionTable& table);

}  // namespace keyboard
