#pragma once

#include <vector>

#include "keyboard/keyboard.hpp"

namespace keyboard {

/// Memoised per-(n, y) quantities the trial engine asks for on every cohort:
/// the keyboard decision, the target-key posterior probability and the
/// elimination flag. Filled eagerly for n <= memo_limit and computed on the
/// fly beyond it; immutable after construction, so one instance can be shared
/// across simulation threads.
class DecisionCache {
 public:
  DecisionCache(double phi, double eps1, double eps2, double cutoff, int memo_limit);

  const KeyPartition& partition() const { return partition_; }
  double phi() const { return phi_; }
  double cutoff() const { return cutoff_; }

  Decision decision(DoseData d) const;
  double target_prob(DoseData d) const;
  bool eliminate(DoseData d) const;

 private:
  struct Entry {
    Decision decision;
    double target_prob;
    bool eliminate;
  };
  bool memoised(DoseData d) const { return d.n <= memo_limit_; }
  static std::size_t slot(DoseData d) {
    return static_cast<std::size_t>(d.n) * (d.n + 1) / 2 + static_cast<std::size_t>(d.y);
  }

  KeyPartition partition_;
  double phi_;
  double cutoff_;
  int memo_limit_;
  std::vector<Entry> table_;
};

}  // namespace keyboard
