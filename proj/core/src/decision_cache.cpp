#include "keyboard/decision_cache.hpp"

#include "keyboard/errors.hpp"

namespace keyboard {

DecisionCache::DecisionCache(double phi, double eps1, double eps2, double cutoff, int memo_limit)
    : partition_(build_keys(phi, eps1, eps2)), phi_(phi), cutoff_(cutoff), memo_limit_(memo_limit) {
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw DomainError("elimination cutoff must lie in (0, 1)");
  if (memo_limit_ < 0) memo_limit_ = 0;
  table_.reserve(slot({memo_limit_ + 1, 0}));
  const Key target = partition_.target();
  for (int n = 0; n <= memo_limit_; ++n) {
    for (int y = 0; y <= n; ++y) {
      const DoseData d{n, y};
      table_.push_back({decide(d, partition_), posterior_interval_prob(target.lo, target.hi, d),
                        should_eliminate(d, phi_, cutoff_)});
    }
  }
}

Decision DecisionCache::decision(DoseData d) const {
  if (!d.valid()) throw DomainError("invalid dose data");
  return memoised(d) ? table_[slot(d)].decision : decide(d, partition_);
}

double DecisionCache::target_prob(DoseData d) const {
  if (!d.valid()) throw DomainError("invalid dose data");
  if (memoised(d)) return table_[slot(d)].target_prob;
  return posterior_interval_prob(partition_.target().lo, partition_.target().hi, d);
}

bool DecisionCache::eliminate(DoseData d) const {
  if (!d.valid()) throw DomainError("invalid dose data");
  return memoised(d) ? table_[slot(d)].eliminate : should_eliminate(d, phi_, cutoff_);
}

}  // namespace keyboard
