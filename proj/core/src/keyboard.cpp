#include "keyboard/keyboard.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "keyboard/errors.hpp"

namespace keyboard {
namespace {

constexpr double kEdgeSlack = 1e-12;
constexpr double kTieTolerance = 1e-12;  // relative: tail probabilities can all be far below 1e-12

// Argmax with the safety tie-break: nearest to `target`, then the higher index.
std::size_t tie_broken_argmax(const std::vector<double>& probs, std::size_t target) {
  const double best = *std::max_element(probs.begin(), probs.end());
  std::size_t chosen = probs.size();
  long chosen_dist = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] < best * (1.0 - kTieTolerance)) continue;
    const long dist = std::labs(static_cast<long>(i) - static_cast<long>(target));
    if (chosen == probs.size() || dist < chosen_dist || (dist == chosen_dist && i > chosen)) {
      chosen = i;
      chosen_dist = dist;
    }
  }
  return chosen;
}

Decision decision_for(std::size_t strongest, std::size_t target) {
  if (strongest < target) return Decision::Escalate;
  if (strongest > target) return Decision::Deescalate;
  return Decision::Retain;
}

}  // namespace

std::vector<double> KeyPartition::boundaries() const {
  std::vector<double> cuts;
  cuts.reserve(keys.size() + 1);
  cuts.push_back(keys.front().lo);
  for (const auto& k : keys) cuts.push_back(k.hi);
  return cuts;
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::Escalate:
      return "escalate";
    case Decision::Retain:
      return "retain";
    case Decision::Deescalate:
      return "deescalate";
  }
  return "retain";
}

Decision decision_from_string(std::string_view s) {
  if (s == "escalate") return Decision::Escalate;
  if (s == "retain") return Decision::Retain;
  if (s == "deescalate") return Decision::Deescalate;
  throw DomainError("unknown decision: " + std::string(s));
}

KeyPartition build_keys(double phi, double eps1, double eps2) {
  if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw DomainError("eps1 and eps2 must be positive");
  const double lo = phi - eps1;
  const double hi = phi + eps2;
  if (!(lo > 0.0) || !(hi < 1.0)) {
    throw DomainError("target key (phi - eps1, phi + eps2) must lie strictly inside (0, 1)");
  }
  const double width = eps1 + eps2;

  KeyPartition part;
  part.phi = phi;
  part.eps1 = eps1;
  part.eps2 = eps2;

  std::vector<Key> below;
  for (int m = 1;; ++m) {
    const double klo = lo - m * width;
    if (klo < -kEdgeSlack) break;
    below.push_back({std::max(klo, 0.0), lo - (m - 1) * width});
  }
  part.keys.assign(below.rbegin(), below.rend());
  part.target_index = part.keys.size();
  part.keys.push_back({lo, hi});
  for (int m = 1;; ++m) {
    const double khi = hi + m * width;
    if (khi > 1.0 + kEdgeSlack) break;
    part.keys.push_back({hi + (m - 1) * width, std::min(khi, 1.0)});
  }
  return part;
}

std::vector<double> key_probabilities(DoseData data, const KeyPartition& partition) {
  const auto cuts = partition.boundaries();
  std::vector<double> cdf(cuts.size());
  posterior_cdf(cuts, data, cdf);
  std::vector<double> probs(partition.keys.size());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = cdf[i + 1] - cdf[i];
  return probs;
}

std::size_t strongest_key(DoseData data, const KeyPartition& partition) {
  return tie_broken_argmax(key_probabilities(data, partition), partition.target_index);
}

Decision decide(DoseData data, const KeyPartition& partition) {
  return decision_for(strongest_key(data, partition), partition.target_index);
}

Decision decide_three_key(DoseData data, double phi, double eps1, double eps2) {
  if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw DomainError("eps1 and eps2 must be positive");
  if (!(phi - 2.0 * eps1 - eps2 > 0.0) || !(phi + eps1 + 2.0 * eps2 < 1.0)) {
    throw DomainError("three-key rule requires phi - 2 eps1 - eps2 > 0 and phi + eps1 + 2 eps2 < 1");
  }
  const std::array<double, 4> cuts{phi - 2.0 * eps1 - eps2, phi - eps1, phi + eps2,
                                   phi + eps1 + 2.0 * eps2};
  std::array<double, 4> cdf{};
  posterior_cdf(cuts, data, cdf);
  const std::vector<double> probs{cdf[1] - cdf[0], cdf[2] - cdf[1], cdf[3] - cdf[2]};
  return decision_for(tie_broken_argmax(probs, 1), 1);
}

DecisionTable build_decision_table(double phi, double eps1, double eps2, int n_max) {
  if (n_max < 1) throw DomainError("decision table needs n_max >= 1");
  const KeyPartition part = build_keys(phi, eps1, eps2);
  DecisionTable table;
  table.phi = phi;
  table.eps1 = eps1;
  table.eps2 = eps2;
  table.n_max = n_max;
  for (int n = 1; n <= n_max; ++n) {
    int esc = -1;
    int deesc = n + 1;
    for (int y = 0; y <= n; ++y) {
      const Decision d = decide({n, y}, part);
      if (d == Decision::Escalate) esc = y;
      if (d == Decision::Deescalate && deesc == n + 1) deesc = y;
    }
    table.escalate_if_at_most.push_back(esc);
    table.deescalate_if_at_least.push_back(deesc);
  }
  return table;
}

bool should_eliminate(DoseData data, double phi, double cutoff) {
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw DomainError("elimination cutoff must lie in (0, 1)");
  return posterior_exceed_prob(phi, data) >= cutoff;
}

std::string decision_table_csv(const DecisionTable& table) {
  std::ostringstream os;
  os << "n,escalate_le,deescalate_ge\n";
  for (int n = 1; n <= table.n_max; ++n) {
    os << n << ',' << table.escalate_le(n) << ',' << table.deescalate_ge(n) << '\n';
  }
  return os.str();
}

std::string decision_table_markdown(const DecisionTable& table) {
  std::ostringstream os;
  os << "| |";
  for (int n = 1; n <= table.n_max; ++n) os << ' ' << n << " |";
  os << "\n|---|";
  for (int n = 1; n <= table.n_max; ++n) os << "---|";
  os << "\n| Escalate if DLTs <= |";
  for (int n = 1; n <= table.n_max; ++n) {
    const int v = table.escalate_le(n);
    if (v < 0) os << " NA |"; else os << ' ' << v << " |";
  }
  os << "\n| De-escalate if DLTs >= |";
  for (int n = 1; n <= table.n_max; ++n) {
    const int v = table.deescalate_ge(n);
    if (v > n) os << " NA |"; else os << ' ' << v << " |";
  }
  os << '\n';
  return os.str();
}

}  // namespace keyboard
