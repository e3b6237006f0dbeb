#pragma once

// Reference implementations the library is checked against. Deliberately
// naive: brute force or textbook formulas, no shared code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/beta.hpp>

namespace oracle {

// Composite Simpson rule for the Beta(a, b) density over [lo, hi].
inline double beta_mass_simpson(double lo, double hi, double a, double b, int steps = 20000) {
  const double lb = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto pdf = [&](double x) {
    if (x <= 0.0) return a == 1.0 ? std::exp(-lb) : 0.0;
    if (x >= 1.0) return b == 1.0 ? std::exp(-lb) : 0.0;
    return std::exp((a - 1) * std::log(x) + (b - 1) * std::log1p(-x) - lb);
  };
  const double h = (hi - lo) / steps;
  double s = pdf(lo) + pdf(hi);
  for (int i = 1; i < steps; ++i) s += pdf(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Pr(lo < p < hi) for Beta(y + 1, n - y + 1), via boost.
inline double posterior_mass(double lo, double hi, int n, int y) {
  const double a = y + 1.0, b = n - y + 1.0;
  return boost::math::ibeta(a, b, hi) - boost::math::ibeta(a, b, lo);
}

// Keyboard decision from first principles: enumerate keys, take the most
// probable one, compare it with the target key.
enum class Move { Escalate, Retain, Deescalate };
inline Move keyboard_move(int n, int y, double phi, double e1, double e2) {
  const double w = e1 + e2;
  std::vector<std::pair<double, double>> keys;
  double lo = phi - e1;
  while (lo - w > -1e-12) lo -= w;
  for (double k = lo; k + w < 1.0 + 1e-12; k += w) keys.emplace_back(std::max(0.0, k), std::min(1.0, k + w));
  std::size_t target = 0;
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (std::abs(keys[i].first - (phi - e1)) < 1e-9) target = i;
  std::size_t best = 0;
  double best_p = -1.0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double p = posterior_mass(keys[i].first, keys[i].second, n, y);
    const auto dist = [&](std::size_t k) { return k > target ? k - target : target - k; };
    const double tol = 1e-12 * std::max(p, best_p);
    if (p > best_p + tol || (std::abs(p - best_p) <= tol &&
                               (dist(i) < dist(best) || (dist(i) == dist(best) && i > best)))) {
      best = i;
      best_p = p;
    }
  }
  if (best < target) return Move::Escalate;
  if (best > target) return Move::Deescalate;
  return Move::Retain;
}

// Textbook PAVA: merge adjacent violating blocks until none remain.
inline std::vector<double> pava(const std::vector<double>& y, const std::vector<double>& w) {
  struct Block { double sum, weight; std::size_t count; };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < y.size(); ++i) blocks.push_back({y[i] * w[i], w[i], 1});
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i + 1 < blocks.size(); ++i) {
      if (blocks[i].sum / blocks[i].weight > blocks[i + 1].sum / blocks[i + 1].weight) {
        blocks[i].sum += blocks[i + 1].sum;
        blocks[i].weight += blocks[i + 1].weight;
        blocks[i].count += blocks[i + 1].count;
        blocks.erase(blocks.begin() + static_cast<long>(i) + 1);
        merged = true;
        break;
      }
    }
  }
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.sum / b.weight);
  return out;
}

// Weighted isotonic least squares under arbitrary pairwise constraints
// x[lo] <= x[hi], by enumerating every subset of constraints held at
// equality. The optimum is the block-mean solution of the feasible subset
// with the smallest objective.
inline std::vector<double> isotonic_active_set(const std::vector<double>& y, const std::vector<double>& w,
                                               const std::vector<std::pair<int, int>>& constraints) {
  const std::size_t n = y.size();
  const std::size_t m = constraints.size();
  std::vector<double> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned long mask = 0; mask < (1UL << m); ++mask) {
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> root = [&](int i) { return parent[i] == i ? i : parent[i] = root(parent[i]); };
    for (std::size_t c = 0; c < m; ++c)
      if (mask >> c & 1) parent[root(constraints[c].first)] = root(constraints[c].second);
    std::vector<double> sum(n, 0.0), wt(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[root(static_cast<int>(i))] += w[i] * y[i];
      wt[root(static_cast<int>(i))] += w[i];
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = sum[root(static_cast<int>(i))] / wt[root(static_cast<int>(i))];
    bool feasible = true;
    for (const auto& [a, b] : constraints) feasible = feasible && x[a] <= x[b] + 1e-12;
    if (!feasible) continue;
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += w[i] * (x[i] - y[i]) * (x[i] - y[i]);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }
  return best;
}

// Chi-square goodness-of-fit p-value for equal expected counts.
inline double chi_square_uniform_p(const std::vector<long>& counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (long c : counts) stat += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace oracle
