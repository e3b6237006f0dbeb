#pragma once

#include <span>

namespace keyboard {

/// Patients treated at a dose and how many of them had a dose-limiting toxicity.
struct DoseData {
  int n = 0;
  int y = 0;

  bool valid() const { return n >= 0 && y >= 0 && y <= n; }
  friend bool operator==(const DoseData&, const DoseData&) = default;
};

/// Regularized incomplete beta I_x(a, b), i.e. the Beta(a, b) CDF at x.
///
/// Continued fraction evaluated with the modified Lentz method; for
/// x > a / (a + b) the complement 1 - I_{1-x}(b, a) is used so the fraction
/// always converges quickly. Parameters come from Beta(y + 1, n - y + 1)
/// posteriors, so no large-parameter asymptotic branch exists. The log-gamma
/// prefactor limits absolute accuracy to about 1e-12 for a + b <= 1000,
/// growing roughly in proportion to a + b beyond that (a few 1e-12 at 1e4).
///
/// Throws DomainError for x outside [0, 1] or non-positive a, b.
double regularized_incomplete_beta(double x, double a, double b);

/// Pr(lo < p < hi) under the Beta(y + 1, n - y + 1) posterior of a uniform prior.
/// Throws DomainError unless 0 <= lo < hi <= 1 and data is valid.
double posterior_interval_prob(double lo, double hi, DoseData data);

/// Pr(p > phi) under the Beta(y + 1, n - y + 1) posterior. phi must be in (0, 1).
double posterior_exceed_prob(double phi, DoseData data);

/// Posterior CDF at each of the sorted points in `cuts`, written into `out`.
/// Cheaper than repeated interval queries when scanning a key partition.
void posterior_cdf(std::span<const double> cuts, DoseData data, std::span<double> out);

}  // namespace keyboard
