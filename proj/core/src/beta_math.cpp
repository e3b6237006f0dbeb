#include "keyboard/beta_math.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "keyboard/errors.hpp"

namespace keyboard {
namespace {

constexpr double kTiny = 1e-300;
constexpr double kCfTolerance = 1e-15;
constexpr int kMaxCfIterations = 1'000'000;

double log_beta(double a, double b) {
  int sign = 0;
  return ::lgamma_r(a, &sign) + ::lgamma_r(b, &sign) - ::lgamma_r(a + b, &sign);
}

// Continued fraction for I_x(a,b) * a / front, modified Lentz.
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxCfIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kCfTolerance) return h;
  }
  throw ConvergenceError("incomplete beta continued fraction did not converge (a=" +
                         std::to_string(a) + ", b=" + std::to_string(b) + ")");
}

// Caller guarantees 0 < x < 1 and x <= a / (a + b).
double lower_tail(double x, double a, double b) {
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  return front * beta_continued_fraction(x, a, b) / a;
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

void check_data(const DoseData& data) {
  if (!data.valid()) {
    throw DomainError("invalid dose data: n=" + std::to_string(data.n) +
                      ", y=" + std::to_string(data.y));
  }
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta: x must lie in [0, 1]");
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta: a and b must be positive");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (x <= a / (a + b)) return clamp01(lower_tail(x, a, b));
  return clamp01(1.0 - lower_tail(1.0 - x, b, a));
}

double posterior_interval_prob(double lo, double hi, DoseData data) {
  check_data(data);
  if (!(lo >= 0.0 && hi <= 1.0)) throw DomainError("interval must lie within [0, 1]");
  if (!(lo < hi)) throw DomainError("interval requires lo < hi");
  const double a = data.y + 1.0;
  const double b = data.n - data.y + 1.0;
  return clamp01(regularized_incomplete_beta(hi, a, b) - regularized_incomplete_beta(lo, a, b));
}

double posterior_exceed_prob(double phi, DoseData data) {
  check_data(data);
  if (!(phi > 0.0 && phi < 1.0)) throw DomainError("exceedance threshold must lie in (0, 1)");
  return 1.0 - regularized_incomplete_beta(phi, data.y + 1.0, data.n - data.y + 1.0);
}

void posterior_cdf(std::span<const double> cuts, DoseData data, std::span<double> out) {
  check_data(data);
  if (out.size() < cuts.size()) throw DomainError("posterior_cdf: output span too small");
  const double a = data.y + 1.0;
  const double b = data.n - data.y + 1.0;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    out[i] = regularized_incomplete_beta(cuts[i], a, b);
  }
}

}  // namespace keyboard
