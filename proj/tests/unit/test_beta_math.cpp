#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "keyboard/beta_math.hpp"
#include "keyboard/errors.hpp"
#include "oracles.hpp"

using namespace keyboard;

TEST_CASE("closed forms of the incomplete beta") {
  for (double x : {0.0, 1e-9, 0.05, 0.3, 0.5, 0.77, 0.999, 1.0}) {
    for (double b : {0.5, 1.0, 2.0, 7.0, 40.0}) {
      CHECK(regularized_incomplete_beta(x, 1.0, b) == doctest::Approx(1.0 - std::pow(1.0 - x, b)).epsilon(1e-13));
      CHECK(regularized_incomplete_beta(x, b, 1.0) == doctest::Approx(std::pow(x, b)).epsilon(1e-13));
    }
  }
  CHECK(regularized_incomplete_beta(0.3, 4, 1) == doctest::Approx(0.0081).epsilon(1e-14));
}

TEST_CASE("incomplete beta agrees with boost across the posterior range") {
  const std::vector<double> shapes{0.5, 1, 2, 3.5, 10, 31, 100, 1001, 5000};
  for (double a : shapes) {
    for (double b : shapes) {
      for (double x : {1e-6, 0.01, 0.1, 0.25, 0.3, 0.35, 0.5, 0.8, 0.99, 1 - 1e-6}) {
        INFO("a=" << a << " b=" << b << " x=" << x);
        CHECK(std::abs(regularized_incomplete_beta(x, a, b) - boost::math::ibeta(a, b, x)) <
              1e-12 * std::max(1.0, (a + b) / 1000.0));
      }
    }
  }
}

TEST_CASE("incomplete beta symmetry and monotonicity") {
  for (double a : {1.0, 4.0, 17.0}) {
    for (double b : {1.0, 2.5, 30.0}) {
      double prev = 0.0;
      for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        const double v = regularized_incomplete_beta(x, a, b);
        CHECK(v >= prev - 1e-15);
        CHECK(v + regularized_incomplete_beta(1.0 - x, b, a) == doctest::Approx(1.0).epsilon(1e-13));
        prev = v;
      }
    }
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(regularized_incomplete_beta(-0.1, 1, 1), DomainError);
  CHECK_THROWS_AS(regularized_incomplete_beta(1.1, 1, 1), DomainError);
  CHECK_THROWS_AS(regularized_incomplete_beta(0.5, 0, 1), DomainError);
  CHECK_THROWS_AS(regularized_incomplete_beta(0.5, 1, -2), DomainError);
  CHECK_THROWS_AS(regularized_incomplete_beta(std::nan(""), 1, 1), DomainError);
  CHECK_THROWS_AS(posterior_interval_prob(0.4, 0.3, {3, 1}), DomainError);
  CHECK_THROWS_AS(posterior_interval_prob(0.3, 0.3, {3, 1}), DomainError);
  CHECK_THROWS_AS(posterior_interval_prob(0.1, 0.3, {3, 4}), DomainError);
  CHECK_THROWS_AS(posterior_interval_prob(-0.1, 0.3, {3, 1}), DomainError);
  CHECK_THROWS_AS(posterior_exceed_prob(0.0, {3, 1}), DomainError);
}

TEST_CASE("posterior interval probability matches numerical integration") {
  for (int n : {0, 1, 3, 6, 12, 30}) {
    for (int y = 0; y <= n; ++y) {
      for (auto [lo, hi] : {std::pair{0.0, 0.15}, {0.25, 0.35}, {0.17, 0.23}, {0.45, 1.0}}) {
        INFO("n=" << n << " y=" << y << " (" << lo << "," << hi << ")");
        const double want = oracle::beta_mass_simpson(lo, hi, y + 1.0, n - y + 1.0);
        CHECK(posterior_interval_prob(lo, hi, {n, y}) == doctest::Approx(want).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("uniform prior and exceedance") {
  CHECK(posterior_interval_prob(0.25, 0.35, {0, 0}) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(posterior_exceed_prob(0.3, {0, 0}) == doctest::Approx(0.7).epsilon(1e-14));
  // Beta(4, 1): Pr(p > 0.3) = 1 - 0.3^4
  CHECK(posterior_exceed_prob(0.3, {3, 3}) == doctest::Approx(1 - 0.0081).epsilon(1e-14));
  CHECK(posterior_interval_prob(0.0, 1.0, {20, 7}) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("posterior cdf over several cuts") {
  const std::vector<double> cuts{0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95};
  std::vector<double> out(cuts.size());
  for (DoseData d : {DoseData{0, 0}, DoseData{5, 2}, DoseData{40, 9}}) {
    posterior_cdf(cuts, d, out);
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      CHECK(out[i] == doctest::Approx(boost::math::ibeta(d.y + 1.0, d.n - d.y + 1.0, cuts[i])).epsilon(1e-12));
    }
  }
}
