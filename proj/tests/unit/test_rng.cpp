#include <doctest.h>

#include <set>
#include <vector>

#include "keyboard/rng.hpp"
#include "oracles.hpp"

using namespace keyboard;

TEST_CASE("same seed, same stream") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differs = differs || x != c();
  }
  CHECK(differs);
}

TEST_CASE("derived seeds are distinct and order sensitive") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 50; ++i)
    for (std::uint64_t j = 0; j < 50; ++j) seen.insert(derive_seed(9, {i, j}));
  CHECK(seen.size() == 2500);
  CHECK(derive_seed(9, {1, 2}) != derive_seed(9, {2, 1}));
  CHECK(derive_seed(9, {1}) != derive_seed(10, {1}));
  CHECK(derive_seed(9, {1, 2}) == derive_seed(9, {1, 2}));
  CHECK(Rng(5).split(1)() == Rng(5).split(1)());
  CHECK(Rng(5).split(1)() != Rng(5).split(2)());
}

TEST_CASE("uniform01 is on the open unit interval") {
  Rng r(1);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform01();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("below is uniform") {
  Rng r(3);
  std::vector<long> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  CHECK(oracle::chi_square_uniform_p(counts) > 0.001);
  CHECK(r.below(1) == 0);
}

TEST_CASE("beta variates have the right mean") {
  Rng r(11);
  for (auto [a, b] : {std::pair{2.0, 5.0}, {0.6, 0.4}, {0.1, 0.9}}) {
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double x = r.beta(a, b);
      REQUIRE(x >= 0.0);
      REQUIRE(x <= 1.0);
      sum += x;
    }
    CHECK(sum / n == doctest::Approx(a / (a + b)).epsilon(0.02));
  }
}
