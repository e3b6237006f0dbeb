#include <doctest.h>

#include <cmath>
#include <random>

#include "keyboard/errors.hpp"
#include "keyboard/isotonic.hpp"
#include "oracles.hpp"

using namespace keyboard;

namespace {

std::vector<std::pair<int, int>> matrix_constraints(int rows, int cols) {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) out.emplace_back(r * cols + c, r * cols + c + 1);
      if (r + 1 < rows) out.emplace_back(r * cols + c, (r + 1) * cols + c);
    }
  return out;
}

WeightedMatrix random_instance(int rows, int cols, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> val(0.0, 1.0), wt(0.2, 5.0);
  WeightedMatrix m{Grid<double>(rows, cols), Grid<double>(rows, cols), Grid<std::uint8_t>(rows, cols, 1)};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      m.values(r, c) = val(gen);
      m.weights(r, c) = wt(gen);
    }
  return m;
}

}  // namespace

TEST_CASE("matches the active-set oracle on small matrices") {
  std::mt19937_64 gen(17);
  for (auto [rows, cols, reps] : {std::tuple{2, 2, 200}, {2, 3, 100}, {3, 2, 50}}) {
    const auto cons = matrix_constraints(rows, cols);
    for (int rep = 0; rep < reps; ++rep) {
      const auto m = random_instance(rows, cols, gen);
      const auto fit = matrix_isotonic(m);
      const auto want = oracle::isotonic_active_set(m.values.values(), m.weights.values(), cons);
      for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(fit.values()[i] - want[i]) < 1e-6);
    }
  }
}

TEST_CASE("single row or column reduces to PAVA") {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 100; ++rep) {
    const int len = 1 + static_cast<int>(gen() % 9);
    const auto m = random_instance(1, len, gen);
    const auto want = oracle::pava(m.values.values(), m.weights.values());
    const auto fit = matrix_isotonic(m);
    for (int i = 0; i < len; ++i) CHECK(fit(0, i) == doctest::Approx(want[i]).epsilon(1e-12));

    WeightedMatrix col{Grid<double>(len, 1), Grid<double>(len, 1), Grid<std::uint8_t>(len, 1, 1)};
    for (int i = 0; i < len; ++i) {
      col.values(i, 0) = m.values(0, i);
      col.weights(i, 0) = m.weights(0, i);
    }
    const auto cfit = matrix_isotonic(col);
    for (int i = 0; i < len; ++i) CHECK(cfit(i, 0) == doctest::Approx(want[i]).epsilon(1e-12));

    std::vector<double> v = m.values.values();
    pava(v, m.weights.values());
    for (int i = 0; i < len; ++i) CHECK(v[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("idempotence, order and weighted mean") {
  std::mt19937_64 gen(99);
  for (int rep = 0; rep < 50; ++rep) {
    const auto m = random_instance(3, 4, gen);
    const auto fit = matrix_isotonic(m);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) {
        if (c + 1 < 4) CHECK(fit(r, c) <= fit(r, c + 1) + 1e-9);
        if (r + 1 < 3) CHECK(fit(r, c) <= fit(r + 1, c) + 1e-9);
      }
    WeightedMatrix again = m;
    again.values = fit;
    const auto fit2 = matrix_isotonic(again);
    for (std::size_t i = 0; i < fit.size(); ++i) CHECK(std::abs(fit2.values()[i] - fit.values()[i]) < 1e-8);

    double in = 0, out = 0, w = 0;
    for (std::size_t i = 0; i < fit.size(); ++i) {
      in += m.weights.values()[i] * m.values.values()[i];
      out += m.weights.values()[i] * fit.values()[i];
      w += m.weights.values()[i];
    }
    CHECK(std::abs(in / w - out / w) < 1e-10);
  }
}

TEST_CASE("inactive cells are skipped but still order their neighbours") {
  // (1,1) and (2,2) active, linked only through inactive (1,2)/(2,1).
  WeightedMatrix m{Grid<double>(2, 2, 0.0), Grid<double>(2, 2, 1.0), Grid<std::uint8_t>(2, 2, 0)};
  m.values(0, 0) = 0.6;
  m.values(1, 1) = 0.2;
  m.active(0, 0) = m.active(1, 1) = 1;
  const auto fit = matrix_isotonic(m);
  CHECK(std::isnan(fit(0, 1)));
  CHECK(std::isnan(fit(1, 0)));
  CHECK(fit(0, 0) == doctest::Approx(0.4));
  CHECK(fit(1, 1) == doctest::Approx(0.4));

  // Oracle on random masks of a 3x3 using the induced partial order.
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 100; ++rep) {
    auto w = random_instance(3, 3, gen);
    std::vector<int> idx;
    for (int i = 0; i < 9; ++i) {
      w.active(i / 3, i % 3) = (gen() % 3) != 0;
      if (w.active(i / 3, i % 3)) idx.push_back(i);
    }
    if (idx.size() > 6 || idx.empty()) continue;
    std::vector<double> y, wt;
    for (int i : idx) {
      y.push_back(w.values.values()[static_cast<std::size_t>(i)]);
      wt.push_back(w.weights.values()[static_cast<std::size_t>(i)]);
    }
    std::vector<std::pair<int, int>> cons;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b)
        if (a != b && idx[a] / 3 <= idx[b] / 3 && idx[a] % 3 <= idx[b] % 3)
          cons.emplace_back(static_cast<int>(a), static_cast<int>(b));
    if (cons.size() > 14) continue;
    const auto want = oracle::isotonic_active_set(y, wt, cons);
    const auto fit3 = matrix_isotonic(w);
    for (std::size_t a = 0; a < idx.size(); ++a)
      CHECK(std::abs(fit3.values()[static_cast<std::size_t>(idx[a])] - want[a]) < 1e-6);
  }
}

TEST_CASE("input validation and the cycle cap") {
  WeightedMatrix bad = WeightedMatrix::uniform(Grid<double>(2, 2, 0.5));
  bad.weights(0, 1) = 0.0;
  CHECK_THROWS_AS(matrix_isotonic(bad), DomainError);

  WeightedMatrix hard = WeightedMatrix::uniform(Grid<double>(2, 2, 0.0));
  hard.values(0, 0) = 1.0;
  hard.values(1, 1) = -1.0;
  CHECK_THROWS_AS(matrix_isotonic(hard, {1e-10, 1}), ConvergenceError);
  CHECK_NOTHROW(matrix_isotonic(hard));
}
