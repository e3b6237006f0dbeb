#include <doctest.h>

#include <random>

#include "keyboard/errors.hpp"
#include "keyboard/keyboard.hpp"
#include "oracles.hpp"

using namespace keyboard;

namespace {
const std::vector<int> kEsc02{0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
const std::vector<int> kDe02{1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3, 4, 4, 4};
const std::vector<int> kEsc03{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3};
const std::vector<int> kDe03{1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4, 5, 5, 5, 6, 6};

Decision to_decision(oracle::Move m) {
  switch (m) {
    case oracle::Move::Escalate: return Decision::Escalate;
    case oracle::Move::Retain: return Decision::Retain;
    default: return Decision::Deescalate;
  }
}
}  // namespace

TEST_CASE("key partition") {
  const auto p = build_keys(0.3, 0.05, 0.05);
  CHECK(p.target().lo == doctest::Approx(0.25));
  CHECK(p.target().hi == doctest::Approx(0.35));
  REQUIRE(p.keys.size() == 9);  // 0.05 .. 0.95
  CHECK(p.target_index == 2);
  for (std::size_t i = 0; i < p.keys.size(); ++i) {
    CHECK(p.keys[i].width() == doctest::Approx(0.1));
    CHECK(p.keys[i].lo >= 0.0);
    CHECK(p.keys[i].hi <= 1.0);
    if (i > 0) CHECK(p.keys[i].lo == p.keys[i - 1].hi);
  }
  CHECK(p.boundaries().size() == p.keys.size() + 1);

  const auto q = build_keys(0.2, 0.03, 0.03);
  CHECK(q.target().lo == doctest::Approx(0.17));
  CHECK(q.keys.front().lo < 0.06);  // residual below the lowest key is narrower than a key
  CHECK(1.0 - q.keys.back().hi < 0.06);

  CHECK_THROWS_AS(build_keys(0.05, 0.06, 0.05), DomainError);
  CHECK_THROWS_AS(build_keys(0.9, 0.05, 0.1), DomainError);
  CHECK_THROWS_AS(build_keys(0.3, 0.0, 0.05), DomainError);
}

TEST_CASE("decision boundaries for the two standard settings") {
  const auto t2 = build_decision_table(0.2, 0.03, 0.03, 16);
  const auto t3 = build_decision_table(0.3, 0.05, 0.05, 16);
  for (int n = 1; n <= 16; ++n) {
    CAPTURE(n);
    CHECK(t2.escalate_le(n) == kEsc02[n - 1]);
    CHECK(t2.deescalate_ge(n) == kDe02[n - 1]);
    CHECK(t3.escalate_le(n) == kEsc03[n - 1]);
    CHECK(t3.deescalate_ge(n) == kDe03[n - 1]);
  }
}

TEST_CASE("table boundaries are consistent with decide") {
  const auto part = build_keys(0.25, 0.05, 0.05);
  const auto t = build_decision_table(0.25, 0.05, 0.05, 40);
  for (int n = 1; n <= 40; ++n) {
    for (int y = 0; y <= n; ++y) {
      const Decision d = decide({n, y}, part);
      CHECK((d == Decision::Escalate) == (y <= t.escalate_le(n)));
      CHECK((d == Decision::Deescalate) == (y >= t.deescalate_ge(n)));
    }
  }
}

TEST_CASE("strongest key for 2 of 5 at phi 0.2") {
  const auto p = build_keys(0.2, 0.05, 0.05);
  const auto idx = strongest_key({5, 2}, p);
  CHECK(p.keys[idx].lo == doctest::Approx(0.35));
  CHECK(p.keys[idx].hi == doctest::Approx(0.45));
  CHECK(decide({5, 2}, p) == Decision::Deescalate);
  const auto probs = key_probabilities({5, 2}, p);
  for (double v : probs) CHECK(v <= probs[idx]);
}

TEST_CASE("decide agrees with an independent implementation") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 15; ++trial) {
    const double phi = 0.15 + 0.3 * u(gen);
    const double e1 = 0.02 + 0.05 * u(gen);
    const double e2 = 0.02 + 0.05 * u(gen);
    const auto part = build_keys(phi, e1, e2);
    for (int n = 0; n <= 20; ++n) {
      for (int y = 0; y <= n; ++y) {
        CAPTURE(phi); CAPTURE(e1); CAPTURE(e2); CAPTURE(n); CAPTURE(y);
        CHECK(decide({n, y}, part) == to_decision(oracle::keyboard_move(n, y, phi, e1, e2)));
      }
    }
  }
}

TEST_CASE("coherence") {
  for (auto [phi, e] : {std::pair{0.2, 0.03}, {0.3, 0.05}}) {
    const auto part = build_keys(phi, e, e);
    for (int n = 1; n <= 30; ++n) {
      for (int y = 0; y <= n; ++y) {
        const Decision d = decide({n, y}, part);
        if (static_cast<double>(y) / n > phi) CHECK(d != Decision::Escalate);
        if (static_cast<double>(y) / n < phi) CHECK(d != Decision::Deescalate);
      }
    }
  }
}

TEST_CASE("three-key rule") {
  for (auto [phi, e] : {std::pair{0.2, 0.03}, {0.3, 0.05}, {0.25, 0.05}}) {
    const auto part = build_keys(phi, e, e);
    for (int n = 0; n <= 30; ++n)
      for (int y = 0; y <= n; ++y) CHECK(decide_three_key({n, y}, phi, e, e) == decide({n, y}, part));
  }
  CHECK_THROWS_AS(decide_three_key({3, 1}, 0.1, 0.04, 0.04), DomainError);
}

TEST_CASE("elimination rule") {
  CHECK(should_eliminate({3, 3}, 0.3, 0.95));   // 1 - 0.3^4 = 0.9919
  CHECK_FALSE(should_eliminate({3, 2}, 0.3, 0.95));  // 0.9163
  CHECK_FALSE(should_eliminate({0, 0}, 0.3, 0.95));
  CHECK(should_eliminate({3, 2}, 0.3, 0.9));
}

TEST_CASE("decision strings and exports") {
  for (Decision d : {Decision::Escalate, Decision::Retain, Decision::Deescalate})
    CHECK(decision_from_string(to_string(d)) == d);
  CHECK(to_string(Decision::Deescalate) == "deescalate");
  CHECK_THROWS_AS(decision_from_string("up"), DomainError);

  const auto t = build_decision_table(0.3, 0.05, 0.05, 3);
  CHECK(decision_table_csv(t) == "n,escalate_le,deescalate_ge\n1,0,1\n2,0,1\n3,0,2\n");
  const std::string md = decision_table_markdown(t);
  CHECK(md.find("| 1 | 2 | 3 |") != std::string::npos);
}

TEST_CASE("never-escalate and never-deescalate sentinels") {
  // At phi = 0.5 a single patient with no DLT cannot justify de-escalation.
  const auto t = build_decision_table(0.5, 0.05, 0.05, 2);
  for (int n = 1; n <= 2; ++n) {
    CHECK(t.escalate_le(n) >= -1);
    CHECK(t.deescalate_ge(n) <= n + 1);
    CHECK(t.escalate_le(n) < t.deescalate_ge(n));
  }
}
