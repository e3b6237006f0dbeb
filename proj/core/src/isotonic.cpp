#include "keyboard/isotonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "keyboard/errors.hpp"

namespace keyboard {
namespace {

using Chain = std::vector<int>;  // flat cell indices in increasing order

struct OrderConstraints {
  std::vector<Chain> rows;
  std::vector<Chain> cols;
  std::vector<std::pair<int, int>> pairs;  // first <= second, not implied by rows/cols
};

OrderConstraints collect_constraints(const Grid<std::uint8_t>& active) {
  const int nr = active.rows();
  const int nc = active.cols();
  const int n = nr * nc;
  OrderConstraints oc;
  for (int r = 0; r < nr; ++r) {
    Chain ch;
    for (int c = 0; c < nc; ++c)
      if (active(r, c)) ch.push_back(r * nc + c);
    if (ch.size() > 1) oc.rows.push_back(std::move(ch));
  }
  for (int c = 0; c < nc; ++c) {
    Chain ch;
    for (int r = 0; r < nr; ++r)
      if (active(r, c)) ch.push_back(r * nc + c);
    if (ch.size() > 1) oc.cols.push_back(std::move(ch));
  }

  // Transitive closure of the chain relations; any order pair it misses
  // needs its own constraint.
  std::vector<std::uint8_t> reach(static_cast<std::size_t>(n) * n, 0);
  auto at = [&](int a, int b) -> std::uint8_t& { return reach[static_cast<std::size_t>(a) * n + b]; };
  for (const auto* group : {&oc.rows, &oc.cols})
    for (const auto& ch : *group)
      for (std::size_t i = 0; i + 1 < ch.size(); ++i) at(ch[i], ch[i + 1]) = 1;
  for (int m = 0; m < n; ++m)
    for (int a = 0; a < n; ++a)
      if (at(a, m))
        for (int b = 0; b < n; ++b)
          if (at(m, b)) at(a, b) = 1;

  for (int a = 0; a < n; ++a) {
    const int ra = a / nc, ca = a % nc;
    if (!active(ra, ca)) continue;
    for (int b = 0; b < n; ++b) {
      const int rb = b / nc, cb = b % nc;
      if (a == b || !active(rb, cb)) continue;
      if (ra <= rb && ca <= cb && !at(a, b)) oc.pairs.emplace_back(a, b);
    }
  }
  return oc;
}

void project_chain(const Chain& ch, std::vector<double>& x, const std::vector<double>& w,
                   std::vector<double>& vbuf, std::vector<double>& wbuf) {
  vbuf.resize(ch.size());
  wbuf.resize(ch.size());
  for (std::size_t i = 0; i < ch.size(); ++i) {
    vbuf[i] = x[ch[i]];
    wbuf[i] = w[ch[i]];
  }
  pava(vbuf, wbuf);
  for (std::size_t i = 0; i < ch.size(); ++i) x[ch[i]] = vbuf[i];
}

}  // namespace

WeightedMatrix WeightedMatrix::uniform(const Grid<double>& values) {
  return {values, Grid<double>(values.rows(), values.cols(), 1.0),
          Grid<std::uint8_t>(values.rows(), values.cols(), 1)};
}

void WeightedMatrix::validate() const {
  if (weights.rows() != values.rows() || weights.cols() != values.cols() ||
      active.rows() != values.rows() || active.cols() != values.cols()) {
    throw DomainError("isotonic: values, weights and mask must share dimensions");
  }
  for (int r = 0; r < values.rows(); ++r)
    for (int c = 0; c < values.cols(); ++c)
      if (active(r, c) && (!(weights(r, c) > 0.0) || !std::isfinite(values(r, c))))
        throw DomainError("isotonic: active cells need finite values and positive weights");
}

void pava(std::span<double> values, std::span<const double> weights) {
  const std::size_t n = values.size();
  if (n < 2) return;
  // Blocks as (mean, weight, length) on a stack.
  std::vector<double> mean;
  std::vector<double> wsum;
  std::vector<std::size_t> len;
  mean.reserve(n);
  wsum.reserve(n);
  len.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    mean.push_back(values[i]);
    wsum.push_back(weights[i]);
    len.push_back(1);
    while (mean.size() > 1 && mean[mean.size() - 2] > mean.back()) {
      const double w = wsum[wsum.size() - 2] + wsum.back();
      const double m = (mean[mean.size() - 2] * wsum[wsum.size() - 2] + mean.back() * wsum.back()) / w;
      const std::size_t l = len[len.size() - 2] + len.back();
      mean.pop_back();
      wsum.pop_back();
      len.pop_back();
      mean.back() = m;
      wsum.back() = w;
      len.back() = l;
    }
  }
  std::size_t pos = 0;
  for (std::size_t b = 0; b < mean.size(); ++b)
    for (std::size_t i = 0; i < len[b]; ++i) values[pos++] = mean[b];
}

Grid<double> matrix_isotonic(const WeightedMatrix& input, const IsotonicOptions& options) {
  input.validate();
  const int nr = input.values.rows();
  const int nc = input.values.cols();
  const std::size_t n = input.values.size();

  const OrderConstraints oc = collect_constraints(input.active);
  std::vector<double> x(input.values.begin(), input.values.end());
  for (std::size_t i = 0; i < n; ++i)
    if (!input.active.values()[i]) x[i] = 0.0;
  const std::vector<double> w(input.weights.begin(), input.weights.end());
  std::vector<double> vbuf, wbuf;

  auto finish = [&]() {
    Grid<double> out(nr, nc, std::numeric_limits<double>::quiet_NaN());
    for (int r = 0; r < nr; ++r)
      for (int c = 0; c < nc; ++c)
        if (input.active(r, c)) out(r, c) = x[static_cast<std::size_t>(r) * nc + c];
    return out;
  };

  const bool only_rows = oc.cols.empty() && oc.pairs.empty();
  const bool only_cols = oc.rows.empty() && oc.pairs.empty();
  if (only_rows || only_cols) {
    for (const auto& ch : only_rows ? oc.rows : oc.cols) project_chain(ch, x, w, vbuf, wbuf);
    return finish();
  }

  // Dykstra: one correction vector per constraint block.
  std::vector<double> row_inc(n, 0.0), col_inc(n, 0.0);
  std::vector<std::pair<double, double>> pair_inc(oc.pairs.size(), {0.0, 0.0});
  std::vector<double> before(n), shifted(n);

  auto project_block = [&](const std::vector<Chain>& chains, std::vector<double>& inc) {
    for (std::size_t i = 0; i < n; ++i) shifted[i] = x[i] + inc[i];
    std::vector<double> y = shifted;
    for (const auto& ch : chains) project_chain(ch, y, w, vbuf, wbuf);
    for (std::size_t i = 0; i < n; ++i) inc[i] = shifted[i] - y[i];
    x.swap(y);
  };

  for (int cycle = 0; cycle < options.max_cycles; ++cycle) {
    before = x;
    project_block(oc.rows, row_inc);
    project_block(oc.cols, col_inc);
    for (std::size_t p = 0; p < oc.pairs.size(); ++p) {
      const auto [a, b] = oc.pairs[p];
      const double sa = x[a] + pair_inc[p].first;
      const double sb = x[b] + pair_inc[p].second;
      double ya = sa, yb = sb;
      if (sa > sb) ya = yb = (sa * w[a] + sb * w[b]) / (w[a] + w[b]);
      pair_inc[p] = {sa - ya, sb - yb};
      x[a] = ya;
      x[b] = yb;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::fabs(x[i] - before[i]));
    if (change < options.tolerance) return finish();
  }
  throw ConvergenceError("matrix isotonic regression did not converge within the cycle cap");
}

}  // namespace keyboard
