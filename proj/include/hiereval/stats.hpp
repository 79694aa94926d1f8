// Copyright 2026 The hiereval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Association test and inter-annotator agreement.
//
// All functions are pure. Coefficients that degenerate to 0/0 return
// std::nullopt ("undefined") instead of a number.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hiereval/errors.hpp"

namespace hiereval::stats {

// --- special functions ------------------------------------------------------

// log Gamma(x) for x > 0. Lanczos approximation with g = 671/128 and 14
// terms; relative error near 2e-15. Unlike std::lgamma it touches no global
// state.
inline double log_gamma(double x) {
  static constexpr double kCoef[14] = {
      57.1562356658629235,     -59.5979603554754912,
      14.1360979747417471,     -0.491913816097620199,
      .339946499848118887e-4,  .465236289270485756e-4,
      -.983744753048795646e-4, .158088703224912494e-3,
      -.210264441724104883e-3, .217439618115212643e-3,
      -.164318106536763890e-3, .844182239838527433e-4,
      -.261908384015814087e-4, .368991826595316234e-5};
  if (!(x > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "log_gamma needs x > 0");
  }
  double t = x + 5.24218750000000000;
  t = (x + 0.5) * std::log(t) - t;
  double series = 0.999999999999997092;
  double y = x;
  for (double c : kCoef) series += c / ++y;
  return t + std::log(2.5066282746310005 * series / x);
}

namespace detail {

inline constexpr double kEps = 1e-16;
inline constexpr int kMaxIter = 10000;

// P(a, x) by its power series; converges fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Q(a, x) by its continued fraction (modified Lentz); for x >= a + 1.
inline double gamma_q_continued_fraction(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

}  // namespace detail

// Regularized upper incomplete gamma Q(a, x), a > 0, x >= 0.
inline double regularized_gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_continued_fraction(a, x);
}

inline double regularized_gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_continued_fraction(a, x);
}

// Upper tail of the chi-square distribution with `dof` degrees of freedom.
inline double chi_square_sf(double x, int dof) {
  if (dof < 1) {
    throw Error(ErrorCode::kInvalidArgument, "dof must be positive");
  }
  if (!(x >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "chi-square value must be >= 0");
  }
  return std::clamp(regularized_gamma_q(0.5 * dof, 0.5 * x), 0.0, 1.0);
}

// --- 2x2 association test -----------------------------------------------------

// Rows: output outcome (good, bad). Columns: input outcome (good, bad).
//
//              input good   input bad
//   output good     a           b
//   output bad      c           d
struct ContingencyTable {
  std::uint64_t a = 0, b = 0, c = 0, d = 0;

  std::uint64_t n() const { return a + b + c + d; }

  friend bool operator==(const ContingencyTable&,
                         const ContingencyTable&) = default;
};

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 1;
  std::array<std::array<double, 2>, 2> expected{};
  bool yates_correction = false;
  bool low_expected_count = false;  // some expected cell < 5
};

inline ChiSquareResult chi_square_2x2(const ContingencyTable& t,
                                      bool yates_correction = false) {
  if (t.n() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "contingency table is empty");
  }
  const double n = static_cast<double>(t.n());
  const std::array<std::array<double, 2>, 2> observed = {
      {{static_cast<double>(t.a), static_cast<double>(t.b)},
       {static_cast<double>(t.c), static_cast<double>(t.d)}}};
  const std::array<double, 2> rows = {observed[0][0] + observed[0][1],
                                      observed[1][0] + observed[1][1]};
  const std::array<double, 2> cols = {observed[0][0] + observed[1][0],
                                      observed[0][1] + observed[1][1]};
  if (rows[0] == 0 || rows[1] == 0 || cols[0] == 0 || cols[1] == 0) {
    throw Error(ErrorCode::kZeroMarginal,
                "chi-square test undefined: a row or column total is zero");
  }
  ChiSquareResult r;
  r.yates_correction = yates_correction;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double e = rows[i] * cols[j] / n;
      r.expected[i][j] = e;
      if (e < 5.0) r.low_expected_count = true;
      double diff = std::abs(observed[i][j] - e);
      if (yates_correction) diff = std::max(0.0, diff - 0.5);
      r.statistic += diff * diff / e;
    }
  }
  r.p_value = chi_square_sf(r.statistic, 1);
  return r;
}

// --- ratings ------------------------------------------------------------------

enum class Scale { kNominal, kOrdinal };

// Sparse item x rater table of categorical tokens. For ordinal scales
// `levels` gives the order (lowest first); for nominal scales it is the
// optional declared category set.
class RatingsMatrix {
 public:
  RatingsMatrix() = default;
  RatingsMatrix(std::vector<std::string> items, std::vector<std::string> raters,
                Scale scale = Scale::kNominal,
                std::vector<std::string> levels = {})
      : items_(std::move(items)),
        raters_(std::move(raters)),
        scale_(scale),
        levels_(std::move(levels)) {}

  void set(std::size_t item, std::size_t rater, std::string value) {
    if (item >= items_.size() || rater >= raters_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "rating index out of range");
    }
    if (!levels_.empty() &&
        std::find(levels_.begin(), levels_.end(), value) == levels_.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "rating '" + value + "' is not a declared category");
    }
    values_[{item, rater}] = std::move(value);
  }

  void erase(std::size_t item, std::size_t rater) {
    values_.erase({item, rater});
  }

  const std::string* get(std::size_t item, std::size_t rater) const {
    auto it = values_.find({item, rater});
    return it == values_.end() ? nullptr : &it->second;
  }

  // Ratings present for one item, in rater order.
  std::vector<std::string> unit(std::size_t item) const {
    std::vector<std::string> out;
    for (std::size_t r = 0; r < raters_.size(); ++r) {
      if (const auto* v = get(item, r)) out.push_back(*v);
    }
    return out;
  }

  const std::vector<std::string>& items() const { return items_; }
  const std::vector<std::string>& raters() const { return raters_; }
  const std::vector<std::string>& levels() const { return levels_; }
  Scale scale() const { return scale_; }
  std::size_t size() const { return values_.size(); }

  // Position of `value` in the declared level order.
  std::size_t level_index(std::string_view value) const {
    auto it = std::find(levels_.begin(), levels_.end(), value);
    if (it == levels_.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "'" + std::string(value) + "' is not an ordinal level");
    }
    return static_cast<std::size_t>(it - levels_.begin());
  }

 private:
  std::vector<std::string> items_;
  std::vector<std::string> raters_;
  Scale scale_ = Scale::kNominal;
  std::vector<std::string> levels_;
  std::map<std::pair<std::size_t, std::size_t>, std::string> values_;
};

// Fraction of agreeing rater pairs over all pairs that rated the same item.
inline double percentage_agreement(const RatingsMatrix& m) {
  if (m.raters().size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two raters");
  }
  std::uint64_t pairs = 0, agree = 0;
  for (std::size_t i = 0; i < m.items().size(); ++i) {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t k = 0;
    for (const auto& v : m.unit(i)) {
      ++counts[v];
      ++k;
    }
    if (k < 2) continue;
    pairs += k * (k - 1) / 2;
    for (const auto& [v, c] : counts) agree += c * (c - 1) / 2;
  }
  if (pairs == 0) {
    throw Error(ErrorCode::kInvalidArgument, "no item was rated twice");
  }
  return static_cast<double>(agree) / static_cast<double>(pairs);
}

// Cohen's kappa over the items both raters rated. A single shared category
// (p_e = 1, p_o = 1) yields 1.
inline std::optional<double> cohens_kappa(const RatingsMatrix& m) {
  if (m.raters().size() != 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "Cohen's kappa needs exactly two raters");
  }
  std::map<std::string, double> first, second;
  double n = 0, agree = 0;
  for (std::size_t i = 0; i < m.items().size(); ++i) {
    const auto* x = m.get(i, 0);
    const auto* y = m.get(i, 1);
    if (!x || !y) continue;
    ++n;
    ++first[*x];
    ++second[*y];
    if (*x == *y) ++agree;
  }
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "raters share no rated item");
  }
  const double p_o = agree / n;
  double p_e = 0;
  for (const auto& [cat, c] : first) {
    auto it = second.find(cat);
    if (it != second.end()) p_e += (c / n) * (it->second / n);
  }
  if (p_e >= 1.0) {
    if (p_o >= 1.0) return 1.0;
    return std::nullopt;
  }
  return (p_o - p_e) / (1.0 - p_e);
}

// Fleiss' kappa from an item x category count matrix; every row must sum to
// raters_per_item.
inline std::optional<double> fleiss_kappa(
    const std::vector<std::vector<std::uint64_t>>& counts,
    std::uint64_t raters_per_item) {
  if (raters_per_item < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "Fleiss' kappa needs at least two raters per item");
  }
  if (counts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no items");
  }
  const std::size_t k = counts.front().size();
  const double n = static_cast<double>(raters_per_item);
  std::vector<double> column(k, 0.0);
  double p_bar = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& row = counts[i];
    if (row.size() != k) {
      throw Error(ErrorCode::kInvalidArgument,
                  "row " + std::to_string(i) + " has a different width");
    }
    const auto sum = std::accumulate(row.begin(), row.end(), std::uint64_t{0});
    if (sum != raters_per_item) {
      throw Error(ErrorCode::kInvalidArgument,
                  "row " + std::to_string(i) + " sums to " +
                      std::to_string(sum) + ", expected " +
                      std::to_string(raters_per_item));
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      sq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
      column[j] += static_cast<double>(row[j]);
    }
    p_bar += (sq - n) / (n * (n - 1.0));
  }
  const double items = static_cast<double>(counts.size());
  p_bar /= items;
  double p_e = 0.0;
  for (double c : column) {
    const double p = c / (items * n);
    p_e += p * p;
  }
  if (p_e >= 1.0) return std::nullopt;
  return (p_bar - p_e) / (1.0 - p_e);
}

// Category counts per item for the items rated by exactly `raters` raters;
// categories ordered by first appearance (or by declared levels).
inline std::vector<std::vector<std::uint64_t>> category_counts(
    const RatingsMatrix& m, std::size_t raters) {
  std::vector<std::string> cats = m.levels();
  if (cats.empty()) {
    for (std::size_t i = 0; i < m.items().size(); ++i) {
      for (const auto& v : m.unit(i)) {
        if (std::find(cats.begin(), cats.end(), v) == cats.end()) {
          cats.push_back(v);
        }
      }
    }
  }
  std::vector<std::vector<std::uint64_t>> out;
  for (std::size_t i = 0; i < m.items().size(); ++i) {
    const auto unit = m.unit(i);
    if (unit.size() != raters) continue;
    std::vector<std::uint64_t> row(cats.size(), 0);
    for (const auto& v : unit) {
      row[static_cast<std::size_t>(
          std::find(cats.begin(), cats.end(), v) - cats.begin())]++;
    }
    out.push_back(std::move(row));
  }
  return out;
}

// Krippendorff's alpha, nominal distance, via the coincidence matrix. Items
// with fewer than two ratings are not pairable and are ignored.
inline std::optional<double> krippendorff_alpha(const RatingsMatrix& m) {
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::string>> units;
  for (std::size_t i = 0; i < m.items().size(); ++i) {
    auto unit = m.unit(i);
    if (unit.size() < 2) continue;
    for (const auto& v : unit) index.emplace(v, index.size());
    units.push_back(std::move(unit));
  }
  if (units.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "no item has two or more ratings");
  }
  const std::size_t k = index.size();
  std::vector<std::vector<double>> coincidence(k, std::vector<double>(k, 0.0));
  for (const auto& unit : units) {
    std::vector<double> counts(k, 0.0);
    for (const auto& v : unit) counts[index[v]] += 1.0;
    const double weight = 1.0 / (static_cast<double>(unit.size()) - 1.0);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < k; ++d) {
        const double pairs =
            c == d ? counts[c] * (counts[c] - 1.0) : counts[c] * counts[d];
        coincidence[c][d] += pairs * weight;
      }
    }
  }
  std::vector<double> marginal(k, 0.0);
  double n = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) marginal[c] += coincidence[c][d];
    n += marginal[c];
  }
  double observed = 0.0, expected = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) {
      if (c == d) continue;
      observed += coincidence[c][d];
      expected += marginal[c] * marginal[d];
    }
  }
  if (expected == 0.0) return std::nullopt;
  return 1.0 - (n - 1.0) * observed / expected;
}

namespace detail {

// Counts inversions of `v` while merge-sorting it.
inline std::uint64_t sort_count_swaps(std::vector<double>& v) {
  std::uint64_t swaps = 0;
  std::vector<double> buf(v.size());
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, out = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += mid - i;
          buf[out++] = v[j++];
        } else {
          buf[out++] = v[i++];
        }
      }
      while (i < mid) buf[out++] = v[i++];
      while (j < hi) buf[out++] = v[j++];
    }
    std::swap(v, buf);
  }
  return swaps;
}

inline std::uint64_t tied_pairs(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::uint64_t ties = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const std::uint64_t t = j - i;
    ties += t * (t - 1) / 2;
    i = j;
  }
  return ties;
}

}  // namespace detail

// Kendall's tau-b in O(n log n) (Knight's algorithm).
inline std::optional<double> kendall_tau(std::span<const double> x,
                                         std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kInvalidArgument, "sequences differ in length");
  }
  if (x.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two observations");
  }
  const std::size_t n = x.size();
  std::vector<std::pair<double, double>> pairs(n);
  for (std::size_t i = 0; i < n; ++i) pairs[i] = {x[i], y[i]};
  std::sort(pairs.begin(), pairs.end());

  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  std::uint64_t joint_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pairs[j] == pairs[i]) ++j;
    const std::uint64_t t = j - i;
    joint_ties += t * (t - 1) / 2;
    i = j;
  }
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = pairs[i].first;
    ys[i] = pairs[i].second;
  }
  const std::uint64_t x_ties = detail::tied_pairs(xs);
  const std::uint64_t y_ties = detail::tied_pairs(ys);
  // ys is sorted by x then y, so inversions are exactly the discordant pairs.
  const std::uint64_t discordant = detail::sort_count_swaps(ys);

  const double denom = std::sqrt(static_cast<double>(total - x_ties) *
                                 static_cast<double>(total - y_ties));
  if (denom == 0.0) return std::nullopt;
  const double numer = static_cast<double>(total) -
                       static_cast<double>(x_ties) -
                       static_cast<double>(y_ties) +
                       static_cast<double>(joint_ties) -
                       2.0 * static_cast<double>(discordant);
  return numer / denom;
}

// Kendall's tau-b between two raters of an ordinal matrix, over co-rated
// items.
inline std::optional<double> kendall_tau(const RatingsMatrix& m,
                                         std::size_t rater_a,
                                         std::size_t rater_b) {
  if (m.levels().empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "Kendall's tau needs ordinal levels");
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < m.items().size(); ++i) {
    const auto* a = m.get(i, rater_a);
    const auto* b = m.get(i, rater_b);
    if (!a || !b) continue;
    x.push_back(static_cast<double>(m.level_index(*a)));
    y.push_back(static_cast<double>(m.level_index(*b)));
  }
  return kendall_tau(x, y);
}

// Delimited ratings: a header row `item<sep>rater1<sep>rater2...`, then one
// row per item. Cells equal to `missing` (and empty cells) are absent.
inline RatingsMatrix parse_ratings(std::string_view text,
                                   std::string_view missing = "NA",
                                   char sep = '\t',
                                   Scale scale = Scale::kNominal,
                                   std::vector<std::string> levels = {}) {
  auto split = [sep](std::string_view line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
      auto at = line.find(sep, pos);
      out.emplace_back(line.substr(pos, at - pos));
      if (at == std::string_view::npos) break;
      pos = at + 1;
    }
    return out;
  };
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    rows.push_back(split(line));
  }
  if (rows.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ratings file is empty");
  }
  const auto& header = rows.front();
  if (header.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "ratings header needs an item column and rater columns");
  }
  std::vector<std::string> raters(header.begin() + 1, header.end());
  std::vector<std::string> items;
  for (std::size_t r = 1; r < rows.size(); ++r) items.push_back(rows[r][0]);
  RatingsMatrix m(items, raters, scale, std::move(levels));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ratings row " + std::to_string(r + 1) + " has " +
                      std::to_string(rows[r].size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    for (std::size_t c = 1; c < rows[r].size(); ++c) {
      const auto& v = rows[r][c];
      if (v.empty() || v == missing) continue;
      m.set(r - 1, c - 1, v);
    }
  }
  return m;
}

}  // namespace hiereval::stats
