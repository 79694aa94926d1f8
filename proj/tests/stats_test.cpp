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

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "hiereval/stats.hpp"
#include "oracles.hpp"

namespace hiereval {
namespace {

using stats::ContingencyTable;

void expect_suite(const testing::SuiteResult& r, std::size_t min_checks) {
  EXPECT_GE(r.checks, min_checks);
  for (const auto& f : r.failures) ADD_FAILURE() << f;
}

TEST(Oracles, CoefficientsAndTail) {
  expect_suite(testing::run_oracle_comparisons(1), 40 * 5 + 90);
  expect_suite(testing::run_oracle_comparisons(2, 25), 25 * 5 + 90);
}

TEST(Oracles, InvarianceTrials) {
  expect_suite(testing::run_invariance_trials(3, 1000), 1000 * 13);
}

TEST(Oracles, ReferenceExamples) {
  expect_suite(testing::run_reference_examples(), 6);
}

TEST(Oracles, QuadratureAgreesWithClosedForms) {
  // The reference integrator itself, checked where exact answers exist.
  for (double x : {0.2, 1.0, 3.0, 8.0}) {
    EXPECT_NEAR(testing::quadrature_chi_square_sf(x, 2), std::exp(-x / 2),
                1e-12);
    EXPECT_NEAR(testing::quadrature_chi_square_sf(x, 1),
                std::erfc(std::sqrt(x / 2)), 1e-12);
  }
}

TEST(ChiSquare, CaseStudyTable) {
  const ContingencyTable t{132, 59, 115, 81};
  const auto r = stats::chi_square_2x2(t);
  EXPECT_NEAR(r.statistic, testing::oracle_chi_square(t, false), 1e-10);
  EXPECT_NEAR(r.statistic, 4.5633, 5e-5);
  EXPECT_NEAR(r.p_value, 0.0327, 5e-5);
  EXPECT_EQ(r.dof, 1);
  EXPECT_FALSE(r.low_expected_count);
  // Expected counts are the margins' outer product over n.
  EXPECT_NEAR(r.expected[0][0], 191.0 * 247 / 387, 1e-12);
  EXPECT_NEAR(r.expected[1][1], 196.0 * 140 / 387, 1e-12);

  const auto y = stats::chi_square_2x2(t, true);
  EXPECT_TRUE(y.yates_correction);
  EXPECT_NEAR(y.statistic, testing::oracle_chi_square(t, true), 1e-10);
  EXPECT_NEAR(y.statistic, 4.1225, 5e-5);
  EXPECT_NEAR(y.p_value, 0.0423, 5e-5);
}

TEST(ChiSquare, DegenerateTables) {
  try {
    stats::chi_square_2x2({0, 0, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  for (const ContingencyTable t :
       {ContingencyTable{5, 3, 0, 0}, ContingencyTable{0, 3, 0, 9}}) {
    try {
      stats::chi_square_2x2(t);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kZeroMarginal);
    }
  }
  EXPECT_TRUE(stats::chi_square_2x2({1, 2, 3, 4}).low_expected_count);
  // Independence gives a zero statistic and p = 1.
  const auto r = stats::chi_square_2x2({10, 20, 30, 60});
  EXPECT_NEAR(r.statistic, 0.0, 1e-12);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
}

TEST(ChiSquare, SurvivalFunctionDomain) {
  EXPECT_EQ(stats::chi_square_sf(0.0, 3), 1.0);
  EXPECT_EQ(stats::chi_square_sf(0.0, 1), 1.0);
  EXPECT_NEAR(stats::chi_square_sf(3.841, 1),
              testing::quadrature_chi_square_sf(3.841, 1), 1e-9);
  EXPECT_NEAR(stats::chi_square_sf(3.841, 1), 0.05, 5e-4);
  EXPECT_NEAR(stats::chi_square_sf(4.56, 1),
              testing::quadrature_chi_square_sf(4.56, 1), 1e-9);
  EXPECT_NEAR(stats::chi_square_sf(4.56, 1), 0.0327, 5e-4);
  EXPECT_THROW(stats::chi_square_sf(1.0, 0), Error);
  EXPECT_THROW(stats::chi_square_sf(-1.0, 1), Error);
  EXPECT_THROW(stats::chi_square_sf(std::nan(""), 1), Error);
  EXPECT_GE(stats::chi_square_sf(1e4, 1), 0.0);
  EXPECT_NEAR(stats::log_gamma(5.0), std::log(24.0), 1e-12);
  EXPECT_NEAR(stats::log_gamma(0.5), 0.5 * std::log(M_PI), 1e-12);
}

stats::RatingsMatrix two_raters(const std::vector<std::string>& a,
                                const std::vector<std::string>& b) {
  std::vector<std::string> items;
  for (std::size_t i = 0; i < a.size(); ++i) items.push_back(std::to_string(i));
  stats::RatingsMatrix m(items, {"a", "b"});
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].empty()) m.set(i, 0, a[i]);
    if (!b[i].empty()) m.set(i, 1, b[i]);
  }
  return m;
}

TEST(Agreement, SmallHandWorkedCases) {
  // 4 items, agreement on 2; each rater says yes twice.
  const auto m = two_raters({"yes", "yes", "no", "no"},
                            {"yes", "no", "no", "yes"});
  EXPECT_DOUBLE_EQ(stats::percentage_agreement(m), 0.5);
  EXPECT_DOUBLE_EQ(*stats::cohens_kappa(m), 0.0);

  const auto perfect = two_raters({"x", "y", "x"}, {"x", "y", "x"});
  EXPECT_DOUBLE_EQ(*stats::cohens_kappa(perfect), 1.0);
  EXPECT_DOUBLE_EQ(*stats::krippendorff_alpha(perfect), 1.0);

  // Missing ratings drop the item from Cohen's kappa.
  const auto sparse = two_raters({"x", "y", ""}, {"x", "y", "x"});
  EXPECT_DOUBLE_EQ(*stats::cohens_kappa(sparse), 1.0);
}

TEST(Agreement, NamedSmallCases) {
  const auto three_of_four = two_raters({"yes", "yes", "no", "no"},
                                        {"yes", "yes", "no", "yes"});
  EXPECT_DOUBLE_EQ(stats::percentage_agreement(three_of_four), 0.75);

  const auto never = two_raters({"x", "y"}, {"y", "x"});
  EXPECT_DOUBLE_EQ(stats::percentage_agreement(never), 0.0);

  // B relabels A with no raw agreement and 50/50 marginals.
  const auto swapped = two_raters({"yes", "no", "yes", "no"},
                                  {"no", "yes", "no", "yes"});
  EXPECT_DOUBLE_EQ(*stats::cohens_kappa(swapped), -1.0);

  // Rows (3,0) and (1,2) as a rater grid.
  const testing::Grid g = {{0, 0, 0}, {0, 1, 1}};
  EXPECT_NEAR(*stats::fleiss_kappa({{3, 0}, {1, 2}}, 3),
              testing::oracle_fleiss(g)->value(), 1e-12);

  const std::vector<double> x = {1, 2, 3, 3};
  const std::vector<double> y = {1, 3, 2, 3};
  EXPECT_NEAR(*stats::kendall_tau(x, y), *testing::oracle_kendall(x, y),
              1e-12);
}

TEST(Agreement, UndefinedAndInvalid) {
  const auto same = two_raters({"x", "x"}, {"x", "x"});
  EXPECT_DOUBLE_EQ(*stats::cohens_kappa(same), 1.0);
  EXPECT_FALSE(stats::krippendorff_alpha(same));
  EXPECT_FALSE(stats::fleiss_kappa({{2, 0}, {2, 0}}, 2));

  EXPECT_THROW(stats::fleiss_kappa({{1, 0}}, 1), Error);
  EXPECT_THROW(stats::fleiss_kappa({{1, 0}, {2, 0}}, 2), Error);
  EXPECT_THROW(stats::fleiss_kappa({{1, 1}, {2}}, 2), Error);
  EXPECT_THROW(stats::fleiss_kappa({}, 2), Error);

  stats::RatingsMatrix three({"i"}, {"a", "b", "c"});
  EXPECT_THROW(stats::cohens_kappa(three), Error);
  EXPECT_THROW(stats::percentage_agreement(three), Error);
  EXPECT_THROW(stats::krippendorff_alpha(three), Error);

  stats::RatingsMatrix declared({"i"}, {"a"}, stats::Scale::kNominal,
                                {"yes", "no"});
  EXPECT_THROW(declared.set(0, 0, "maybe"), Error);
  EXPECT_THROW(declared.set(1, 0, "yes"), Error);
}

TEST(Kendall, TiesAndOrdinalLevels) {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> rev = {5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(*stats::kendall_tau(x, x), 1.0);
  EXPECT_DOUBLE_EQ(*stats::kendall_tau(x, rev), -1.0);
  const std::vector<double> flat = {2, 2, 2, 2, 2};
  EXPECT_FALSE(stats::kendall_tau(x, flat));
  const std::vector<double> tied = {1, 1, 2, 2, 3};
  EXPECT_NEAR(*stats::kendall_tau(x, tied), *testing::oracle_kendall(x, tied),
              1e-12);
  EXPECT_THROW(stats::kendall_tau(std::vector<double>{1.0},
                                  std::vector<double>{1.0}),
               Error);
  EXPECT_THROW(stats::kendall_tau(x, std::vector<double>{1, 2}), Error);

  stats::RatingsMatrix m({"i0", "i1", "i2", "i3"}, {"a", "b"},
                         stats::Scale::kOrdinal, {"easy", "medium", "hard"});
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"easy", "easy"}, {"medium", "hard"}, {"hard", "hard"}, {"easy", "medium"}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.set(i, 0, rows[i].first);
    m.set(i, 1, rows[i].second);
  }
  EXPECT_NEAR(*stats::kendall_tau(m, 0, 1),
              *testing::oracle_kendall({0, 1, 2, 0}, {0, 2, 2, 1}), 1e-12);
  stats::RatingsMatrix nominal({"i"}, {"a", "b"});
  EXPECT_THROW(stats::kendall_tau(nominal, 0, 1), Error);
}

TEST(Ratings, ParseDelimited) {
  const auto m = stats::parse_ratings(
      "item\tann\tbob\tcat\r\nq1\tyes\tyes\tNA\nq2\tno\t\tno\n\n", "NA");
  EXPECT_EQ(m.items(), (std::vector<std::string>{"q1", "q2"}));
  EXPECT_EQ(m.raters(), (std::vector<std::string>{"ann", "bob", "cat"}));
  EXPECT_EQ(m.size(), 4u);
  EXPECT_EQ(m.get(0, 2), nullptr);
  EXPECT_EQ(*m.get(1, 2), "no");
  EXPECT_DOUBLE_EQ(stats::percentage_agreement(m), 1.0);

  const auto csv = stats::parse_ratings("id,a,b\n1,x,-\n2,y,y\n", "-", ',');
  EXPECT_EQ(csv.size(), 3u);

  try {
    stats::parse_ratings("item\ta\tb\nq1\tyes\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
  EXPECT_THROW(stats::parse_ratings(""), Error);
  EXPECT_THROW(stats::parse_ratings("item\n"), Error);
  EXPECT_THROW(stats::parse_ratings("item\ta\nq\tmaybe\n", "NA", '\t',
                                    stats::Scale::kNominal, {"yes", "no"}),
               Error);
}

}  // namespace
}  // namespace hiereval
