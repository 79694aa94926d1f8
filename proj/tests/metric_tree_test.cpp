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

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "hiereval/bundled_trees.hpp"
#include "hiereval/metric_tree.hpp"
#include "test_util.hpp"

namespace hiereval {
namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_violation(const std::vector<Violation>& v, const std::string& inv) {
  return std::any_of(v.begin(), v.end(),
                     [&](const Violation& x) { return x.invariant == inv; });
}

TEST(BundledTrees, QuestionTreeShape) {
  const MetricTree& t = question_tree();
  EXPECT_EQ(t.root, "relevant");
  EXPECT_EQ(t.target, TreeTarget::kInput);
  EXPECT_EQ(t.nodes.size(), 6u);
  EXPECT_EQ(node_order(t),
            (std::vector<std::string>{"relevant", "factoid", "answerable",
                                      "spelling_errors", "grammar_errors",
                                      "difficulty"}));
  EXPECT_TRUE(validate_tree(t).empty());
  EXPECT_EQ(flat_judgment_count(t), 6u);
}

TEST(BundledTrees, AnswerTreeIsValidWithSharedExplanationBranch) {
  const MetricTree& t = answer_tree();
  EXPECT_TRUE(validate_tree(t).empty());
  EXPECT_EQ(t.root, "clear");
  EXPECT_EQ(t.target, TreeTarget::kOutput);
  // explanation_relevant has two parents.
  EXPECT_EQ(route(t, "clear", "no").node_id, "explanation_relevant");
  EXPECT_EQ(route(t, "answer_relevant", "no").node_id, "explanation_relevant");
  EXPECT_TRUE(t.node("explanation_relevant").uses_explanation);
  EXPECT_FALSE(t.node("answer_accuracy").uses_explanation);
}

TEST(BundledTrees, EmbeddedDocumentsMatchFilesAndAreCanonical) {
  const std::string dir = std::string(HIEREVAL_SOURCE_DIR) + "/trees/";
  EXPECT_EQ(slurp(dir + "question_tree.json"), kQuestionTreeDocument);
  EXPECT_EQ(slurp(dir + "answer_tree.json"), kAnswerTreeDocument);
  EXPECT_EQ(serialize_tree(question_tree()), kQuestionTreeDocument);
  EXPECT_EQ(serialize_tree(answer_tree()), kAnswerTreeDocument);
}

TEST(Route, QuestionTreeExamples) {
  const MetricTree& t = question_tree();
  const auto bad = route(t, "relevant", "no");
  ASSERT_TRUE(bad.is_terminal());
  EXPECT_EQ(bad.outcome->label, Label::kBad);
  EXPECT_EQ(bad.outcome->failed_at, "relevant");
  EXPECT_EQ(bad.outcome->failing_answer, "no");

  const auto next = route(t, "grammar_errors", "no");
  ASSERT_FALSE(next.is_terminal());
  EXPECT_EQ(next.node_id, "difficulty");

  const auto good = route(t, "difficulty", "easy");
  ASSERT_TRUE(good.is_terminal());
  EXPECT_TRUE(good.outcome->is_good());
  EXPECT_FALSE(good.outcome->failed_at);
}

TEST(Route, DifficultyNeverFails) {
  const MetricNode& n = question_tree().node("difficulty");
  for (const auto& a : n.answers) {
    const auto r = route(question_tree(), "difficulty", a);
    EXPECT_TRUE(r.is_terminal() && r.outcome->is_good()) << a;
  }
}

TEST(Route, Errors) {
  try {
    route(question_tree(), "relevant", "maybe");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownAnswer);
  }
  try {
    route(question_tree(), "nope", "yes");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownNode);
  }
}

MetricTree base_tree() { return testing::tiny_tree(TreeTarget::kInput, "t"); }

TEST(Validate, CycleIsNamed) {
  MetricTree t = base_tree();
  t.nodes["fine"].routing["no"] = RouteTarget::to_node("ok");
  const auto v = validate_tree(t);
  ASSERT_TRUE(has_violation(v, "cycle"));
  for (const auto& x : v) {
    if (x.invariant != "cycle") continue;
    EXPECT_EQ(std::set<std::string>(x.nodes.begin(), x.nodes.end()),
              (std::set<std::string>{"ok", "fine"}));
    EXPECT_NE(x.message.find("ok"), std::string::npos);
  }
}

TEST(Validate, SelfLoop) {
  MetricTree t = base_tree();
  t.nodes["fine"].routing["no"] = RouteTarget::to_node("fine");
  EXPECT_TRUE(has_violation(validate_tree(t), "cycle"));
}

TEST(Validate, EachBrokenInvariantIsReported) {
  {
    MetricTree t = base_tree();
    t.nodes["fine"].routing["no"] = RouteTarget::to_node("ghost");
    EXPECT_TRUE(has_violation(validate_tree(t), "dangling_route"));
  }
  {
    MetricTree t = base_tree();
    t.nodes["ok"].routing["yes"] =
        RouteTarget::terminal(CompositeOutcome::good());
    const auto v = validate_tree(t);
    ASSERT_TRUE(has_violation(v, "unreachable"));
    EXPECT_EQ(v.front().nodes, std::vector<std::string>{"fine"});
  }
  {
    MetricTree t = base_tree();
    t.nodes["ok"].routing.erase("no");
    EXPECT_TRUE(has_violation(validate_tree(t), "incomplete_routing"));
  }
  {
    MetricTree t = base_tree();
    t.nodes["ok"].routing["extra"] =
        RouteTarget::terminal(CompositeOutcome::good());
    EXPECT_TRUE(has_violation(validate_tree(t), "incomplete_routing"));
  }
  {
    MetricTree t = base_tree();
    t.nodes["fine"].answers = {"yes"};
    t.nodes["fine"].routing.erase("no");
    EXPECT_TRUE(has_violation(validate_tree(t), "too_few_answers"));
  }
  {
    MetricTree t = base_tree();
    t.nodes["fine"].answers = {"yes", "Not Sure"};
    t.nodes["fine"].routing.erase("no");
    t.nodes["fine"].routing["Not Sure"] =
        RouteTarget::terminal(CompositeOutcome::good());
    EXPECT_TRUE(has_violation(validate_tree(t), "answer_token"));
  }
  {
    MetricTree t = base_tree();
    t.nodes["fine"].answers = {"yes", "no", "yes"};
    EXPECT_TRUE(has_violation(validate_tree(t), "duplicate_answer"));
  }
  {
    MetricTree t = base_tree();
    t.root = "missing";
    EXPECT_TRUE(has_violation(validate_tree(t), "missing_root"));
  }
  {
    MetricTree t = base_tree();
    t.nodes["ok"].routing["no"] =
        RouteTarget::terminal(CompositeOutcome::bad("fine", "no"));
    EXPECT_TRUE(has_violation(validate_tree(t), "malformed_route"));
  }
  {
    MetricTree t;
    t.id = "empty";
    EXPECT_TRUE(has_violation(validate_tree(t), "empty_tree"));
  }
}

TEST(Validate, ThrowIfInvalidCarriesViolations) {
  MetricTree t = base_tree();
  t.nodes["fine"].routing["no"] = RouteTarget::to_node("ok");
  try {
    throw_if_invalid(t);
    FAIL();
  } catch (const TreeError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSemantic);
    EXPECT_TRUE(has_violation(e.violations(), "cycle"));
  }
}

TEST(Parse, SyntaxErrorReportsLineAndColumn) {
  try {
    parse_tree("{\n  \"id\": \"x\",\n  oops\n}");
    FAIL();
  } catch (const TreeError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSyntax);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos)
        << e.what();
  }
}

TEST(Parse, SchemaErrors) {
  for (const char* doc : {
           R"([])",
           R"({"id": "x", "name": "x", "target": "sideways", "root": "a",
               "nodes": {}})",
           R"({"id": "x", "name": "x", "target": "input", "root": "a"})",
           R"({"id": "x", "name": "x", "target": "input", "root": "a",
               "nodes": {"a": {"prompt": "p", "characteristic": "c",
                 "answers": ["y", "n"],
                 "routing": {"y": {"terminal": "meh"},
                             "n": {"terminal": "bad"}}}}})",
       }) {
    try {
      parse_tree(doc);
      FAIL() << doc;
    } catch (const TreeError& e) {
      EXPECT_EQ(e.code(), ErrorCode::kSchema) << doc;
    }
  }
}

TEST(Parse, SemanticErrorsAreSeparateFromSchema) {
  MetricTree t = base_tree();
  t.nodes["fine"].routing["no"] = RouteTarget::to_node("ok");
  try {
    parse_tree(serialize_tree(t));
    FAIL();
  } catch (const TreeError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSemantic);
  }
}

TEST(Serialize, RoundTripIsStable) {
  for (const MetricTree* t : {&question_tree(), &answer_tree()}) {
    const std::string once = serialize_tree(*t);
    const MetricTree back = parse_tree(once);
    EXPECT_EQ(back, *t);
    EXPECT_EQ(serialize_tree(back), once);
  }
}

// Independent count of root-to-terminal paths by memoised recursion.
std::size_t count_paths(const MetricTree& t, const std::string& id) {
  std::size_t n = 0;
  const MetricNode& node = t.node(id);
  for (const auto& a : node.answers) {
    const auto& r = node.routing.at(a);
    n += r.is_terminal() ? 1 : count_paths(t, r.node_id);
  }
  return n;
}

void check_paths(const MetricTree& t) {
  const auto paths = enumerate_paths(t);
  EXPECT_EQ(paths.size(), count_paths(t, t.root));
  std::set<std::vector<std::pair<std::string, std::string>>> distinct;
  for (const auto& p : paths) {
    ASSERT_FALSE(p.steps.empty());
    EXPECT_EQ(p.steps.front().first, t.root);
    EXPECT_LE(p.steps.size(), t.nodes.size());
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
      const auto r = route(t, p.steps[i].first, p.steps[i].second);
      if (i + 1 < p.steps.size()) {
        ASSERT_FALSE(r.is_terminal());
        EXPECT_EQ(r.node_id, p.steps[i + 1].first);
      } else {
        ASSERT_TRUE(r.is_terminal());
        EXPECT_EQ(*r.outcome, p.outcome);
      }
    }
    distinct.insert(p.steps);
  }
  EXPECT_EQ(distinct.size(), paths.size());
}

TEST(EnumeratePaths, BundledTrees) {
  check_paths(question_tree());
  check_paths(answer_tree());
  // relevant/factoid/answerable "no", spelling/grammar "yes", 3 levels.
  EXPECT_EQ(enumerate_paths(question_tree()).size(), 8u);
}

TEST(EnumeratePaths, RandomTrees) {
  SeededRng rng(11);
  for (int i = 0; i < 200; ++i) {
    check_paths(testing::random_tree(rng, TreeTarget::kInput));
  }
}

TEST(EnumeratePaths, RejectsInvalidTree) {
  MetricTree t = base_tree();
  t.nodes["fine"].routing["no"] = RouteTarget::to_node("ok");
  EXPECT_THROW(enumerate_paths(t), TreeError);
}

}  // namespace
}  // namespace hiereval
