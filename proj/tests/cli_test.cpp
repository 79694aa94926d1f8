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
#include <stdlib.h>

#include <sstream>
#include <string>
#include <vector>

#include "hiereval/cli.hpp"
#include "test_util.hpp"

namespace hiereval {
namespace {

using nlohmann::json;

struct Ran {
  int status;
  std::string out;
  std::string err;
  json payload() const { return json::parse(out); }
};

Ran run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

std::string source(const std::string& rel) {
  return std::string(HIEREVAL_SOURCE_DIR) + "/" + rel;
}

void write_items(const std::filesystem::path& path, std::size_t n) {
  std::string text = "id\tinput_text\toutput_text\texplanation_text\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = std::to_string(i);
    text += "it" + k + "\tQuestion " + k + "?\tAnswer " + k + "\tPassage " + k +
            "\n";
  }
  write_text_file(path, text);
}

// Campaign with `n` items and two evaluators in `dir`.
void create(const std::filesystem::path& dir, std::size_t n,
            const std::string& seed = "3") {
  const auto items = dir.parent_path() / (dir.filename().string() + ".tsv");
  write_items(items, n);
  const Ran r = run({"campaign", "create", "--campaign-dir", dir.string(),
                     "--id", "demo", "--evaluators", "alice,bob", "--seed",
                     seed, "--items", items.string()});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
}

TEST(Cli, ValidateExitCodes) {
  Ran r = run({"validate", source("trees/question_tree.json")});
  EXPECT_EQ(r.status, cli::kOk) << r.err;
  EXPECT_NE(r.out.find("valid"), std::string::npos);

  testing::TempDir tmp;
  auto doc = json::parse(read_text_file(source("trees/question_tree.json")));
  doc["nodes"]["difficulty"]["routing"]["easy"] = {{"node", "relevant"}};
  write_text_file(tmp / "cycle.json", doc.dump(2));
  r = run({"validate", (tmp / "cycle.json").string(), "--json"});
  EXPECT_EQ(r.status, cli::kValidationFailure);
  const json p = r.payload();
  EXPECT_EQ(p["valid"], false);
  bool named = false;
  for (const auto& v : p["violations"]) {
    if (v["invariant"] == "cycle") {
      named = true;
      EXPECT_NE(v["message"].get<std::string>().find("relevant"),
                std::string::npos);
    }
  }
  EXPECT_TRUE(named);

  write_text_file(tmp / "broken.json", "{\n  \"id\": \"x\",\n  oops\n}");
  r = run({"validate", (tmp / "broken.json").string()});
  EXPECT_EQ(r.status, cli::kValidationFailure);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;

  r = run({"validate", (tmp / "absent.json").string()});
  EXPECT_EQ(r.status, cli::kIoError);
  EXPECT_EQ(run({"frobnicate"}).status, cli::kValidationFailure);
  EXPECT_EQ(run({}).status, cli::kValidationFailure);
}

TEST(Cli, CreateImportSimulateReport) {
  testing::TempDir tmp;
  const auto dir = tmp / "c";
  create(dir, 5);
  EXPECT_EQ(run({"campaign", "create", "--campaign-dir", dir.string(), "--id",
                 "demo", "--evaluators", "alice"})
                .status,
            cli::kValidationFailure);

  write_items(tmp / "more.tsv", 3);
  // Ids collide with the first batch.
  EXPECT_EQ(run({"items", "import", "--campaign-dir", dir.string(), "--items",
                 (tmp / "more.tsv").string()})
                .status,
            cli::kValidationFailure);
  write_text_file(tmp / "more.jsonl",
                  R"({"id":"x1","input_text":"Q?","output_text":"A"})"
                  "\n");
  Ran r = run({"items", "import", "--campaign-dir", dir.string(), "--items",
               (tmp / "more.jsonl").string(), "--json"});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  EXPECT_EQ(r.payload()["total"], 6);

  r = run({"simulate", "--campaign-dir", dir.string(), "--policy", "all_pass",
           "--json"});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  EXPECT_EQ(r.payload()["input"]["good"], 6);

  r = run({"report", "--campaign-dir", dir.string(), "--kind", "time_savings",
           "--json"});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  const auto in = r.payload()["report"]["input"];
  EXPECT_EQ(in["hierarchical_judgments"], 6 * 6);
  EXPECT_EQ(in["flat_judgments"], 6 * 6);
  EXPECT_EQ(in["saved"], 0);

  // Items are frozen once judgments exist; simulating again adds nothing.
  EXPECT_EQ(run({"items", "import", "--campaign-dir", dir.string(), "--items",
                 (tmp / "more.jsonl").string()})
                .status,
            cli::kValidationFailure);
  r = run({"simulate", "--campaign-dir", dir.string(), "--json"});
  EXPECT_EQ(r.payload()["appended"], 0);

  EXPECT_EQ(run({"report", "--campaign-dir", dir.string(), "--kind", "nope"})
                .status,
            cli::kValidationFailure);
  r = run({"report", "--campaign-dir", dir.string(), "--kind", "funnel_input",
           "--as-of", "4", "--json"});
  EXPECT_EQ(r.payload()["as_of_sequence_no"], 4);
  EXPECT_EQ(run({"report", "--campaign-dir", (tmp / "none").string(), "--kind",
                 "funnel_input"})
                .status,
            cli::kIoError);
}

TEST(Cli, AllFailRootStopsAtTheRoot) {
  testing::TempDir tmp;
  create(tmp / "c", 7);
  ASSERT_EQ(run({"simulate", "--campaign-dir", (tmp / "c").string(),
                 "--policy", "all_fail_root"})
                .status,
            cli::kOk);
  const Ran r = run({"report", "--campaign-dir", (tmp / "c").string(), "--kind",
                     "time_savings", "--json"});
  EXPECT_EQ(r.payload()["report"]["input"]["hierarchical_judgments"], 7);
  EXPECT_EQ(r.payload()["report"]["output"]["hierarchical_judgments"], 14);
  EXPECT_EQ(run({"simulate", "--campaign-dir", (tmp / "c").string(),
                 "--policy", "sometimes"})
                .status,
            cli::kValidationFailure);
}

TEST(Cli, SeededRandomIsReproducible) {
  testing::TempDir tmp;
  for (const char* name : {"a", "b"}) {
    create(tmp / name, 12);
    ASSERT_EQ(run({"simulate", "--campaign-dir", (tmp / name).string(),
                   "--seed", "99"})
                  .status,
              cli::kOk);
  }
  const auto a = read_text_file(tmp / "a" / kJournalFile);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, read_text_file(tmp / "b" / kJournalFile));
  EXPECT_EQ(read_text_file(tmp / "a" / kCampaignFile),
            read_text_file(tmp / "b" / kCampaignFile));
}

TEST(Cli, EnvironmentSuppliesTheCampaignDir) {
  testing::TempDir tmp;
  create(tmp / "c", 3);
  ::setenv(cli::kCampaignDirEnv, (tmp / "c").string().c_str(), 1);
  const Ran r = run({"report", "--kind", "funnel_input", "--json"});
  ::unsetenv(cli::kCampaignDirEnv);
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  EXPECT_EQ(r.payload()["campaign_id"], "demo");
  EXPECT_EQ(run({"report", "--kind", "funnel_input"}).status,
            cli::kValidationFailure);
}

TEST(Cli, CaseStudyEmitReportVerify) {
  testing::TempDir tmp;
  const auto dir = (tmp / "cs").string();
  ASSERT_EQ(run({"casestudy", "emit", "--out", dir}).status, cli::kOk);

  Ran r = run({"report", "--campaign-dir", dir, "--kind", "funnel_input",
               "--json"});
  const json funnel = r.payload();
  std::vector<int> presented;
  for (const auto& n : funnel["report"]["nodes"]) {
    presented.push_back(n["presented"]);
  }
  EXPECT_EQ(presented, (std::vector<int>{387, 383, 335, 327, 321, 247}));

  r = run({"report", "--campaign-dir", dir, "--kind", "time_savings"});
  EXPECT_NE(r.out.find("saved 322 of 2322"), std::string::npos) << r.out;

  r = run({"stats", "--campaign-dir", dir, "--json"});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  EXPECT_EQ(r.payload()["table"]["a"], 132);
  EXPECT_NEAR(r.payload()["result"]["statistic"].get<double>(), 4.5633, 1e-4);

  r = run({"casestudy", "verify", dir});
  EXPECT_EQ(r.status, cli::kOk) << r.out;
  EXPECT_NE(r.out.find("overall: PASS"), std::string::npos);

  // Drop the last judgment: the journal no longer completes every traversal.
  auto text = read_text_file(std::filesystem::path(dir) / kJournalFile);
  text.pop_back();
  text.erase(text.rfind('\n') + 1);
  write_text_file(std::filesystem::path(dir) / kJournalFile, text);
  r = run({"casestudy", "verify", dir});
  EXPECT_EQ(r.status, cli::kVerificationFailure);
  EXPECT_NE(r.out.find("overall: FAIL"), std::string::npos);
  EXPECT_EQ(run({"casestudy", "verify", (tmp / "missing").string()}).status,
            cli::kIoError);
}

TEST(Cli, StatsFromCells) {
  Ran r = run({"stats", "--cells", "132,59,115,81", "--json"});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  EXPECT_NEAR(r.payload()["result"]["statistic"].get<double>(), 4.5633, 1e-4);
  EXPECT_NEAR(r.payload()["result"]["p_value"].get<double>(), 0.0327, 1e-4);
  r = run({"stats", "--cells", "132,59,115,81", "--yates", "--json"});
  EXPECT_NEAR(r.payload()["result"]["statistic"].get<double>(), 4.1225, 1e-4);
  r = run({"stats", "--cells", "132,59,115,81"});
  EXPECT_NE(r.out.find("4.56"), std::string::npos) << r.out;

  EXPECT_EQ(run({"stats", "--cells", "1,2,3"}).status, cli::kValidationFailure);
  EXPECT_EQ(run({"stats", "--cells", "1,2,-3,4"}).status,
            cli::kValidationFailure);
  r = run({"stats", "--cells", "5,3,0,0"});
  EXPECT_EQ(r.status, cli::kValidationFailure);
  EXPECT_NE(r.err.find("zero_marginal"), std::string::npos) << r.err;
  EXPECT_EQ(run({"stats"}).status, cli::kValidationFailure);
}

TEST(Cli, StatsFromRatings) {
  testing::TempDir tmp;
  write_text_file(tmp / "r.tsv",
                  "item\tann\tbob\nq1\teasy\teasy\nq2\tmedium\thard\n"
                  "q3\thard\thard\nq4\teasy\t-\nq5\tmedium\tmedium\n");
  Ran r = run({"stats", "--ratings", (tmp / "r.tsv").string(), "--missing", "-",
               "--levels", "easy,medium,hard", "--json"});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  const json p = r.payload();
  EXPECT_EQ(p["ratings"], 9);
  EXPECT_DOUBLE_EQ(p["percentage_agreement"].get<double>(), 0.75);
  const auto m = stats::parse_ratings(read_text_file(tmp / "r.tsv"), "-", '\t',
                                      stats::Scale::kOrdinal,
                                      {"easy", "medium", "hard"});
  EXPECT_DOUBLE_EQ(p["cohens_kappa"].get<double>(), *stats::cohens_kappa(m));
  EXPECT_DOUBLE_EQ(p["krippendorff_alpha"].get<double>(),
                   *stats::krippendorff_alpha(m));
  EXPECT_DOUBLE_EQ(p["kendall_tau_b"][0]["tau_b"].get<double>(),
                   *stats::kendall_tau(m, 0, 1));

  write_text_file(tmp / "r.csv", "item,a,b\n1,x,y\n2,x,x\n");
  r = run({"stats", "--ratings", (tmp / "r.csv").string(), "--sep", "comma"});
  EXPECT_EQ(r.status, cli::kOk) << r.err;
  EXPECT_EQ(run({"stats", "--ratings", (tmp / "r.csv").string(), "--sep",
                 "pipe"})
                .status,
            cli::kValidationFailure);
  EXPECT_EQ(run({"stats", "--ratings", (tmp / "r.csv").string(), "--cells",
                 "1,2,3,4"})
                .status,
            cli::kValidationFailure);
}

}  // namespace
}  // namespace hiereval
