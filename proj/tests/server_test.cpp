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

#include <string>
#include <thread>
#include <vector>

#include "hiereval/campaign_store.hpp"
#include "hiereval/report.hpp"
#include "hiereval/server.hpp"
#include "test_util.hpp"

namespace hiereval {
namespace {

using nlohmann::json;
using server::CampaignService;
using server::Request;
using server::Response;

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    campaign_ = testing::bundled_campaign(4, 2);
    CampaignDir{dir_.path()}.save(*campaign_);
    service_.emplace(dir_.path());
  }

  Request get(const std::string& path, const std::string& token = "token-0") {
    Request r{"GET", path, {}, {}, {}};
    if (!token.empty()) r.headers["authorization"] = "Bearer " + token;
    return r;
  }

  Request post(const json& body, const std::string& token = "token-0") {
    Request r = get("/campaigns/test/judgments", token);
    r.method = "POST";
    r.body = body.dump();
    return r;
  }

  // Answers the current task of evaluator 0.
  Response answer(const std::string& value, double secs = 1.5) {
    const Response next = service_->handle(get("/campaigns/test/next"));
    const auto& task = next.body.at("task");
    return service_->handle(post({{"item_id", task["item"]["id"]},
                                  {"tree_target", task["tree_target"]},
                                  {"node_id", task["node"]["id"]},
                                  {"answer", value},
                                  {"elapsed_seconds", secs}}));
  }

  // Answers with the current node's answer at `index` (modulo its count).
  Response answer_at(std::size_t index) {
    const Response next = service_->handle(get("/campaigns/test/next"));
    const auto& answers = next.body.at("task").at("node").at("answers");
    return answer(answers[index % answers.size()]);
  }

  std::vector<JudgmentRecord> journal() const {
    return parse_journal(read_text_file(dir_ / kJournalFile));
  }

  testing::TempDir dir_;
  std::shared_ptr<const Campaign> campaign_;
  std::optional<CampaignService> service_;
};

TEST_F(ServiceTest, FreshEvaluatorGetsTheQuestionRoot) {
  const Response r = service_->handle(get("/campaigns/test/next"));
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["status"], "task");
  EXPECT_EQ(r.body["evaluator_id"], "ev0");
  const auto& task = r.body["task"];
  EXPECT_EQ(task["tree_target"], "input");
  EXPECT_EQ(task["node"]["id"], "relevant");
  EXPECT_EQ(task["node"]["answers"], json::array({"yes", "no"}));
  EXPECT_EQ(task["judgments_so_far"], 0);
  EXPECT_FALSE(task["item"].contains("explanation_text"));
  EXPECT_EQ(task["item"]["id"], campaign_->assignments.at("ev0").front());
  EXPECT_EQ(r.body["progress"]["traversals_remaining"],
            2 * campaign_->assignments.at("ev0").size());
}

TEST_F(ServiceTest, FailingRootEndsTheTraversal) {
  const Response r = answer("no");
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["sequence_no"], 1);
  const auto& t = r.body["traversal"];
  EXPECT_EQ(t["status"], "terminated");
  EXPECT_EQ(t["judgments"], 1);
  EXPECT_EQ(t["outcome"],
            json({{"label", "bad"}, {"failed_at", "relevant"},
                  {"failing_answer", "no"}}));
  ASSERT_EQ(journal().size(), 1u);
  EXPECT_EQ(journal()[0].answer, "no");
  EXPECT_EQ(journal()[0].elapsed_seconds, 1.5);

  // The same item's output traversal comes next.
  const Response next = service_->handle(get("/campaigns/test/next"));
  EXPECT_EQ(next.body["task"]["tree_target"], "output");
  EXPECT_EQ(next.body["task"]["node"]["id"], "clear");
  EXPECT_EQ(next.body["task"]["item"]["id"], t["item_id"]);
}

TEST_F(ServiceTest, PassingAnswerReturnsTheNextNode) {
  const Response r = answer("yes");
  EXPECT_EQ(r.body["traversal"]["status"], "in_progress");
  EXPECT_EQ(r.body["traversal"]["next_node"]["id"], "factoid");
}

TEST_F(ServiceTest, IdempotentRetryAppendsOnce) {
  const Response next = service_->handle(get("/campaigns/test/next"));
  const json body = {{"item_id", next.body["task"]["item"]["id"]},
                     {"tree_target", "input"},
                     {"node_id", "relevant"},
                     {"answer", "yes"},
                     {"elapsed_seconds", 2}};
  Request req = post(body);
  req.headers["idempotency-key"] = "k-1";
  const Response first = service_->handle(req);
  const Response retry = service_->handle(req);
  EXPECT_EQ(first.status, 200);
  EXPECT_EQ(retry.status, first.status);
  EXPECT_EQ(retry.body, first.body);
  EXPECT_EQ(journal().size(), 1u);

  // A key in the body works too and is scoped per evaluator.
  json with_key = body;
  with_key["node_id"] = "factoid";
  with_key["idempotency_key"] = "k-2";
  EXPECT_EQ(service_->handle(post(with_key)).status, 200);
  EXPECT_EQ(service_->handle(post(with_key)).status, 200);
  EXPECT_EQ(journal().size(), 2u);

  // Without a key the same retry is stale.
  const Response stale = service_->handle(post(body));
  EXPECT_EQ(stale.status, 409);
  EXPECT_EQ(stale.body["error"]["code"], "stale_node");
  EXPECT_EQ(stale.body["error"]["field"], "node_id");
  EXPECT_EQ(journal().size(), 2u);
}

TEST_F(ServiceTest, ValidationErrors) {
  const std::string item = campaign_->assignments.at("ev0").front();
  const json good = {{"item_id", item},
                     {"tree_target", "input"},
                     {"node_id", "relevant"},
                     {"answer", "yes"},
                     {"elapsed_seconds", 1}};

  json maybe = good;
  maybe["answer"] = "maybe";
  Response r = service_->handle(post(maybe));
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["error"]["code"], "unknown_answer");
  EXPECT_EQ(r.body["error"]["field"], "answer");

  for (const char* field : {"item_id", "node_id", "answer", "tree_target",
                            "elapsed_seconds"}) {
    json missing = good;
    missing.erase(field);
    r = service_->handle(post(missing));
    EXPECT_EQ(r.status, 422) << field;
    EXPECT_EQ(r.body["error"]["field"], field);
  }
  json negative = good;
  negative["elapsed_seconds"] = -1;
  EXPECT_EQ(service_->handle(post(negative)).body["error"]["field"],
            "elapsed_seconds");

  Request bad_json = post(good);
  bad_json.body = "{";
  r = service_->handle(bad_json);
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["error"]["field"], "body");

  json other_item = good;
  other_item["item_id"] = "nope";
  EXPECT_EQ(service_->handle(post(other_item)).status, 422);

  // Output before input on the same item.
  json early = good;
  early["tree_target"] = "output";
  early["node_id"] = "clear";
  r = service_->handle(post(early));
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body["error"]["code"], "out_of_order");
  EXPECT_TRUE(journal().empty());
}

TEST_F(ServiceTest, AuthAndRouting) {
  EXPECT_EQ(service_->handle(get("/campaigns/test/next", "")).status, 401);
  EXPECT_EQ(service_->handle(get("/campaigns/test/next", "wrong")).status,
            401);
  Request basic = get("/campaigns/test/next", "");
  basic.headers["authorization"] = "Basic token-0";
  EXPECT_EQ(service_->handle(basic).status, 401);
  const Response unknown = service_->handle(get("/campaigns/other/next"));
  EXPECT_EQ(unknown.status, 404);
  EXPECT_EQ(unknown.body["error"]["code"], "unknown_campaign");
  EXPECT_EQ(service_->handle(get("/campaigns/test/elsewhere")).status, 404);
  Request wrong_method = get("/campaigns/test/next");
  wrong_method.method = "POST";
  EXPECT_EQ(service_->handle(wrong_method).status, 405);
  EXPECT_EQ(service_->handle(get("/campaigns/test/reports/nope")).status,
            404);

  // The second evaluator has its own queue.
  const Response other = service_->handle(get("/campaigns/test/next", "token-1"));
  EXPECT_EQ(other.body["evaluator_id"], "ev1");
  EXPECT_EQ(other.body["task"]["item"]["id"],
            campaign_->assignments.at("ev1").front());
}

TEST_F(ServiceTest, ExplanationShownOnlyWhereTheNodeUsesIt) {
  answer("no");  // question fails at the root
  Response next = service_->handle(get("/campaigns/test/next"));
  EXPECT_FALSE(next.body["task"]["item"].contains("explanation_text"));
  answer("no");  // short answer unclear
  next = service_->handle(get("/campaigns/test/next"));
  const auto& task = next.body["task"];
  EXPECT_EQ(task["node"]["id"], "explanation_relevant");
  EXPECT_EQ(task["node"]["uses_explanation"], true);
  const Item* item = campaign_->find_item(task["item"]["id"].get<std::string>());
  EXPECT_EQ(task["item"]["explanation_text"], *item->explanation_text);
}

TEST_F(ServiceTest, ReportsMatchOfflineComputation) {
  for (std::size_t i = 0; i < 7; ++i) {
    ASSERT_EQ(answer_at(i % 3 == 0 ? 1 : 0).status, 200);
  }
  const auto records = journal();
  ASSERT_EQ(records.size(), 7u);
  const auto state = replay_records(campaign_, records);
  for (auto kind : kReportKinds) {
    const Response r =
        service_->handle(get("/campaigns/test/reports/" + std::string(kind)));
    if (r.status != 200) {
      // Only statistics that are undefined on this little data may refuse.
      EXPECT_EQ(r.status, 409) << kind << r.body.dump();
      EXPECT_THROW(build_report(state, kind), Error) << kind;
      continue;
    }
    EXPECT_EQ(canonical(r.body), canonical(build_report(state, kind).payload))
        << kind;
  }
  Request as_of = get("/campaigns/test/reports/funnel_input");
  as_of.query["as_of"] = "3";
  const auto prefix = replay_records(
      campaign_, std::span<const JudgmentRecord>(records.data(), 3));
  EXPECT_EQ(canonical(service_->handle(as_of).body),
            canonical(build_report(prefix, "funnel_input").payload));
  as_of.query["as_of"] = "x3";
  EXPECT_EQ(service_->handle(as_of).status, 422);
}

TEST_F(ServiceTest, RestartResumesFromTheJournal) {
  answer("yes");
  answer("yes");
  const Response before = service_->handle(get("/campaigns/test/next"));
  service_.reset();
  service_.emplace(dir_.path());
  const Response after = service_->handle(get("/campaigns/test/next"));
  EXPECT_EQ(after.body, before.body);
  EXPECT_EQ(answer("yes").body["sequence_no"], 3);
}

TEST_F(ServiceTest, SecondServiceOnTheSameDirectoryIsRefused) {
  try {
    CampaignService second(dir_.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST_F(ServiceTest, OverHttp) {
  httplib::Server http;
  server::bind(http, *service_);
  const int port = http.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread loop([&] { http.listen_after_bind(); });
  http.wait_until_ready();

  // Two evaluators drive their whole queues concurrently.
  auto drive = [&](const std::string& token) {
    httplib::Client client("127.0.0.1", port);
    const httplib::Headers auth = {{"Authorization", "Bearer " + token}};
    int posted = 0;
    while (true) {
      auto next = client.Get("/campaigns/test/next", auth);
      if (!next || next->status != 200) return -1;
      const json body = json::parse(next->body);
      if (body["status"] == "done") return posted;
      const auto& task = body["task"];
      const json submit = {{"item_id", task["item"]["id"]},
                           {"tree_target", task["tree_target"]},
                           {"node_id", task["node"]["id"]},
                           {"answer", task["node"]["answers"][0]},
                           {"elapsed_seconds", 0.25}};
      auto res = client.Post("/campaigns/test/judgments", auth, submit.dump(),
                             "application/json");
      if (!res || res->status != 200) return -1;
      ++posted;
    }
  };
  int a = 0, b = 0;
  std::thread ta([&] { a = drive("token-0"); });
  std::thread tb([&] { b = drive("token-1"); });
  ta.join();
  tb.join();
  EXPECT_GT(a, 0);
  EXPECT_GT(b, 0);

  httplib::Client client("127.0.0.1", port);
  auto unauth = client.Get("/campaigns/test/next");
  ASSERT_TRUE(unauth);
  EXPECT_EQ(unauth->status, 401);
  EXPECT_EQ(json::parse(unauth->body)["error"]["code"], "unauthorized");
  auto missing = client.Get("/nowhere");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body)["error"]["code"], "not_found");

  http.stop();
  loop.join();

  const auto records = journal();
  EXPECT_EQ(records.size(), static_cast<std::size_t>(a + b));
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].sequence_no, i + 1);
  }
  const auto state = replay_records(campaign_, records);
  for (const auto& [key, s] : state.traversals()) EXPECT_TRUE(s.terminated());
}

}  // namespace
}  // namespace hiereval
