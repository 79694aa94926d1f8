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

// HTTP service for live judgment sessions.
//
//   GET  /campaigns/{id}/next               next task for the token's evaluator
//   POST /campaigns/{id}/judgments          submit one judgment
//   GET  /campaigns/{id}/reports/{kind}     read-only report (?as_of=, ?yates=)
//
// Every request carries "Authorization: Bearer <token>". Errors are
// {"error": {"code", "message", "field"?}} with a 4xx status.
//
// CampaignService holds the routing logic and is independent of the HTTP
// library, so tests can drive it directly; serve() binds it to cpp-httplib.
// The service owns the journal's exclusive lock for its whole lifetime.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hiereval/campaign.hpp"
#include "hiereval/campaign_store.hpp"
#include "hiereval/errors.hpp"
#include "hiereval/journal.hpp"
#include "hiereval/report.hpp"
#include "hiereval/scoring.hpp"
#include "httplib.h"
#include "json.hpp"

namespace hiereval::server {

struct Request {
  std::string method;  // "GET" or "POST"
  std::string path;    // without query string
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // names lower-cased
  std::string body;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

inline Response error_response(int status, std::string_view code,
                               std::string message,
                               std::optional<std::string> field = {}) {
  nlohmann::json e = {{"code", code}, {"message", std::move(message)}};
  if (field) e["field"] = *field;
  return {status, {{"error", e}}};
}

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kStaleNode:
    case ErrorCode::kAlreadyTerminated:
    case ErrorCode::kOutOfOrder:
    case ErrorCode::kSequence:
      return 409;
    case ErrorCode::kUnknownKind:
      return 404;
    case ErrorCode::kIncomplete:
    case ErrorCode::kZeroMarginal:
    case ErrorCode::kUndefined:
      return 409;
    case ErrorCode::kIo:
    case ErrorCode::kCorruptRecord:
      return 500;
    default:
      return 422;
  }
}

// Field a validation error refers to, for the error body.
inline std::optional<std::string> field_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownAnswer: return "answer";
    case ErrorCode::kUnknownItem:
    case ErrorCode::kUnknownTraversal: return "item_id";
    case ErrorCode::kStaleNode: return "node_id";
    case ErrorCode::kOutOfOrder:
    case ErrorCode::kAlreadyTerminated: return "tree_target";
    default: return std::nullopt;
  }
}

class CampaignService {
 public:
  // Loads the campaign in `dir`, takes the journal lock and replays the
  // journal. Throws Error on a missing campaign, corrupt journal or a journal
  // locked by another writer.
  explicit CampaignService(const std::filesystem::path& dir)
      : dir_{dir}, writer_(dir_.journal_path(), /*wait=*/false) {
    auto campaign = dir_.load_campaign();
    auto records = parse_journal(writer_.read_all());
    engine_ = std::make_unique<CampaignEngine>(
        std::move(campaign), std::move(records),
        [this](const JudgmentRecord& r) { writer_.append(r); });
  }

  const Campaign& campaign() const { return engine_->campaign(); }
  const CampaignEngine& engine() const { return *engine_; }

  Response handle(const Request& req) {
    try {
      return dispatch(req);
    } catch (const Error& e) {
      return error_response(http_status(e.code()), to_string(e.code()),
                            e.what(), field_of(e.code()));
    } catch (const std::exception& e) {
      return error_response(500, "internal", e.what());
    }
  }

 private:
  static std::vector<std::string_view> split_path(std::string_view path) {
    std::vector<std::string_view> parts;
    while (!path.empty()) {
      if (path.front() == '/') {
        path.remove_prefix(1);
        continue;
      }
      const auto slash = path.find('/');
      parts.push_back(path.substr(0, slash));
      if (slash == std::string_view::npos) break;
      path.remove_prefix(slash);
    }
    return parts;
  }

  Response dispatch(const Request& req) {
    const auto parts = split_path(req.path);
    if (parts.size() < 3 || parts[0] != "campaigns") {
      return error_response(404, "not_found", "no route for " + req.path);
    }
    if (parts[1] != campaign().id) {
      return error_response(404, "unknown_campaign",
                            "unknown campaign '" + std::string(parts[1]) + "'");
    }
    const Evaluator* evaluator = authenticate(req);
    if (!evaluator) {
      return error_response(401, "unauthorized",
                            "missing or invalid bearer token");
    }
    if (parts.size() == 3 && parts[2] == "next") {
      if (req.method != "GET") return method_not_allowed(req);
      return next(*evaluator);
    }
    if (parts.size() == 3 && parts[2] == "judgments") {
      if (req.method != "POST") return method_not_allowed(req);
      return post_judgment(*evaluator, req);
    }
    if (parts.size() == 4 && parts[2] == "reports") {
      if (req.method != "GET") return method_not_allowed(req);
      return report(std::string(parts[3]), req);
    }
    return error_response(404, "not_found", "no route for " + req.path);
  }

  static Response method_not_allowed(const Request& req) {
    return error_response(405, "method_not_allowed",
                          req.method + " is not allowed on " + req.path);
  }

  const Evaluator* authenticate(const Request& req) const {
    auto it = req.headers.find("authorization");
    if (it == req.headers.end()) return nullptr;
    constexpr std::string_view kBearer = "Bearer ";
    std::string_view value = it->second;
    if (value.substr(0, kBearer.size()) != kBearer) return nullptr;
    value.remove_prefix(kBearer.size());
    for (const auto& e : campaign().evaluators) {
      if (e.token == value) return &e;
    }
    return nullptr;
  }

  static nlohmann::json progress_json(const Progress& p) {
    return {{"items_total", p.items_total},
            {"items_done", p.items_done},
            {"traversals_total", p.traversals_total},
            {"traversals_done", p.traversals_done},
            {"traversals_remaining", p.traversals_total - p.traversals_done}};
  }

  static nlohmann::json node_json(const MetricNode& n) {
    nlohmann::json help = nlohmann::json::object();
    for (const auto& [a, text] : n.answer_help) help[a] = text;
    return {{"id", n.id},
            {"prompt", n.prompt},
            {"characteristic", n.characteristic},
            {"answers", n.answers},
            {"help", help},
            {"uses_explanation", n.uses_explanation}};
  }

  static nlohmann::json item_json(const Item& item, bool with_explanation) {
    nlohmann::json j = {{"id", item.id},
                        {"input_text", item.input_text},
                        {"output_text", item.output_text}};
    if (with_explanation && item.explanation_text) {
      j["explanation_text"] = *item.explanation_text;
    }
    return j;
  }

  Response next(const Evaluator& evaluator) const {
    const auto task = engine_->next_task(evaluator.id);
    const auto progress = engine_->progress(evaluator.id);
    if (!task) {
      return {200,
              {{"status", "done"},
               {"evaluator_id", evaluator.id},
               {"progress", progress_json(progress)}}};
    }
    return {200,
            {{"status", "task"},
             {"evaluator_id", evaluator.id},
             {"progress", progress_json(progress)},
             {"task",
              {{"item", item_json(task->item, task->node.uses_explanation)},
               {"tree_target", std::string(to_string(task->tree_target))},
               {"node", node_json(task->node)},
               {"judgments_so_far", task->judgments_so_far}}}}};
  }

  struct Submission {
    std::string item_id;
    TreeTarget tree_target = TreeTarget::kInput;
    std::string node_id;
    std::string answer;
    double elapsed_seconds = 0.0;
    std::optional<std::string> idempotency_key;
  };

  static Submission parse_submission(const Request& req) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      throw FieldError("body", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw FieldError("body", "expected a JSON object");
    auto text = [&](const char* name) {
      auto it = j.find(name);
      if (it == j.end() || !it->is_string() ||
          it->get_ref<const std::string&>().empty()) {
        throw FieldError(name, std::string("field '") + name +
                                   "' is required and must be a string");
      }
      return it->get<std::string>();
    };
    Submission s;
    s.item_id = text("item_id");
    const auto target = parse_target(text("tree_target"));
    if (!target) {
      throw FieldError("tree_target", "tree_target must be input or output");
    }
    s.tree_target = *target;
    s.node_id = text("node_id");
    s.answer = text("answer");
    auto el = j.find("elapsed_seconds");
    if (el == j.end() || !el->is_number() || !(el->get<double>() >= 0.0)) {
      throw FieldError("elapsed_seconds",
                       "elapsed_seconds must be a non-negative number");
    }
    s.elapsed_seconds = el->get<double>();
    if (auto h = req.headers.find("idempotency-key"); h != req.headers.end()) {
      s.idempotency_key = h->second;
    } else if (auto k = j.find("idempotency_key");
               k != j.end() && k->is_string()) {
      s.idempotency_key = k->get<std::string>();
    }
    return s;
  }

  struct FieldError : std::runtime_error {
    FieldError(std::string f, const std::string& msg)
        : std::runtime_error(msg), field(std::move(f)) {}
    std::string field;
  };

  Response post_judgment(const Evaluator& evaluator, const Request& req) {
    Submission s;
    try {
      s = parse_submission(req);
    } catch (const FieldError& e) {
      return error_response(422, "invalid_argument", e.what(), e.field);
    }
    // Submissions are serialized here so a retried key can never race its
    // first attempt.
    std::lock_guard lock(submit_mutex_);
    std::string scoped_key;
    if (s.idempotency_key) {
      scoped_key = evaluator.id + '\n' + *s.idempotency_key;
      if (auto it = replies_.find(scoped_key); it != replies_.end()) {
        return it->second;
      }
    }
    const MetricNode* node = campaign().tree(s.tree_target).find(s.node_id);
    if (node && !node->accepts(s.answer)) {
      return error_response(422, "unknown_answer",
                            "'" + s.answer + "' is not an answer of node '" +
                                s.node_id + "'",
                            "answer");
    }
    const TraversalState state =
        engine_->submit_judgment(evaluator.id, s.item_id, s.tree_target,
                                 s.node_id, s.answer, s.elapsed_seconds);
    nlohmann::json traversal = {
        {"item_id", state.item_id},
        {"tree_target", std::string(to_string(state.tree_target))},
        {"status", std::string(to_string(state.status))},
        {"judgments", state.history.size()}};
    if (state.terminated()) {
      traversal["outcome"] = to_json(*state.outcome);
    } else {
      traversal["next_node"] =
          node_json(campaign().tree(state.tree_target).node(*state.current_node));
    }
    Response r{200,
               {{"sequence_no", engine_->last_sequence_no()},
                {"traversal", traversal},
                {"progress", progress_json(engine_->progress(evaluator.id))}}};
    if (s.idempotency_key) replies_.emplace(scoped_key, r);
    return r;
  }

  Response report(const std::string& kind, const Request& req) const {
    std::optional<std::uint64_t> as_of;
    if (auto it = req.query.find("as_of"); it != req.query.end()) {
      try {
        std::size_t used = 0;
        as_of = std::stoull(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        return error_response(422, "invalid_argument",
                              "as_of must be a sequence number", "as_of");
      }
    }
    ReportOptions options;
    if (auto it = req.query.find("yates"); it != req.query.end()) {
      options.yates_correction = it->second == "true" || it->second == "1";
    }
    const auto records = engine_->snapshot(as_of);
    const auto state = replay_records(engine_->campaign_ptr(), records);
    return {200, build_report(state, kind, options).payload};
  }

  CampaignDir dir_;
  JournalWriter writer_;
  std::unique_ptr<CampaignEngine> engine_;
  std::mutex submit_mutex_;
  // Replies by (evaluator, idempotency key). Kept in memory only: after a
  // restart a retry hits the stale-node check instead, so it still cannot
  // append a second record.
  std::map<std::string, Response> replies_;
};

// --- HTTP binding -------------------------------------------------------------

inline Request from_httplib(const httplib::Request& in) {
  Request r;
  r.method = in.method;
  r.path = in.path;
  for (const auto& [k, v] : in.params) r.query.emplace(k, v);
  for (const auto& [k, v] : in.headers) {
    std::string key = k;
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    r.headers.emplace(std::move(key), v);
  }
  r.body = in.body;
  return r;
}

// Registers the service's routes on `server`.
inline void bind(httplib::Server& server, CampaignService& service) {
  auto handler = [&service](const httplib::Request& in,
                            httplib::Response& out) {
    const Response r = service.handle(from_httplib(in));
    out.status = r.status;
    out.set_content(canonical(r.body), "application/json");
  };
  server.Get(R"(/campaigns/[^/]+/next)", handler);
  server.Post(R"(/campaigns/[^/]+/judgments)", handler);
  server.Get(R"(/campaigns/[^/]+/reports/[^/]+)", handler);
  server.set_error_handler([](const httplib::Request& in,
                              httplib::Response& out) {
    if (!out.body.empty()) return;
    const Response r = error_response(
        out.status, out.status == 404 ? "not_found" : "http_error",
        "no route for " + in.method + " " + in.path);
    out.set_content(canonical(r.body), "application/json");
  });
}

// Blocks serving on host:port. Returns false if the port cannot be bound.
inline bool serve(CampaignService& service, const std::string& host,
                  int port) {
  httplib::Server server;
  bind(server, service);
  return server.listen(host, port);
}

}  // namespace hiereval::server
