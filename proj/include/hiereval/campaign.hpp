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

// Two-phase evaluation campaigns.
//
// Items collected during testing are assigned to evaluators, who judge each
// item's input with the input tree and then its output with the output tree.
// Every judgment is one journal record; the in-memory state is always a
// replay of the journal, so any prefix of the journal reproduces the state
// as of that sequence number.

#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hiereval/errors.hpp"
#include "hiereval/journal.hpp"
#include "hiereval/metric_tree.hpp"
#include "hiereval/rng.hpp"

namespace hiereval {

struct Item {
  std::string id;
  std::string input_text;
  std::string output_text;
  std::optional<std::string> explanation_text;
  std::optional<std::string> source_tag;

  friend bool operator==(const Item&, const Item&) = default;
};

struct Evaluator {
  std::string id;
  std::string display_name;
  std::string token;

  friend bool operator==(const Evaluator&, const Evaluator&) = default;
};

// kSeededShuffle: items are permuted with the campaign seed and dealt to
// evaluators in turn. kRoundRobin: items are dealt in their listed order.
enum class AssignmentMode { kSeededShuffle, kRoundRobin };

inline std::string_view to_string(AssignmentMode mode) {
  return mode == AssignmentMode::kSeededShuffle ? "seeded_shuffle"
                                                : "round_robin";
}

inline std::optional<AssignmentMode> parse_assignment_mode(
    std::string_view text) {
  if (text == "seeded_shuffle") return AssignmentMode::kSeededShuffle;
  if (text == "round_robin") return AssignmentMode::kRoundRobin;
  return std::nullopt;
}

struct Campaign {
  std::string id;
  MetricTree input_tree;
  MetricTree output_tree;
  std::vector<Item> items;
  std::vector<Evaluator> evaluators;
  int redundancy = 1;
  std::uint64_t shuffle_seed = 0;
  AssignmentMode assignment = AssignmentMode::kSeededShuffle;

  // Derived by create_campaign: evaluator id -> item ids in judging order.
  std::map<std::string, std::vector<std::string>, std::less<>> assignments;

  const MetricTree& tree(TreeTarget target) const {
    return target == TreeTarget::kInput ? input_tree : output_tree;
  }

  const Item* find_item(std::string_view item_id) const {
    auto it = item_index_.find(item_id);
    return it == item_index_.end() ? nullptr : &items[it->second];
  }

  const Evaluator* find_evaluator(std::string_view evaluator_id) const {
    for (const auto& e : evaluators) {
      if (e.id == evaluator_id) return &e;
    }
    return nullptr;
  }

  bool is_assigned(std::string_view evaluator_id,
                   std::string_view item_id) const {
    auto it = assigned_.find(evaluator_id);
    return it != assigned_.end() && it->second.contains(item_id);
  }

 private:
  friend Campaign create_campaign(std::string, MetricTree, MetricTree,
                                  std::vector<Item>, std::vector<Evaluator>,
                                  int, std::uint64_t, AssignmentMode);
  std::map<std::string, std::size_t, std::less<>> item_index_;
  std::map<std::string, std::set<std::string, std::less<>>, std::less<>>
      assigned_;
};

// Validates inputs and derives the assignment table. Each item goes to
// exactly `redundancy` distinct evaluators; loads differ by at most one.
inline Campaign create_campaign(
    std::string id, MetricTree input_tree, MetricTree output_tree,
    std::vector<Item> items, std::vector<Evaluator> evaluators,
    int redundancy = 1, std::uint64_t shuffle_seed = 0,
    AssignmentMode assignment = AssignmentMode::kSeededShuffle) {
  auto invalid = [](const std::string& msg) {
    return Error(ErrorCode::kInvalidArgument, msg);
  };
  if (id.empty()) throw invalid("campaign id must not be empty");
  throw_if_invalid(input_tree);
  throw_if_invalid(output_tree);
  if (input_tree.target != TreeTarget::kInput) {
    throw invalid("input tree '" + input_tree.id + "' does not target input");
  }
  if (output_tree.target != TreeTarget::kOutput) {
    throw invalid("output tree '" + output_tree.id +
                  "' does not target output");
  }
  if (items.empty()) throw invalid("campaign has no items");
  if (evaluators.empty()) throw invalid("campaign has no evaluators");
  if (redundancy < 1) throw invalid("redundancy must be at least 1");
  if (static_cast<std::size_t>(redundancy) > evaluators.size()) {
    throw invalid("redundancy " + std::to_string(redundancy) +
                  " exceeds evaluator count " +
                  std::to_string(evaluators.size()));
  }

  Campaign c;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Item& item = items[i];
    if (item.id.empty()) throw invalid("item id must not be empty");
    if (item.input_text.empty() || item.output_text.empty()) {
      throw invalid("item '" + item.id + "' has empty input or output text");
    }
    if (!c.item_index_.emplace(item.id, i).second) {
      throw Error(ErrorCode::kDuplicateItem,
                  "duplicate item id '" + item.id + "'");
    }
  }
  std::set<std::string> evaluator_ids;
  for (const auto& e : evaluators) {
    if (e.id.empty()) throw invalid("evaluator id must not be empty");
    if (e.token.empty()) {
      throw invalid("evaluator '" + e.id + "' has an empty token");
    }
    if (!evaluator_ids.insert(e.id).second) {
      throw invalid("duplicate evaluator id '" + e.id + "'");
    }
  }

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (assignment == AssignmentMode::kSeededShuffle) {
    SeededRng rng(shuffle_seed);
    rng.shuffle(std::span<std::size_t>(order));
  }
  for (const auto& e : evaluators) c.assignments[e.id];
  const std::size_t n_eval = evaluators.size();
  const auto r = static_cast<std::size_t>(redundancy);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    for (std::size_t copy = 0; copy < r; ++copy) {
      const Evaluator& e = evaluators[(pos * r + copy) % n_eval];
      c.assignments[e.id].push_back(items[order[pos]].id);
      c.assigned_[e.id].insert(items[order[pos]].id);
    }
  }

  c.id = std::move(id);
  c.input_tree = std::move(input_tree);
  c.output_tree = std::move(output_tree);
  c.items = std::move(items);
  c.evaluators = std::move(evaluators);
  c.redundancy = redundancy;
  c.shuffle_seed = shuffle_seed;
  c.assignment = assignment;
  return c;
}

// --- traversal state machine ----------------------------------------------

struct TraversalKey {
  std::string item_id;
  std::string evaluator_id;
  TreeTarget tree_target = TreeTarget::kInput;

  friend auto operator<=>(const TraversalKey&, const TraversalKey&) = default;
  friend bool operator==(const TraversalKey&, const TraversalKey&) = default;
};

struct Step {
  std::string node_id;
  std::string answer;
  double elapsed_seconds = 0.0;

  friend bool operator==(const Step&, const Step&) = default;
};

enum class TraversalStatus { kInProgress, kTerminated };

inline std::string_view to_string(TraversalStatus s) {
  return s == TraversalStatus::kInProgress ? "in_progress" : "terminated";
}

struct TraversalState {
  std::string item_id;
  std::string evaluator_id;
  TreeTarget tree_target = TreeTarget::kInput;
  std::optional<std::string> current_node;
  std::vector<Step> history;
  TraversalStatus status = TraversalStatus::kInProgress;
  std::optional<CompositeOutcome> outcome;

  bool terminated() const { return status == TraversalStatus::kTerminated; }

  double total_elapsed() const {
    double t = 0.0;
    for (const auto& s : history) t += s.elapsed_seconds;
    return t;
  }

  TraversalKey key() const { return {item_id, evaluator_id, tree_target}; }

  friend bool operator==(const TraversalState&,
                         const TraversalState&) = default;
};

struct Task {
  Item item;
  TreeTarget tree_target = TreeTarget::kInput;
  MetricNode node;
  std::size_t judgments_so_far = 0;  // within this traversal
};

struct Progress {
  std::size_t items_total = 0;
  std::size_t items_done = 0;
  std::size_t traversals_total = 0;
  std::size_t traversals_done = 0;
};

class CampaignState {
 public:
  explicit CampaignState(std::shared_ptr<const Campaign> campaign)
      : campaign_(std::move(campaign)) {
    for (const auto& [evaluator_id, item_ids] : campaign_->assignments) {
      for (const auto& item_id : item_ids) {
        for (TreeTarget t : {TreeTarget::kInput, TreeTarget::kOutput}) {
          TraversalState s;
          s.item_id = item_id;
          s.evaluator_id = evaluator_id;
          s.tree_target = t;
          s.current_node = campaign_->tree(t).root;
          traversals_.emplace(s.key(), std::move(s));
        }
      }
    }
  }

  const Campaign& campaign() const { return *campaign_; }
  const std::shared_ptr<const Campaign>& campaign_ptr() const {
    return campaign_;
  }
  std::uint64_t last_sequence_no() const { return last_sequence_no_; }

  const std::map<TraversalKey, TraversalState>& traversals() const {
    return traversals_;
  }

  const TraversalState& traversal(const TraversalKey& key) const {
    auto it = traversals_.find(key);
    if (it == traversals_.end()) {
      throw Error(ErrorCode::kUnknownTraversal,
                  "item '" + key.item_id + "' is not assigned to evaluator '" +
                      key.evaluator_id + "'");
    }
    return it->second;
  }

  // Validates `r` against the current state without changing it and returns
  // where its answer routes.
  RouteTarget check(const JudgmentRecord& r) const {
    const Campaign& c = *campaign_;
    if (r.campaign_id != c.id) {
      throw Error(ErrorCode::kInvalidArgument,
                  "record belongs to campaign '" + r.campaign_id +
                      "', not '" + c.id + "'");
    }
    if (!c.find_evaluator(r.evaluator_id)) {
      throw Error(ErrorCode::kUnknownEvaluator,
                  "unknown evaluator '" + r.evaluator_id + "'");
    }
    if (!c.find_item(r.item_id)) {
      throw Error(ErrorCode::kUnknownItem, "unknown item '" + r.item_id + "'");
    }
    const TraversalState& s = traversal({r.item_id, r.evaluator_id,
                                         r.tree_target});
    if (s.terminated()) {
      throw Error(ErrorCode::kAlreadyTerminated,
                  std::string(to_string(r.tree_target)) + " traversal of '" +
                      r.item_id + "' by '" + r.evaluator_id +
                      "' is already terminated");
    }
    if (r.node_id != *s.current_node) {
      throw Error(ErrorCode::kStaleNode,
                  "submitted node '" + r.node_id + "' but traversal is at '" +
                      *s.current_node + "'");
    }
    if (!(r.elapsed_seconds >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "elapsed_seconds must be non-negative");
    }
    if (r.sequence_no != last_sequence_no_ + 1) {
      throw Error(ErrorCode::kSequence,
                  "sequence_no " + std::to_string(r.sequence_no) +
                      " does not follow " + std::to_string(last_sequence_no_));
    }
    return route(c.tree(r.tree_target), r.node_id, r.answer);
  }

  const TraversalState& apply(const JudgmentRecord& r) {
    const RouteTarget target = check(r);
    TraversalState& s =
        traversals_.find({r.item_id, r.evaluator_id, r.tree_target})->second;
    s.history.push_back({r.node_id, r.answer, r.elapsed_seconds});
    if (target.is_terminal()) {
      s.current_node.reset();
      s.status = TraversalStatus::kTerminated;
      s.outcome = target.outcome;
    } else {
      s.current_node = target.node_id;
    }
    last_sequence_no_ = r.sequence_no;
    return s;
  }

  // Earliest unfinished traversal in the evaluator's item order; the input
  // traversal of an item always precedes its output traversal.
  std::optional<Task> next_task(std::string_view evaluator_id) const {
    const Campaign& c = *campaign_;
    auto it = c.assignments.find(evaluator_id);
    if (it == c.assignments.end()) {
      throw Error(ErrorCode::kUnknownEvaluator,
                  "unknown evaluator '" + std::string(evaluator_id) + "'");
    }
    for (const auto& item_id : it->second) {
      for (TreeTarget t : {TreeTarget::kInput, TreeTarget::kOutput}) {
        const auto& s =
            traversals_.find({item_id, std::string(evaluator_id), t})->second;
        if (s.terminated()) continue;
        return Task{*c.find_item(item_id), t,
                    c.tree(t).node(*s.current_node), s.history.size()};
      }
    }
    return std::nullopt;
  }

  Progress progress(std::string_view evaluator_id) const {
    const Campaign& c = *campaign_;
    auto it = c.assignments.find(evaluator_id);
    if (it == c.assignments.end()) {
      throw Error(ErrorCode::kUnknownEvaluator,
                  "unknown evaluator '" + std::string(evaluator_id) + "'");
    }
    Progress p;
    for (const auto& item_id : it->second) {
      bool both = true;
      for (TreeTarget t : {TreeTarget::kInput, TreeTarget::kOutput}) {
        const auto& s =
            traversals_.find({item_id, std::string(evaluator_id), t})->second;
        ++p.traversals_total;
        if (s.terminated()) {
          ++p.traversals_done;
        } else {
          both = false;
        }
      }
      ++p.items_total;
      if (both) ++p.items_done;
    }
    return p;
  }

 private:
  std::shared_ptr<const Campaign> campaign_;
  std::map<TraversalKey, TraversalState> traversals_;
  std::uint64_t last_sequence_no_ = 0;
};

inline CampaignState replay_records(std::shared_ptr<const Campaign> campaign,
                                    std::span<const JudgmentRecord> records) {
  CampaignState state(std::move(campaign));
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      state.apply(records[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "journal line " + std::to_string(i + 1) + ": " +
                                e.what());
    }
  }
  return state;
}

// Rebuilds all traversal states from journal text.
inline CampaignState replay_journal(std::shared_ptr<const Campaign> campaign,
                                    std::string_view journal_text) {
  const auto records = parse_journal(journal_text);
  return replay_records(std::move(campaign), records);
}

// Live, single-writer front end. Submissions are serialized; each accepted
// judgment is handed to the sink (normally an append-only file) before the
// in-memory state changes, so a failed write leaves the state untouched.
class CampaignEngine {
 public:
  using Clock = std::function<std::chrono::system_clock::time_point()>;
  using Sink = std::function<void(const JudgmentRecord&)>;

  explicit CampaignEngine(std::shared_ptr<const Campaign> campaign,
                          std::vector<JudgmentRecord> existing = {},
                          Sink sink = {},
                          Clock clock = &std::chrono::system_clock::now)
      : state_(replay_records(campaign, existing)),
        journal_(std::move(existing)),
        sink_(std::move(sink)),
        clock_(std::move(clock)) {}

  const Campaign& campaign() const { return state_.campaign(); }
  const std::shared_ptr<const Campaign>& campaign_ptr() const {
    return state_.campaign_ptr();
  }

  TraversalState submit_judgment(std::string_view evaluator_id,
                                 std::string_view item_id, TreeTarget target,
                                 std::string_view node_id,
                                 std::string_view answer,
                                 double elapsed_seconds) {
    std::unique_lock lock(mutex_);
    JudgmentRecord r;
    r.campaign_id = state_.campaign().id;
    r.item_id = std::string(item_id);
    r.evaluator_id = std::string(evaluator_id);
    r.tree_target = target;
    r.node_id = std::string(node_id);
    r.answer = std::string(answer);
    if (!(elapsed_seconds >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "elapsed_seconds must be non-negative");
    }
    r.elapsed_seconds = canonical_seconds(elapsed_seconds);
    r.wall_time = format_timestamp(clock_());
    r.sequence_no = state_.last_sequence_no() + 1;
    state_.check(r);
    // Live sessions follow next_task order; replay accepts any journal.
    if (target == TreeTarget::kOutput &&
        !state_.traversal({r.item_id, r.evaluator_id, TreeTarget::kInput})
             .terminated()) {
      throw Error(ErrorCode::kOutOfOrder,
                  "input traversal of '" + r.item_id +
                      "' must be finished before its output is judged");
    }
    if (sink_) sink_(r);
    journal_.push_back(r);
    return state_.apply(r);
  }

  std::optional<Task> next_task(std::string_view evaluator_id) const {
    std::shared_lock lock(mutex_);
    return state_.next_task(evaluator_id);
  }

  Progress progress(std::string_view evaluator_id) const {
    std::shared_lock lock(mutex_);
    return state_.progress(evaluator_id);
  }

  TraversalState traversal(const TraversalKey& key) const {
    std::shared_lock lock(mutex_);
    return state_.traversal(key);
  }

  // Journal prefix up to and including `as_of` (everything when absent).
  std::vector<JudgmentRecord> snapshot(
      std::optional<std::uint64_t> as_of = std::nullopt) const {
    std::shared_lock lock(mutex_);
    if (!as_of || *as_of >= journal_.size()) return journal_;
    return {journal_.begin(),
            journal_.begin() + static_cast<std::ptrdiff_t>(*as_of)};
  }

  std::uint64_t last_sequence_no() const {
    std::shared_lock lock(mutex_);
    return state_.last_sequence_no();
  }

 private:
  mutable std::shared_mutex mutex_;
  CampaignState state_;
  std::vector<JudgmentRecord> journal_;
  Sink sink_;
  Clock clock_;
};

}  // namespace hiereval
