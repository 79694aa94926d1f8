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

// Reports derived from a judgment journal.
//
// Every function here is a pure function of (campaign, replayed state).
// Traversals that are still in progress are left out of funnels, outcome
// maps and summaries; only completed evaluations are counted. Under
// redundancy > 1 the unit of counting is the traversal (item x evaluator).

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hiereval/campaign.hpp"
#include "hiereval/errors.hpp"
#include "hiereval/metric_tree.hpp"
#include "hiereval/stats.hpp"

namespace hiereval {

// --- composite outcomes -------------------------------------------------------

inline std::map<TraversalKey, CompositeOutcome> composite_outcomes(
    const CampaignState& state) {
  std::map<TraversalKey, CompositeOutcome> out;
  for (const auto& [key, s] : state.traversals()) {
    if (s.terminated()) out.emplace(key, *s.outcome);
  }
  return out;
}

struct OutcomeCounts {
  std::size_t good = 0;
  std::size_t bad = 0;
};

inline OutcomeCounts count_outcomes(const CampaignState& state,
                                    TreeTarget target) {
  OutcomeCounts c;
  for (const auto& [key, s] : state.traversals()) {
    if (key.tree_target != target || !s.terminated()) continue;
    (s.outcome->is_good() ? c.good : c.bad)++;
  }
  return c;
}

// Output outcome x input outcome over (item, evaluator) pairs whose two
// traversals are both finished.
inline stats::ContingencyTable contingency_table(const CampaignState& state) {
  stats::ContingencyTable t;
  for (const auto& [key, s] : state.traversals()) {
    if (key.tree_target != TreeTarget::kOutput || !s.terminated()) continue;
    const auto& in =
        state.traversal({key.item_id, key.evaluator_id, TreeTarget::kInput});
    if (!in.terminated()) continue;
    const bool out_good = s.outcome->is_good();
    const bool in_good = in.outcome->is_good();
    if (out_good && in_good) ++t.a;
    if (out_good && !in_good) ++t.b;
    if (!out_good && in_good) ++t.c;
    if (!out_good && !in_good) ++t.d;
  }
  return t;
}

// --- funnel ----------------------------------------------------------------

struct FunnelEntry {
  std::string node_id;
  std::string characteristic;
  std::size_t presented = 0;
  // In the node's declared answer order.
  std::vector<std::pair<std::string, std::size_t>> answer_counts;
  std::size_t terminated_here = 0;
  std::size_t terminated_good = 0;
  std::size_t terminated_bad = 0;
  std::size_t continued = 0;

  std::size_t count(std::string_view answer) const {
    for (const auto& [a, n] : answer_counts) {
      if (a == answer) return n;
    }
    return 0;
  }
};

struct FunnelReport {
  std::string tree_id;
  TreeTarget target = TreeTarget::kInput;
  std::size_t traversals = 0;  // completed traversals counted
  std::vector<FunnelEntry> entries;  // pre-order from the root

  const FunnelEntry& entry(std::string_view node_id) const {
    for (const auto& e : entries) {
      if (e.node_id == node_id) return e;
    }
    throw Error(ErrorCode::kUnknownNode,
                "no funnel entry for node '" + std::string(node_id) + "'");
  }
};

inline FunnelReport funnel(const CampaignState& state, TreeTarget target) {
  const MetricTree& tree = state.campaign().tree(target);
  FunnelReport report;
  report.tree_id = tree.id;
  report.target = target;
  std::map<std::string, std::size_t, std::less<>> index;
  for (const auto& id : node_order(tree)) {
    const MetricNode& n = tree.node(id);
    FunnelEntry e;
    e.node_id = id;
    e.characteristic = n.characteristic;
    for (const auto& a : n.answers) e.answer_counts.emplace_back(a, 0);
    index[id] = report.entries.size();
    report.entries.push_back(std::move(e));
  }
  for (const auto& [key, s] : state.traversals()) {
    if (key.tree_target != target || !s.terminated()) continue;
    ++report.traversals;
    for (const auto& step : s.history) {
      FunnelEntry& e = report.entries[index.find(step.node_id)->second];
      ++e.presented;
      for (auto& [a, n] : e.answer_counts) {
        if (a == step.answer) ++n;
      }
      const RouteTarget r = route(tree, step.node_id, step.answer);
      if (r.is_terminal()) {
        ++e.terminated_here;
        (r.outcome->is_good() ? e.terminated_good : e.terminated_bad)++;
      } else {
        ++e.continued;
      }
    }
  }
  return report;
}

// --- level distributions ----------------------------------------------------

// Answer counts at one node over completed traversals that reached it. Empty
// when no traversal reached the node.
inline std::vector<std::pair<std::string, std::size_t>> level_distribution(
    const CampaignState& state, TreeTarget target, std::string_view node_id) {
  const auto report = funnel(state, target);
  const auto& e = report.entry(node_id);
  if (e.presented == 0) return {};
  return e.answer_counts;
}

// Distribution of the input tree's "difficulty" characteristic.
inline std::vector<std::pair<std::string, std::size_t>> difficulty_distribution(
    const CampaignState& state) {
  const MetricTree& tree = state.campaign().input_tree;
  for (const auto& [id, n] : tree.nodes) {
    if (n.characteristic == "difficulty") {
      return level_distribution(state, TreeTarget::kInput, id);
    }
  }
  return {};
}

// --- per-evaluator summaries ------------------------------------------------

struct EvaluatorSummary {
  std::string evaluator_id;
  std::size_t items_judged_input = 0;
  std::size_t items_judged_output = 0;
  std::size_t judgments_input = 0;
  std::size_t judgments_output = 0;
  // Mean total seconds per completed traversal ("mean_all").
  std::optional<double> mean_elapsed_input;
  std::optional<double> mean_elapsed_output;
  // Same, restricted to traversals that ran the full path to a good outcome
  // ("mean_completed_full_path").
  std::optional<double> mean_elapsed_input_full_path;
  std::optional<double> mean_elapsed_output_full_path;

  bool means_undefined() const {
    return !mean_elapsed_input && !mean_elapsed_output;
  }
};

inline std::vector<EvaluatorSummary> evaluator_summaries(
    const CampaignState& state) {
  struct Acc {
    std::size_t n = 0, full = 0, judgments = 0;
    double total = 0, total_full = 0;
  };
  std::map<std::string, std::map<TreeTarget, Acc>> acc;
  for (const auto& e : state.campaign().evaluators) acc[e.id];
  for (const auto& [key, s] : state.traversals()) {
    if (!s.terminated()) continue;
    Acc& a = acc[key.evaluator_id][key.tree_target];
    const double t = s.total_elapsed();
    ++a.n;
    a.judgments += s.history.size();
    a.total += t;
    if (s.outcome->is_good()) {
      ++a.full;
      a.total_full += t;
    }
  }
  auto mean = [](double total, std::size_t n) -> std::optional<double> {
    if (n == 0) return std::nullopt;
    return total / static_cast<double>(n);
  };
  std::vector<EvaluatorSummary> out;
  for (auto& [id, per] : acc) {
    const Acc& in = per[TreeTarget::kInput];
    const Acc& op = per[TreeTarget::kOutput];
    EvaluatorSummary s;
    s.evaluator_id = id;
    s.items_judged_input = in.n;
    s.items_judged_output = op.n;
    s.judgments_input = in.judgments;
    s.judgments_output = op.judgments;
    s.mean_elapsed_input = mean(in.total, in.n);
    s.mean_elapsed_output = mean(op.total, op.n);
    s.mean_elapsed_input_full_path = mean(in.total_full, in.full);
    s.mean_elapsed_output_full_path = mean(op.total_full, op.full);
    out.push_back(std::move(s));
  }
  return out;
}

// --- time savings -------------------------------------------------------------

struct TimeSavingsReport {
  std::string tree_id;
  TreeTarget target = TreeTarget::kInput;
  std::size_t items = 0;  // traversals judged with this tree
  std::size_t hierarchical_judgments = 0;
  std::size_t flat_judgments = 0;
  std::size_t saved = 0;
  double saved_fraction = 0.0;  // saved / flat
};

// Judgments actually made vs. judging every characteristic of every item.
inline TimeSavingsReport time_savings(const CampaignState& state,
                                      TreeTarget target) {
  const MetricTree& tree = state.campaign().tree(target);
  TimeSavingsReport r;
  r.tree_id = tree.id;
  r.target = target;
  for (const auto& [key, s] : state.traversals()) {
    if (key.tree_target != target) continue;
    if (!s.terminated()) {
      throw Error(ErrorCode::kIncomplete,
                  "time savings need a finished campaign: " +
                      std::string(to_string(target)) + " traversal of '" +
                      key.item_id + "' by '" + key.evaluator_id +
                      "' is still in progress");
    }
    ++r.items;
    r.hierarchical_judgments += s.history.size();
  }
  r.flat_judgments = r.items * flat_judgment_count(tree);
  r.saved = r.flat_judgments - r.hierarchical_judgments;
  r.saved_fraction =
      r.flat_judgments == 0
          ? 0.0
          : static_cast<double>(r.saved) / static_cast<double>(r.flat_judgments);
  return r;
}

}  // namespace hiereval
