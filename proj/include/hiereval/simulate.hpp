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

// Scripted evaluators for testing campaigns end to end.
//
// Simulated sessions go through CampaignEngine exactly like live ones.
// Evaluators are run one after another in id order, each working through
// next_task until done. Wall times come from a synthetic clock so the
// resulting journal is a pure function of (campaign, existing journal,
// policy, seed).

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hiereval/campaign.hpp"
#include "hiereval/errors.hpp"
#include "hiereval/journal.hpp"
#include "hiereval/metric_tree.hpp"
#include "hiereval/rng.hpp"

namespace hiereval {

// kAllPass: at each node, the first declared answer that keeps going and can
//   still end good; failing that, one that ends good.
// kAllFailRoot: every traversal ends bad as early as the tree allows; on a
//   tree whose root has a failing answer that is one judgment per traversal.
// kSeededRandom: uniformly random answers and elapsed times from the seed.
enum class Policy { kAllPass, kAllFailRoot, kSeededRandom };

inline std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::kAllPass: return "all_pass";
    case Policy::kAllFailRoot: return "all_fail_root";
    case Policy::kSeededRandom: return "seeded_random";
  }
  return "";
}

inline std::optional<Policy> parse_policy(std::string_view text) {
  for (Policy p :
       {Policy::kAllPass, Policy::kAllFailRoot, Policy::kSeededRandom}) {
    if (text == to_string(p)) return p;
  }
  return std::nullopt;
}

namespace detail {

// Per-node facts about what each tree can still reach.
struct Reachability {
  std::map<std::string, bool, std::less<>> can_end_good;
  std::map<std::string, std::size_t, std::less<>> steps_to_bad;  // judgments
};

inline Reachability reachability(const MetricTree& tree) {
  Reachability r;
  constexpr std::size_t kNever = static_cast<std::size_t>(-1);
  // Reverse pre-order visits children before parents in a DAG only when
  // every child comes later in pre-order, so iterate to a fixed point.
  const auto order = node_order(tree);
  for (const auto& id : order) {
    r.can_end_good[id] = false;
    r.steps_to_bad[id] = kNever;
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const MetricNode& n = tree.node(*it);
      bool good = false;
      std::size_t bad = kNever;
      for (const auto& [answer, target] : n.routing) {
        if (target.is_terminal()) {
          if (target.outcome->is_good()) {
            good = true;
          } else {
            bad = 1;
          }
        } else {
          good = good || r.can_end_good[target.node_id];
          const std::size_t below = r.steps_to_bad[target.node_id];
          if (below != kNever && below + 1 < bad) bad = below + 1;
        }
      }
      if (good != r.can_end_good[*it] || bad != r.steps_to_bad[*it]) {
        r.can_end_good[*it] = good;
        r.steps_to_bad[*it] = bad;
        changed = true;
      }
    }
  }
  return r;
}

inline const std::string& pass_answer(const MetricNode& n,
                                      const Reachability& r) {
  for (const auto& a : n.answers) {
    const RouteTarget& t = n.routing.at(a);
    if (!t.is_terminal() && r.can_end_good.at(t.node_id)) return a;
  }
  for (const auto& a : n.answers) {
    const RouteTarget& t = n.routing.at(a);
    if (t.is_terminal() && t.outcome->is_good()) return a;
  }
  return n.answers.front();  // no good route from here
}

inline const std::string& fail_answer(const MetricNode& n,
                                      const Reachability& r) {
  const std::string* best = &n.answers.front();
  std::size_t best_steps = static_cast<std::size_t>(-1);
  for (const auto& a : n.answers) {
    const RouteTarget& t = n.routing.at(a);
    std::size_t steps;
    if (t.is_terminal()) {
      steps = t.outcome->is_good() ? static_cast<std::size_t>(-1) : 0;
    } else {
      steps = r.steps_to_bad.at(t.node_id);
    }
    if (steps < best_steps) {
      best_steps = steps;
      best = &a;
    }
  }
  return *best;
}

}  // namespace detail

inline constexpr std::chrono::sys_seconds kSimulationEpoch{
    std::chrono::sys_days{std::chrono::year{2024} / 1 / 1}};

// Drives every unfinished traversal to termination and returns the complete
// journal (existing records first). Each new record is passed to `sink`
// before it is applied.
inline std::vector<JudgmentRecord> simulate(
    std::shared_ptr<const Campaign> campaign,
    std::vector<JudgmentRecord> existing, Policy policy, std::uint64_t seed,
    CampaignEngine::Sink sink = {}) {
  using namespace std::chrono;
  system_clock::time_point now = kSimulationEpoch;
  for (const auto& r : existing) {
    now += milliseconds(std::llround(r.elapsed_seconds * 1000.0));
  }
  CampaignEngine engine(campaign, std::move(existing), std::move(sink),
                        [&now] { return now; });
  const detail::Reachability in = detail::reachability(campaign->input_tree);
  const detail::Reachability out = detail::reachability(campaign->output_tree);
  SeededRng rng(seed);

  std::vector<std::string> evaluator_ids;
  for (const auto& [id, items] : campaign->assignments) {
    evaluator_ids.push_back(id);
  }
  for (const auto& evaluator_id : evaluator_ids) {
    while (auto task = engine.next_task(evaluator_id)) {
      const MetricNode& n = task->node;
      const auto& reach = task->tree_target == TreeTarget::kInput ? in : out;
      std::string answer;
      double seconds = 1.0;
      switch (policy) {
        case Policy::kAllPass:
          answer = detail::pass_answer(n, reach);
          break;
        case Policy::kAllFailRoot:
          answer = detail::fail_answer(n, reach);
          break;
        case Policy::kSeededRandom:
          answer = n.answers[rng.below(n.answers.size())];
          seconds = 0.5 + static_cast<double>(rng.below(30000)) / 1000.0;
          break;
      }
      now += milliseconds(std::llround(seconds * 1000.0));
      engine.submit_judgment(evaluator_id, task->item.id, task->tree_target,
                             n.id, answer, seconds);
    }
  }
  return engine.snapshot();
}

}  // namespace hiereval
