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

// Report rendering shared by the CLI and the server. The JSON payload is
// canonical (sorted keys), so the same journal snapshot always renders to
// the same bytes.

#pragma once

#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hiereval/campaign.hpp"
#include "hiereval/errors.hpp"
#include "hiereval/scoring.hpp"
#include "hiereval/stats.hpp"
#include "json.hpp"

namespace hiereval {

inline constexpr std::array<std::string_view, 6> kReportKinds = {
    "funnel_input", "funnel_output", "difficulty",
    "evaluators",   "time_savings",  "chi_square"};

struct ReportOptions {
  bool yates_correction = false;
};

struct Report {
  std::string kind;
  nlohmann::json payload;
  std::string text;
};

namespace detail {

inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ')
              : std::string(width - s.size(), ' ') + s;
}

}  // namespace detail

inline nlohmann::json to_json(const CompositeOutcome& o) {
  nlohmann::json j = {{"label", std::string(to_string(o.label))}};
  if (o.failed_at) j["failed_at"] = *o.failed_at;
  if (o.failing_answer) j["failing_answer"] = *o.failing_answer;
  return j;
}

inline nlohmann::json to_json(const FunnelReport& f) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : f.entries) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [a, n] : e.answer_counts) counts[a] = n;
    entries.push_back({{"node_id", e.node_id},
                       {"characteristic", e.characteristic},
                       {"presented", e.presented},
                       {"answer_counts", counts},
                       {"terminated_here", e.terminated_here},
                       {"terminated_good", e.terminated_good},
                       {"terminated_bad", e.terminated_bad},
                       {"continued", e.continued}});
  }
  return {{"tree_id", f.tree_id},
          {"tree_target", std::string(to_string(f.target))},
          {"traversals", f.traversals},
          {"nodes", entries}};
}

inline std::string to_text(const FunnelReport& f) {
  using detail::pad;
  std::string out = "funnel " + f.tree_id + " (" +
                    std::string(to_string(f.target)) + "), " +
                    std::to_string(f.traversals) + " completed traversals\n";
  out += pad("node", 22, true) + pad("presented", 10) + pad("continued", 10) +
         pad("stopped", 9) + "  answers\n";
  for (const auto& e : f.entries) {
    std::string answers;
    for (const auto& [a, n] : e.answer_counts) {
      if (!answers.empty()) answers += " ";
      answers += a + "=" + std::to_string(n);
    }
    out += pad(e.node_id, 22, true) + pad(std::to_string(e.presented), 10) +
           pad(std::to_string(e.continued), 10) +
           pad(std::to_string(e.terminated_here), 9) + "  " + answers + "\n";
  }
  return out;
}

inline nlohmann::json to_json(const EvaluatorSummary& s) {
  using detail::optional_number;
  return {{"evaluator_id", s.evaluator_id},
          {"items_judged_input", s.items_judged_input},
          {"items_judged_output", s.items_judged_output},
          {"judgments_input", s.judgments_input},
          {"judgments_output", s.judgments_output},
          {"mean_all",
           {{"input", optional_number(s.mean_elapsed_input)},
            {"output", optional_number(s.mean_elapsed_output)}}},
          {"mean_completed_full_path",
           {{"input", optional_number(s.mean_elapsed_input_full_path)},
            {"output", optional_number(s.mean_elapsed_output_full_path)}}},
          {"means_undefined", s.means_undefined()}};
}

inline nlohmann::json to_json(const TimeSavingsReport& t) {
  return {{"tree_id", t.tree_id},
          {"tree_target", std::string(to_string(t.target))},
          {"items", t.items},
          {"hierarchical_judgments", t.hierarchical_judgments},
          {"flat_judgments", t.flat_judgments},
          {"saved", t.saved},
          {"saved_fraction", t.saved_fraction}};
}

inline nlohmann::json to_json(const stats::ContingencyTable& t) {
  return {{"a", t.a}, {"b", t.b}, {"c", t.c}, {"d", t.d}, {"n", t.n()}};
}

inline nlohmann::json to_json(const stats::ChiSquareResult& r) {
  return {{"statistic", r.statistic},
          {"p_value", r.p_value},
          {"dof", r.dof},
          {"expected",
           {{r.expected[0][0], r.expected[0][1]},
            {r.expected[1][0], r.expected[1][1]}}},
          {"yates_correction", r.yates_correction},
          {"low_expected_count", r.low_expected_count}};
}

inline std::string chi_square_text(const stats::ContingencyTable& t,
                                   const stats::ChiSquareResult& r) {
  using detail::fmt;
  using detail::pad;
  std::string out = "output x input composite outcomes (n=" +
                    std::to_string(t.n()) + ")\n";
  out += pad("", 12) + pad("input good", 12) + pad("input bad", 12) + "\n";
  out += pad("output good", 12) + pad(std::to_string(t.a), 12) +
         pad(std::to_string(t.b), 12) + "\n";
  out += pad("output bad", 12) + pad(std::to_string(t.c), 12) +
         pad(std::to_string(t.d), 12) + "\n";
  out += "chi2 = " + fmt("%.4f", r.statistic) + ", dof = 1, p = " +
         fmt("%.4f", r.p_value) +
         (r.yates_correction ? " (Yates corrected)" : "") + "\n";
  if (r.low_expected_count) out += "warning: an expected count is below 5\n";
  return out;
}

// Renders one report kind for the given state. Throws kUnknownKind for kinds
// outside kReportKinds.
inline Report build_report(const CampaignState& state, std::string_view kind,
                           const ReportOptions& options = {}) {
  using detail::fmt;
  using detail::pad;
  Report r;
  r.kind = std::string(kind);
  nlohmann::json body;
  if (kind == "funnel_input" || kind == "funnel_output") {
    const auto target =
        kind == "funnel_input" ? TreeTarget::kInput : TreeTarget::kOutput;
    const auto f = funnel(state, target);
    body = to_json(f);
    r.text = to_text(f);
  } else if (kind == "difficulty") {
    const auto dist = difficulty_distribution(state);
    nlohmann::json levels = nlohmann::json::array();
    std::size_t total = 0;
    r.text = "difficulty of good questions\n";
    for (const auto& [level, n] : dist) {
      levels.push_back({{"level", level}, {"count", n}});
      total += n;
    }
    for (const auto& [level, n] : dist) {
      r.text += pad(level, 10, true) + pad(std::to_string(n), 6) + "  " +
                fmt("%5.1f%%", 100.0 * static_cast<double>(n) /
                                   static_cast<double>(total)) +
                "\n";
    }
    if (dist.empty()) r.text += "(no traversal reached the difficulty node)\n";
    body = {{"levels", levels}, {"total", total}};
  } else if (kind == "evaluators") {
    const auto summaries = evaluator_summaries(state);
    nlohmann::json list = nlohmann::json::array();
    auto sec = [](const std::optional<double>& v) {
      return v ? fmt("%.2f", *v) : std::string("-");
    };
    r.text = pad("evaluator", 16, true) + pad("inputs", 8) + pad("outputs", 8) +
             pad("mean_in_s", 11) + pad("mean_out_s", 11) + pad("full_in_s", 11) +
             pad("full_out_s", 11) + "\n";
    for (const auto& s : summaries) {
      list.push_back(to_json(s));
      r.text += pad(s.evaluator_id, 16, true) +
                pad(std::to_string(s.items_judged_input), 8) +
                pad(std::to_string(s.items_judged_output), 8) +
                pad(sec(s.mean_elapsed_input), 11) +
                pad(sec(s.mean_elapsed_output), 11) +
                pad(sec(s.mean_elapsed_input_full_path), 11) +
                pad(sec(s.mean_elapsed_output_full_path), 11) + "\n";
    }
    body = {{"evaluators", list}};
  } else if (kind == "time_savings") {
    body = nlohmann::json::object();
    for (TreeTarget t : {TreeTarget::kInput, TreeTarget::kOutput}) {
      const auto ts = time_savings(state, t);
      body[std::string(to_string(t))] = to_json(ts);
      r.text += std::string(to_string(t)) + " (" + ts.tree_id +
                "): hierarchical " + std::to_string(ts.hierarchical_judgments) +
                " vs flat " + std::to_string(ts.flat_judgments) + ", saved " +
                std::to_string(ts.saved) + " of " +
                std::to_string(ts.flat_judgments) + " (" +
                fmt("%.1f%%", 100.0 * ts.saved_fraction) + ")\n";
    }
  } else if (kind == "chi_square") {
    const auto table = contingency_table(state);
    const auto result = stats::chi_square_2x2(table, options.yates_correction);
    body = {{"table", to_json(table)}, {"result", to_json(result)}};
    r.text = chi_square_text(table, result);
  } else {
    std::string known;
    for (auto k : kReportKinds) known += (known.empty() ? "" : ", ") +
                                         std::string(k);
    throw Error(ErrorCode::kUnknownKind, "unknown report kind '" +
                                             std::string(kind) +
                                             "' (known: " + known + ")");
  }
  r.payload = {{"kind", r.kind},
               {"campaign_id", state.campaign().id},
               {"as_of_sequence_no", state.last_sequence_no()},
               {"report", body}};
  return r;
}

inline std::string canonical(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace hiereval
