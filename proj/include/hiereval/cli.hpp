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

// The `hiereval` command line.
//
// Exit status is the same for every subcommand: 0 success, 1 validation
// failure, 2 I/O error (including unreadable or corrupt journals), 3 case
// study verification failure. Each command returns its text and, where it
// has one, a JSON payload; `--json` prints the payload instead of the text.

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "hiereval/bundled_trees.hpp"
#include "hiereval/campaign.hpp"
#include "hiereval/campaign_store.hpp"
#include "hiereval/casestudy.hpp"
#include "hiereval/errors.hpp"
#include "hiereval/journal.hpp"
#include "hiereval/metric_tree.hpp"
#include "hiereval/report.hpp"
#include "hiereval/rng.hpp"
#include "hiereval/scoring.hpp"
#include "hiereval/server.hpp"
#include "hiereval/simulate.hpp"
#include "hiereval/stats.hpp"
#include "json.hpp"

namespace hiereval::cli {

namespace fs = std::filesystem;

inline constexpr int kOk = 0;
inline constexpr int kValidationFailure = 1;
inline constexpr int kIoError = 2;
inline constexpr int kVerificationFailure = 3;

inline constexpr const char* kCampaignDirEnv = "HIEREVAL_CAMPAIGN_DIR";

struct CommandOutcome {
  int status = kOk;
  std::string text;
  std::optional<nlohmann::json> payload;
};

inline int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
    case ErrorCode::kCorruptRecord:
    case ErrorCode::kSequence:
      return kIoError;
    default:
      return kValidationFailure;
  }
}

inline CommandOutcome failure(const Error& e) {
  return {exit_status(e.code()),
          "error (" + std::string(to_string(e.code())) + "): " + e.what() +
              "\n",
          nlohmann::json{{"error",
                          {{"code", to_string(e.code())},
                           {"message", e.what()}}}}};
}

// A tree argument is a file path or the name of a bundled tree.
inline MetricTree load_tree_arg(const std::string& arg) {
  if (arg == "question_tree") return question_tree();
  if (arg == "answer_tree") return answer_tree();
  return parse_tree(read_text_file(arg));
}

// --- validate -----------------------------------------------------------------

inline CommandOutcome cmd_validate(const fs::path& tree_path) {
  std::string text;
  try {
    text = read_text_file(tree_path);
  } catch (const Error& e) {
    return failure(e);
  }
  MetricTree tree;
  std::vector<Violation> violations;
  try {
    tree = tree_from_json_unchecked(nlohmann::json::parse(text));
    violations = validate_tree(tree);
  } catch (const nlohmann::json::parse_error&) {
    try {
      parse_tree(text);  // rethrows with line and column
    } catch (const Error& e) {
      return failure(e);
    }
  } catch (const Error& e) {
    return failure(e);
  }
  nlohmann::json list = nlohmann::json::array();
  std::string out;
  for (const auto& v : violations) {
    list.push_back(
        {{"invariant", v.invariant}, {"nodes", v.nodes}, {"message", v.message}});
    out += v.invariant + ": " + v.message + "\n";
  }
  if (violations.empty()) {
    out = "tree '" + tree.id + "' is valid: " +
          std::to_string(tree.nodes.size()) + " nodes, " +
          std::to_string(enumerate_paths(tree).size()) + " paths\n";
  }
  return {violations.empty() ? kOk : kValidationFailure, out,
          nlohmann::json{{"tree_id", tree.id},
                         {"valid", violations.empty()},
                         {"violations", list}}};
}

// --- campaign create / items import ----------------------------------------------

struct CreateOptions {
  fs::path dir;
  std::string id;
  std::string input_tree = "question_tree";
  std::string output_tree = "answer_tree";
  std::vector<std::string> evaluators;
  int redundancy = 1;
  std::uint64_t seed = 0;
  std::string assignment = "seeded_shuffle";
  std::optional<fs::path> items;
};

// Tokens are derived from the seed so a campaign can be recreated exactly.
inline std::string derive_token(SeededRng& rng) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016llx%016llx",
                static_cast<unsigned long long>(rng.next()),
                static_cast<unsigned long long>(rng.next()));
  return buf;
}

inline CommandOutcome cmd_campaign_create(const CreateOptions& o) {
  try {
    const CampaignDir dir{o.dir};
    if (dir.exists()) {
      return {kValidationFailure,
              "error: " + dir.config_path().string() + " already exists\n",
              std::nullopt};
    }
    const auto mode = parse_assignment_mode(o.assignment);
    if (!mode) {
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown assignment mode '" + o.assignment + "'");
    }
    if (o.evaluators.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "no evaluators given");
    }
    SeededRng rng(o.seed ^ 0x7f4a7c159e3779b9ULL);
    std::vector<Evaluator> evaluators;
    for (const auto& id : o.evaluators) {
      evaluators.push_back({id, id, derive_token(rng)});
    }
    CampaignConfig config{o.id,
                          load_tree_arg(o.input_tree),
                          load_tree_arg(o.output_tree),
                          evaluators,
                          o.redundancy,
                          o.seed,
                          *mode};
    std::vector<Item> items;
    if (o.items) items = load_items_file(*o.items);
    if (!items.empty()) {
      // Full validation, including the assignment table.
      create_campaign(config.id, config.input_tree, config.output_tree, items,
                      config.evaluators, config.redundancy, config.shuffle_seed,
                      config.assignment);
    } else {
      throw_if_invalid(config.input_tree);
      throw_if_invalid(config.output_tree);
      if (o.redundancy < 1 ||
          static_cast<std::size_t>(o.redundancy) > evaluators.size()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "redundancy must be between 1 and the evaluator count");
      }
    }
    dir.write_config(config);
    dir.write_items(items);
    write_text_file(dir.journal_path(), "");
    std::string text = "created campaign '" + o.id + "' in " +
                       o.dir.string() + " with " +
                       std::to_string(items.size()) + " items\n";
    nlohmann::json tokens = nlohmann::json::object();
    for (const auto& e : evaluators) {
      text += "  " + e.id + "  token " + e.token + "\n";
      tokens[e.id] = e.token;
    }
    return {kOk, text,
            nlohmann::json{{"campaign_id", o.id},
                           {"items", items.size()},
                           {"tokens", tokens}}};
  } catch (const Error& e) {
    return failure(e);
  }
}

inline CommandOutcome cmd_items_import(const fs::path& dir_path,
                                       const fs::path& items_path) {
  try {
    const CampaignDir dir{dir_path};
    if (!dir.exists()) {
      throw Error(ErrorCode::kIo, "no campaign in " + dir_path.string());
    }
    if (dir.has_journal_records()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "journal already has judgments; items can no longer change");
    }
    auto items = dir.read_items();
    const auto added = load_items_file(items_path);
    items.insert(items.end(), added.begin(), added.end());
    const auto config = dir.read_config();
    create_campaign(config.id, config.input_tree, config.output_tree, items,
                    config.evaluators, config.redundancy, config.shuffle_seed,
                    config.assignment);
    dir.write_items(items);
    return {kOk,
            "imported " + std::to_string(added.size()) + " items (" +
                std::to_string(items.size()) + " total)\n",
            nlohmann::json{{"imported", added.size()},
                           {"total", items.size()}}};
  } catch (const Error& e) {
    return failure(e);
  }
}

// --- simulate -------------------------------------------------------------------

inline CommandOutcome cmd_simulate(const fs::path& dir_path,
                                   const std::string& policy_name,
                                   std::uint64_t seed) {
  try {
    const auto policy = parse_policy(policy_name);
    if (!policy) {
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown policy '" + policy_name + "'");
    }
    const CampaignDir dir{dir_path};
    auto campaign = dir.load_campaign();
    JournalWriter writer(dir.journal_path());
    auto existing = parse_journal(writer.read_all());
    const std::size_t before = existing.size();
    const auto records =
        simulate(campaign, std::move(existing), *policy, seed,
                 [&writer](const JudgmentRecord& r) { writer.append(r); });
    const auto state = replay_records(campaign, records);
    const auto in = count_outcomes(state, TreeTarget::kInput);
    const auto out = count_outcomes(state, TreeTarget::kOutput);
    const std::size_t appended = records.size() - before;
    return {kOk,
            "appended " + std::to_string(appended) + " judgments; input " +
                std::to_string(in.good) + " good / " + std::to_string(in.bad) +
                " bad; output " + std::to_string(out.good) + " good / " +
                std::to_string(out.bad) + " bad\n",
            nlohmann::json{{"appended", appended},
                           {"input", {{"good", in.good}, {"bad", in.bad}}},
                           {"output", {{"good", out.good}, {"bad", out.bad}}}}};
  } catch (const Error& e) {
    return failure(e);
  }
}

// --- report ---------------------------------------------------------------------

inline CampaignState load_state(const fs::path& dir_path,
                                std::optional<std::uint64_t> as_of) {
  const CampaignDir dir{dir_path};
  auto campaign = dir.load_campaign();
  auto records = dir.read_journal();
  if (as_of && *as_of < records.size()) records.resize(*as_of);
  return replay_records(campaign, records);
}

inline CommandOutcome cmd_report(const fs::path& dir_path,
                                 const std::string& kind,
                                 std::optional<std::uint64_t> as_of,
                                 bool yates) {
  try {
    const auto state = load_state(dir_path, as_of);
    auto r = build_report(state, kind, {yates});
    return {kOk, r.text, r.payload};
  } catch (const Error& e) {
    return failure(e);
  }
}

// --- case study --------------------------------------------------------------------

inline CommandOutcome cmd_casestudy_emit(const fs::path& out) {
  try {
    casestudy::emit(out);
    return {kOk, "wrote case study campaign to " + out.string() + "\n",
            nlohmann::json{{"dir", out.string()}}};
  } catch (const Error& e) {
    return failure(e);
  }
}

inline CommandOutcome cmd_casestudy_verify(const fs::path& dir) {
  try {
    const auto report = casestudy::verify_dir(dir);
    return {report.pass ? kOk : kVerificationFailure, casestudy::to_text(report),
            casestudy::to_json(report)};
  } catch (const Error& e) {
    return failure(e);
  }
}

// --- stats ------------------------------------------------------------------------

struct StatsOptions {
  std::optional<std::string> cells;  // "a,b,c,d"
  std::optional<fs::path> campaign_dir;
  std::optional<std::uint64_t> as_of;
  std::optional<fs::path> ratings;
  std::string missing = "NA";
  std::string separator = "tab";
  std::optional<std::string> levels;  // ordinal levels, comma separated
  bool yates = false;
};

inline std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto at = s.find(',', pos);
    out.emplace_back(s.substr(pos, at - pos));
    if (at == std::string_view::npos) break;
    pos = at + 1;
  }
  return out;
}

inline stats::ContingencyTable parse_cells(const std::string& text) {
  const auto parts = split_commas(text);
  if (parts.size() != 4) {
    throw Error(ErrorCode::kInvalidArgument,
                "--cells takes four counts a,b,c,d");
  }
  std::uint64_t v[4];
  for (int i = 0; i < 4; ++i) {
    try {
      std::size_t used = 0;
      if (parts[i].empty() || parts[i][0] == '-') throw std::invalid_argument("");
      v[i] = std::stoull(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument,
                  "--cells: '" + parts[i] + "' is not a count");
    }
  }
  return {v[0], v[1], v[2], v[3]};
}

inline std::string format_coefficient(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

inline CommandOutcome ratings_stats(const StatsOptions& o) {
  char sep = '\t';
  if (o.separator == "comma" || o.separator == ",") {
    sep = ',';
  } else if (o.separator != "tab" && o.separator != "\t") {
    throw Error(ErrorCode::kInvalidArgument,
                "--sep must be tab or comma");
  }
  std::vector<std::string> levels;
  if (o.levels) levels = split_commas(*o.levels);
  const auto m = stats::parse_ratings(
      read_text_file(*o.ratings), o.missing, sep,
      levels.empty() ? stats::Scale::kNominal : stats::Scale::kOrdinal, levels);
  auto json_of = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json j = {{"items", m.items().size()},
                      {"raters", m.raters().size()},
                      {"ratings", m.size()}};
  std::string text = std::to_string(m.items().size()) + " items, " +
                     std::to_string(m.raters().size()) + " raters, " +
                     std::to_string(m.size()) + " ratings\n";
  auto add = [&](const std::string& name, const std::optional<double>& v) {
    j[name] = json_of(v);
    text += name + ": " + format_coefficient(v) + "\n";
  };
  add("percentage_agreement", stats::percentage_agreement(m));
  if (m.raters().size() == 2) add("cohens_kappa", stats::cohens_kappa(m));
  const auto counts = stats::category_counts(m, m.raters().size());
  if (!counts.empty()) {
    add("fleiss_kappa", stats::fleiss_kappa(counts, m.raters().size()));
    j["fleiss_items"] = counts.size();
  }
  add("krippendorff_alpha", stats::krippendorff_alpha(m));
  if (!levels.empty()) {
    nlohmann::json taus = nlohmann::json::array();
    for (std::size_t a = 0; a < m.raters().size(); ++a) {
      for (std::size_t b = a + 1; b < m.raters().size(); ++b) {
        const auto tau = stats::kendall_tau(m, a, b);
        taus.push_back({{"rater_a", m.raters()[a]},
                        {"rater_b", m.raters()[b]},
                        {"tau_b", json_of(tau)}});
        text += "kendall_tau_b " + m.raters()[a] + " vs " + m.raters()[b] +
                ": " + format_coefficient(tau) + "\n";
      }
    }
    j["kendall_tau_b"] = taus;
  }
  return {kOk, text, j};
}

inline CommandOutcome cmd_stats(const StatsOptions& o) {
  try {
    const int sources = (o.cells ? 1 : 0) + (o.campaign_dir ? 1 : 0) +
                        (o.ratings ? 1 : 0);
    if (sources != 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "give exactly one of --cells, --campaign-dir, --ratings");
    }
    if (o.ratings) return ratings_stats(o);
    const auto table = o.cells
                           ? parse_cells(*o.cells)
                           : contingency_table(load_state(*o.campaign_dir,
                                                          o.as_of));
    const auto result = stats::chi_square_2x2(table, o.yates);
    return {kOk, chi_square_text(table, result),
            nlohmann::json{{"table", to_json(table)},
                           {"result", to_json(result)}}};
  } catch (const Error& e) {
    return failure(e);
  }
}

// --- argument parsing -----------------------------------------------------------------

inline void print(const CommandOutcome& r, bool json, std::ostream& out,
                  std::ostream& err) {
  if (json && r.payload) {
    out << canonical(*r.payload);
  } else if (r.status == kOk || r.status == kVerificationFailure) {
    out << r.text;
  } else {
    err << r.text;
  }
}

// Parses `args` (without the program name) and runs one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Hierarchical human evaluation campaigns", "hiereval"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  bool json = false;
  app.add_flag("--json", json, "print the JSON payload instead of text");

  std::string campaign_dir;
  auto add_dir = [&](CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--campaign-dir", campaign_dir,
                                "campaign directory")
                    ->envname(kCampaignDirEnv);
    if (required) opt->required();
    return opt;
  };

  std::string tree_path;
  auto* validate = app.add_subcommand("validate", "check a tree document");
  validate->add_option("--tree,tree", tree_path, "tree document")->required();

  CreateOptions create;
  std::string items_file;
  auto* campaign_cmd = app.add_subcommand("campaign", "campaign management");
  campaign_cmd->require_subcommand(1);
  auto* create_cmd = campaign_cmd->add_subcommand("create", "create a campaign");
  add_dir(create_cmd);
  create_cmd->add_option("--id", create.id, "campaign id")->required();
  create_cmd->add_option("--input-tree", create.input_tree,
                         "tree file or bundled name");
  create_cmd->add_option("--output-tree", create.output_tree,
                         "tree file or bundled name");
  create_cmd->add_option("--evaluators", create.evaluators,
                         "evaluator ids, comma separated")
      ->delimiter(',')
      ->required();
  create_cmd->add_option("--redundancy", create.redundancy, "judges per item");
  create_cmd->add_option("--seed", create.seed, "shuffle and token seed");
  create_cmd->add_option("--assignment", create.assignment,
                         "seeded_shuffle or round_robin");
  create_cmd->add_option("--items", items_file, "items file (.tsv/.json/.jsonl)");

  auto* items_cmd = app.add_subcommand("items", "item management");
  items_cmd->require_subcommand(1);
  auto* import_cmd = items_cmd->add_subcommand("import", "add items");
  add_dir(import_cmd);
  import_cmd->add_option("--items", items_file, "items file")->required();

  std::string policy = "seeded_random";
  std::uint64_t seed = 0;
  auto* sim = app.add_subcommand("simulate", "judge every traversal by policy");
  add_dir(sim);
  sim->add_option("--policy", policy, "all_pass, all_fail_root, seeded_random");
  sim->add_option("--seed", seed, "seed for seeded_random");

  std::string kind;
  std::optional<std::uint64_t> as_of;
  bool yates = false;
  auto* report = app.add_subcommand("report", "render a report");
  add_dir(report);
  report->add_option("--kind", kind, "report kind")->required();
  report->add_option("--as-of", as_of, "last sequence_no to include");
  report->add_flag("--yates", yates, "Yates continuity correction");

  int port = 8080;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "run the evaluation server");
  add_dir(serve);
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--host", host, "bind address");

  std::string out_dir, verify_dir;
  auto* cs = app.add_subcommand("casestudy", "reconstructed MRC case study");
  cs->require_subcommand(1);
  auto* emit = cs->add_subcommand("emit", "write the case study campaign");
  emit->add_option("--out", out_dir, "output directory")->required();
  auto* verify = cs->add_subcommand("verify", "check a case study directory");
  verify->add_option("dir", verify_dir, "campaign directory")->required();

  StatsOptions so;
  std::string stats_dir, ratings_file;
  auto* st = app.add_subcommand("stats", "association and agreement statistics");
  st->add_option("--cells", so.cells, "2x2 counts a,b,c,d");
  st->add_option("--campaign-dir", stats_dir, "derive the table from a journal");
  st->add_option("--as-of", so.as_of, "last sequence_no to include");
  st->add_option("--ratings", ratings_file, "delimited ratings file");
  st->add_option("--missing", so.missing, "missing-value token");
  st->add_option("--sep", so.separator, "tab or comma");
  st->add_option("--levels", so.levels, "ordinal levels, comma separated");
  st->add_flag("--yates", so.yates, "Yates continuity correction");

  std::vector<const char*> argv = {"hiereval"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  }

  CommandOutcome r;
  if (validate->parsed()) {
    r = cmd_validate(tree_path);
  } else if (create_cmd->parsed()) {
    create.dir = campaign_dir;
    if (!items_file.empty()) create.items = items_file;
    r = cmd_campaign_create(create);
  } else if (import_cmd->parsed()) {
    r = cmd_items_import(campaign_dir, items_file);
  } else if (sim->parsed()) {
    r = cmd_simulate(campaign_dir, policy, seed);
  } else if (report->parsed()) {
    r = cmd_report(campaign_dir, kind, as_of, yates);
  } else if (serve->parsed()) {
    try {
      server::CampaignService service(campaign_dir);
      out << "serving campaign '" << service.campaign().id << "' on http://"
          << host << ":" << port << "\n"
          << std::flush;
      if (!server::serve(service, host, port)) {
        err << "error: cannot listen on " << host << ":" << port << "\n";
        return kIoError;
      }
      return kOk;
    } catch (const Error& e) {
      r = failure(e);
    }
  } else if (emit->parsed()) {
    r = cmd_casestudy_emit(out_dir);
  } else if (verify->parsed()) {
    r = cmd_casestudy_verify(verify_dir);
  } else if (st->parsed()) {
    if (!stats_dir.empty()) so.campaign_dir = stats_dir;
    if (!ratings_file.empty()) so.ratings = ratings_file;
    r = cmd_stats(so);
  }
  print(r, json, out, err);
  return r.status;
}

}  // namespace hiereval::cli
