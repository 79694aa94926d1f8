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

// Hierarchical evaluation metrics as decision trees.
//
// A metric is a rooted, acyclic routing graph of characteristics. Each answer
// given at a node either moves the evaluator to another node or ends the
// evaluation with a binary composite outcome. A "bad" terminal records the
// node and answer that failed, so downstream characteristics are never asked.

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hiereval/errors.hpp"
#include "json.hpp"

namespace hiereval {

enum class TreeTarget { kInput, kOutput };

inline std::string_view to_string(TreeTarget target) {
  return target == TreeTarget::kInput ? "input" : "output";
}

inline std::optional<TreeTarget> parse_target(std::string_view text) {
  if (text == "input") return TreeTarget::kInput;
  if (text == "output") return TreeTarget::kOutput;
  return std::nullopt;
}

enum class Label { kGood, kBad };

inline std::string_view to_string(Label label) {
  return label == Label::kGood ? "good" : "bad";
}

struct CompositeOutcome {
  Label label = Label::kGood;
  std::optional<std::string> failed_at;
  std::optional<std::string> failing_answer;

  static CompositeOutcome good() { return {}; }
  static CompositeOutcome bad(std::string node, std::string answer) {
    return {Label::kBad, std::move(node), std::move(answer)};
  }

  bool is_good() const { return label == Label::kGood; }

  friend bool operator==(const CompositeOutcome&,
                         const CompositeOutcome&) = default;
};

struct RouteTarget {
  enum class Kind { kNode, kTerminal };

  Kind kind = Kind::kTerminal;
  std::string node_id;                     // kind == kNode
  std::optional<CompositeOutcome> outcome;  // kind == kTerminal

  static RouteTarget to_node(std::string id) {
    return {Kind::kNode, std::move(id), std::nullopt};
  }
  static RouteTarget terminal(CompositeOutcome outcome) {
    return {Kind::kTerminal, {}, std::move(outcome)};
  }

  bool is_terminal() const { return kind == Kind::kTerminal; }

  friend bool operator==(const RouteTarget&, const RouteTarget&) = default;
};

struct MetricNode {
  std::string id;
  std::string prompt;
  std::string characteristic;
  std::vector<std::string> answers;
  std::map<std::string, RouteTarget, std::less<>> routing;
  // Optional rubric text per answer, shown to evaluators as inline help.
  std::map<std::string, std::string, std::less<>> answer_help;
  // Node judges the explanation passage rather than the short output.
  bool uses_explanation = false;

  bool accepts(std::string_view answer) const {
    return std::find(answers.begin(), answers.end(), answer) != answers.end();
  }

  friend bool operator==(const MetricNode&, const MetricNode&) = default;
};

struct MetricTree {
  std::string id;
  std::string name;
  std::string description;
  TreeTarget target = TreeTarget::kInput;
  std::string root;
  std::map<std::string, MetricNode, std::less<>> nodes;

  const MetricNode* find(std::string_view node_id) const {
    auto it = nodes.find(node_id);
    return it == nodes.end() ? nullptr : &it->second;
  }

  const MetricNode& node(std::string_view node_id) const {
    if (const auto* n = find(node_id)) return *n;
    throw Error(ErrorCode::kUnknownNode,
                "unknown node '" + std::string(node_id) + "' in tree '" + id +
                    "'");
  }

  friend bool operator==(const MetricTree&, const MetricTree&) = default;
};

// One broken invariant. `invariant` is a stable tag such as "cycle",
// "dangling_route" or "unreachable".
struct Violation {
  std::string invariant;
  std::vector<std::string> nodes;
  std::string message;
};

// Thrown by parse_tree for documents that parse but violate tree invariants.
class TreeError : public Error {
 public:
  TreeError(ErrorCode code, const std::string& message,
            std::vector<Violation> violations = {})
      : Error(code, message), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

namespace detail {

inline bool is_token(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

// Pre-order walk from the root following answers in declared order. Each node
// is visited once even when several parents route into it.
inline std::vector<std::string> reachable_preorder(const MetricTree& tree) {
  std::vector<std::string> order;
  std::set<std::string, std::less<>> seen;
  if (!tree.find(tree.root)) return order;
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    if (!seen.insert(id).second) return;
    order.push_back(id);
    const MetricNode& n = tree.nodes.find(id)->second;
    for (const auto& answer : n.answers) {
      auto r = n.routing.find(answer);
      if (r == n.routing.end() || r->second.is_terminal()) continue;
      if (tree.find(r->second.node_id)) visit(r->second.node_id);
    }
  };
  visit(tree.root);
  return order;
}

}  // namespace detail

// Returns every broken invariant; empty iff the tree is valid.
inline std::vector<Violation> validate_tree(const MetricTree& tree) {
  std::vector<Violation> out;
  auto add = [&](std::string inv, std::vector<std::string> nodes,
                 std::string msg) {
    out.push_back({std::move(inv), std::move(nodes), std::move(msg)});
  };

  if (tree.nodes.empty()) {
    add("empty_tree", {}, "tree has no nodes");
    return out;
  }
  if (!tree.find(tree.root)) {
    add("missing_root", {tree.root},
        "root '" + tree.root + "' is not a node of the tree");
  }

  for (const auto& [key, n] : tree.nodes) {
    if (key != n.id) {
      add("node_id_mismatch", {key},
          "node stored under '" + key + "' has id '" + n.id + "'");
    }
    if (n.answers.size() < 2) {
      add("too_few_answers", {key},
          "node '" + key + "' declares fewer than two answers");
    }
    std::set<std::string, std::less<>> distinct;
    for (const auto& a : n.answers) {
      if (!detail::is_token(a)) {
        add("answer_token", {key},
            "node '" + key + "' answer '" + a +
                "' is not a lowercase identifier");
      }
      if (!distinct.insert(a).second) {
        add("duplicate_answer", {key},
            "node '" + key + "' declares answer '" + a + "' twice");
      }
      if (!n.routing.contains(a)) {
        add("incomplete_routing", {key},
            "node '" + key + "' has no route for answer '" + a + "'");
      }
    }
    for (const auto& [answer, target] : n.routing) {
      if (!distinct.contains(answer)) {
        add("incomplete_routing", {key},
            "node '" + key + "' routes undeclared answer '" + answer + "'");
      }
      if (target.is_terminal()) {
        const bool ok =
            target.outcome.has_value() &&
            (target.outcome->is_good()
                 ? !target.outcome->failed_at && !target.outcome->failing_answer
                 : target.outcome->failed_at == key &&
                       target.outcome->failing_answer == answer);
        if (!ok) {
          add("malformed_route", {key},
              "node '" + key + "' answer '" + answer +
                  "' has an inconsistent terminal outcome");
        }
      } else if (!tree.find(target.node_id)) {
        add("dangling_route", {key},
            "node '" + key + "' answer '" + answer +
                "' routes to unknown node '" + target.node_id + "'");
      }
    }
  }

  // Cycles: iterative-colour DFS from every node; one violation per cycle.
  {
    enum class Colour { kWhite, kGrey, kBlack };
    std::map<std::string, Colour, std::less<>> colour;
    for (const auto& [key, n] : tree.nodes) colour[key] = Colour::kWhite;
    std::vector<std::string> stack;
    std::set<std::set<std::string>> reported;
    std::function<void(const std::string&)> dfs = [&](const std::string& id) {
      colour[id] = Colour::kGrey;
      stack.push_back(id);
      const MetricNode& n = tree.nodes.find(id)->second;
      for (const auto& a : n.answers) {
        auto r = n.routing.find(a);
        if (r == n.routing.end() || r->second.is_terminal()) continue;
        const std::string& next = r->second.node_id;
        auto c = colour.find(next);
        if (c == colour.end()) continue;
        if (c->second == Colour::kGrey) {
          auto from = std::find(stack.begin(), stack.end(), next);
          std::vector<std::string> cyc(from, stack.end());
          std::set<std::string> key_set(cyc.begin(), cyc.end());
          if (reported.insert(key_set).second) {
            std::string msg = "routing cycle:";
            for (const auto& c_id : cyc) msg += " " + c_id + " ->";
            msg += " " + next;
            add("cycle", cyc, msg);
          }
        } else if (c->second == Colour::kWhite) {
          dfs(next);
        }
      }
      stack.pop_back();
      colour[id] = Colour::kBlack;
    };
    if (colour.contains(tree.root)) dfs(tree.root);
    for (const auto& [key, n] : tree.nodes) {
      if (colour[key] == Colour::kWhite) dfs(key);
    }
  }

  if (tree.find(tree.root)) {
    auto reach = detail::reachable_preorder(tree);
    std::set<std::string, std::less<>> reached(reach.begin(), reach.end());
    for (const auto& [key, n] : tree.nodes) {
      if (!reached.contains(key)) {
        add("unreachable", {key},
            "node '" + key + "' is not reachable from root '" + tree.root +
                "'");
      }
    }
  }
  return out;
}

// Pure routing lookup.
inline RouteTarget route(const MetricTree& tree, std::string_view node_id,
                         std::string_view answer) {
  const MetricNode& n = tree.node(node_id);
  auto it = n.routing.find(answer);
  if (!n.accepts(answer) || it == n.routing.end()) {
    throw Error(ErrorCode::kUnknownAnswer,
                "answer '" + std::string(answer) + "' is not valid for node '" +
                    std::string(node_id) + "'");
  }
  return it->second;
}

// Node ids in pre-order from the root (answers in declared order).
inline std::vector<std::string> node_order(const MetricTree& tree) {
  return detail::reachable_preorder(tree);
}

// Judgments per item in a non-hierarchical design: every characteristic once.
inline std::size_t flat_judgment_count(const MetricTree& tree) {
  return tree.nodes.size();
}

struct TreePath {
  std::vector<std::pair<std::string, std::string>> steps;  // (node, answer)
  CompositeOutcome outcome;
};

// Every root-to-terminal path, depth-first in declared answer order.
inline std::vector<TreePath> enumerate_paths(const MetricTree& tree) {
  if (auto v = validate_tree(tree); !v.empty()) {
    const std::string msg =
        "cannot enumerate an invalid tree: " + v.front().message;
    throw TreeError(ErrorCode::kSemantic, msg, std::move(v));
  }
  std::vector<TreePath> out;
  TreePath current;
  std::function<void(const std::string&)> walk = [&](const std::string& id) {
    const MetricNode& n = tree.node(id);
    for (const auto& a : n.answers) {
      current.steps.emplace_back(id, a);
      const RouteTarget& r = n.routing.find(a)->second;
      if (r.is_terminal()) {
        out.push_back({current.steps, *r.outcome});
      } else {
        walk(r.node_id);
      }
      current.steps.pop_back();
    }
  };
  walk(tree.root);
  return out;
}

// --- serialization -------------------------------------------------------

inline nlohmann::json tree_to_json(const MetricTree& tree) {
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& [key, n] : tree.nodes) {
    nlohmann::json j;
    j["prompt"] = n.prompt;
    j["characteristic"] = n.characteristic;
    j["answers"] = n.answers;
    nlohmann::json routing = nlohmann::json::object();
    for (const auto& [answer, target] : n.routing) {
      if (target.is_terminal()) {
        routing[answer] = {{"terminal", std::string(to_string(
                                            target.outcome->label))}};
      } else {
        routing[answer] = {{"node", target.node_id}};
      }
    }
    j["routing"] = routing;
    if (!n.answer_help.empty()) {
      nlohmann::json help = nlohmann::json::object();
      for (const auto& [a, text] : n.answer_help) help[a] = text;
      j["help"] = help;
    }
    if (n.uses_explanation) j["uses_explanation"] = true;
    nodes[key] = std::move(j);
  }
  nlohmann::json doc;
  doc["id"] = tree.id;
  doc["name"] = tree.name;
  if (!tree.description.empty()) doc["description"] = tree.description;
  doc["target"] = std::string(to_string(tree.target));
  doc["root"] = tree.root;
  doc["nodes"] = std::move(nodes);
  return doc;
}

// Canonical text: keys (and therefore node ids) sorted, two-space indent,
// trailing newline.
inline std::string serialize_tree(const MetricTree& tree) {
  return tree_to_json(tree).dump(2) + "\n";
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj,
                                     std::string_view field,
                                     const std::string& where) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw TreeError(ErrorCode::kSchema,
                    where + ": missing field '" + std::string(field) + "'");
  }
  return *it;
}

inline std::string require_string(const nlohmann::json& obj,
                                  std::string_view field,
                                  const std::string& where) {
  const auto& v = require(obj, field, where);
  if (!v.is_string()) {
    throw TreeError(ErrorCode::kSchema, where + ": field '" +
                                            std::string(field) +
                                            "' must be a string");
  }
  return v.get<std::string>();
}

inline std::string line_col(std::string_view doc, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < doc.size(); ++i) {
    if (doc[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

// Builds a tree from its object form without validating invariants.
inline MetricTree tree_from_json_unchecked(const nlohmann::json& doc) {
  using detail::require;
  using detail::require_string;
  if (!doc.is_object()) {
    throw TreeError(ErrorCode::kSchema, "tree document must be an object");
  }
  MetricTree tree;
  tree.id = require_string(doc, "id", "tree");
  tree.name = require_string(doc, "name", "tree");
  if (doc.contains("description")) {
    tree.description = require_string(doc, "description", "tree");
  }
  auto target = parse_target(require_string(doc, "target", "tree"));
  if (!target) {
    throw TreeError(ErrorCode::kSchema,
                    "tree: field 'target' must be \"input\" or \"output\"");
  }
  tree.target = *target;
  tree.root = require_string(doc, "root", "tree");
  const auto& nodes = require(doc, "nodes", "tree");
  if (!nodes.is_object()) {
    throw TreeError(ErrorCode::kSchema, "tree: field 'nodes' must be an object");
  }
  for (const auto& [key, j] : nodes.items()) {
    const std::string where = "node '" + key + "'";
    if (!j.is_object()) {
      throw TreeError(ErrorCode::kSchema, where + " must be an object");
    }
    MetricNode n;
    n.id = key;
    n.prompt = require_string(j, "prompt", where);
    n.characteristic = require_string(j, "characteristic", where);
    const auto& answers = require(j, "answers", where);
    if (!answers.is_array()) {
      throw TreeError(ErrorCode::kSchema, where + ": 'answers' must be a list");
    }
    for (const auto& a : answers) {
      if (!a.is_string()) {
        throw TreeError(ErrorCode::kSchema,
                        where + ": answers must be strings");
      }
      n.answers.push_back(a.get<std::string>());
    }
    const auto& routing = require(j, "routing", where);
    if (!routing.is_object()) {
      throw TreeError(ErrorCode::kSchema,
                      where + ": 'routing' must be an object");
    }
    for (const auto& [answer, r] : routing.items()) {
      const std::string rwhere = where + " route '" + answer + "'";
      if (!r.is_object() || r.size() != 1) {
        throw TreeError(ErrorCode::kSchema,
                        rwhere + " must be {\"node\": id} or "
                                 "{\"terminal\": \"good\"|\"bad\"}");
      }
      if (r.contains("node")) {
        n.routing[answer] =
            RouteTarget::to_node(require_string(r, "node", rwhere));
      } else if (r.contains("terminal")) {
        auto label = require_string(r, "terminal", rwhere);
        if (label == "good") {
          n.routing[answer] = RouteTarget::terminal(CompositeOutcome::good());
        } else if (label == "bad") {
          n.routing[answer] =
              RouteTarget::terminal(CompositeOutcome::bad(key, answer));
        } else {
          throw TreeError(ErrorCode::kSchema,
                          rwhere + ": terminal must be \"good\" or \"bad\"");
        }
      } else {
        throw TreeError(ErrorCode::kSchema,
                        rwhere + " needs a 'node' or 'terminal' field");
      }
    }
    if (j.contains("help")) {
      const auto& help = j["help"];
      if (!help.is_object()) {
        throw TreeError(ErrorCode::kSchema, where + ": 'help' must be an object");
      }
      for (const auto& [a, text] : help.items()) {
        if (!text.is_string()) {
          throw TreeError(ErrorCode::kSchema,
                          where + ": help entries must be strings");
        }
        n.answer_help[a] = text.get<std::string>();
      }
    }
    if (j.contains("uses_explanation")) {
      if (!j["uses_explanation"].is_boolean()) {
        throw TreeError(ErrorCode::kSchema,
                        where + ": 'uses_explanation' must be a boolean");
      }
      n.uses_explanation = j["uses_explanation"].get<bool>();
    }
    tree.nodes.emplace(key, std::move(n));
  }
  return tree;
}

inline void throw_if_invalid(const MetricTree& tree) {
  auto violations = validate_tree(tree);
  if (violations.empty()) return;
  std::string msg = "semantic error in tree '" + tree.id + "':";
  for (const auto& v : violations) {
    msg += "\n  " + v.invariant + ": " + v.message;
  }
  throw TreeError(ErrorCode::kSemantic, msg, std::move(violations));
}

inline MetricTree tree_from_json(const nlohmann::json& doc) {
  MetricTree tree = tree_from_json_unchecked(doc);
  throw_if_invalid(tree);
  return tree;
}

// Parses and validates a tree-definition document.
inline MetricTree parse_tree(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw TreeError(ErrorCode::kSyntax,
                    "syntax error at " + detail::line_col(document, e.byte) +
                        " (byte " + std::to_string(e.byte) + "): " + e.what());
  }
  return tree_from_json(doc);
}

}  // namespace hiereval
