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

// Judgment journal records and their line format.
//
// One JSON object per line, fields in declaration order:
//
//   {"campaign_id":"c","item_id":"q001","evaluator_id":"coach01",
//    "tree_target":"input","node_id":"relevant","answer":"yes",
//    "elapsed_seconds":4.250,"wall_time":"2023-03-06T09:00:04.250Z",
//    "sequence_no":1}
//
// elapsed_seconds is kept at millisecond resolution and always written with
// three decimals, so a record survives a write/read cycle bit-exactly.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiereval/errors.hpp"
#include "hiereval/metric_tree.hpp"
#include "json.hpp"

namespace hiereval {

struct JudgmentRecord {
  std::string campaign_id;
  std::string item_id;
  std::string evaluator_id;
  TreeTarget tree_target = TreeTarget::kInput;
  std::string node_id;
  std::string answer;
  double elapsed_seconds = 0.0;
  std::string wall_time;
  std::uint64_t sequence_no = 0;

  friend bool operator==(const JudgmentRecord&,
                         const JudgmentRecord&) = default;
};

inline double canonical_seconds(double seconds) {
  return std::round(seconds * 1000.0) / 1000.0;
}

inline std::string format_seconds(double seconds) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", canonical_seconds(seconds));
  return buf;
}

// ISO-8601 UTC with millisecond precision, e.g. 2023-03-06T09:00:04.250Z.
inline std::string format_timestamp(std::chrono::system_clock::time_point t) {
  using namespace std::chrono;
  const auto ms = duration_cast<milliseconds>(t.time_since_epoch()).count();
  std::time_t secs = static_cast<std::time_t>(ms / 1000);
  long frac = static_cast<long>(ms % 1000);
  if (frac < 0) {
    frac += 1000;
    --secs;
  }
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03ldZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, frac);
  return buf;
}

inline std::string format_record(const JudgmentRecord& r) {
  auto str = [](const std::string& s) { return nlohmann::json(s).dump(); };
  std::string line;
  line.reserve(256);
  line += "{\"campaign_id\":" + str(r.campaign_id);
  line += ",\"item_id\":" + str(r.item_id);
  line += ",\"evaluator_id\":" + str(r.evaluator_id);
  line += ",\"tree_target\":\"" + std::string(to_string(r.tree_target)) + "\"";
  line += ",\"node_id\":" + str(r.node_id);
  line += ",\"answer\":" + str(r.answer);
  line += ",\"elapsed_seconds\":" + format_seconds(r.elapsed_seconds);
  line += ",\"wall_time\":" + str(r.wall_time);
  line += ",\"sequence_no\":" + std::to_string(r.sequence_no);
  line += "}";
  return line;
}

inline std::string format_journal(std::span<const JudgmentRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += format_record(r);
    out += '\n';
  }
  return out;
}

inline JudgmentRecord parse_record(std::string_view line, std::size_t line_no) {
  const std::string where = "journal line " + std::to_string(line_no);
  auto corrupt = [&](const std::string& why) {
    return Error(ErrorCode::kCorruptRecord, where + ": " + why);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw corrupt(std::string("not a JSON object (") + e.what() + ")");
  }
  if (!j.is_object()) throw corrupt("not a JSON object");
  auto text = [&](const char* field) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_string()) {
      throw corrupt(std::string("field '") + field +
                    "' missing or not a string");
    }
    return it->get<std::string>();
  };
  JudgmentRecord r;
  r.campaign_id = text("campaign_id");
  r.item_id = text("item_id");
  r.evaluator_id = text("evaluator_id");
  auto target = parse_target(text("tree_target"));
  if (!target) throw corrupt("tree_target must be \"input\" or \"output\"");
  r.tree_target = *target;
  r.node_id = text("node_id");
  r.answer = text("answer");
  r.wall_time = text("wall_time");
  auto el = j.find("elapsed_seconds");
  if (el == j.end() || !el->is_number()) {
    throw corrupt("field 'elapsed_seconds' missing or not a number");
  }
  r.elapsed_seconds = canonical_seconds(el->get<double>());
  if (!(r.elapsed_seconds >= 0.0) || !std::isfinite(r.elapsed_seconds)) {
    throw corrupt("elapsed_seconds must be a non-negative number");
  }
  auto seq = j.find("sequence_no");
  if (seq == j.end() || !seq->is_number_unsigned()) {
    throw corrupt("field 'sequence_no' missing or not a non-negative integer");
  }
  r.sequence_no = seq->get<std::uint64_t>();
  return r;
}

// Parses a whole journal. Sequence numbers must run 1, 2, 3, ... without
// gaps; a trailing newline is allowed, blank lines elsewhere are not.
inline std::vector<JudgmentRecord> parse_journal(std::string_view text) {
  std::vector<JudgmentRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      throw Error(ErrorCode::kCorruptRecord,
                  "journal line " + std::to_string(line_no) + ": empty line");
    }
    JudgmentRecord r = parse_record(line, line_no);
    const std::uint64_t expected = out.size() + 1;
    if (r.sequence_no != expected) {
      throw Error(ErrorCode::kSequence,
                  "journal line " + std::to_string(line_no) +
                      ": sequence_no " + std::to_string(r.sequence_no) +
                      (r.sequence_no < expected ? " repeats or regresses"
                                                : " skips ahead") +
                      " (expected " + std::to_string(expected) + ")");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace hiereval
