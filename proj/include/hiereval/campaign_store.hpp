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

// On-disk campaign directories.
//
//   <dir>/campaign.json   configuration, both trees embedded
//   <dir>/items.jsonl     one Item per line
//   <dir>/journal.jsonl   append-only judgment journal
//
// Writers hold an exclusive flock on the journal for their whole lifetime;
// readers take a shared lock while reading it.

#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hiereval/campaign.hpp"
#include "hiereval/errors.hpp"
#include "hiereval/journal.hpp"
#include "hiereval/metric_tree.hpp"
#include "json.hpp"

namespace hiereval {

namespace fs = std::filesystem;

inline constexpr const char* kCampaignFile = "campaign.json";
inline constexpr const char* kItemsFile = "items.jsonl";
inline constexpr const char* kJournalFile = "journal.jsonl";

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "error reading " + path.string());
  return ss.str();
}

inline void write_text_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "error writing " + path.string());
}

// Everything in campaign.json. Items live in their own file so they can be
// imported after the campaign is configured.
struct CampaignConfig {
  std::string id;
  MetricTree input_tree;
  MetricTree output_tree;
  std::vector<Evaluator> evaluators;
  int redundancy = 1;
  std::uint64_t shuffle_seed = 0;
  AssignmentMode assignment = AssignmentMode::kSeededShuffle;
};

inline nlohmann::json config_to_json(const CampaignConfig& c) {
  nlohmann::json evaluators = nlohmann::json::array();
  for (const auto& e : c.evaluators) {
    evaluators.push_back(
        {{"id", e.id}, {"display_name", e.display_name}, {"token", e.token}});
  }
  return {{"id", c.id},
          {"redundancy", c.redundancy},
          {"shuffle_seed", c.shuffle_seed},
          {"assignment", std::string(to_string(c.assignment))},
          {"evaluators", evaluators},
          {"input_tree", tree_to_json(c.input_tree)},
          {"output_tree", tree_to_json(c.output_tree)}};
}

inline CampaignConfig config_from_json(const nlohmann::json& j) {
  try {
    CampaignConfig c;
    c.id = j.at("id").get<std::string>();
    c.redundancy = j.value("redundancy", 1);
    c.shuffle_seed = j.value("shuffle_seed", std::uint64_t{0});
    auto mode = parse_assignment_mode(j.value("assignment", "seeded_shuffle"));
    if (!mode) {
      throw Error(ErrorCode::kSchema, "campaign: unknown assignment mode");
    }
    c.assignment = *mode;
    for (const auto& e : j.at("evaluators")) {
      c.evaluators.push_back({e.at("id").get<std::string>(),
                              e.value("display_name", std::string()),
                              e.at("token").get<std::string>()});
    }
    c.input_tree = tree_from_json(j.at("input_tree"));
    c.output_tree = tree_from_json(j.at("output_tree"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema,
                std::string("campaign: malformed configuration: ") + e.what());
  }
}

inline CampaignConfig config_of(const Campaign& c) {
  return {c.id,         c.input_tree,   c.output_tree, c.evaluators,
          c.redundancy, c.shuffle_seed, c.assignment};
}

// --- items -----------------------------------------------------------------

inline nlohmann::json item_to_json(const Item& item) {
  nlohmann::json j = {{"id", item.id},
                      {"input_text", item.input_text},
                      {"output_text", item.output_text}};
  if (item.explanation_text) j["explanation_text"] = *item.explanation_text;
  if (item.source_tag) j["source_tag"] = *item.source_tag;
  return j;
}

inline Item item_from_json(const nlohmann::json& j, const std::string& where) {
  auto field = [&](const char* name) -> std::optional<std::string> {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
      throw Error(ErrorCode::kSchema,
                  where + ": field '" + name + "' must be a string");
    }
    return it->get<std::string>();
  };
  if (!j.is_object()) throw Error(ErrorCode::kSchema, where + ": not an object");
  Item item;
  auto id = field("id");
  auto in = field("input_text");
  auto out = field("output_text");
  if (!id || !in || !out) {
    throw Error(ErrorCode::kSchema,
                where + ": id, input_text and output_text are required");
  }
  item.id = *id;
  item.input_text = *in;
  item.output_text = *out;
  item.explanation_text = field("explanation_text");
  item.source_tag = field("source_tag");
  return item;
}

inline std::string format_items_jsonl(const std::vector<Item>& items) {
  std::string out;
  for (const auto& item : items) out += item_to_json(item).dump() + "\n";
  return out;
}

inline std::vector<Item> parse_items_jsonl(std::string_view text) {
  std::vector<Item> items;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::string where = "items line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kSyntax, where + ": " + e.what());
    }
    items.push_back(item_from_json(j, where));
  }
  return items;
}

namespace detail {

inline std::string tsv_unescape(std::string_view field) {
  std::string out;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] == '\\' && i + 1 < field.size()) {
      switch (field[++i]) {
        case 't': out += '\t'; break;
        case 'n': out += '\n'; break;
        case '\\': out += '\\'; break;
        default: out += '\\'; out += field[i];
      }
    } else {
      out += field[i];
    }
  }
  return out;
}

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto tab = line.find('\t', pos);
    out.push_back(tsv_unescape(line.substr(pos, tab - pos)));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

}  // namespace detail

// Tab-separated items with a header row naming the Item fields. Empty cells
// in optional columns mean "absent"; \t, \n and \\ escapes are honoured.
inline std::vector<Item> parse_items_tsv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_tabs(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* req : {"id", "input_text", "output_text"}) {
    if (!col.contains(req)) {
      throw Error(ErrorCode::kSchema,
                  std::string("items header lacks column '") + req + "'");
    }
  }
  std::vector<Item> items;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_tabs(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kSyntax,
                  "items line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    }
    auto opt = [&](const char* name) -> std::optional<std::string> {
      auto it = col.find(name);
      if (it == col.end() || cells[it->second].empty()) return std::nullopt;
      return cells[it->second];
    };
    items.push_back({cells[col["id"]], cells[col["input_text"]],
                     cells[col["output_text"]], opt("explanation_text"),
                     opt("source_tag")});
  }
  return items;
}

// Accepts .jsonl (one object per line), .json (an array) or .tsv.
inline std::vector<Item> load_items_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  const auto ext = path.extension().string();
  if (ext == ".tsv") return parse_items_tsv(text);
  if (ext == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kSyntax, path.string() + ": " + e.what());
    }
    if (!j.is_array()) {
      throw Error(ErrorCode::kSchema, path.string() + ": expected an array");
    }
    std::vector<Item> items;
    for (std::size_t i = 0; i < j.size(); ++i) {
      items.push_back(item_from_json(j[i], "items[" + std::to_string(i) + "]"));
    }
    return items;
  }
  return parse_items_jsonl(text);
}

// --- journal file ------------------------------------------------------------

// RAII flock on the journal file.
class JournalLock {
 public:
  enum class Mode { kShared, kExclusive };

  // With `wait` false a lock held elsewhere fails at once instead of
  // blocking.
  JournalLock(const fs::path& path, Mode mode, bool wait = true) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      throw Error(ErrorCode::kIo, "cannot open " + path.string() + ": " +
                                      std::strerror(errno));
    }
    const int op = (mode == Mode::kShared ? LOCK_SH : LOCK_EX) |
                   (wait ? 0 : LOCK_NB);
    if (::flock(fd_, op) != 0) {
      const int err = errno;
      ::close(fd_);
      if (err == EWOULDBLOCK) {
        throw Error(ErrorCode::kIo,
                    path.string() + " is locked by another writer");
      }
      throw Error(ErrorCode::kIo,
                  "cannot lock " + path.string() + ": " + std::strerror(err));
    }
  }
  JournalLock(const JournalLock&) = delete;
  JournalLock& operator=(const JournalLock&) = delete;
  ~JournalLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

// Exclusive appender. One line per record, flushed to disk before append()
// returns.
class JournalWriter {
 public:
  explicit JournalWriter(const fs::path& path, bool wait = true)
      : path_(path), lock_(path, JournalLock::Mode::kExclusive, wait) {}

  void append(const JudgmentRecord& r) {
    const std::string line = format_record(r) + "\n";
    std::size_t done = 0;
    while (done < line.size()) {
      const auto n = ::write(lock_.fd(), line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::kIo, "cannot append to " + path_.string() +
                                        ": " + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
    ::fdatasync(lock_.fd());
  }

  std::string read_all() const { return read_text_file(path_); }

 private:
  fs::path path_;
  JournalLock lock_;
};

struct CampaignDir {
  fs::path root;

  fs::path config_path() const { return root / kCampaignFile; }
  fs::path items_path() const { return root / kItemsFile; }
  fs::path journal_path() const { return root / kJournalFile; }

  bool exists() const { return fs::exists(config_path()); }

  CampaignConfig read_config() const {
    const std::string text = read_text_file(config_path());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kSyntax,
                  config_path().string() + ": " + e.what());
    }
    return config_from_json(j);
  }

  void write_config(const CampaignConfig& c) const {
    fs::create_directories(root);
    write_text_file(config_path(), config_to_json(c).dump(2) + "\n");
  }

  std::vector<Item> read_items() const {
    if (!fs::exists(items_path())) return {};
    return parse_items_jsonl(read_text_file(items_path()));
  }

  void write_items(const std::vector<Item>& items) const {
    write_text_file(items_path(), format_items_jsonl(items));
  }

  bool has_journal_records() const {
    return fs::exists(journal_path()) && fs::file_size(journal_path()) > 0;
  }

  std::string read_journal_text() const {
    if (!fs::exists(journal_path())) return {};
    JournalLock lock(journal_path(), JournalLock::Mode::kShared);
    return read_text_file(journal_path());
  }

  std::vector<JudgmentRecord> read_journal() const {
    return parse_journal(read_journal_text());
  }

  std::shared_ptr<const Campaign> load_campaign() const {
    CampaignConfig c = read_config();
    return std::make_shared<const Campaign>(create_campaign(
        std::move(c.id), std::move(c.input_tree), std::move(c.output_tree),
        read_items(), std::move(c.evaluators), c.redundancy, c.shuffle_seed,
        c.assignment));
  }

  // Writes a complete campaign (config, items, journal text).
  void save(const Campaign& c, std::string_view journal_text = {}) const {
    write_config(config_of(c));
    write_items(c.items);
    write_text_file(journal_path(), journal_text);
  }
};

}  // namespace hiereval
