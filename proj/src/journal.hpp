// Copyright 2026 The nga Authors
// SPDX-License-Identifier: Apache-2.0
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

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nga {

/// One entry of a session's append-only log. Transcripts use the same shape.
struct JournalEvent {
  std::uint64_t seq = 0;
  std::string ts;  // RFC 3339 UTC, server assigned
  std::string kind;
  nlohmann::json payload = nlohmann::json::object();
  std::string idempotency_key;  // empty for events not derived from a keyed command

  nlohmann::ordered_json to_json() const;
  static JournalEvent from_json(const nlohmann::json& j, std::uint64_t fallback_seq);
};

using Journal = std::vector<JournalEvent>;

/// One event per line.
std::string journal_to_jsonl(const Journal& journal);

/// Accepts a JSON array of events, an object with an "events" array, or
/// JSON Lines. Missing seq numbers are filled in by position (1-based).
/// Throws Error(parse) with the offending line or index.
Journal parse_journal(const std::string& text);
Journal read_journal_file(const std::filesystem::path& path);

/// Current UTC time as RFC 3339 with millisecond precision.
std::string utc_now();

/// Append-only journal file. Each append is flushed and synced before return.
class JournalWriter {
 public:
  explicit JournalWriter(const std::filesystem::path& path);
  ~JournalWriter();
  JournalWriter(const JournalWriter&) = delete;
  JournalWriter& operator=(const JournalWriter&) = delete;

  void append(const JournalEvent& event);

 private:
  std::FILE* file_ = nullptr;
  std::filesystem::path path_;
};

/// Writes a whole file atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace nga
