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

#include "journal.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include "error.hpp"

namespace nga {

nlohmann::ordered_json JournalEvent::to_json() const {
  nlohmann::ordered_json j;
  j["seq"] = seq;
  j["ts"] = ts;
  j["kind"] = kind;
  j["payload"] = nlohmann::ordered_json::parse(payload.dump());
  if (!idempotency_key.empty()) j["idempotency_key"] = idempotency_key;
  return j;
}

JournalEvent JournalEvent::from_json(const nlohmann::json& j, std::uint64_t fallback_seq) {
  if (!j.is_object()) throw Error(ErrorCode::parse, "event must be an object");
  JournalEvent e;
  auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string() || kind->get<std::string>().empty())
    throw Error(ErrorCode::parse, "event is missing 'kind'");
  e.kind = kind->get<std::string>();
  if (auto it = j.find("seq"); it != j.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) throw Error(ErrorCode::parse, "event 'seq' must be a positive integer");
    e.seq = it->get<std::uint64_t>();
  } else {
    e.seq = fallback_seq;
  }
  if (auto it = j.find("ts"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorCode::parse, "event 'ts' must be a string");
    e.ts = it->get<std::string>();
  }
  if (auto it = j.find("payload"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw Error(ErrorCode::parse, "event 'payload' must be an object");
    e.payload = *it;
  }
  if (auto it = j.find("idempotency_key"); it != j.end() && it->is_string()) e.idempotency_key = it->get<std::string>();
  return e;
}

std::string journal_to_jsonl(const Journal& journal) {
  std::string out;
  for (const auto& e : journal) {
    out += e.to_json().dump();
    out += '\n';
  }
  return out;
}

Journal parse_journal(const std::string& text) {
  Journal out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return out;

  auto from_array = [&out](const nlohmann::json& arr) {
    for (std::size_t i = 0; i < arr.size(); ++i) {
      try {
        out.push_back(JournalEvent::from_json(arr[i], i + 1));
      } catch (const Error& e) {
        throw Error(ErrorCode::parse, "event #" + std::to_string(i + 1) + ": " + e.what());
      }
    }
  };

  if (text[first] == '[') {
    try {
      from_array(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::parse, std::string("transcript: ") + e.what());
    }
    return out;
  }
  // A single object is either {"events": [...]} or the first JSON line.
  try {
    auto whole = nlohmann::json::parse(text);
    if (whole.is_object() && whole.contains("events")) {
      if (!whole["events"].is_array()) throw Error(ErrorCode::parse, "transcript: 'events' must be an array");
      from_array(whole["events"]);
      return out;
    }
  } catch (const nlohmann::json::parse_error&) {
    // fall through to JSON Lines
  }
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(JournalEvent::from_json(nlohmann::json::parse(line), out.size() + 1));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::parse, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::parse, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Journal read_journal_file(const std::filesystem::path& path) { return parse_journal(read_file(path)); }

std::string utc_now() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

JournalWriter::JournalWriter(const std::filesystem::path& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "ab");
  if (file_ == nullptr) throw Error(ErrorCode::io, "cannot open journal '" + path.string() + "' for append");
}

JournalWriter::~JournalWriter() {
  if (file_ != nullptr) std::fclose(file_);
}

void JournalWriter::append(const JournalEvent& event) {
  const std::string line = event.to_json().dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
    throw Error(ErrorCode::io, "journal append failed for '" + path_.string() + "'");
  ::fsync(::fileno(file_));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::io, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot replace '" + path.string() + "': " + ec.message());
}

}  // namespace nga
