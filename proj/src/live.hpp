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

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "journal.hpp"
#include "session.hpp"
#include "voting.hpp"

namespace nga {

using Clock = std::function<std::string()>;

/// A running interview: the event-sourced Session plus everything that must
/// never reach the journal (ballot values and who holds which ballot token).
///
/// Not thread-safe; the owner serializes commands (see SessionHub).
class LiveSession {
 public:
  struct Options {
    Clock clock;                        // defaults to utc_now
    std::optional<std::filesystem::path> storage;  // directory; in-memory when unset
  };

  static std::unique_ptr<LiveSession> create(const Catalog& catalog, const std::vector<Participant>& roster,
                                             const SessionConfig& config, Options options);

  /// Rebuilds a session from its storage directory (journal + ballot box).
  static std::unique_ptr<LiveSession> recover(const std::filesystem::path& dir, Options options = {});

  /// Runs one command on behalf of a participant. Command shape:
  /// {"kind": ..., "payload": {...}}. A repeated idempotency key returns the
  /// first response without applying anything.
  nlohmann::ordered_json execute(const std::string& actor_id, const nlohmann::json& command,
                                 const std::string& idempotency_key = {});

  const Session& state() const noexcept { return session_; }
  const Journal& journal() const noexcept { return journal_; }
  const BallotBox& ballot_box() const noexcept { return box_; }

 private:
  LiveSession(Session session, Options options);

  std::vector<JournalEvent> decide(const Participant& actor, const std::string& kind, nlohmann::json payload,
                                   nlohmann::ordered_json& result, const std::string& key);
  nlohmann::ordered_json cast_vote(const Participant& actor, const nlohmann::json& payload, const std::string& key);
  JournalEvent stamp(std::string kind, nlohmann::json payload, const std::string& key);
  void commit(const std::vector<JournalEvent>& events);
  void persist_box();
  static nlohmann::ordered_json response_for(const std::vector<JournalEvent>& events, const Session& after,
                                             nlohmann::ordered_json result);

  Session session_;
  Options options_;
  Journal journal_;
  BallotBox box_;
  std::unique_ptr<JournalWriter> writer_;
  std::map<std::string, nlohmann::ordered_json> responses_;  // idempotency key -> response
  // Transient ballot ownership for the open round; dropped at reveal.
  std::map<std::string, std::string> holder_tokens_;  // participant -> token
  // Cards of the last preliminary round, per participant, kept only until
  // the presenter is chosen.
  std::map<std::string, VoteCard> dissent_cards_;
};

/// Role allowed to issue each command kind.
bool command_allowed(Role role, const std::string& kind);

}  // namespace nga
