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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "live.hpp"
#include "report.hpp"

namespace httplib {
class Server;
}

namespace nga {

struct ServiceOptions {
  std::filesystem::path data_dir;  // empty: sessions live in memory only
  SessionConfig session_defaults;
  Clock clock;
};

struct Credential {
  std::string token;
  std::string participant_id;
  Role role = Role::practitioner;
  std::string display_name;
};

struct Caller {
  std::string participant_id;
  Role role = Role::practitioner;
  std::string display_name;
};

/// All sessions of one service process. Commands for a session run one at a
/// time under that session's lock; event readers wait on its condition
/// variable.
class SessionHub {
 public:
  explicit SessionHub(ServiceOptions options);
  ~SessionHub();

  SessionHub(const SessionHub&) = delete;
  SessionHub& operator=(const SessionHub&) = delete;

  /// Loads every session found under the data directory. Returns how many.
  std::size_t recover_all();

  /// Body: {catalog, roster: [{display_name, role, participant_id?}], config?}.
  /// Returns {session_id, credentials: [...], warnings: [...]}.
  nlohmann::ordered_json create_session(const nlohmann::json& body);

  Caller authenticate(const std::string& session_id, const std::string& token) const;

  /// Envelope: {credential, idempotency_key, command: {kind, payload}}.
  nlohmann::ordered_json command(const std::string& session_id, const nlohmann::json& envelope);

  /// Events with seq >= from, filtered for the caller's role.
  std::vector<JournalEvent> events(const std::string& session_id, const Caller& caller, std::uint64_t from) const;

  /// Blocks until the session's journal passes `after_seq`, the timeout
  /// expires or the hub shuts down. Returns the latest seq.
  std::uint64_t wait_for(const std::string& session_id, std::uint64_t after_seq,
                         std::chrono::milliseconds timeout) const;

  nlohmann::ordered_json state(const std::string& session_id, const Caller& caller) const;

  /// artifact: findings | vote_table | practice_tables | journal.
  std::string export_artifact(const std::string& session_id, const Caller& caller, const std::string& artifact,
                              ExportFormat format, bool draft) const;

  std::vector<std::string> session_ids() const;
  void shutdown();
  bool stopping() const noexcept { return stopping_.load(); }

 private:
  struct Entry {
    mutable std::mutex mu;
    mutable std::condition_variable changed;
    std::unique_ptr<LiveSession> live;
    std::map<std::string, Credential> credentials;  // token -> credential
  };

  std::shared_ptr<Entry> find(const std::string& session_id) const;
  void save_credentials(const std::filesystem::path& dir, const std::string& session_id,
                        const std::map<std::string, Credential>& creds) const;

  ServiceOptions options_;
  mutable std::shared_mutex map_mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::atomic<bool> stopping_{false};
};

struct ListenAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// Accepts "host:port", ":port" or "port".
ListenAddress parse_listen_address(const std::string& text);

/// HTTP front end over a SessionHub.
class HttpService {
 public:
  explicit HttpService(SessionHub& hub);
  ~HttpService();

  /// Binds the socket; port 0 picks a free port. Throws Error(io) on failure.
  int bind(const ListenAddress& address);
  /// Serves until stop(). Call after bind().
  void run();
  void stop();
  int port() const noexcept { return port_; }

 private:
  void routes();

  SessionHub& hub_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = 0;
};

/// HTTP status used for an error code.
int http_status(ErrorCode code) noexcept;

}  // namespace nga
