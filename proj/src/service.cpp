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

#include "service.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>

#include "error.hpp"
#include "journal.hpp"

namespace nga {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kCredentialFile = "credentials.json";
constexpr const char* kJournalFile = "journal.jsonl";

Role parse_role(const json& v, std::size_t index) {
  const std::string s = v.is_string() ? v.get<std::string>() : std::string();
  if (s == "assessor") return Role::assessor;
  if (s == "practitioner") return Role::practitioner;
  throw Error(ErrorCode::invalid_argument,
              "roster[" + std::to_string(index) + "].role must be 'assessor' or 'practitioner'");
}

bool valid_session_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

SessionHub::SessionHub(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.clock) options_.clock = utc_now;
  if (!options_.data_dir.empty()) {
    std::error_code ec;
    fs::create_directories(options_.data_dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create data directory '" + options_.data_dir.string() + "': " + ec.message());
  }
}

SessionHub::~SessionHub() { shutdown(); }

void SessionHub::shutdown() {
  stopping_ = true;
  std::shared_lock lock(map_mu_);
  for (auto& [id, entry] : sessions_) {
    std::lock_guard g(entry->mu);
    entry->changed.notify_all();
  }
}

std::size_t SessionHub::recover_all() {
  if (options_.data_dir.empty()) return 0;
  std::size_t n = 0;
  for (const auto& dirent : fs::directory_iterator(options_.data_dir)) {
    if (!dirent.is_directory()) continue;
    const std::string id = dirent.path().filename().string();
    // A directory without credentials never produced a usable session.
    if (!valid_session_id(id) || !fs::exists(dirent.path() / kCredentialFile) ||
        !fs::exists(dirent.path() / kJournalFile))
      continue;
    auto entry = std::make_shared<Entry>();
    LiveSession::Options lo;
    lo.clock = options_.clock;
    entry->live = LiveSession::recover(dirent.path(), lo);
    const json creds = json::parse(read_file(dirent.path() / kCredentialFile));
    for (const auto& c : creds.at("credentials")) {
      Credential cred;
      cred.token = c.at("credential").get<std::string>();
      cred.participant_id = c.at("participant_id").get<std::string>();
      cred.role = c.at("role") == "assessor" ? Role::assessor : Role::practitioner;
      cred.display_name = c.value("display_name", "");
      entry->credentials[cred.token] = cred;
    }
    std::unique_lock lock(map_mu_);
    sessions_[id] = std::move(entry);
    ++n;
  }
  return n;
}

void SessionHub::save_credentials(const fs::path& dir, const std::string& session_id,
                                  const std::map<std::string, Credential>& creds) const {
  std::vector<const Credential*> ordered;
  for (const auto& [token, c] : creds) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const Credential* a, const Credential* b) { return a->participant_id < b->participant_id; });
  ojson doc;
  doc["session_id"] = session_id;
  doc["credentials"] = ojson::array();
  for (const Credential* c : ordered)
    doc["credentials"].push_back({{"participant_id", c->participant_id},
                                  {"display_name", c->display_name},
                                  {"role", std::string(role_name(c->role))},
                                  {"credential", c->token}});
  write_file_atomic(dir / kCredentialFile, doc.dump(2) + "\n");
  fs::permissions(dir / kCredentialFile, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
}

ojson SessionHub::create_session(const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::invalid_argument, "request body must be a JSON object");
  if (!body.contains("catalog")) throw Error(ErrorCode::invalid_argument, "missing 'catalog'");
  const json& cat_doc = body.at("catalog");
  const Catalog catalog = load_catalog(cat_doc.is_string() ? cat_doc.get<std::string>() : cat_doc.dump());

  const json roster_doc = body.value("roster", json::array());
  if (!roster_doc.is_array() || roster_doc.empty())
    throw Error(ErrorCode::invalid_argument, "'roster' must be a non-empty array");
  std::vector<Participant> roster;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < roster_doc.size(); ++i) {
    const json& r = roster_doc[i];
    if (!r.is_object()) throw Error(ErrorCode::invalid_argument, "roster[" + std::to_string(i) + "] must be an object");
    Participant p;
    p.role = parse_role(r.value("role", json()), i);
    p.id = r.value("participant_id", "");
    roster.push_back(p);
    names.push_back(r.value("display_name", ""));
  }
  const SessionConfig config = SessionConfig::from_json(body.value("config", json::object()), options_.session_defaults);

  std::string id;
  {
    std::shared_lock lock(map_mu_);
    do id = random_token(8);
    while (sessions_.count(id) || (!options_.data_dir.empty() && fs::exists(options_.data_dir / id)));
  }
  LiveSession::Options lo;
  lo.clock = options_.clock;
  if (!options_.data_dir.empty()) lo.storage = options_.data_dir / id;

  auto entry = std::make_shared<Entry>();
  entry->live = LiveSession::create(catalog, roster, config, lo);
  const Session& s = entry->live->state();
  ojson creds = ojson::array();
  for (std::size_t i = 0; i < s.participants().size(); ++i) {
    Credential c;
    c.token = random_token(24);
    c.participant_id = s.participants()[i].id;
    c.role = s.participants()[i].role;
    c.display_name = names[i];
    creds.push_back({{"participant_id", c.participant_id},
                     {"display_name", c.display_name},
                     {"role", std::string(role_name(c.role))},
                     {"credential", c.token}});
    entry->credentials[c.token] = std::move(c);
  }
  if (lo.storage) save_credentials(*lo.storage, id, entry->credentials);
  ojson out;
  out["session_id"] = id;
  out["credentials"] = std::move(creds);
  out["warnings"] = s.warnings();
  std::unique_lock lock(map_mu_);
  sessions_[id] = std::move(entry);
  return out;
}

std::shared_ptr<SessionHub::Entry> SessionHub::find(const std::string& session_id) const {
  std::shared_lock lock(map_mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session '" + session_id + "'");
  return it->second;
}

std::vector<std::string> SessionHub::session_ids() const {
  std::shared_lock lock(map_mu_);
  std::vector<std::string> ids;
  for (const auto& [id, e] : sessions_) ids.push_back(id);
  return ids;
}

Caller SessionHub::authenticate(const std::string& session_id, const std::string& token) const {
  auto entry = find(session_id);
  std::lock_guard g(entry->mu);
  auto it = entry->credentials.find(token);
  if (token.empty() || it == entry->credentials.end())
    throw Error(ErrorCode::unauthorized, "invalid credential for session '" + session_id + "'");
  return Caller{it->second.participant_id, it->second.role, it->second.display_name};
}

ojson SessionHub::command(const std::string& session_id, const json& envelope) {
  if (!envelope.is_object()) throw Error(ErrorCode::invalid_argument, "command envelope must be a JSON object");
  const std::string token = envelope.value("credential", "");
  const Caller caller = authenticate(session_id, token);
  const json& key_doc = envelope.contains("idempotency_key") ? envelope.at("idempotency_key") : json();
  if (!key_doc.is_null() && !key_doc.is_string())
    throw Error(ErrorCode::invalid_argument, "idempotency_key must be a string");
  std::string key = key_doc.is_string() ? key_doc.get<std::string>() : std::string();
  // Keys are client-chosen; scope them per participant so one client can
  // never receive another's stored response.
  if (!key.empty()) key = caller.participant_id + "/" + key;
  auto entry = find(session_id);
  std::lock_guard g(entry->mu);
  ojson result = entry->live->execute(caller.participant_id, envelope.value("command", json()), key);
  entry->changed.notify_all();
  return result;
}

std::vector<JournalEvent> SessionHub::events(const std::string& session_id, const Caller& caller,
                                             std::uint64_t from) const {
  auto entry = find(session_id);
  std::lock_guard g(entry->mu);
  std::vector<JournalEvent> out;
  for (const auto& e : entry->live->journal()) {
    if (e.seq < from) continue;
    out.push_back(caller.role == Role::assessor ? e : project_for_practitioner(e));
  }
  return out;
}

std::uint64_t SessionHub::wait_for(const std::string& session_id, std::uint64_t after_seq,
                                   std::chrono::milliseconds timeout) const {
  auto entry = find(session_id);
  std::unique_lock lock(entry->mu);
  entry->changed.wait_for(lock, timeout,
                          [&] { return stopping_.load() || entry->live->state().last_seq() > after_seq; });
  return entry->live->state().last_seq();
}

ojson SessionHub::state(const std::string& session_id, const Caller& caller) const {
  auto entry = find(session_id);
  std::lock_guard g(entry->mu);
  ojson out;
  out["session_id"] = session_id;
  out["you"] = {{"participant_id", caller.participant_id},
                {"role", std::string(role_name(caller.role))},
                {"display_name", caller.display_name}};
  out["state"] = entry->live->state().snapshot(caller.role, caller.participant_id);
  return out;
}

std::string SessionHub::export_artifact(const std::string& session_id, const Caller& caller,
                                        const std::string& artifact, ExportFormat format, bool draft) const {
  if (caller.role != Role::assessor) throw Error(ErrorCode::unauthorized, "exports require the assessor credential");
  Journal snapshot;
  {
    auto entry = find(session_id);
    std::lock_guard g(entry->mu);
    snapshot = entry->live->journal();
  }
  ReportOptions opts;
  opts.draft = draft;
  if (artifact == "findings") return render_findings(snapshot, format, opts);
  if (artifact == "vote_table") return export_vote_table(snapshot, format, opts);
  if (artifact == "practice_tables") return export_practice_tables(snapshot, format, opts);
  if (artifact == "journal") return journal_to_jsonl(snapshot);
  throw Error(ErrorCode::not_found, "unknown artifact '" + artifact + "'");
}

ListenAddress parse_listen_address(const std::string& text) {
  ListenAddress a;
  std::string port_text = text;
  if (auto colon = text.rfind(':'); colon != std::string::npos) {
    if (colon > 0) a.host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  if (a.host.size() > 2 && a.host.front() == '[' && a.host.back() == ']') a.host = a.host.substr(1, a.host.size() - 2);
  int port = -1;
  auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || p != port_text.data() + port_text.size() || port < 0 || port > 65535)
    throw Error(ErrorCode::invalid_argument, "invalid listen address '" + text + "'");
  a.port = port;
  return a;
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse:
    case ErrorCode::validation:
    case ErrorCode::invalid_argument:
      return 400;
    case ErrorCode::unauthorized:
      return 403;
    case ErrorCode::not_found:
      return 404;
    case ErrorCode::illegal_transition:
    case ErrorCode::guard:
    case ErrorCode::conflict:
      return 409;
    case ErrorCode::io:
    case ErrorCode::internal:
      return 500;
  }
  return 500;
}

namespace {

void send_json(httplib::Response& res, int status, const ojson& body) {
  res.status = status;
  res.set_content(body.dump() + "\n", "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  ojson err;
  err["code"] = error_code_name(e.code());
  err["message"] = e.what();
  if (auto* v = dynamic_cast<const ValidationError*>(&e)) err["violations"] = v->violations();
  send_json(res, http_status(e.code()), {{"ok", false}, {"error", err}});
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    send_error(res, e);
  } catch (const json::exception& e) {
    send_error(res, Error(ErrorCode::parse, std::string("malformed JSON: ") + e.what()));
  } catch (const std::exception& e) {
    send_error(res, Error(ErrorCode::internal, e.what()));
  }
}

std::string bearer(const httplib::Request& req) {
  const std::string h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (h.size() > prefix.size() && h.compare(0, prefix.size(), prefix) == 0) return h.substr(prefix.size());
  return req.get_param_value("credential");
}

std::uint64_t parse_seq(const std::string& s, std::uint64_t fallback) {
  if (s.empty()) return fallback;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error(ErrorCode::invalid_argument, "'" + s + "' is not a sequence number");
  return v;
}

std::string sse_frame(const JournalEvent& e) {
  ojson env;
  env["seq"] = e.seq;
  env["ts"] = e.ts;
  env["kind"] = e.kind;
  env["payload"] = ojson::parse(e.payload.dump());
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.kind + "\ndata: " + env.dump() + "\n\n";
}

}  // namespace

HttpService::HttpService(SessionHub& hub) : hub_(hub), server_(std::make_unique<httplib::Server>()) {
  // Each open event stream holds a worker thread.
  server_->new_task_queue = [] { return new httplib::ThreadPool(64); };
  routes();
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const ListenAddress& address) {
  if (address.port == 0) {
    port_ = server_->bind_to_any_port(address.host);
    if (port_ < 0) throw Error(ErrorCode::io, "cannot bind " + address.host);
  } else {
    if (!server_->bind_to_port(address.host, address.port))
      throw Error(ErrorCode::io, "cannot bind " + address.host + ":" + std::to_string(address.port) +
                                     " (address in use or not available)");
    port_ = address.port;
  }
  return port_;
}

void HttpService::run() { server_->listen_after_bind(); }

void HttpService::stop() {
  hub_.shutdown();
  if (server_) server_->stop();
}

void HttpService::routes() {
  auto& srv = *server_;

  srv.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"ok", true}, {"sessions", hub_.session_ids().size()}});
  });

  srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 201, hub_.create_session(json::parse(req.body))); });
  });

  srv.Post(R"(/sessions/([0-9a-f]+)/commands)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json envelope = json::parse(req.body);
      if (envelope.is_object() && !envelope.contains("credential")) envelope["credential"] = bearer(req);
      send_json(res, 200, hub_.command(req.matches[1], envelope));
    });
  });

  srv.Get(R"(/sessions/([0-9a-f]+)/state)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      send_json(res, 200, hub_.state(id, hub_.authenticate(id, bearer(req))));
    });
  });

  srv.Get(R"(/sessions/([0-9a-f]+)/export/([a-z_]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const Caller caller = hub_.authenticate(id, bearer(req));
      const std::string artifact = req.matches[2];
      const std::string fmt = req.has_param("format") ? req.get_param_value("format") : "json";
      const ExportFormat format = artifact == "journal" ? ExportFormat::json : parse_export_format(fmt);
      const std::string draft = req.get_param_value("draft");
      const std::string body =
          hub_.export_artifact(id, caller, artifact, format, draft == "1" || draft == "true");
      res.status = 200;
      const char* type = artifact == "journal"             ? "application/x-ndjson"
                         : format == ExportFormat::markdown ? "text/markdown; charset=utf-8"
                                                            : "application/json";
      res.set_content(body, type);
    });
  });

  srv.Get(R"(/sessions/([0-9a-f]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const Caller caller = hub_.authenticate(id, bearer(req));
      std::uint64_t from = parse_seq(req.get_param_value("from"), 1);
      if (req.has_header("Last-Event-ID")) from = parse_seq(req.get_header_value("Last-Event-ID"), 0) + 1;
      const std::string follow = req.get_param_value("follow");
      const bool live = !(follow == "0" || follow == "false");
      auto next = std::make_shared<std::uint64_t>(from);
      res.status = 200;
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [this, id, caller, next, live](std::size_t, httplib::DataSink& sink) {
            try {
              const auto batch = hub_.events(id, caller, *next);
              for (const auto& e : batch) {
                const std::string frame = sse_frame(e);
                if (!sink.write(frame.data(), frame.size())) return false;
                *next = e.seq + 1;
              }
              if (!live || hub_.stopping()) {
                sink.done();
                return true;
              }
              if (batch.empty()) {
                const std::uint64_t latest = hub_.wait_for(id, *next - 1, std::chrono::seconds(15));
                if (latest < *next && !hub_.stopping()) {
                  static constexpr char kKeepAlive[] = ": keep-alive\n\n";
                  if (!sink.write(kKeepAlive, sizeof kKeepAlive - 1)) return false;
                }
              }
              return true;
            } catch (const std::exception&) {
              return false;
            }
          });
    });
  });
}

}  // namespace nga
