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

#include <nga/nga.h>

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "catalog.hpp"
#include "error.hpp"
#include "live.hpp"
#include "rating.hpp"
#include "report.hpp"
#include "service.hpp"

using json = nlohmann::json;

struct nga_catalog {
  nga::Catalog catalog;
};

struct nga_session {
  std::unique_ptr<nga::LiveSession> live;
};

struct nga_service {
  std::unique_ptr<nga::SessionHub> hub;
  std::unique_ptr<nga::HttpService> http;
  std::size_t recovered = 0;
};

namespace {

thread_local std::string last_error;

nga_status fail(nga_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename F>
nga_status wrap(F&& f) {
  last_error.clear();
  try {
    f();
    return NGA_OK;
  } catch (const nga::Error& e) {
    return fail(static_cast<nga_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(NGA_ERR_PARSE, std::string("malformed JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(NGA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NGA_ERR_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

void require(const void* p, const char* name) {
  if (p == nullptr) throw nga::Error(nga::ErrorCode::invalid_argument, std::string(name) + " must not be NULL");
}

std::vector<nga::Participant> parse_roster(const json& doc) {
  if (!doc.is_array() || doc.empty())
    throw nga::Error(nga::ErrorCode::invalid_argument, "'roster' must be a non-empty array");
  std::vector<nga::Participant> roster;
  for (const auto& r : doc) {
    nga::Participant p;
    const std::string role = r.value("role", "");
    if (role == "assessor") p.role = nga::Role::assessor;
    else if (role == "practitioner") p.role = nga::Role::practitioner;
    else throw nga::Error(nga::ErrorCode::invalid_argument, "roster role must be 'assessor' or 'practitioner'");
    p.id = r.value("participant_id", "");
    roster.push_back(p);
  }
  return roster;
}

}  // namespace

extern "C" {

const char* nga_version(void) { return "1.0.0"; }

const char* nga_status_name(nga_status status) {
  if (status == NGA_OK) return "ok";
  if (status < NGA_ERR_PARSE || status > NGA_ERR_INTERNAL) return "unknown";
  return nga::error_code_name(static_cast<nga::ErrorCode>(status));
}

const char* nga_last_error(void) { return last_error.c_str(); }

void nga_string_free(char* s) { std::free(s); }

nga_status nga_catalog_load(const char* text, size_t len, nga_catalog** out) {
  return wrap([&] {
    require(text, "json");
    require(out, "out");
    *out = new nga_catalog{nga::load_catalog(std::string_view(text, len))};
  });
}

nga_status nga_catalog_load_file(const char* path, nga_catalog** out) {
  return wrap([&] {
    require(path, "path");
    require(out, "out");
    *out = new nga_catalog{nga::load_catalog_file(path)};
  });
}

nga_status nga_catalog_validate_file(const char* path, char** violations) {
  if (violations != nullptr) *violations = nullptr;
  return wrap([&] {
    require(path, "path");
    try {
      nga::load_catalog_file(path);
    } catch (const nga::ValidationError& e) {
      if (violations != nullptr) *violations = dup(json(e.violations()).dump());
      throw;
    }
  });
}

size_t nga_catalog_story_count(const nga_catalog* catalog) {
  if (catalog == nullptr) return 0;
  std::size_t n = 0;
  for (const auto& a : catalog->catalog.process_areas) n += a.story_count();
  return n;
}

nga_status nga_catalog_story_ids(const nga_catalog* catalog, char** out_json) {
  return wrap([&] {
    require(catalog, "catalog");
    require(out_json, "out_json");
    json ids = json::array();
    for (const auto& a : catalog->catalog.process_areas)
      for (const auto& g : a.goals)
        for (const auto& s : g.stories) ids.push_back(s.id);
    *out_json = dup(ids.dump());
  });
}

nga_status nga_catalog_render_story(const nga_catalog* catalog, const char* story_id, char** out) {
  return wrap([&] {
    require(catalog, "catalog");
    require(story_id, "story_id");
    require(out, "out");
    const nga::StoryCard* s = catalog->catalog.find_story(story_id);
    if (s == nullptr) throw nga::Error(nga::ErrorCode::not_found, std::string("unknown story '") + story_id + "'");
    *out = dup(nga::render_story(*s));
  });
}

void nga_catalog_free(nga_catalog* catalog) { delete catalog; }

nga_status nga_classify(const unsigned counts[5], char** rating, int* rule) {
  return wrap([&] {
    require(counts, "counts");
    nga::VoteDistribution d;
    for (std::size_t i = 0; i < nga::kColumnOrder.size(); ++i) d.add(nga::kColumnOrder[i], counts[i]);
    if (d.total() == 0) throw nga::Error(nga::ErrorCode::invalid_argument, "no votes to classify");
    const nga::Classification c = nga::classify(d);
    if (rating != nullptr) *rating = dup(std::string(nga::rating_code(c.rating)));
    if (rule != nullptr) *rule = static_cast<int>(c.rule);
  });
}

nga_status nga_session_create(const char* request_json, const char* storage_dir, nga_session** out) {
  return wrap([&] {
    require(request_json, "request_json");
    require(out, "out");
    const json req = json::parse(request_json);
    if (!req.is_object() || !req.contains("catalog"))
      throw nga::Error(nga::ErrorCode::invalid_argument, "request must be an object with a 'catalog'");
    const json& c = req.at("catalog");
    const nga::Catalog catalog = nga::load_catalog(c.is_string() ? c.get<std::string>() : c.dump());
    const auto roster = parse_roster(req.value("roster", json::array()));
    const nga::SessionConfig config = nga::SessionConfig::from_json(req.value("config", json::object()));
    nga::LiveSession::Options opts;
    if (storage_dir != nullptr && *storage_dir != '\0') opts.storage = storage_dir;
    *out = new nga_session{nga::LiveSession::create(catalog, roster, config, opts)};
  });
}

nga_status nga_session_recover(const char* storage_dir, nga_session** out) {
  return wrap([&] {
    require(storage_dir, "storage_dir");
    require(out, "out");
    *out = new nga_session{nga::LiveSession::recover(storage_dir)};
  });
}

nga_status nga_session_execute(nga_session* session, const char* actor_id, const char* command_json,
                               const char* idempotency_key, char** out_json) {
  return wrap([&] {
    require(session, "session");
    require(actor_id, "actor_id");
    require(command_json, "command_json");
    const auto r = session->live->execute(actor_id, json::parse(command_json),
                                          idempotency_key != nullptr ? idempotency_key : "");
    if (out_json != nullptr) *out_json = dup(r.dump());
  });
}

nga_status nga_session_snapshot(const nga_session* session, const char* viewer_id, char** out_json) {
  return wrap([&] {
    require(session, "session");
    require(out_json, "out_json");
    const nga::Session& s = session->live->state();
    nga::Role role = nga::Role::assessor;
    std::string viewer;
    if (viewer_id != nullptr) {
      const nga::Participant* p = s.participant(viewer_id);
      if (p == nullptr) throw nga::Error(nga::ErrorCode::not_found, std::string("unknown participant '") + viewer_id + "'");
      role = p->role;
      viewer = p->id;
    }
    *out_json = dup(s.snapshot(role, viewer).dump());
  });
}

nga_status nga_session_journal(const nga_session* session, char** out_jsonl) {
  return wrap([&] {
    require(session, "session");
    require(out_jsonl, "out_jsonl");
    *out_jsonl = dup(nga::journal_to_jsonl(session->live->journal()));
  });
}

void nga_session_free(nga_session* session) { delete session; }

nga_status nga_export(const char* journal, size_t len, const char* artifact, const char* format, int draft,
                      char** out) {
  return wrap([&] {
    require(journal, "journal");
    require(artifact, "artifact");
    require(out, "out");
    const nga::Journal j = nga::parse_journal(std::string(journal, len));
    const nga::ExportFormat f = nga::parse_export_format(format != nullptr ? format : "json");
    nga::ReportOptions opts;
    opts.draft = draft != 0;
    const std::string a = artifact;
    if (a == "findings") *out = dup(nga::render_findings(j, f, opts));
    else if (a == "vote_table") *out = dup(nga::export_vote_table(j, f, opts));
    else if (a == "practice_tables") *out = dup(nga::export_practice_tables(j, f, opts));
    else throw nga::Error(nga::ErrorCode::not_found, "unknown artifact '" + a + "'");
  });
}

nga_status nga_replay(const char* transcript_path, const char* out_dir, int draft) {
  return wrap([&] {
    require(transcript_path, "transcript_path");
    require(out_dir, "out_dir");
    const nga::Journal j = nga::read_journal_file(transcript_path);
    const nga::Session s = nga::replay_journal(j);
    nga::ReportOptions opts;
    opts.draft = draft != 0;
    nga::write_reports(s, out_dir, opts);
  });
}

nga_status nga_service_create(const char* data_dir, const char* defaults_json, nga_service** out) {
  return wrap([&] {
    require(out, "out");
    nga::ServiceOptions opts;
    if (data_dir != nullptr) opts.data_dir = data_dir;
    if (defaults_json != nullptr && *defaults_json != '\0')
      opts.session_defaults = nga::SessionConfig::from_json(json::parse(defaults_json));
    auto svc = std::make_unique<nga_service>();
    svc->hub = std::make_unique<nga::SessionHub>(opts);
    svc->recovered = svc->hub->recover_all();
    svc->http = std::make_unique<nga::HttpService>(*svc->hub);
    *out = svc.release();
  });
}

size_t nga_service_recovered(const nga_service* service) { return service != nullptr ? service->recovered : 0; }

nga_status nga_service_bind(nga_service* service, const char* listen, int* out_port) {
  return wrap([&] {
    require(service, "service");
    require(listen, "listen");
    const int port = service->http->bind(nga::parse_listen_address(listen));
    if (out_port != nullptr) *out_port = port;
  });
}

nga_status nga_service_run(nga_service* service) {
  return wrap([&] {
    require(service, "service");
    service->http->run();
  });
}

void nga_service_stop(nga_service* service) {
  if (service != nullptr) service->http->stop();
}

void nga_service_free(nga_service* service) {
  if (service == nullptr) return;
  service->http->stop();
  delete service;
}

}  // extern "C"
