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

#include "session.hpp"

#include <algorithm>

#include "error.hpp"

namespace nga {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view phase_name(Phase p) noexcept {
  switch (p) {
    case Phase::Welcome: return "Welcome";
    case Phase::AreaIntro: return "AreaIntro";
    case Phase::StoryPresented: return "StoryPresented";
    case Phase::Clarification: return "Clarification";
    case Phase::PreliminaryVoting: return "PreliminaryVoting";
    case Phase::PreliminaryRevealed: return "PreliminaryRevealed";
    case Phase::Explaining: return "Explaining";
    case Phase::FollowOn: return "FollowOn";
    case Phase::DefinitiveVoting: return "DefinitiveVoting";
    case Phase::DefinitiveRevealed: return "DefinitiveRevealed";
    case Phase::VoteRecorded: return "VoteRecorded";
    case Phase::FindingValidation: return "FindingValidation";
    case Phase::ContinueDecision: return "ContinueDecision";
    case Phase::ParkingReview: return "ParkingReview";
    case Phase::ParkingClosure: return "ParkingClosure";
    case Phase::Closed: return "Closed";
  }
  return "?";
}

const std::vector<std::pair<Phase, Phase>>& declared_edges() {
  static const std::vector<std::pair<Phase, Phase>> edges = {
      {Phase::Welcome, Phase::AreaIntro},
      {Phase::AreaIntro, Phase::StoryPresented},
      {Phase::StoryPresented, Phase::Clarification},
      {Phase::Clarification, Phase::PreliminaryVoting},
      {Phase::PreliminaryVoting, Phase::PreliminaryRevealed},
      {Phase::PreliminaryRevealed, Phase::Explaining},
      {Phase::Explaining, Phase::FollowOn},
      {Phase::FollowOn, Phase::DefinitiveVoting},
      {Phase::DefinitiveVoting, Phase::DefinitiveRevealed},
      {Phase::DefinitiveRevealed, Phase::VoteRecorded},
      {Phase::VoteRecorded, Phase::FindingValidation},
      {Phase::FindingValidation, Phase::ContinueDecision},
      {Phase::ContinueDecision, Phase::StoryPresented},
      {Phase::ContinueDecision, Phase::AreaIntro},
      {Phase::ContinueDecision, Phase::ParkingReview},
      {Phase::ParkingReview, Phase::ParkingClosure},
      {Phase::ParkingClosure, Phase::Closed},
  };
  return edges;
}

bool is_declared_edge(Phase from, Phase to) noexcept {
  const auto& e = declared_edges();
  return std::find(e.begin(), e.end(), std::make_pair(from, to)) != e.end();
}

std::string_view role_name(Role r) noexcept { return r == Role::assessor ? "assessor" : "practitioner"; }

std::string_view parking_status_name(ParkingStatus s) noexcept {
  switch (s) {
    case ParkingStatus::open: return "open";
    case ParkingStatus::assigned: return "assigned";
    case ParkingStatus::resolved: return "resolved";
    case ParkingStatus::agreed_to_disagree: return "agreed_to_disagree";
    case ParkingStatus::assessor_decided: return "assessor_decided";
  }
  return "?";
}

std::string_view validation_status_name(ValidationStatus s) noexcept {
  switch (s) {
    case ValidationStatus::pending: return "pending";
    case ValidationStatus::confirmed: return "confirmed";
    case ValidationStatus::corrected: return "corrected";
    case ValidationStatus::disputed: return "disputed";
  }
  return "?";
}

namespace {

[[noreturn]] void fail_guard(std::string_view guard, const std::string& detail) {
  throw Error(ErrorCode::guard, "guard '" + std::string(guard) + "' failed: " + detail);
}

[[noreturn]] void fail_transition(std::string_view command, Phase phase) {
  throw Error(ErrorCode::illegal_transition, "illegal transition: '" + std::string(command) +
                                                 "' is not allowed in phase " + std::string(phase_name(phase)));
}

std::string text_field(const json& payload, const char* key, bool required, const std::string& fallback = {}) {
  auto it = payload.find(key);
  if (it == payload.end() || it->is_null()) {
    if (required) throw Error(ErrorCode::invalid_argument, std::string("missing field '") + key + "'");
    return fallback;
  }
  if (!it->is_string()) throw Error(ErrorCode::invalid_argument, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

bool bool_field(const json& payload, const char* key, bool fallback) {
  auto it = payload.find(key);
  if (it == payload.end() || it->is_null()) return fallback;
  if (!it->is_boolean()) throw Error(ErrorCode::invalid_argument, std::string("field '") + key + "' must be a boolean");
  return it->get<bool>();
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

std::optional<Role> parse_role(std::string_view s) {
  if (s == "assessor") return Role::assessor;
  if (s == "practitioner") return Role::practitioner;
  return std::nullopt;
}

}  // namespace

ojson SessionConfig::to_json() const {
  ojson j;
  j["clarification_timebox_seconds"] = clarification_timebox_seconds;
  j["presenter_policy"] = presenter_policy == PresenterPolicy::rotate ? "rotate" : "manual";
  j["warn_participant_bounds"] = warn_participant_bounds;
  j["dispersion_max_categories"] = dispersion.max_consistent_categories;
  j["dispersion_dont_know_limit"] = dispersion.dont_know_limit.str();
  return j;
}

SessionConfig SessionConfig::from_json(const json& j, const SessionConfig& defaults) {
  SessionConfig c = defaults;
  if (j.is_null()) return c;
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "config must be an object");
  if (auto it = j.find("clarification_timebox_seconds"); it != j.end()) {
    if (!it->is_number_integer() || it->get<int>() <= 0)
      throw Error(ErrorCode::invalid_argument, "clarification_timebox_seconds must be a positive integer");
    c.clarification_timebox_seconds = it->get<int>();
  }
  if (auto it = j.find("presenter_policy"); it != j.end()) {
    const auto v = it->is_string() ? it->get<std::string>() : std::string();
    if (v == "rotate") c.presenter_policy = PresenterPolicy::rotate;
    else if (v == "manual") c.presenter_policy = PresenterPolicy::manual;
    else throw Error(ErrorCode::invalid_argument, "presenter_policy must be 'rotate' or 'manual'");
  }
  if (auto it = j.find("warn_participant_bounds"); it != j.end()) {
    if (!it->is_boolean()) throw Error(ErrorCode::invalid_argument, "warn_participant_bounds must be a boolean");
    c.warn_participant_bounds = it->get<bool>();
  }
  if (auto it = j.find("dispersion_max_categories"); it != j.end()) {
    if (!it->is_number_unsigned()) throw Error(ErrorCode::invalid_argument, "dispersion_max_categories must be a non-negative integer");
    c.dispersion.max_consistent_categories = it->get<std::uint32_t>();
  }
  if (auto it = j.find("dispersion_dont_know_limit"); it != j.end()) {
    const auto v = it->is_string() ? it->get<std::string>() : std::string();
    const auto slash = v.find('/');
    try {
      if (slash == std::string::npos) {
        c.dispersion.dont_know_limit = {static_cast<std::uint32_t>(std::stoul(v)), 1};
      } else {
        c.dispersion.dont_know_limit = {static_cast<std::uint32_t>(std::stoul(v.substr(0, slash))),
                                        static_cast<std::uint32_t>(std::stoul(v.substr(slash + 1)))};
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_argument, "dispersion_dont_know_limit must look like '1/3'");
    }
    if (c.dispersion.dont_know_limit.den == 0)
      throw Error(ErrorCode::invalid_argument, "dispersion_dont_know_limit denominator must be positive");
  }
  return c;
}

SessionConfig SessionConfig::from_json(const json& j) { return from_json(j, SessionConfig{}); }

ojson RoundStatusView::to_json() const {
  ojson j;
  j["round_id"] = round_id;
  j["kind"] = std::string(round_kind_name(kind));
  j["status"] = status == RoundStatus::open ? "open" : "revealed";
  j["cast_count"] = cast_count;
  j["expected"] = expected;
  if (!flags.empty()) {
    ojson f = ojson::object();
    for (const auto& [id, cast] : flags) f[id] = cast;
    j["has_cast"] = std::move(f);
  }
  if (distribution) j["distribution"] = distribution->to_json();
  return j;
}

// ---------------------------------------------------------------------------
// Creation

JournalEvent Session::make_created_event(const Catalog& catalog, const std::vector<Participant>& roster,
                                         const SessionConfig& config) {
  JournalEvent e;
  e.seq = 1;
  e.kind = "session_created";
  json roster_json = json::array();
  std::size_t practitioners = 0;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    const auto& p = roster[i];
    roster_json.push_back({{"participant_id", p.id.empty() ? "p" + std::to_string(i + 1) : p.id},
                           {"role", std::string(role_name(p.role))}});
    if (p.role == Role::practitioner) ++practitioners;
  }
  e.payload = {{"catalog", json::parse(serialize_catalog(catalog))},
               {"catalog_version", catalog.version},
               {"roster", std::move(roster_json)},
               {"practitioner_count", practitioners},
               {"config", json::parse(config.to_json().dump())}};
  return e;
}

Session Session::create(const JournalEvent& created) {
  if (created.kind != "session_created")
    throw Error(ErrorCode::invalid_argument, "no session-created command");
  if (created.seq != 1) throw Error(ErrorCode::parse, "session_created must have seq 1");
  const json& p = created.payload;
  if (!p.contains("catalog")) throw Error(ErrorCode::invalid_argument, "session_created: missing catalog");

  Session s;
  s.catalog_ = std::make_shared<const Catalog>(load_catalog(p["catalog"].dump()));
  if (s.catalog_->story_count() == 0) throw Error(ErrorCode::invalid_argument, "empty catalog");
  s.config_ = SessionConfig::from_json(p.value("config", json::object()));
  s.created_at_ = created.ts;

  if (!p.contains("roster") || !p["roster"].is_array())
    throw Error(ErrorCode::invalid_argument, "session_created: roster must be an array");
  std::set<std::string> seen;
  std::size_t assessors = 0;
  for (const auto& rj : p["roster"]) {
    if (!rj.is_object()) throw Error(ErrorCode::invalid_argument, "roster entries must be objects");
    Participant part;
    part.id = text_field(rj, "participant_id", true);
    auto role = parse_role(text_field(rj, "role", true));
    if (!role) throw Error(ErrorCode::invalid_argument, "roster: role must be 'assessor' or 'practitioner'");
    part.role = *role;
    if (blank(part.id) || !seen.insert(part.id).second)
      throw Error(ErrorCode::invalid_argument, "roster: participant ids must be non-empty and unique");
    if (part.role == Role::assessor) ++assessors;
    s.participants_.push_back(std::move(part));
  }
  if (assessors != 1)
    throw Error(ErrorCode::invalid_argument,
                "roster must contain exactly one assessor (found " + std::to_string(assessors) + ")");
  if (s.practitioner_count() == 0) throw Error(ErrorCode::invalid_argument, "roster has no practitioners");
  s.last_seq_ = 1;
  return s;
}

std::vector<std::string> Session::creation_warnings() const {
  std::vector<std::string> out;
  const auto n = practitioner_count();
  if (config_.warn_participant_bounds && (n < 2 || n > 9))
    out.push_back("practitioner count " + std::to_string(n) + " is outside the recommended range 2..9");
  return out;
}

// ---------------------------------------------------------------------------
// Queries

const Participant* Session::participant(std::string_view id) const {
  for (const auto& p : participants_)
    if (p.id == id) return &p;
  return nullptr;
}

std::vector<std::string> Session::active_practitioners() const {
  std::vector<std::string> out;
  for (const auto& p : participants_)
    if (p.role == Role::practitioner && p.active) out.push_back(p.id);
  return out;
}

std::size_t Session::practitioner_count() const {
  return static_cast<std::size_t>(std::count_if(participants_.begin(), participants_.end(),
                                                [](const Participant& p) { return p.role == Role::practitioner; }));
}

const ProcessArea* Session::current_area() const {
  if (cursor_.area >= catalog_->process_areas.size()) return nullptr;
  return &catalog_->process_areas[cursor_.area];
}

const StoryCard* Session::current_story() const {
  const ProcessArea* area = current_area();
  if (area == nullptr) return nullptr;
  return &area->goals[cursor_.goal].stories[cursor_.story];
}

const std::string& Session::current_story_id() const {
  const StoryCard* s = current_story();
  if (s == nullptr) throw Error(ErrorCode::internal, "no current story");
  return s->id;
}

std::optional<std::string> Session::floor_holder() const {
  if (phase_ != Phase::Explaining || !floor_ || floor_->exhausted()) return std::nullopt;
  return floor_->speakers[floor_->next];
}

std::string Session::rotation_starter() const {
  const auto order = active_practitioners();
  if (order.empty()) return {};
  return order[rounds_started_ % order.size()];
}

const RoundRecord* Session::round(const std::string& round_id) const {
  auto it = rounds_.find(round_id);
  return it == rounds_.end() ? nullptr : &it->second;
}

const RoundRecord* Session::open_round() const {
  for (const auto& [id, r] : rounds_)
    if (r.status == RoundStatus::open) return &r;
  return nullptr;
}

RoundStatusView Session::round_status(const std::string& round_id, Role viewer) const {
  const RoundRecord* r = round(round_id);
  if (r == nullptr) throw Error(ErrorCode::not_found, "unknown round '" + round_id + "'");
  RoundStatusView v;
  v.round_id = r->round_id;
  v.kind = r->kind;
  v.status = r->status;
  v.cast_count = r->cast_count;
  if (r->status == RoundStatus::revealed) {
    v.expected = r->distribution->total();
    v.distribution = r->distribution;
  } else {
    const auto active = active_practitioners();
    v.expected = static_cast<std::uint32_t>(active.size());
    if (viewer == Role::assessor)
      for (const auto& id : active) v.flags.emplace_back(id, r->cast.count(id) > 0);
  }
  return v;
}

const StoryWork* Session::work(const std::string& story_id) const {
  auto it = works_.find(story_id);
  return it == works_.end() ? nullptr : &it->second;
}

const AreaState& Session::area_state(const std::string& area_id) const {
  static const AreaState none;
  auto it = areas_.find(area_id);
  return it == areas_.end() ? none : it->second;
}

std::vector<VoteTableRow> Session::vote_table() const {
  std::vector<VoteTableRow> rows;
  for (const auto& area : catalog_->process_areas) {
    for (const auto& goal : area.goals) {
      for (const auto& story : goal.stories) {
        const StoryWork* w = work(story.id);
        if (w == nullptr) continue;
        const RoundRecord* def = round(BallotBox::make_round_id(story.id, RoundKind::definitive));
        if (def != nullptr && def->status == RoundStatus::revealed) {
          rows.push_back({area.id, area.name, story.id, story.model_ref, def->distribution});
        } else if (w->rating == PracticeRating::NotRated) {
          rows.push_back({area.id, area.name, story.id, story.model_ref, std::nullopt});
        }
      }
    }
  }
  return rows;
}

std::map<std::string, PracticeRating> Session::ratings() const {
  std::map<std::string, PracticeRating> out;
  for (const auto& [id, w] : works_)
    if (w.rating) out.emplace(id, *w.rating);
  return out;
}

ojson Session::snapshot(Role viewer, const std::string& viewer_id) const {
  const bool assessor = viewer == Role::assessor;
  ojson j;
  j["seq"] = last_seq_;
  j["phase"] = std::string(phase_name(phase_));
  if (const StoryCard* s = current_story(); s != nullptr && phase_ != Phase::Welcome) {
    const ProcessArea& a = *current_area();
    j["area"] = {{"id", a.id}, {"name", a.name}, {"intent", a.intent}};
    if (phase_ != Phase::AreaIntro) {
      j["story"] = {{"id", s->id},
                    {"model_ref", s->model_ref},
                    {"goal_id", a.goals[cursor_.goal].id},
                    {"text", render_story(*s)},
                    {"cmmi_text", s->cmmi_text}};
    }
  }
  ojson parts = ojson::array();
  for (const auto& p : participants_)
    parts.push_back({{"participant_id", p.id}, {"role", std::string(role_name(p.role))}, {"active", p.active}});
  j["participants"] = std::move(parts);
  if (phase_ == Phase::Clarification)
    j["clarification"] = {{"started_at", clarification_started_},
                          {"timebox_seconds", config_.clarification_timebox_seconds}};

  if (const StoryCard* s = current_story(); s != nullptr) {
    const RoundRecord* shown = open_round();
    if (shown == nullptr) {
      shown = round(BallotBox::make_round_id(s->id, RoundKind::definitive));
      if (shown == nullptr) shown = round(BallotBox::make_round_id(s->id, RoundKind::preliminary));
    }
    if (shown != nullptr) {
      j["round"] = round_status(shown->round_id, viewer).to_json();
      if (!assessor && shown->status == RoundStatus::open)
        j["round"]["you_have_cast"] = shown->cast.count(viewer_id) > 0;
    }
  }
  j["rounds_started"] = rounds_started_;
  if (phase_ == Phase::Explaining && floor_) {
    ojson f;
    f["policy"] = floor_->policy;
    f["starter"] = floor_->speakers.front();
    f["holder"] = floor_holder() ? ojson(*floor_holder()) : ojson(nullptr);
    f["position"] = floor_->next;
    f["speakers"] = floor_->speakers;
    j["floor"] = std::move(f);
  }
  if (const StoryCard* s = current_story(); s != nullptr) {
    if (const StoryWork* w = work(s->id)) {
      if (assessor || phase_ == Phase::FindingValidation)
        j["practice_table"] = w->table.to_json(w->rating);
      if (assessor) {
        j["practice_table_missing"] = w->table.missing_fields();
        ojson notes = ojson::array();
        for (const auto& n : w->explanations) notes.push_back({{"position", n.position}, {"note", n.note}});
        j["explanations"] = std::move(notes);
      }
      if (w->finding) {
        ojson f;
        f["rating"] = std::string(rating_code(w->rating.value_or(w->finding->rating)));
        f["rule"] = static_cast<int>(w->finding->rule);
        f["rationale"] = w->finding->rationale;
        f["misinformation_note"] = w->finding->misinformation_note;
        f["status"] = std::string(validation_status_name(w->finding->status));
        j["finding"] = std::move(f);
      }
    }
  }
  ojson ratings_json = ojson::object();
  for (const auto& area : catalog_->process_areas)
    for (const auto& goal : area.goals)
      for (const auto& story : goal.stories)
        if (const StoryWork* w = work(story.id); w != nullptr && w->rating)
          ratings_json[story.id] = std::string(rating_code(*w->rating));
  j["ratings"] = std::move(ratings_json);
  ojson lot = ojson::array();
  for (const auto& item : parking_) {
    ojson it;
    it["item_id"] = item.item_id;
    it["text"] = item.text;
    it["tag"] = item.tag;
    it["status"] = std::string(parking_status_name(item.status));
    it["owner"] = item.owner;
    it["raised_story"] = item.raised_story;
    if (is_terminal(item.status)) it["consensus_reached"] = item.consensus_reached;
    if (assessor) it["evidence_note"] = item.evidence_note;
    lot.push_back(std::move(it));
  }
  j["parking_lot"] = std::move(lot);
  if (assessor) j["warnings"] = warnings_;
  return j;
}

// ---------------------------------------------------------------------------
// Event application

void Session::apply(const JournalEvent& e) {
  if (e.seq != last_seq_ + 1)
    throw Error(ErrorCode::parse, "sequence gap: expected seq " + std::to_string(last_seq_ + 1) + ", got " +
                                      std::to_string(e.seq));
  if (!e.payload.is_object()) throw Error(ErrorCode::invalid_argument, "payload must be an object");
  const std::string& k = e.kind;
  if (k == "advance") on_advance(e);
  else if (k == "vote_cast") on_vote_cast(e);
  else if (k == "select_presenter") on_select_presenter(e);
  else if (k == "explanation") on_explanation(e);
  else if (k == "practice_table") on_practice_table(e);
  else if (k == "finding") on_finding(e);
  else if (k == "resolve_judgment") on_resolve_judgment(e);
  else if (k == "skip_area") on_skip_area(e);
  else if (k == "parking_add") on_parking_add(e);
  else if (k == "parking_assign") on_parking_assign(e);
  else if (k == "parking_close") on_parking_close(e);
  else if (k == "flag_strength") on_flag_strength(e);
  else if (k == "set_participant_active") on_set_active(e);
  else if (k == "warning") warnings_.push_back(text_field(e.payload, "message", true));
  else if (k == "session_created") throw Error(ErrorCode::invalid_argument, "session already created");
  else throw Error(ErrorCode::invalid_argument, "unknown event kind '" + k + "'");
  last_seq_ = e.seq;
}

void Session::require_phase(std::string_view what, std::initializer_list<Phase> allowed) const {
  if (std::find(allowed.begin(), allowed.end(), phase_) != allowed.end()) return;
  std::string names;
  for (Phase p : allowed) names += (names.empty() ? "" : "|") + std::string(phase_name(p));
  fail_guard("phase", std::string(what) + " requires phase " + names + " (current: " +
                          std::string(phase_name(phase_)) + ")");
}

StoryWork& Session::current_work() { return works_[current_story_id()]; }

void Session::move_to_next_area() {
  floor_.reset();
  ++cursor_.area;
  cursor_.goal = 0;
  cursor_.story = 0;
  phase_ = cursor_.area < catalog_->process_areas.size() ? Phase::AreaIntro : Phase::ParkingReview;
}

void Session::move_to_next_story() {
  floor_.reset();
  const ProcessArea& area = catalog_->process_areas[cursor_.area];
  if (cursor_.story + 1 < area.goals[cursor_.goal].stories.size()) {
    ++cursor_.story;
    phase_ = Phase::StoryPresented;
  } else if (cursor_.goal + 1 < area.goals.size()) {
    ++cursor_.goal;
    cursor_.story = 0;
    phase_ = Phase::StoryPresented;
  } else {
    move_to_next_area();
  }
}

PreliminaryFinding Session::draft_finding(const StoryWork& w) const {
  PreliminaryFinding f;
  f.rating = w.definitive->rating;
  f.rule = w.definitive->rule;
  f.rationale = std::string(rule_reasoning(f.rule));
  if (w.preliminary && w.preliminary->rating != w.definitive->rating) {
    f.misinformation_note = "Preliminary vote read " + std::string(rating_code(w.preliminary->rating)) +
                            ", definitive vote read " + std::string(rating_code(w.definitive->rating)) +
                            ": check for misinformation or unequal information as a process weakness.";
  }
  return f;
}

void Session::on_advance(const JournalEvent& e) {
  const std::string cmd = text_field(e.payload, "command", true);
  auto expect = [&](Phase from) {
    if (phase_ != from) fail_transition(cmd, phase_);
  };

  if (cmd == "begin") {
    expect(Phase::Welcome);
    phase_ = Phase::AreaIntro;
  } else if (cmd == "present_story") {
    expect(Phase::AreaIntro);
    works_[current_story_id()];
    phase_ = Phase::StoryPresented;
  } else if (cmd == "open_clarification") {
    expect(Phase::StoryPresented);
    works_[current_story_id()];
    clarification_started_ = e.ts;
    phase_ = Phase::Clarification;
  } else if (cmd == "open_preliminary" || cmd == "open_definitive") {
    const bool prelim = cmd == "open_preliminary";
    expect(prelim ? Phase::Clarification : Phase::FollowOn);
    const std::string& story = current_story_id();
    const RoundKind kind = prelim ? RoundKind::preliminary : RoundKind::definitive;
    const std::string rid = BallotBox::make_round_id(story, kind);
    if (rounds_.count(rid)) throw Error(ErrorCode::conflict, "round '" + rid + "' already exists");
    bool override_incomplete = false;
    if (!prelim) {
      override_incomplete = bool_field(e.payload, "override_incomplete", false);
      const auto missing = works_[story].table.missing_fields();
      if (!missing.empty() && !override_incomplete) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        fail_guard("practice_table_complete", "Practice Table incomplete (missing " + list +
                                                  "); set override_incomplete to proceed");
      }
    }
    RoundRecord r;
    r.round_id = rid;
    r.story_id = story;
    r.kind = kind;
    rounds_.emplace(rid, std::move(r));
    if (!prelim) works_[story].table_override = override_incomplete && !works_[story].table.complete();
    phase_ = prelim ? Phase::PreliminaryVoting : Phase::DefinitiveVoting;
  } else if (cmd == "reveal") {
    if (phase_ != Phase::PreliminaryVoting && phase_ != Phase::DefinitiveVoting) fail_transition(cmd, phase_);
    const RoundRecord* open = open_round();
    if (open == nullptr) throw Error(ErrorCode::internal, "voting phase without an open round");
    const auto expected = active_practitioners().size();
    if (open->cast_count < expected) {
      const auto missing = expected - open->cast_count;
      fail_guard("all_cast", std::to_string(missing) + (missing == 1 ? " vote" : " votes") + " outstanding");
    }
    if (auto rid = text_field(e.payload, "round_id", false); !rid.empty() && rid != open->round_id)
      throw Error(ErrorCode::invalid_argument, "reveal names round '" + rid + "' but '" + open->round_id + "' is open");
    if (!e.payload.contains("distribution"))
      throw Error(ErrorCode::invalid_argument, "reveal event carries no distribution");
    const VoteDistribution d = VoteDistribution::from_json(e.payload["distribution"]);
    if (d.total() != open->cast_count)
      fail_guard("conservation", "distribution total " + std::to_string(d.total()) + " differs from " +
                                     std::to_string(open->cast_count) + " cast ballots");
    const Classification c = classify(d);
    RoundRecord& r = rounds_[open->round_id];
    r.status = RoundStatus::revealed;
    r.distribution = d;
    r.cast.clear();
    StoryWork& w = works_[r.story_id];
    if (r.kind == RoundKind::preliminary) {
      w.preliminary = c;
      phase_ = Phase::PreliminaryRevealed;
    } else {
      w.definitive = c;
      w.rating = c.rating;
      phase_ = Phase::DefinitiveRevealed;
    }
  } else if (cmd == "end_explanations") {
    expect(Phase::Explaining);
    if (!floor_->exhausted()) {
      const auto left = floor_->speakers.size() - floor_->next;
      fail_guard("all_spoke", std::to_string(left) + " practitioner(s) have not held the floor yet");
    }
    phase_ = Phase::FollowOn;
  } else if (cmd == "early_exit") {
    expect(Phase::Explaining);
    if (floor_->next == 0) fail_guard("early_exit", "no explanation has been given yet");
    floor_->early_exit = true;
    current_work().early_exit = true;
    phase_ = Phase::FollowOn;
  } else if (cmd == "record_votes") {
    expect(Phase::DefinitiveRevealed);
    phase_ = Phase::VoteRecorded;
  } else if (cmd == "validate_finding") {
    expect(Phase::VoteRecorded);
    StoryWork& w = current_work();
    w.finding = draft_finding(w);
    phase_ = Phase::FindingValidation;
  } else if (cmd == "continue") {
    expect(Phase::ContinueDecision);
    move_to_next_story();
  } else if (cmd == "begin_closure") {
    expect(Phase::ParkingReview);
    phase_ = Phase::ParkingClosure;
  } else if (cmd == "close") {
    expect(Phase::ParkingClosure);
    std::size_t pending = 0;
    for (const auto& item : parking_)
      if (!is_terminal(item.status)) ++pending;
    if (pending > 0) fail_guard("parking_closed", std::to_string(pending) + " parking item(s) still open or assigned");
    for (const auto& [id, w] : works_)
      if (w.rating == PracticeRating::NeedsJudgment)
        fail_guard("judgments_resolved", "story '" + id + "' still needs an assessor judgment");
    phase_ = Phase::Closed;
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown advance command '" + cmd + "'");
  }
}

void Session::on_vote_cast(const JournalEvent& e) {
  require_phase("cast_vote", {Phase::PreliminaryVoting, Phase::DefinitiveVoting});
  const std::string who = text_field(e.payload, "participant_id", true);
  const Participant* p = participant(who);
  if (p == nullptr || p->role != Role::practitioner || !p->active)
    throw Error(ErrorCode::unauthorized, "'" + who + "' is not an active practitioner");
  const RoundRecord* open = open_round();
  if (open == nullptr) throw Error(ErrorCode::internal, "voting phase without an open round");
  if (auto rid = text_field(e.payload, "round_id", false); !rid.empty() && rid != open->round_id)
    throw Error(ErrorCode::invalid_argument, "vote names round '" + rid + "' but '" + open->round_id + "' is open");
  if (open->cast.count(who)) fail_guard("one_ballot", "'" + who + "' has already cast in this round");
  RoundRecord& r = rounds_[open->round_id];
  r.cast.insert(who);
  ++r.cast_count;
}

void Session::on_select_presenter(const JournalEvent& e) {
  if (phase_ != Phase::PreliminaryRevealed) fail_transition("select_presenter", phase_);
  const auto order = active_practitioners();
  std::string policy = text_field(e.payload, "policy", false);
  if (policy.empty()) {
    if (config_.presenter_policy == PresenterPolicy::manual)
      fail_guard("manual_presenter", "the session uses manual presenter selection; name a participant");
    policy = "rotate";
  }
  auto check_practitioner = [&](const std::string& id) {
    const Participant* p = participant(id);
    if (p == nullptr || p->role != Role::practitioner)
      throw Error(ErrorCode::invalid_argument, "presenter override names '" + id + "', which is not a practitioner");
    if (!p->active) fail_guard("presenter_active", "'" + id + "' is not an active practitioner");
  };
  std::string starter;
  const std::string recorded = text_field(e.payload, "starter", false);
  if (policy == "rotate") {
    starter = rotation_starter();
    if (!recorded.empty() && recorded != starter)
      fail_guard("rotation", "recorded starter '" + recorded + "' differs from rotation starter '" + starter + "'");
  } else if (policy == "participant") {
    starter = text_field(e.payload, "participant", true);
    check_practitioner(starter);
  } else if (policy == "dissenting") {
    if (recorded.empty())
      throw Error(ErrorCode::invalid_argument, "dissenting presenter selection must record its starter");
    starter = recorded;
    check_practitioner(starter);
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown presenter policy '" + policy + "'");
  }
  const auto pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), starter) - order.begin());
  Floor f;
  f.story_id = current_story_id();
  f.policy = policy;
  for (std::size_t i = 0; i < order.size(); ++i) f.speakers.push_back(order[(pos + i) % order.size()]);
  floor_ = std::move(f);
  ++rounds_started_;
  phase_ = Phase::Explaining;
}

void Session::on_explanation(const JournalEvent& e) {
  require_phase("explanation", {Phase::Explaining});
  if (floor_->exhausted()) fail_guard("all_spoke", "every practitioner has already held the floor");
  const std::string note = text_field(e.payload, "note", false);
  const std::string& holder = floor_->speakers[floor_->next];
  if (auto speaker = text_field(e.payload, "speaker", false); !speaker.empty() && speaker != holder)
    fail_guard("floor_holder", "'" + speaker + "' is out of turn; the floor belongs to '" + holder + "'");
  if (auto it = e.payload.find("position"); it != e.payload.end() && !it->is_null()) {
    if (!it->is_number_unsigned() || it->get<std::size_t>() != floor_->next)
      fail_guard("floor_holder", "explanation position does not match the floor");
  }
  current_work().explanations.push_back({floor_->next, note});
  ++floor_->next;
}

void Session::on_practice_table(const JournalEvent& e) {
  require_phase("practice_table",
                {Phase::PreliminaryRevealed, Phase::Explaining, Phase::FollowOn, Phase::DefinitiveVoting,
                 Phase::DefinitiveRevealed, Phase::VoteRecorded, Phase::FindingValidation});
  const std::string& current = current_story_id();
  if (auto sid = text_field(e.payload, "story_id", false); !sid.empty() && sid != current)
    fail_guard("current_story", "Practice Table edits apply to the current story '" + current + "'");
  if (!e.payload.contains("fields")) throw Error(ErrorCode::invalid_argument, "practice_table: missing 'fields'");
  PracticeTable updated = works_[current].table;
  updated.merge(e.payload["fields"]);
  works_[current].table = std::move(updated);
}

void Session::on_finding(const JournalEvent& e) {
  if (phase_ != Phase::FindingValidation) fail_transition("finding", phase_);
  const std::string action = text_field(e.payload, "action", true);
  StoryWork& w = current_work();
  if (action == "confirm" || action == "correct") {
    if (w.rating == PracticeRating::NeedsJudgment)
      fail_guard("judgment_pending", "resolve the assessor judgment before confirming the finding");
    PreliminaryFinding f = *w.finding;
    PracticeTable table = w.table;
    if (action == "correct") {
      if (auto it = e.payload.find("rationale"); it != e.payload.end()) f.rationale = text_field(e.payload, "rationale", true);
      if (auto it = e.payload.find("misinformation_note"); it != e.payload.end())
        f.misinformation_note = text_field(e.payload, "misinformation_note", true);
      if (auto it = e.payload.find("table"); it != e.payload.end()) table.merge(*it);
      f.status = ValidationStatus::corrected;
    } else {
      f.status = ValidationStatus::confirmed;
    }
    w.finding = std::move(f);
    w.table = std::move(table);
  } else if (action == "dispute") {
    const std::string text = text_field(e.payload, "text", true);
    if (blank(text)) throw Error(ErrorCode::invalid_argument, "dispute text must be non-empty");
    ParkingItem item;
    item.item_id = next_parking_id();
    item.text = text;
    item.tag = "dispute";
    item.raised_phase = phase_;
    item.raised_story = current_story_id();
    w.finding->status = ValidationStatus::disputed;
    w.finding->parking_item = item.item_id;
    parking_.push_back(std::move(item));
  } else {
    throw Error(ErrorCode::invalid_argument, "finding action must be confirm, correct or dispute");
  }
  phase_ = Phase::ContinueDecision;
}

void Session::on_resolve_judgment(const JournalEvent& e) {
  if (phase_ == Phase::Closed) fail_guard("phase", "the session is closed");
  const std::string sid = text_field(e.payload, "story_id", true);
  auto rating = parse_rating(text_field(e.payload, "rating", true));
  if (!rating || !is_characterization(*rating))
    throw Error(ErrorCode::invalid_argument, "judgment rating must be FI, LI, PI or NI");
  const std::string rationale = text_field(e.payload, "rationale", false);
  if (blank(rationale)) throw Error(ErrorCode::invalid_argument, "judgment rationale must be non-empty");
  auto it = works_.find(sid);
  if (it == works_.end() || it->second.rating != PracticeRating::NeedsJudgment)
    fail_guard("needs_judgment", "story '" + sid + "' is not awaiting an assessor judgment");
  it->second.rating = *rating;
  it->second.judgment_rationale = rationale;
  if (it->second.finding) {
    it->second.finding->rating = *rating;
    it->second.finding->rationale = rationale;
  }
}

void Session::on_skip_area(const JournalEvent& e) {
  if (phase_ != Phase::ContinueDecision) fail_transition("skip_area", phase_);
  const std::string reason = text_field(e.payload, "reason", true);
  const std::string disp = text_field(e.payload, "disposition", true);
  AreaDisposition d;
  if (disp == "not_rated") d = AreaDisposition::not_rated;
  else if (disp == "unsatisfied") d = AreaDisposition::unsatisfied;
  else throw Error(ErrorCode::invalid_argument, "disposition must be 'not_rated' or 'unsatisfied'");
  const ProcessArea& area = *current_area();
  for (const auto& goal : area.goals)
    for (const auto& story : goal.stories) {
      StoryWork& w = works_[story.id];
      if (!w.rating) w.rating = PracticeRating::NotRated;
    }
  areas_[area.id] = AreaState{d, reason};
  move_to_next_area();
}

std::string Session::next_parking_id() const { return "PL-" + std::to_string(parking_.size() + 1); }

void Session::on_parking_add(const JournalEvent& e) {
  if (phase_ == Phase::Closed) fail_guard("phase", "the session is closed");
  const std::string text = text_field(e.payload, "text", true);
  if (blank(text)) throw Error(ErrorCode::invalid_argument, "parking item text must be non-empty");
  const std::string tag = text_field(e.payload, "tag", false, "general");
  if (tag != "general" && tag != "go_deeper" && tag != "dispute")
    throw Error(ErrorCode::invalid_argument, "parking tag must be general, go_deeper or dispute");
  ParkingItem item;
  item.item_id = next_parking_id();
  item.text = text;
  item.tag = tag;
  item.raised_phase = phase_;
  if (phase_ != Phase::Welcome && phase_ != Phase::AreaIntro && phase_ != Phase::ParkingReview &&
      phase_ != Phase::ParkingClosure)
    item.raised_story = current_story_id();
  parking_.push_back(std::move(item));
}

namespace {

ParkingItem& find_item(std::vector<ParkingItem>& lot, const std::string& id) {
  for (auto& item : lot)
    if (item.item_id == id) return item;
  throw Error(ErrorCode::not_found, "unknown parking item '" + id + "'");
}

}  // namespace

void Session::on_parking_assign(const JournalEvent& e) {
  require_phase("parking_assign", {Phase::ParkingReview});
  ParkingItem& item = find_item(parking_, text_field(e.payload, "item_id", true));
  if (is_terminal(item.status)) fail_guard("parking_open", "parking item '" + item.item_id + "' is already closed");
  const std::string owner = text_field(e.payload, "owner", true);
  const Participant* p = participant(owner);
  if (p == nullptr || p->role != Role::practitioner)
    throw Error(ErrorCode::invalid_argument, "parking owner '" + owner + "' is not a practitioner");
  item.owner = owner;
  item.status = ParkingStatus::assigned;
}

void Session::on_parking_close(const JournalEvent& e) {
  const std::string status = text_field(e.payload, "status", true);
  ParkingStatus s;
  if (status == "resolved") s = ParkingStatus::resolved;
  else if (status == "agreed_to_disagree") s = ParkingStatus::agreed_to_disagree;
  else if (status == "assessor_decided") s = ParkingStatus::assessor_decided;
  else throw Error(ErrorCode::invalid_argument, "closing status must be resolved, agreed_to_disagree or assessor_decided");
  if (s == ParkingStatus::resolved) require_phase("parking_close", {Phase::ParkingReview, Phase::ParkingClosure});
  else require_phase("parking_close", {Phase::ParkingClosure});
  ParkingItem& item = find_item(parking_, text_field(e.payload, "item_id", true));
  if (is_terminal(item.status)) fail_guard("parking_open", "parking item '" + item.item_id + "' is already closed");
  item.evidence_note = text_field(e.payload, "evidence_note", false);
  item.status = s;
  item.consensus_reached = s == ParkingStatus::resolved;
}

void Session::on_flag_strength(const JournalEvent& e) {
  if (phase_ == Phase::Closed) fail_guard("phase", "the session is closed");
  const std::string sid = text_field(e.payload, "story_id", true);
  const std::string note = text_field(e.payload, "note", true);
  if (blank(note)) throw Error(ErrorCode::invalid_argument, "strength note must be non-empty");
  auto it = works_.find(sid);
  if (it == works_.end() || it->second.rating != PracticeRating::FI)
    fail_guard("fully_implemented", "only a story rated FI can be flagged as a strength");
  it->second.strength_note = note;
}

void Session::on_set_active(const JournalEvent& e) {
  require_phase("set_participant_active", {Phase::Welcome, Phase::AreaIntro, Phase::StoryPresented,
                                           Phase::Clarification, Phase::ContinueDecision, Phase::ParkingReview,
                                           Phase::ParkingClosure});
  const std::string id = text_field(e.payload, "participant_id", true);
  if (!e.payload.contains("active")) throw Error(ErrorCode::invalid_argument, "missing field 'active'");
  const bool active = bool_field(e.payload, "active", true);
  auto it = std::find_if(participants_.begin(), participants_.end(), [&](const Participant& p) { return p.id == id; });
  if (it == participants_.end() || it->role != Role::practitioner)
    throw Error(ErrorCode::invalid_argument, "'" + id + "' is not a practitioner");
  if (!active && it->active && active_practitioners().size() == 1)
    fail_guard("participants", "at least one practitioner must stay active");
  it->active = active;
}

// ---------------------------------------------------------------------------

Session replay_journal(const Journal& journal) {
  if (journal.empty()) throw Error(ErrorCode::invalid_argument, "no session-created command");
  Session s = [&] {
    try {
      return Session::create(journal.front());
    } catch (const Error& err) {
      throw Error(err.code(), "event seq " + std::to_string(journal.front().seq) + " (" + journal.front().kind +
                                  "): " + err.what());
    }
  }();
  for (std::size_t i = 1; i < journal.size(); ++i) {
    try {
      s.apply(journal[i]);
    } catch (const Error& err) {
      throw Error(err.code(),
                  "event seq " + std::to_string(journal[i].seq) + " (" + journal[i].kind + "): " + err.what());
    }
  }
  return s;
}

const std::map<std::string, std::set<std::string>>& practitioner_fields() {
  static const std::map<std::string, std::set<std::string>> fields = {
      {"session_created", {"catalog", "catalog_version", "roster", "practitioner_count", "config"}},
      {"warning", {"code"}},
      {"advance", {"command", "round_id", "distribution", "override_incomplete"}},
      {"vote_cast", {"round_id", "cast_count"}},
      {"select_presenter", {"policy", "starter"}},
      {"explanation", {"position"}},
      {"practice_table", {"story_id"}},
      {"finding", {"action"}},
      {"resolve_judgment", {"story_id", "rating"}},
      {"skip_area", {"disposition"}},
      {"parking_add", {"text", "tag"}},
      {"parking_assign", {"item_id"}},
      {"parking_close", {"item_id", "status"}},
      {"flag_strength", {"story_id"}},
      {"set_participant_active", {"participant_id", "active"}},
  };
  return fields;
}

JournalEvent project_for_practitioner(const JournalEvent& event) {
  JournalEvent out = event;
  out.payload = json::object();
  out.idempotency_key.clear();
  const auto& table = practitioner_fields();
  auto it = table.find(event.kind);
  if (it == table.end()) return out;
  for (const auto& key : it->second)
    if (auto f = event.payload.find(key); f != event.payload.end()) out.payload[key] = *f;
  return out;
}

}  // namespace nga
