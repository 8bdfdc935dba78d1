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

#include "live.hpp"

#include <algorithm>
#include <set>

#include "error.hpp"

namespace nga {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace fs = std::filesystem;

namespace {

constexpr const char* kJournalFile = "journal.jsonl";
constexpr const char* kBallotFile = "ballots.json";

// Fields a client may supply per command kind. Anything else is dropped
// before the event reaches the journal.
const std::map<std::string, std::set<std::string>>& client_fields() {
  static const std::map<std::string, std::set<std::string>> fields = {
      {"advance", {"command", "override_incomplete"}},
      {"select_presenter", {"policy", "participant"}},
      {"explanation", {"note"}},
      {"practice_table", {"story_id", "fields"}},
      {"finding", {"action", "rationale", "misinformation_note", "table", "text"}},
      {"resolve_judgment", {"story_id", "rating", "rationale"}},
      {"skip_area", {"reason", "disposition"}},
      {"parking_add", {"text", "tag"}},
      {"parking_assign", {"item_id", "owner"}},
      {"parking_close", {"item_id", "status", "evidence_note"}},
      {"flag_strength", {"story_id", "note"}},
      {"set_participant_active", {"participant_id", "active"}},
  };
  return fields;
}

json sanitize(const std::string& kind, const json& payload) {
  json out = json::object();
  auto it = client_fields().find(kind);
  if (it == client_fields().end()) return out;
  for (const auto& key : it->second)
    if (auto f = payload.find(key); f != payload.end()) out[key] = *f;
  return out;
}

// Result fields derivable from an applied event, so that responses rebuilt
// during recovery match the originals.
ojson derive_result(const JournalEvent& e, const Session& after) {
  ojson r = ojson::object();
  if (e.kind == "advance" && e.payload.value("command", "") == "reveal") {
    r["round_id"] = e.payload.value("round_id", "");
    r["distribution"] = VoteDistribution::from_json(e.payload.at("distribution")).to_json();
  } else if (e.kind == "select_presenter") {
    if (const Floor* f = after.floor()) r["starter"] = f->speakers.front();
  } else if (e.kind == "parking_add" || (e.kind == "finding" && e.payload.value("action", "") == "dispute")) {
    r["item_id"] = after.parking_lot().back().item_id;
  } else if (e.kind == "vote_cast") {
    r["cast_count"] = e.payload.value("cast_count", 0);
  } else if (e.kind == "explanation") {
    r["position"] = e.payload.value("position", 0);
  }
  return r;
}

[[noreturn]] void fail_phase(std::string_view what, Phase current) {
  throw Error(ErrorCode::guard, "guard 'phase' failed: " + std::string(what) +
                                    " requires phase PreliminaryVoting|DefinitiveVoting (current: " +
                                    std::string(phase_name(current)) + ")");
}

}  // namespace

bool command_allowed(Role role, const std::string& kind) {
  if (kind == "cast_vote") return role == Role::practitioner;
  if (role == Role::assessor) return true;
  return kind == "explanation" || kind == "parking_add";
}

LiveSession::LiveSession(Session session, Options options)
    : session_(std::move(session)), options_(std::move(options)) {
  if (!options_.clock) options_.clock = utc_now;
}

std::unique_ptr<LiveSession> LiveSession::create(const Catalog& catalog, const std::vector<Participant>& roster,
                                                 const SessionConfig& config, Options options) {
  JournalEvent created = Session::make_created_event(catalog, roster, config);
  created.ts = options.clock ? options.clock() : utc_now();
  Session s = Session::create(created);
  std::unique_ptr<LiveSession> live(new LiveSession(std::move(s), std::move(options)));
  if (live->options_.storage) {
    std::error_code ec;
    fs::create_directories(*live->options_.storage, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create '" + live->options_.storage->string() + "': " + ec.message());
    if (fs::exists(*live->options_.storage / kJournalFile))
      throw Error(ErrorCode::conflict, "a journal already exists in '" + live->options_.storage->string() + "'");
    live->writer_ = std::make_unique<JournalWriter>(*live->options_.storage / kJournalFile);
    live->persist_box();
  }
  live->commit({created});
  for (const auto& w : live->session_.creation_warnings()) {
    JournalEvent e = live->stamp("warning", {{"code", "participant_bounds"}, {"message", w}}, "");
    live->session_.apply(e);
    live->commit({e});
  }
  return live;
}

std::unique_ptr<LiveSession> LiveSession::recover(const fs::path& dir, Options options) {
  const Journal journal = read_journal_file(dir / kJournalFile);
  if (journal.empty()) throw Error(ErrorCode::parse, "journal in '" + dir.string() + "' is empty");
  Session s = Session::create(journal.front());
  options.storage = dir;
  std::unique_ptr<LiveSession> live(new LiveSession(std::move(s), std::move(options)));
  live->journal_.push_back(journal.front());
  for (std::size_t i = 1; i < journal.size(); ++i) {
    const JournalEvent& e = journal[i];
    try {
      live->session_.apply(e);
    } catch (const Error& err) {
      throw Error(ErrorCode::parse, "corrupt journal at seq " + std::to_string(e.seq) + ": " + err.what());
    }
    live->journal_.push_back(e);
    if (!e.idempotency_key.empty())
      live->responses_[e.idempotency_key] = response_for({e}, live->session_, derive_result(e, live->session_));
  }
  if (fs::exists(dir / kBallotFile)) live->box_ = BallotBox::from_json(json::parse(read_file(dir / kBallotFile)));
  for (const auto& area : live->session_.catalog().process_areas)
    for (const auto& goal : area.goals)
      for (const auto& story : goal.stories)
        for (RoundKind kind : {RoundKind::preliminary, RoundKind::definitive})
          if (const RoundRecord* r = live->session_.round(BallotBox::make_round_id(story.id, kind));
              r != nullptr && r->status == RoundStatus::open)
            live->box_.ensure_round(story.id, kind);
  live->writer_ = std::make_unique<JournalWriter>(dir / kJournalFile);
  return live;
}

JournalEvent LiveSession::stamp(std::string kind, json payload, const std::string& key) {
  JournalEvent e;
  e.seq = session_.last_seq() + 1;
  e.ts = options_.clock();
  e.kind = std::move(kind);
  e.payload = std::move(payload);
  e.idempotency_key = key;
  return e;
}

void LiveSession::commit(const std::vector<JournalEvent>& events) {
  for (const auto& e : events) {
    if (writer_) writer_->append(e);
    journal_.push_back(e);
  }
}

void LiveSession::persist_box() {
  if (!options_.storage) return;
  write_file_atomic(*options_.storage / kBallotFile, box_.to_json().dump(2) + "\n");
}

ojson LiveSession::response_for(const std::vector<JournalEvent>& events, const Session& after, ojson result) {
  ojson r;
  r["ok"] = true;
  r["seq"] = events.empty() ? ojson(nullptr) : ojson(events.back().seq);
  r["phase"] = std::string(phase_name(after.phase()));
  for (auto& [k, v] : result.items()) r[k] = v;
  return r;
}

ojson LiveSession::execute(const std::string& actor_id, const json& command, const std::string& idempotency_key) {
  if (!idempotency_key.empty()) {
    if (auto it = responses_.find(idempotency_key); it != responses_.end()) return it->second;
  }
  const Participant* actor = session_.participant(actor_id);
  if (actor == nullptr) throw Error(ErrorCode::unauthorized, "unknown participant '" + actor_id + "'");
  if (!command.is_object() || !command.contains("kind") || !command["kind"].is_string())
    throw Error(ErrorCode::invalid_argument, "command must be an object with a string 'kind'");
  const std::string kind = command["kind"].get<std::string>();
  json payload = command.value("payload", json::object());
  if (payload.is_null()) payload = json::object();
  if (!payload.is_object()) throw Error(ErrorCode::invalid_argument, "command payload must be an object");
  if (!command_allowed(actor->role, kind))
    throw Error(ErrorCode::unauthorized, "role " + std::string(role_name(actor->role)) + " may not issue '" + kind + "'");

  ojson response;
  if (kind == "cast_vote") {
    response = cast_vote(*actor, payload, idempotency_key);
  } else {
    ojson result = ojson::object();
    const auto events = decide(*actor, kind, payload, result, idempotency_key);
    response = response_for(events, session_, std::move(result));
  }
  if (!idempotency_key.empty()) responses_[idempotency_key] = response;
  return response;
}

std::vector<JournalEvent> LiveSession::decide(const Participant& actor, const std::string& kind, json payload,
                                              ojson& result, const std::string& key) {
  if (!client_fields().count(kind)) throw Error(ErrorCode::invalid_argument, "unknown command kind '" + kind + "'");
  json clean = sanitize(kind, payload);

  if (kind == "advance") {
    const std::string cmd = clean.value("command", "");
    const Phase phase = session_.phase();
    if (cmd == "reveal" && (phase == Phase::PreliminaryRevealed || phase == Phase::DefinitiveRevealed)) {
      // Repeated reveal: same distribution, nothing new journaled.
      const StoryCard* story = session_.current_story();
      const RoundKind k = phase == Phase::PreliminaryRevealed ? RoundKind::preliminary : RoundKind::definitive;
      const RoundRecord* r = session_.round(BallotBox::make_round_id(story->id, k));
      result["round_id"] = r->round_id;
      result["distribution"] = r->distribution->to_json();
      return {};
    }
    if (cmd == "reveal" && (phase == Phase::PreliminaryVoting || phase == Phase::DefinitiveVoting)) {
      const RoundRecord* open = session_.open_round();
      const std::string round_id = open->round_id;
      const RoundKind rkind = open->kind;
      clean["round_id"] = round_id;
      clean["distribution"] = json::parse(box_.tally(round_id).to_json().dump());
      JournalEvent e = stamp(kind, clean, key);
      session_.apply(e);
      if (rkind == RoundKind::preliminary) {
        dissent_cards_.clear();
        if (holder_tokens_.size() == box_.ballot_count(round_id)) {
          for (const auto& [who, token] : holder_tokens_)
            if (auto card = box_.ballot(round_id, token)) dissent_cards_[who] = *card;
        }
      }
      box_.reveal(round_id, box_.ballot_count(round_id));
      holder_tokens_.clear();
      persist_box();
      commit({e});
      result = derive_result(e, session_);
      return {e};
    }
    JournalEvent e = stamp(kind, clean, key);
    session_.apply(e);
    if (cmd == "open_preliminary" || cmd == "open_definitive") {
      box_.ensure_round(session_.current_story()->id,
                        cmd == "open_preliminary" ? RoundKind::preliminary : RoundKind::definitive);
      persist_box();
    }
    commit({e});
    result = derive_result(e, session_);
    return {e};
  }

  if (kind == "select_presenter") {
    const std::string policy = clean.value("policy", "");
    if (policy == "dissenting" && session_.phase() == Phase::PreliminaryRevealed) {
      if (dissent_cards_.empty())
        throw Error(ErrorCode::guard,
                    "guard 'dissent_known' failed: preliminary ballots are no longer linked to participants");
      std::map<VoteCard, std::uint32_t> counts;
      for (const auto& [who, card] : dissent_cards_) ++counts[card];
      if (counts.size() < 2)
        throw Error(ErrorCode::guard, "guard 'dissent_exists' failed: the preliminary vote was unanimous");
      std::uint32_t fewest = UINT32_MAX;
      for (const auto& [card, n] : counts) fewest = std::min(fewest, n);
      const auto order = session_.active_practitioners();
      const std::string first = session_.rotation_starter();
      const auto start = static_cast<std::size_t>(std::find(order.begin(), order.end(), first) - order.begin());
      for (std::size_t i = 0; i < order.size(); ++i) {
        const std::string& who = order[(start + i) % order.size()];
        auto it = dissent_cards_.find(who);
        if (it != dissent_cards_.end() && counts[it->second] == fewest) {
          clean["starter"] = who;
          break;
        }
      }
    } else if (policy.empty() || policy == "rotate") {
      if (session_.phase() == Phase::PreliminaryRevealed && !session_.active_practitioners().empty())
        clean["starter"] = session_.rotation_starter();
    }
    JournalEvent e = stamp(kind, clean, key);
    session_.apply(e);
    dissent_cards_.clear();
    commit({e});
    result = derive_result(e, session_);
    return {e};
  }

  if (kind == "explanation") {
    std::string speaker = actor.role == Role::practitioner ? actor.id : payload.value("speaker", std::string());
    if (auto holder = session_.floor_holder(); holder && !speaker.empty() && speaker != *holder)
      throw Error(ErrorCode::guard, "guard 'floor_holder' failed: '" + speaker +
                                        "' is out of turn; the floor belongs to '" + *holder + "'");
    if (const Floor* f = session_.floor(); f != nullptr && session_.phase() == Phase::Explaining)
      clean["position"] = f->next;
  }

  JournalEvent e = stamp(kind, clean, key);
  session_.apply(e);
  commit({e});
  result = derive_result(e, session_);
  return {e};
}

ojson LiveSession::cast_vote(const Participant& actor, const json& payload, const std::string& key) {
  const Phase phase = session_.phase();
  if (phase != Phase::PreliminaryVoting && phase != Phase::DefinitiveVoting) fail_phase("cast_vote", phase);
  auto card = parse_card(payload.value("card", std::string()));
  if (!card) throw Error(ErrorCode::invalid_argument, "cast_vote: 'card' must be one of the five cards");
  if (!actor.active) throw Error(ErrorCode::unauthorized, "'" + actor.id + "' is not active");
  const RoundRecord* open = session_.open_round();
  const std::string round_id = open->round_id;
  const auto expected = session_.active_practitioners().size();

  ojson result = ojson::object();
  if (open->cast.count(actor.id) == 0) {
    JournalEvent e = stamp("vote_cast",
                           {{"round_id", round_id}, {"participant_id", actor.id}, {"cast_count", open->cast_count + 1}},
                           key);
    session_.apply(e);
    const std::string token = box_.issue_token(round_id);
    box_.cast(round_id, token, *card);
    holder_tokens_[actor.id] = token;
    persist_box();
    commit({e});
    result = response_for({e}, session_, derive_result(e, session_));
    result["ballot_token"] = token;
    result["replaced"] = false;
  } else {
    std::string token;
    if (auto it = holder_tokens_.find(actor.id); it != holder_tokens_.end()) token = it->second;
    else token = payload.value("ballot_token", std::string());
    if (token.empty() || !box_.has_ballot(round_id, token))
      throw Error(ErrorCode::invalid_argument, "recasting requires the ballot token issued with your first vote");
    box_.cast(round_id, token, *card);
    persist_box();
    result = response_for({}, session_, {{"cast_count", session_.round(round_id)->cast_count}});
    result["ballot_token"] = token;
    result["replaced"] = true;
  }
  result["expected"] = expected;
  return result;
}

}  // namespace nga
