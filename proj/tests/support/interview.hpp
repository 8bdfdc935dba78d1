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

// Helpers shared by the test programs: fixture loading, a deterministic
// clock and a driver that scripts a LiveSession command by command.

#pragma once

#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "catalog.hpp"
#include "journal.hpp"
#include "live.hpp"
#include "session.hpp"
#include "voting.hpp"

namespace nga::testing {

inline std::filesystem::path source_dir() { return NGA_SOURCE_DIR; }

inline std::string read_text(const std::filesystem::path& p) { return read_file(p); }

inline Catalog fixture_catalog() {
  return load_catalog_file((source_dir() / "tests/fixtures/fixture_catalog.json").string());
}

inline Catalog sample_catalog() { return load_catalog_file((source_dir() / "data/sample_catalog.json").string()); }

/// Timestamps one second apart from a fixed origin.
inline Clock step_clock(int start = 0) {
  auto n = std::make_shared<int>(start);
  return [n] {
    const int t = (*n)++;
    char buf[40];
    std::snprintf(buf, sizeof buf, "2026-03-02T%02d:%02d:%02d.000Z", 9 + t / 3600, (t / 60) % 60, t % 60);
    return std::string(buf);
  };
}

inline std::vector<Participant> roster(std::size_t practitioners) {
  std::vector<Participant> r{{"A", Role::assessor, true}};
  for (std::size_t i = 1; i <= practitioners; ++i) r.push_back({"p" + std::to_string(i), Role::practitioner, true});
  return r;
}

inline nlohmann::json full_table(const std::string& flavour = "") {
  return {{"relevant", {{"value", true}, {"note", "used on every project" + flavour}}},
          {"efficient", {{"value", true}, {"note", ""}}},
          {"institutionalized", {{"value", true}, {"note", "part of the team's definition of done"}}},
          {"documented", {{"value", true}, {"note", "kept in the team wiki"}}},
          {"strengths_weaknesses", "practice is well understood by the whole team"},
          {"implementation_blockers", "none"},
          {"traceable_problems", "none"},
          {"additional_comments", "none"}};
}

/// Called after every command the driver runs.
using Observer = std::function<void(const LiveSession&)>;

class Driver {
 public:
  explicit Driver(LiveSession& live, std::string assessor = "A", Observer after = {})
      : live_(live), assessor_(std::move(assessor)), after_(std::move(after)) {}

  nlohmann::ordered_json as(const std::string& actor, const std::string& kind, nlohmann::json payload = nlohmann::json::object(),
                            const std::string& key = {}) {
    auto r = live_.execute(actor, {{"kind", kind}, {"payload", std::move(payload)}}, key);
    if (after_) after_(live_);
    return r;
  }
  nlohmann::ordered_json assessor(const std::string& kind, nlohmann::json payload = nlohmann::json::object()) {
    return as(assessor_, kind, std::move(payload));
  }
  nlohmann::ordered_json advance(const std::string& command, nlohmann::json extra = nlohmann::json::object()) {
    extra["command"] = command;
    return assessor("advance", std::move(extra));
  }

  /// Every active practitioner casts, in roster order.
  void vote(const std::vector<VoteCard>& cards) {
    const auto order = live_.state().active_practitioners();
    for (std::size_t i = 0; i < order.size(); ++i)
      as(order[i], "cast_vote", {{"card", std::string(card_name(cards.at(i)))}});
  }

  /// Remaining floor holders each give a note.
  void explain_all(const std::string& prefix) {
    while (const auto holder = live_.state().floor_holder())
      as(*holder, "explanation", {{"note", prefix + " (" + std::to_string(live_.state().floor()->next + 1) + ")"}});
  }

  /// Presents the current story and runs it up to the preliminary reveal.
  void open_story(const std::vector<VoteCard>& preliminary, bool from_area_intro) {
    if (from_area_intro) advance("present_story");
    advance("open_clarification");
    advance("open_preliminary");
    vote(preliminary);
    advance("reveal");
  }

  /// Definitive round through finding validation (left in FindingValidation).
  void definitive(const std::vector<VoteCard>& cards, bool override_incomplete = false) {
    nlohmann::json extra = nlohmann::json::object();
    if (override_incomplete) extra["override_incomplete"] = true;
    advance("open_definitive", extra);
    vote(cards);
    advance("reveal");
    advance("record_votes");
    advance("validate_finding");
  }

  /// A full story with the default rotation and a complete Practice Table.
  void plain_story(const std::vector<VoteCard>& preliminary, const std::vector<VoteCard>& definitive_cards,
                   bool from_area_intro) {
    open_story(preliminary, from_area_intro);
    assessor("select_presenter", {{"policy", "rotate"}});
    explain_all("explanation");
    advance("end_explanations");
    assessor("practice_table", {{"fields", full_table()}});
    definitive(definitive_cards);
    assessor("finding", {{"action", "confirm"}});
  }

 private:
  LiveSession& live_;
  std::string assessor_;
  Observer after_;
};

using enum VoteCard;

/// The interview recorded in tests/fixtures/interview.jsonl: two process
/// areas, five stories, five practitioners, one area skip, one parking item
/// closed as agreed_to_disagree and one resolved assessor judgment.
inline std::unique_ptr<LiveSession> run_fixture_interview(LiveSession::Options options = {}, Observer after = {}) {
  if (!options.clock) options.clock = step_clock();
  auto live = LiveSession::create(fixture_catalog(), roster(5), SessionConfig{}, options);
  if (after) after(*live);
  Driver d(*live, "A", std::move(after));
  d.advance("begin");

  // PP 1.1: consistent agreement.
  d.plain_story({Always, Always, Always, MostOfTheTime, MostOfTheTime}, {Always, Always, Always, Always, Always}, true);
  d.assessor("flag_strength", {{"story_id", "PP-1.1"}, {"note", "Backlog splitting is done by the whole team at every planning session"}});
  d.advance("continue");

  // PP 1.2: mixed preliminary vote, early exit, incomplete table override.
  d.open_story({MostOfTheTime, MostOfTheTime, Seldom, DontKnow, Always}, false);
  d.assessor("select_presenter", {{"policy", "dissenting"}});
  d.as(*live->state().floor_holder(), "explanation", {{"note", "estimates are only made for new features"}});
  d.as(*live->state().floor_holder(), "explanation", {{"note", "we use planning poker for stories but not for tasks"}});
  d.as("p4", "parking_add", {{"text", "Are maintenance tasks estimated anywhere?"}, {"tag", "go_deeper"}});
  d.advance("early_exit");
  d.assessor("practice_table", {{"fields",
                                 {{"relevant", true},
                                  {"efficient", {{"value", true}, {"note", "takes one hour per iteration"}}},
                                  {"institutionalized", {{"value", false}, {"note", "depends on the scrum master"}}},
                                  {"strengths_weaknesses", "task estimates are skipped under pressure"}}}});
  d.definitive({MostOfTheTime, MostOfTheTime, Always, Always, DontKnow}, true);
  d.assessor("finding", {{"action", "correct"},
                         {"rationale", "Positive majority; the remaining vote is Don't know. Task estimates are not always made."},
                         {"table", {{"documented", {{"value", true}, {"note", "estimates live in the tracker"}}}}}});
  d.advance("continue");

  // PP 2.1: split definitive vote needing a judgment.
  d.open_story({Always, Seldom, MostOfTheTime, Never, DontKnow}, false);
  d.assessor("select_presenter", {{"policy", "participant"}, {"participant", "p2"}});
  d.explain_all("release plan");
  d.advance("end_explanations");
  d.assessor("practice_table", {{"fields", full_table(" except support work")}});
  d.definitive({Always, Always, Seldom, Never, DontKnow});
  d.assessor("resolve_judgment",
             {{"story_id", "PP-2.1"}, {"rating", "PI"},
              {"rationale", "A release plan exists but is not updated after the first iterations."}});
  d.assessor("finding", {{"action", "confirm"}});
  d.advance("continue");

  // RSKM 1.1, then the rest of the area is skipped.
  d.plain_story({Never, Never, Seldom, Never, Seldom}, {Never, Never, Never, Seldom, Seldom}, true);
  d.assessor("skip_area", {{"reason", "No risk identification takes place; the group asked to move on."},
                           {"disposition", "not_rated"}});

  // Parking lot review and closure.
  d.assessor("parking_assign", {{"item_id", "PL-1"}, {"owner", "p4"}});
  d.advance("begin_closure");
  d.assessor("parking_close", {{"item_id", "PL-1"},
                               {"status", "agreed_to_disagree"},
                               {"evidence_note", "The team sees maintenance estimates as waste; the assessor does not."}});
  d.advance("close");
  return live;
}

}  // namespace nga::testing
