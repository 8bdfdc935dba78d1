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

#include <doctest.h>

#include "error.hpp"
#include "session.hpp"
#include "support/interview.hpp"

using namespace nga;
using namespace nga::testing;
using nlohmann::json;

namespace {

struct Fixture {
  std::unique_ptr<LiveSession> live;
  Driver d;
  explicit Fixture(std::size_t practitioners = 4, SessionConfig config = {})
      : live(make(practitioners, config)), d(*live) {}
  static std::unique_ptr<LiveSession> make(std::size_t n, const SessionConfig& config) {
    LiveSession::Options o;
    o.clock = step_clock();
    return LiveSession::create(fixture_catalog(), roster(n), config, o);
  }
  const Session& s() const { return live->state(); }
};

// Runs f and returns the error it throws.
template <typename F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error");
  return Error(ErrorCode::internal, "unreachable");
}

std::vector<VoteCard> same(std::size_t n, VoteCard c) { return std::vector<VoteCard>(n, c); }

}  // namespace

TEST_CASE("creating a session") {
  LiveSession::Options o;
  o.clock = step_clock();
  const auto live = LiveSession::create(fixture_catalog(), roster(7), {}, o);
  CHECK(live->state().phase() == Phase::Welcome);
  CHECK(live->state().cursor() == Cursor{});
  CHECK(live->state().practitioner_count() == 7);
  CHECK(live->state().warnings().empty());

  std::vector<Participant> none{{"x", Role::practitioner, true}};
  const Error e = error_of([&] { LiveSession::create(fixture_catalog(), none, {}, o); });
  CHECK(e.code() == ErrorCode::invalid_argument);
  CHECK(std::string(e.what()).find("assessor") != std::string::npos);

  auto two = roster(3);
  two.push_back({"B", Role::assessor, true});
  CHECK_THROWS_AS(LiveSession::create(fixture_catalog(), two, {}, o), Error);
  CHECK_THROWS_AS(LiveSession::create(Catalog{}, roster(3), {}, o), Error);

  SUBCASE("group size outside 2..9 is a warning") {
    const auto big = LiveSession::create(fixture_catalog(), roster(10), {}, o);
    REQUIRE(big->state().warnings().size() == 1);
    CHECK(big->journal().back().kind == "warning");
    SessionConfig quiet;
    quiet.warn_participant_bounds = false;
    CHECK(LiveSession::create(fixture_catalog(), roster(1), quiet, o)->state().warnings().empty());
  }
}

TEST_CASE("illegal commands are rejected with a named guard") {
  Fixture f;
  Error e = error_of([&] { f.d.advance("reveal"); });
  CHECK(e.code() == ErrorCode::illegal_transition);
  CHECK(std::string(e.what()) == "illegal transition: 'reveal' is not allowed in phase Welcome");

  f.d.advance("begin");
  f.d.advance("present_story");
  f.d.advance("open_clarification");
  e = error_of([&] { f.d.as("p1", "cast_vote", {{"card", "Always"}}); });
  CHECK(e.code() == ErrorCode::guard);
  CHECK(std::string(e.what()).rfind("guard 'phase' failed", 0) == 0);

  f.d.advance("open_preliminary");
  f.d.as("p1", "cast_vote", {{"card", "Always"}});
  f.d.as("p2", "cast_vote", {{"card", "Seldom"}});
  e = error_of([&] { f.d.advance("reveal"); });
  CHECK(std::string(e.what()) == "guard 'all_cast' failed: 2 votes outstanding");
  CHECK(f.s().phase() == Phase::PreliminaryVoting);

  e = error_of([&] { f.d.as("p1", "advance", {{"command", "reveal"}}); });
  CHECK(e.code() == ErrorCode::unauthorized);
  e = error_of([&] { f.d.assessor("cast_vote", {{"card", "Always"}}); });
  CHECK(e.code() == ErrorCode::unauthorized);
  e = error_of([&] { f.d.as("p3", "cast_vote", {{"card", "Neutral"}}); });
  CHECK(e.code() == ErrorCode::invalid_argument);
}

TEST_CASE("explanations follow the floor") {
  Fixture f;
  f.d.advance("begin");
  f.d.open_story({Always, Always, Seldom, Never}, true);
  Error e = error_of([&] { f.d.advance("end_explanations"); });
  CHECK(e.code() == ErrorCode::illegal_transition);
  f.d.assessor("select_presenter", {});
  REQUIRE(f.s().floor_holder() == "p1");

  e = error_of([&] { f.d.advance("early_exit"); });
  CHECK(std::string(e.what()).rfind("guard 'early_exit' failed", 0) == 0);
  e = error_of([&] { f.d.as("p2", "explanation", {{"note", "out of turn"}}); });
  CHECK(std::string(e.what()).rfind("guard 'floor_holder' failed", 0) == 0);

  f.d.as("p1", "explanation", {{"note", "we always do it"}});
  CHECK(f.s().floor_holder() == "p2");
  e = error_of([&] { f.d.advance("end_explanations"); });
  CHECK(std::string(e.what()) == "guard 'all_spoke' failed: 3 practitioner(s) have not held the floor yet");

  SUBCASE("early exit after one explanation") {
    f.d.advance("early_exit");
    CHECK(f.s().phase() == Phase::FollowOn);
    CHECK(f.s().work("PP-1.1")->early_exit);
  }
  SUBCASE("everybody speaks") {
    f.d.explain_all("note");
    CHECK_FALSE(f.s().floor_holder().has_value());
    f.d.advance("end_explanations");
    CHECK(f.s().phase() == Phase::FollowOn);
    // Notes are keyed by position, not by speaker or vote.
    const auto& ex = f.s().work("PP-1.1")->explanations;
    REQUIRE(ex.size() == 4);
    for (std::size_t i = 0; i < ex.size(); ++i) CHECK(ex[i].position == i);
  }
}

TEST_CASE("the Practice Table gates the definitive vote") {
  Fixture f;
  f.d.advance("begin");
  f.d.open_story(same(4, Always), true);
  f.d.assessor("select_presenter", {});
  f.d.explain_all("n");
  f.d.advance("end_explanations");
  f.d.assessor("practice_table", {{"fields", {{"relevant", true}}}});
  const Error e = error_of([&] { f.d.advance("open_definitive"); });
  CHECK(e.code() == ErrorCode::guard);
  CHECK(std::string(e.what()).find("missing efficient, institutionalized, documented") != std::string::npos);

  SUBCASE("override is recorded") {
    f.d.advance("open_definitive", {{"override_incomplete", true}});
    CHECK(f.s().work("PP-1.1")->table_override);
    CHECK(f.live->journal().back().payload.at("override_incomplete") == true);
  }
  SUBCASE("complete table needs no override") {
    f.d.assessor("practice_table", {{"fields", full_table()}});
    f.d.advance("open_definitive");
    CHECK_FALSE(f.s().work("PP-1.1")->table_override);
  }
}

TEST_CASE("default rotation moves the starter by one each round") {
  Fixture f(3);
  f.d.advance("begin");
  std::vector<std::string> starters;
  bool first = true;
  for (int story = 0; story < 3; ++story) {
    f.d.open_story(same(3, Always), first);
    first = false;
    f.d.assessor("select_presenter", {{"policy", "rotate"}});
    starters.push_back(f.s().floor()->speakers.front());
    CHECK(f.s().floor()->speakers.size() == 3);
    f.d.explain_all("n");
    f.d.advance("end_explanations");
    f.d.assessor("practice_table", {{"fields", full_table()}});
    f.d.definitive(same(3, Always));
    f.d.assessor("finding", {{"action", "confirm"}});
    f.d.advance("continue");
  }
  CHECK(starters == std::vector<std::string>{"p1", "p2", "p3"});
}

TEST_CASE("presenter overrides") {
  Fixture f;
  f.d.advance("begin");
  SUBCASE("dissenting picks the minority card, ties by rotation order") {
    // {Always, Always, Always, StronglyDisagree}: the Never voter starts.
    f.d.open_story({Always, Always, Never, Always}, true);
    const auto r = f.d.assessor("select_presenter", {{"policy", "dissenting"}});
    CHECK(r["starter"] == "p3");
    CHECK(f.s().floor()->speakers == std::vector<std::string>{"p3", "p4", "p1", "p2"});
    CHECK(f.live->journal().back().payload.at("policy") == "dissenting");
  }
  SUBCASE("dissenting tie goes to the first in rotation order") {
    f.d.open_story({Always, Seldom, Always, Never}, true);
    CHECK(f.d.assessor("select_presenter", {{"policy", "dissenting"}})["starter"] == "p2");
  }
  SUBCASE("unanimous vote has no dissenter") {
    f.d.open_story(same(4, Always), true);
    const Error e = error_of([&] { f.d.assessor("select_presenter", {{"policy", "dissenting"}}); });
    CHECK(std::string(e.what()).rfind("guard 'dissent_exists' failed", 0) == 0);
  }
  SUBCASE("explicit participant") {
    f.d.open_story(same(4, Always), true);
    CHECK(f.d.assessor("select_presenter", {{"policy", "participant"}, {"participant", "p4"}})["starter"] == "p4");
    CHECK_THROWS_AS(f.d.assessor("select_presenter", {{"policy", "participant"}, {"participant", "A"}}), Error);
  }
}

TEST_CASE("manual presenter policy requires a name") {
  SessionConfig c;
  c.presenter_policy = PresenterPolicy::manual;
  Fixture f(4, c);
  f.d.advance("begin");
  f.d.open_story(same(4, Always), true);
  const Error e = error_of([&] { f.d.assessor("select_presenter", {}); });
  CHECK(std::string(e.what()).rfind("guard 'manual_presenter' failed", 0) == 0);
  CHECK_NOTHROW(f.d.assessor("select_presenter", {{"policy", "participant"}, {"participant", "p2"}}));
}

TEST_CASE("judgment, findings and closure") {
  Fixture f;
  f.d.advance("begin");
  f.d.open_story(same(4, Always), true);
  f.d.assessor("select_presenter", {});
  f.d.explain_all("n");
  f.d.advance("end_explanations");
  f.d.assessor("practice_table", {{"fields", full_table()}});
  // 2 positive, 1 negative, 1 DontKnow: no rule fits.
  f.d.definitive({Always, Always, Never, DontKnow});
  CHECK(f.s().work("PP-1.1")->rating == PracticeRating::NeedsJudgment);
  CHECK(f.s().work("PP-1.1")->finding->misinformation_note.find("Preliminary vote read FI") == 0);

  Error e = error_of([&] { f.d.assessor("finding", {{"action", "confirm"}}); });
  CHECK(std::string(e.what()).rfind("guard 'judgment_pending' failed", 0) == 0);
  e = error_of([&] { f.d.assessor("resolve_judgment", {{"story_id", "PP-1.1"}, {"rating", "PI"}, {"rationale", " "}}); });
  CHECK(e.code() == ErrorCode::invalid_argument);
  e = error_of([&] { f.d.assessor("resolve_judgment", {{"story_id", "PP-1.1"}, {"rating", "NotRated"}, {"rationale", "x"}}); });
  CHECK(e.code() == ErrorCode::invalid_argument);

  SUBCASE("dispute goes to the parking lot") {
    f.d.assessor("finding", {{"action", "dispute"}, {"text", "the group reads the release plan differently"}});
    REQUIRE(f.s().parking_lot().size() == 1);
    CHECK(f.s().parking_lot()[0].tag == "dispute");
    CHECK(f.s().work("PP-1.1")->finding->status == ValidationStatus::disputed);
    CHECK(f.s().phase() == Phase::ContinueDecision);
    f.d.assessor("skip_area", {{"reason", "time"}, {"disposition", "not_rated"}});
    f.d.plain_story(same(4, Never), same(4, Never), true);
    f.d.assessor("skip_area", {{"reason", "time"}, {"disposition", "not_rated"}});
    CHECK(f.s().phase() == Phase::ParkingReview);
    f.d.advance("begin_closure");
    e = error_of([&] { f.d.advance("close"); });
    CHECK(std::string(e.what()) == "guard 'parking_closed' failed: 1 parking item(s) still open or assigned");
    f.d.assessor("parking_close", {{"item_id", "PL-1"}, {"status", "assessor_decided"}});
    CHECK_FALSE(f.s().parking_lot()[0].consensus_reached);
    e = error_of([&] { f.d.advance("close"); });
    CHECK(std::string(e.what()).rfind("guard 'judgments_resolved' failed", 0) == 0);
    f.d.assessor("resolve_judgment", {{"story_id", "PP-1.1"}, {"rating", "LI"}, {"rationale", "split between teams"}});
    f.d.advance("close");
    CHECK(f.s().phase() == Phase::Closed);
  }
  SUBCASE("resolved judgment then confirm") {
    f.d.assessor("resolve_judgment",
                 {{"story_id", "PP-1.1"}, {"rating", "PI"}, {"rationale", "split between old and new subsystems"}});
    CHECK(f.s().work("PP-1.1")->rating == PracticeRating::PI);
    CHECK(f.s().work("PP-1.1")->judgment_rationale == "split between old and new subsystems");
    e = error_of([&] { f.d.assessor("resolve_judgment", {{"story_id", "PP-1.1"}, {"rating", "FI"}, {"rationale", "x"}}); });
    CHECK(std::string(e.what()).rfind("guard 'needs_judgment' failed", 0) == 0);
    f.d.assessor("finding", {{"action", "confirm"}});
    CHECK(f.s().phase() == Phase::ContinueDecision);
    e = error_of([&] { f.d.assessor("flag_strength", {{"story_id", "PP-1.1"}, {"note", "x"}}); });
    CHECK(std::string(e.what()).rfind("guard 'fully_implemented' failed", 0) == 0);
  }
}

TEST_CASE("skipping an area marks the rest NotRated") {
  Fixture f;
  f.d.advance("begin");
  f.d.plain_story(same(4, Never), same(4, Seldom), true);
  f.d.assessor("skip_area", {{"reason", "The intent is clearly not met."}, {"disposition", "unsatisfied"}});
  CHECK(f.s().phase() == Phase::AreaIntro);
  CHECK(f.s().current_area()->id == "RSKM");
  CHECK(f.s().work("PP-1.1")->rating == PracticeRating::NI);
  CHECK(f.s().work("PP-1.2")->rating == PracticeRating::NotRated);
  CHECK(f.s().work("PP-2.1")->rating == PracticeRating::NotRated);
  CHECK(f.s().area_state("PP").skip_reason == "The intent is clearly not met.");
  CHECK(f.s().area_state("PP").disposition == AreaDisposition::unsatisfied);
  const auto rows = f.s().vote_table();
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].distribution.has_value());
  CHECK_FALSE(rows[1].distribution.has_value());
}

TEST_CASE("parking lot lifecycle") {
  Fixture f;
  f.d.as("p2", "parking_add", {{"text", "who owns the estimates?"}});
  f.d.assessor("parking_add", {{"text", "look at the tracker"}, {"tag", "go_deeper"}});
  CHECK(f.s().parking_lot().size() == 2);
  CHECK(f.s().parking_lot()[0].status == ParkingStatus::open);
  CHECK_THROWS_AS(f.d.as("p2", "parking_assign", {{"item_id", "PL-1"}, {"owner", "p2"}}), Error);
  CHECK_THROWS_AS(f.d.assessor("parking_assign", {{"item_id", "PL-1"}, {"owner", "p2"}}), Error);  // wrong phase
  f.d.advance("begin");
  for (int i = 0; i < 2; ++i) {
    if (f.s().phase() == Phase::AreaIntro) f.d.advance("present_story");
    f.d.advance("open_clarification");
    f.d.advance("open_preliminary");
    f.d.vote(same(4, Never));
    f.d.advance("reveal");
    f.d.assessor("select_presenter", {});
    f.d.as(*f.s().floor_holder(), "explanation", {{"note", "x"}});
    f.d.advance("early_exit");
    f.d.definitive(same(4, Never), true);
    f.d.assessor("finding", {{"action", "confirm"}});
    f.d.assessor("skip_area", {{"reason", "not performed"}, {"disposition", "unsatisfied"}});
  }
  REQUIRE(f.s().phase() == Phase::ParkingReview);
  f.d.assessor("parking_assign", {{"item_id", "PL-1"}, {"owner", "p2"}});
  CHECK(f.s().parking_lot()[0].status == ParkingStatus::assigned);
  CHECK_THROWS_AS(f.d.assessor("parking_close", {{"item_id", "PL-1"}, {"status", "agreed_to_disagree"}}), Error);
  f.d.assessor("parking_close", {{"item_id", "PL-2"}, {"status", "resolved"}, {"evidence_note", "tracker shows it"}});
  CHECK(f.s().parking_lot()[1].consensus_reached);
  f.d.advance("begin_closure");
  f.d.assessor("parking_close", {{"item_id", "PL-1"}, {"status", "agreed_to_disagree"}});
  CHECK_FALSE(f.s().parking_lot()[0].consensus_reached);
  CHECK_THROWS_AS(f.d.assessor("parking_close", {{"item_id", "PL-1"}, {"status", "resolved"}}), Error);
  f.d.advance("close");
  CHECK(f.s().phase() == Phase::Closed);
  CHECK_THROWS_AS(f.d.as("p1", "parking_add", {{"text", "late"}}), Error);
}

TEST_CASE("inactive practitioners do not vote or hold the floor") {
  Fixture f;
  f.d.assessor("set_participant_active", {{"participant_id", "p2"}, {"active", false}});
  CHECK(f.s().active_practitioners() == std::vector<std::string>{"p1", "p3", "p4"});
  f.d.advance("begin");
  f.d.open_story(same(3, Always), true);
  CHECK(f.s().round("PP-1.1/preliminary")->distribution->total() == 3);
  CHECK_THROWS_AS(f.d.assessor("set_participant_active", {{"participant_id", "p2"}, {"active", true}}), Error);
}

TEST_CASE("replay reproduces the live state") {
  const auto live = run_fixture_interview();
  const Session replayed = replay_journal(live->journal());
  CHECK(replayed.snapshot(Role::assessor).dump() == live->state().snapshot(Role::assessor).dump());
  CHECK(replayed.snapshot(Role::practitioner, "p1").dump() == live->state().snapshot(Role::practitioner, "p1").dump());
  CHECK(replayed.phase() == Phase::Closed);

  const Journal shipped = read_journal_file((source_dir() / "tests/fixtures/interview.jsonl").string());
  CHECK(journal_to_jsonl(shipped) == journal_to_jsonl(live->journal()));
}

TEST_CASE("replay errors name the event") {
  Journal j = run_fixture_interview()->journal();
  CHECK(std::string(error_of([] { replay_journal({}); }).what()) == "no session-created command");

  SUBCASE("tampered distribution") {
    for (auto& e : j)
      if (e.kind == "advance" && e.payload.value("command", "") == "reveal") {
        e.payload["distribution"]["DontKnow"] = 3;
        const Error err = error_of([&] { replay_journal(j); });
        CHECK(std::string(err.what()).find("event seq " + std::to_string(e.seq) + " (advance): guard 'conservation'") == 0);
        break;
      }
  }
  SUBCASE("gap in sequence numbers") {
    j.erase(j.begin() + 5);
    CHECK(std::string(error_of([&] { replay_journal(j); }).what()).find("event seq 7") == 0);
  }
  SUBCASE("first event must create the session") {
    j.erase(j.begin());
    CHECK(error_of([&] { replay_journal(j); }).code() != ErrorCode::internal);
  }
}

TEST_CASE("practitioner projections are declared subsets") {
  const auto live = run_fixture_interview();
  for (const auto& e : live->journal()) {
    const JournalEvent p = project_for_practitioner(e);
    const auto& allowed = practitioner_fields().at(e.kind);
    for (const auto& [k, v] : p.payload.items()) CHECK(allowed.count(k) == 1);
    CHECK(p.idempotency_key.empty());
    if (e.kind == "vote_cast") CHECK_FALSE(p.payload.contains("participant_id"));
    if (e.kind == "explanation") CHECK_FALSE(p.payload.contains("note"));
  }
}
