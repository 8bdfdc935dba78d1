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
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "catalog.hpp"
#include "journal.hpp"
#include "rating.hpp"
#include "voting.hpp"

namespace nga {

/// Workflow phases of one group interview, in the order a story visits them.
enum class Phase {
  Welcome,
  AreaIntro,
  StoryPresented,
  Clarification,
  PreliminaryVoting,
  PreliminaryRevealed,
  Explaining,
  FollowOn,
  DefinitiveVoting,
  DefinitiveRevealed,
  VoteRecorded,
  FindingValidation,
  ContinueDecision,
  ParkingReview,
  ParkingClosure,
  Closed,
};

std::string_view phase_name(Phase p) noexcept;

/// The declared phase graph. Self-loops are not edges.
bool is_declared_edge(Phase from, Phase to) noexcept;
const std::vector<std::pair<Phase, Phase>>& declared_edges();

enum class Role { assessor, practitioner };
std::string_view role_name(Role r) noexcept;

struct Participant {
  std::string id;
  Role role = Role::practitioner;
  bool active = true;
};

enum class PresenterPolicy { rotate, manual };

struct SessionConfig {
  int clarification_timebox_seconds = 300;
  PresenterPolicy presenter_policy = PresenterPolicy::rotate;
  bool warn_participant_bounds = true;
  DispersionThresholds dispersion;

  nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults; bad values throw Error(invalid_argument).
  static SessionConfig from_json(const nlohmann::json& j, const SessionConfig& defaults);
  static SessionConfig from_json(const nlohmann::json& j);
};

struct Cursor {
  std::size_t area = 0;
  std::size_t goal = 0;
  std::size_t story = 0;
  friend bool operator==(const Cursor&, const Cursor&) = default;
};

enum class ParkingStatus { open, assigned, resolved, agreed_to_disagree, assessor_decided };
std::string_view parking_status_name(ParkingStatus s) noexcept;
constexpr bool is_terminal(ParkingStatus s) noexcept {
  return s == ParkingStatus::resolved || s == ParkingStatus::agreed_to_disagree ||
         s == ParkingStatus::assessor_decided;
}

struct ParkingItem {
  std::string item_id;
  std::string text;
  std::string tag;  // "general", "go_deeper" or "dispute"
  Phase raised_phase = Phase::Welcome;
  std::string raised_story;  // empty when raised outside a story
  ParkingStatus status = ParkingStatus::open;
  std::string owner;
  std::string evidence_note;
  bool consensus_reached = false;
};

struct RoundRecord {
  std::string round_id;
  std::string story_id;
  RoundKind kind = RoundKind::preliminary;
  RoundStatus status = RoundStatus::open;
  std::set<std::string> cast;  // participant ids; cleared at reveal
  std::uint32_t cast_count = 0;
  std::optional<VoteDistribution> distribution;
};

enum class ValidationStatus { pending, confirmed, corrected, disputed };
std::string_view validation_status_name(ValidationStatus s) noexcept;

struct PreliminaryFinding {
  PracticeRating rating = PracticeRating::NeedsJudgment;
  InterpretationRule rule = InterpretationRule::Other;
  std::string rationale;
  std::string misinformation_note;
  ValidationStatus status = ValidationStatus::pending;
  std::string parking_item;  // set when disputed
};

struct Explanation {
  std::size_t position = 0;  // 0-based place in the round-robin
  std::string note;
};

/// Everything captured about one story.
struct StoryWork {
  PracticeTable table;
  bool table_override = false;
  std::vector<Explanation> explanations;
  bool early_exit = false;
  std::optional<Classification> preliminary;
  std::optional<Classification> definitive;
  /// nullopt until the story is assessed or skipped.
  std::optional<PracticeRating> rating;
  std::string judgment_rationale;
  std::optional<PreliminaryFinding> finding;
  std::string strength_note;
};

struct Floor {
  std::string story_id;
  std::string policy;
  std::vector<std::string> speakers;  // rotation order starting with the starter
  std::size_t next = 0;
  bool early_exit = false;

  bool exhausted() const noexcept { return next >= speakers.size(); }
};

struct AreaState {
  AreaDisposition disposition = AreaDisposition::none;
  std::string skip_reason;
};

struct RoundStatusView {
  std::string round_id;
  RoundKind kind = RoundKind::preliminary;
  RoundStatus status = RoundStatus::open;
  std::uint32_t cast_count = 0;
  std::uint32_t expected = 0;
  std::vector<std::pair<std::string, bool>> flags;  // assessor view only
  std::optional<VoteDistribution> distribution;     // revealed rounds only

  nlohmann::ordered_json to_json() const;
};

struct VoteTableRow {
  std::string area_id;
  std::string area_name;
  std::string story_id;
  std::string model_ref;
  std::optional<VoteDistribution> distribution;  // nullopt = NotRated
};

/// Event-sourced state of one interview. Every mutation is an event passed to
/// apply(), which enforces the workflow guards before touching any state, so
/// a rejected event leaves the session unchanged. Journals replay through the
/// same path.
class Session {
 public:
  /// Builds a session from its session_created event.
  static Session create(const JournalEvent& created);

  /// Event for a fresh session. Participants lacking ids get p1, p2, ...
  static JournalEvent make_created_event(const Catalog& catalog, const std::vector<Participant>& roster,
                                         const SessionConfig& config);

  /// Warnings owed right after creation (participant-count bounds).
  std::vector<std::string> creation_warnings() const;

  void apply(const JournalEvent& event);

  // Queries.
  const Catalog& catalog() const noexcept { return *catalog_; }
  const SessionConfig& config() const noexcept { return config_; }
  Phase phase() const noexcept { return phase_; }
  const Cursor& cursor() const noexcept { return cursor_; }
  std::uint64_t last_seq() const noexcept { return last_seq_; }
  const std::string& created_at() const noexcept { return created_at_; }
  const std::vector<Participant>& participants() const noexcept { return participants_; }
  const Participant* participant(std::string_view id) const;
  std::vector<std::string> active_practitioners() const;
  std::size_t practitioner_count() const;

  const StoryCard* current_story() const;
  const ProcessArea* current_area() const;
  const Floor* floor() const { return floor_ ? &*floor_ : nullptr; }
  std::optional<std::string> floor_holder() const;
  std::uint32_t rounds_started() const noexcept { return rounds_started_; }
  std::string rotation_starter() const;

  const RoundRecord* round(const std::string& round_id) const;
  const RoundRecord* open_round() const;
  RoundStatusView round_status(const std::string& round_id, Role viewer) const;

  const StoryWork* work(const std::string& story_id) const;
  const std::map<std::string, StoryWork>& works() const noexcept { return works_; }
  const std::vector<ParkingItem>& parking_lot() const noexcept { return parking_; }
  const AreaState& area_state(const std::string& area_id) const;
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Rows for stories with a revealed definitive round or a skip, grouped by
  /// area in catalog order.
  std::vector<VoteTableRow> vote_table() const;

  /// Terminal ratings per story (assessed, resolved or skipped).
  std::map<std::string, PracticeRating> ratings() const;

  /// Role-filtered snapshot; identical state yields identical JSON.
  nlohmann::ordered_json snapshot(Role viewer, const std::string& viewer_id = {}) const;

 private:
  Session() = default;

  void on_advance(const JournalEvent& e);
  void on_vote_cast(const JournalEvent& e);
  void on_select_presenter(const JournalEvent& e);
  void on_explanation(const JournalEvent& e);
  void on_practice_table(const JournalEvent& e);
  void on_finding(const JournalEvent& e);
  void on_resolve_judgment(const JournalEvent& e);
  void on_skip_area(const JournalEvent& e);
  void on_parking_add(const JournalEvent& e);
  void on_parking_assign(const JournalEvent& e);
  void on_parking_close(const JournalEvent& e);
  void on_flag_strength(const JournalEvent& e);
  void on_set_active(const JournalEvent& e);

  void require_phase(std::string_view what, std::initializer_list<Phase> allowed) const;
  const std::string& current_story_id() const;
  StoryWork& current_work();
  void move_to_next_story();
  void move_to_next_area();
  std::string next_parking_id() const;
  PreliminaryFinding draft_finding(const StoryWork& w) const;

  std::shared_ptr<const Catalog> catalog_;
  SessionConfig config_;
  std::string created_at_;
  std::vector<Participant> participants_;
  Phase phase_ = Phase::Welcome;
  Cursor cursor_;
  std::uint64_t last_seq_ = 0;
  std::string clarification_started_;
  std::uint32_t rounds_started_ = 0;
  std::optional<Floor> floor_;
  std::map<std::string, RoundRecord> rounds_;
  std::map<std::string, StoryWork> works_;
  std::map<std::string, AreaState> areas_;
  std::vector<ParkingItem> parking_;
  std::vector<std::string> warnings_;
};

/// Journal folding: replays every event, throwing on the first one that is
/// rejected. The message names the sequence number.
Session replay_journal(const Journal& journal);

/// Practitioner-visible projection of an event. Fields not declared for the
/// kind are removed.
JournalEvent project_for_practitioner(const JournalEvent& event);
/// Declared practitioner-visible payload fields per event kind.
const std::map<std::string, std::set<std::string>>& practitioner_fields();

}  // namespace nga
