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
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "catalog.hpp"
#include "voting.hpp"

namespace nga {

enum class PracticeRating { FI, LI, PI, NI, NeedsJudgment, NotRated };

std::string_view rating_code(PracticeRating r) noexcept;  // "FI", ..., "NeedsJudgment", "NotRated"
std::string_view rating_caption(PracticeRating r) noexcept;  // "Fully Implemented", ...
std::optional<PracticeRating> parse_rating(std::string_view text) noexcept;

/// True for the four characterizations an assessor may settle on.
constexpr bool is_characterization(PracticeRating r) noexcept {
  return r == PracticeRating::FI || r == PracticeRating::LI || r == PracticeRating::PI ||
         r == PracticeRating::NI;
}

/// Which vote-interpretation rule produced a classification.
enum class InterpretationRule { AllPositive = 1, AllNegative, PositiveMajorityRestDontKnow, MixedMajority, Other };

struct Classification {
  PracticeRating rating;
  InterpretationRule rule;
};

/// Ordered first-match rules over a non-empty distribution:
///   1. every vote Always/MostOfTheTime                       -> FI
///   2. every vote Seldom/Never                               -> NI
///   3. positives are a strict majority, the rest DontKnow    -> LI
///   4. Seldom+MostOfTheTime+DontKnow are a strict majority    -> PI
///   5. otherwise                                             -> NeedsJudgment
/// Throws Error(invalid_argument) on an empty distribution.
Classification classify(const VoteDistribution& d);
inline PracticeRating classify_votes(const VoteDistribution& d) { return classify(d).rating; }

/// Short reasoning behind each rule, used to template finding rationales.
std::string_view rule_reasoning(InterpretationRule rule) noexcept;

/// Exact non-negative fraction.
struct Fraction {
  std::uint32_t num = 0;
  std::uint32_t den = 1;

  std::string str() const;  // "0", "2/7", "1"
  friend bool operator==(const Fraction&, const Fraction&) = default;
};

struct DispersionThresholds {
  std::uint32_t max_consistent_categories = 2;  // inconsistent at >= 3
  Fraction dont_know_limit{1, 3};               // inconsistent at >= 1/3
};

struct Dispersion {
  std::uint32_t categories = 0;  // distinct non-DontKnow cards used
  Fraction dont_know;
  bool inconsistent = false;
};

Dispersion dispersion(const VoteDistribution& d, const DispersionThresholds& t = {});

/// Yes/no answer with an optional note, as captured on the Practice Table.
struct Answer {
  std::optional<bool> value;
  std::string note;

  bool answered() const noexcept { return value.has_value(); }
};

/// The assessor's per-story capture sheet.
struct PracticeTable {
  std::string alternate_practice_desc;  // optional
  Answer relevant;
  Answer efficient;
  Answer institutionalized;
  Answer documented;
  std::string strengths_weaknesses;
  std::string implementation_blockers;
  std::string traceable_problems;
  std::string additional_comments;

  /// Every non-optional field populated; texts may be the literal "none".
  bool complete() const;
  /// Names of fields still missing, in sheet order.
  std::vector<std::string> missing_fields() const;

  /// Applies a partial update; unknown keys throw Error(invalid_argument).
  void merge(const nlohmann::json& patch);
  nlohmann::ordered_json to_json(std::optional<PracticeRating> rating) const;
};

/// "performed" is never captured directly; it follows the rating.
inline bool performed(PracticeRating r) noexcept {
  return r == PracticeRating::FI || r == PracticeRating::LI;
}

enum class Satisfaction { satisfied, unsatisfied, not_rated };
std::string_view satisfaction_name(Satisfaction s) noexcept;

struct StoryOutcome {
  std::string story_id;
  std::string model_ref;
  PracticeRating rating = PracticeRating::NotRated;
};

struct GoalRating {
  std::string goal_id;
  Satisfaction satisfied = Satisfaction::not_rated;
  std::vector<StoryOutcome> contributing;
  std::vector<std::string> weaknesses;  // one per PI/NI story
};

/// Throws Error(guard) when a story is still NeedsJudgment.
GoalRating rate_goal(const SpecificGoal& goal, const std::map<std::string, PracticeRating>& ratings);

enum class AreaDisposition { none, not_rated, unsatisfied };
std::string_view disposition_name(AreaDisposition d) noexcept;

struct AreaRating {
  std::string area_id;
  int level = 0;
  Satisfaction satisfied = Satisfaction::not_rated;
  AreaDisposition disposition = AreaDisposition::none;
  std::vector<GoalRating> goals;
};

AreaRating rate_area(const ProcessArea& area, std::vector<GoalRating> goals, AreaDisposition disposition);

/// Reference list of process areas per staged maturity level.
using LevelReference = std::map<int, std::set<std::string>>;
const LevelReference& default_level_reference();

struct MaturityResult {
  std::optional<int> level;  // withheld when nullopt
  std::string note;
  static constexpr std::string_view label = "unofficial";
};

/// Highest L such that every area at levels 2..L is covered and satisfied.
/// Areas in the reference but absent from the ratings (or not rated) count as
/// missing coverage; catalog areas outside the reference join the level of
/// their stories.
MaturityResult maturity_level(const std::vector<AreaRating>& areas,
                              const LevelReference& reference = default_level_reference());

}  // namespace nga
