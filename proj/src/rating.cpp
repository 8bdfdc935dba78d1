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

#include "rating.hpp"

#include <numeric>

#include "error.hpp"

namespace nga {

std::string_view rating_code(PracticeRating r) noexcept {
  switch (r) {
    case PracticeRating::FI: return "FI";
    case PracticeRating::LI: return "LI";
    case PracticeRating::PI: return "PI";
    case PracticeRating::NI: return "NI";
    case PracticeRating::NeedsJudgment: return "NeedsJudgment";
    case PracticeRating::NotRated: return "NotRated";
  }
  return "?";
}

std::string_view rating_caption(PracticeRating r) noexcept {
  switch (r) {
    case PracticeRating::FI: return "Fully Implemented";
    case PracticeRating::LI: return "Largely Implemented";
    case PracticeRating::PI: return "Partially Implemented";
    case PracticeRating::NI: return "Not Implemented";
    case PracticeRating::NeedsJudgment: return "Assessor judgment required";
    case PracticeRating::NotRated: return "Not rated";
  }
  return "?";
}

std::optional<PracticeRating> parse_rating(std::string_view text) noexcept {
  for (auto r : {PracticeRating::FI, PracticeRating::LI, PracticeRating::PI, PracticeRating::NI,
                 PracticeRating::NeedsJudgment, PracticeRating::NotRated}) {
    if (text == rating_code(r)) return r;
  }
  return std::nullopt;
}

Classification classify(const VoteDistribution& d) {
  const std::uint32_t total = d.total();
  if (total == 0) throw Error(ErrorCode::invalid_argument, "cannot classify an empty distribution");

  const std::uint32_t positive = d.count(VoteCard::Always) + d.count(VoteCard::MostOfTheTime);
  const std::uint32_t negative = d.count(VoteCard::Seldom) + d.count(VoteCard::Never);
  const std::uint32_t dont_know = d.count(VoteCard::DontKnow);
  const std::uint32_t mixed = d.count(VoteCard::Seldom) + d.count(VoteCard::MostOfTheTime) + dont_know;
  auto majority = [total](std::uint32_t n) { return 2 * n > total; };

  if (positive == total) return {PracticeRating::FI, InterpretationRule::AllPositive};
  if (negative == total) return {PracticeRating::NI, InterpretationRule::AllNegative};
  if (majority(positive) && positive + dont_know == total)
    return {PracticeRating::LI, InterpretationRule::PositiveMajorityRestDontKnow};
  if (majority(mixed)) return {PracticeRating::PI, InterpretationRule::MixedMajority};
  return {PracticeRating::NeedsJudgment, InterpretationRule::Other};
}

std::string_view rule_reasoning(InterpretationRule rule) noexcept {
  switch (rule) {
    case InterpretationRule::AllPositive:
      return "All participants voted Always or Most of the time: everybody knows the practice and "
             "performs it under most circumstances.";
    case InterpretationRule::AllNegative:
      return "All participants voted Never or Seldom: the practice may have been tried through "
             "individual efforts but is not being performed.";
    case InterpretationRule::PositiveMajorityRestDontKnow:
      return "A majority voted Always or Most of the time and the dissenting votes are Don't know: "
             "most participants perform the practice and the rest seem unaware of it.";
    case InterpretationRule::MixedMajority:
      return "A majority of the votes fell in Seldom, Most of the time and Don't know: the practice is "
             "carried out through individual efforts but is not institutionalized.";
    case InterpretationRule::Other:
      return "The votes match no interpretation rule; the assessor decides the rating.";
  }
  return "";
}

std::string Fraction::str() const {
  if (num == 0) return "0";
  if (num == den) return "1";
  return std::to_string(num) + "/" + std::to_string(den);
}

Dispersion dispersion(const VoteDistribution& d, const DispersionThresholds& t) {
  const std::uint32_t total = d.total();
  if (total == 0) throw Error(ErrorCode::invalid_argument, "cannot measure dispersion of an empty distribution");
  Dispersion out;
  for (VoteCard c : kAllCards)
    if (c != VoteCard::DontKnow && d.count(c) > 0) ++out.categories;
  const std::uint32_t dk = d.count(VoteCard::DontKnow);
  const std::uint32_t g = std::gcd(dk, total);
  out.dont_know = dk == 0 ? Fraction{0, 1} : Fraction{dk / g, total / g};
  // dk/total >= num/den  <=>  dk*den >= num*total
  const bool dk_high = static_cast<std::uint64_t>(dk) * t.dont_know_limit.den >=
                       static_cast<std::uint64_t>(t.dont_know_limit.num) * total;
  out.inconsistent = out.categories > t.max_consistent_categories || dk_high;
  return out;
}

namespace {

bool filled(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") != std::string::npos;
}

void merge_answer(Answer& a, const nlohmann::json& v, const std::string& key) {
  if (v.is_boolean()) {
    a.value = v.get<bool>();
    return;
  }
  if (!v.is_object()) throw Error(ErrorCode::invalid_argument, "practice table: '" + key + "' must be a boolean or {value, note}");
  if (auto it = v.find("value"); it != v.end()) {
    if (it->is_null()) a.value.reset();
    else if (it->is_boolean()) a.value = it->get<bool>();
    else throw Error(ErrorCode::invalid_argument, "practice table: '" + key + ".value' must be a boolean");
  }
  if (auto it = v.find("note"); it != v.end()) {
    if (!it->is_string()) throw Error(ErrorCode::invalid_argument, "practice table: '" + key + ".note' must be a string");
    a.note = it->get<std::string>();
  }
}

nlohmann::ordered_json answer_json(const Answer& a) {
  nlohmann::ordered_json j;
  j["value"] = a.value ? nlohmann::ordered_json(*a.value) : nlohmann::ordered_json(nullptr);
  j["note"] = a.note;
  return j;
}

}  // namespace

std::vector<std::string> PracticeTable::missing_fields() const {
  std::vector<std::string> out;
  if (!relevant.answered()) out.emplace_back("relevant");
  if (!efficient.answered()) out.emplace_back("efficient");
  if (!institutionalized.answered()) out.emplace_back("institutionalized");
  if (!documented.answered()) out.emplace_back("documented");
  if (!filled(strengths_weaknesses)) out.emplace_back("strengths_weaknesses");
  if (!filled(implementation_blockers)) out.emplace_back("implementation_blockers");
  if (!filled(traceable_problems)) out.emplace_back("traceable_problems");
  if (!filled(additional_comments)) out.emplace_back("additional_comments");
  return out;
}

bool PracticeTable::complete() const { return missing_fields().empty(); }

void PracticeTable::merge(const nlohmann::json& patch) {
  if (!patch.is_object()) throw Error(ErrorCode::invalid_argument, "practice table update must be an object");
  for (const auto& [key, v] : patch.items()) {
    auto text = [&](std::string& field) {
      if (!v.is_string()) throw Error(ErrorCode::invalid_argument, "practice table: '" + key + "' must be a string");
      field = v.get<std::string>();
    };
    if (key == "alternate_practice_desc") text(alternate_practice_desc);
    else if (key == "relevant") merge_answer(relevant, v, key);
    else if (key == "efficient") merge_answer(efficient, v, key);
    else if (key == "institutionalized") merge_answer(institutionalized, v, key);
    else if (key == "documented") merge_answer(documented, v, key);
    else if (key == "strengths_weaknesses") text(strengths_weaknesses);
    else if (key == "implementation_blockers") text(implementation_blockers);
    else if (key == "traceable_problems") text(traceable_problems);
    else if (key == "additional_comments") text(additional_comments);
    else if (key == "performed")
      throw Error(ErrorCode::invalid_argument, "practice table: 'performed' follows the rating and cannot be set");
    else throw Error(ErrorCode::invalid_argument, "practice table: unknown field '" + key + "'");
  }
}

nlohmann::ordered_json PracticeTable::to_json(std::optional<PracticeRating> rating) const {
  nlohmann::ordered_json j;
  if (rating && (is_characterization(*rating)))
    j["performed"] = performed(*rating);
  else
    j["performed"] = nullptr;
  j["alternate_practice_desc"] = alternate_practice_desc;
  j["relevant"] = answer_json(relevant);
  j["efficient"] = answer_json(efficient);
  j["institutionalized"] = answer_json(institutionalized);
  j["documented"] = answer_json(documented);
  j["strengths_weaknesses"] = strengths_weaknesses;
  j["implementation_blockers"] = implementation_blockers;
  j["traceable_problems"] = traceable_problems;
  j["additional_comments"] = additional_comments;
  j["complete"] = complete();
  return j;
}

std::string_view satisfaction_name(Satisfaction s) noexcept {
  switch (s) {
    case Satisfaction::satisfied: return "satisfied";
    case Satisfaction::unsatisfied: return "unsatisfied";
    case Satisfaction::not_rated: return "not_rated";
  }
  return "?";
}

std::string_view disposition_name(AreaDisposition d) noexcept {
  switch (d) {
    case AreaDisposition::none: return "none";
    case AreaDisposition::not_rated: return "not_rated";
    case AreaDisposition::unsatisfied: return "unsatisfied";
  }
  return "?";
}

GoalRating rate_goal(const SpecificGoal& goal, const std::map<std::string, PracticeRating>& ratings) {
  GoalRating out;
  out.goal_id = goal.id;
  bool any_rated = false;
  bool all_performed = true;
  for (const auto& story : goal.stories) {
    auto it = ratings.find(story.id);
    const PracticeRating r = it == ratings.end() ? PracticeRating::NotRated : it->second;
    if (r == PracticeRating::NeedsJudgment)
      throw Error(ErrorCode::guard, "story '" + story.id + "' under goal '" + goal.id +
                                        "' still needs an assessor judgment");
    out.contributing.push_back({story.id, story.model_ref, r});
    if (r == PracticeRating::NotRated) continue;
    any_rated = true;
    if (!performed(r)) {
      all_performed = false;
      out.weaknesses.push_back(story.model_ref + " is " + std::string(rating_caption(r)) + ": " +
                               render_story(story));
    }
  }
  if (!any_rated) out.satisfied = Satisfaction::not_rated;
  else out.satisfied = all_performed ? Satisfaction::satisfied : Satisfaction::unsatisfied;
  return out;
}

AreaRating rate_area(const ProcessArea& area, std::vector<GoalRating> goals, AreaDisposition disposition) {
  AreaRating out;
  out.area_id = area.id;
  out.level = area.level();
  out.disposition = disposition;
  bool any_rated = false;
  bool all_satisfied = true;
  for (const auto& g : goals) {
    if (g.satisfied == Satisfaction::not_rated) continue;
    any_rated = true;
    if (g.satisfied != Satisfaction::satisfied) all_satisfied = false;
  }
  out.goals = std::move(goals);
  if (disposition == AreaDisposition::unsatisfied) out.satisfied = Satisfaction::unsatisfied;
  else if (disposition == AreaDisposition::not_rated || !any_rated) out.satisfied = Satisfaction::not_rated;
  else out.satisfied = all_satisfied ? Satisfaction::satisfied : Satisfaction::unsatisfied;
  return out;
}

const LevelReference& default_level_reference() {
  // Staged grouping of the CMMI for Development v1.3 process areas.
  static const LevelReference ref = {
      {2, {"REQM", "PP", "PMC", "SAM", "MA", "PPQA", "CM"}},
      {3, {"RD", "TS", "PI", "VER", "VAL", "OPF", "OPD", "IPM", "RSKM", "DAR", "OT"}},
      {4, {"OPP", "QPM"}},
      {5, {"OPM", "CAR"}},
  };
  return ref;
}

MaturityResult maturity_level(const std::vector<AreaRating>& areas, const LevelReference& reference) {
  std::map<std::string, const AreaRating*> by_id;
  for (const auto& a : areas) by_id.emplace(a.area_id, &a);

  auto level_of = [&](const AreaRating& a) {
    for (const auto& [lvl, ids] : reference)
      if (ids.count(a.area_id)) return lvl;
    return a.level;
  };

  MaturityResult out;
  int achieved = 1;
  for (int level = 2; level <= 5; ++level) {
    std::set<std::string> required;
    if (auto it = reference.find(level); it != reference.end()) required = it->second;
    for (const auto& a : areas)
      if (level_of(a) == level) required.insert(a.area_id);

    std::vector<std::string> unsatisfied;
    std::vector<std::string> uncovered;
    for (const auto& id : required) {
      auto it = by_id.find(id);
      if (it == by_id.end() || it->second->satisfied == Satisfaction::not_rated) uncovered.push_back(id);
      else if (it->second->satisfied == Satisfaction::unsatisfied) unsatisfied.push_back(id);
    }
    auto list = [](const std::vector<std::string>& ids) {
      std::string s;
      for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
      return s;
    };
    if (!unsatisfied.empty()) {
      out.note = "level " + std::to_string(level) + " not reached: unsatisfied " + list(unsatisfied);
      break;
    }
    if (!uncovered.empty()) {
      if (level == 2) {
        out.note = "withheld: level 2 coverage incomplete, missing " + list(uncovered);
        return out;
      }
      out.note = "level " + std::to_string(level) + " not assessed: coverage incomplete, missing " + list(uncovered);
      break;
    }
    achieved = level;
  }
  out.level = achieved;
  return out;
}

}  // namespace nga
