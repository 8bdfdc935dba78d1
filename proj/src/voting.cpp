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

#include "voting.hpp"

#include <random>

#include "error.hpp"

namespace nga {

std::string_view card_name(VoteCard card) noexcept {
  switch (card) {
    case VoteCard::Always: return "Always";
    case VoteCard::MostOfTheTime: return "MostOfTheTime";
    case VoteCard::Seldom: return "Seldom";
    case VoteCard::Never: return "Never";
    case VoteCard::DontKnow: return "DontKnow";
  }
  return "?";
}

std::string_view agreement_label(VoteCard card) noexcept {
  switch (card) {
    case VoteCard::Always: return "StronglyAgree";
    case VoteCard::MostOfTheTime: return "Agree";
    case VoteCard::Seldom: return "Disagree";
    case VoteCard::Never: return "StronglyDisagree";
    case VoteCard::DontKnow: return "DontKnow";
  }
  return "?";
}

std::string_view agreement_caption(VoteCard card) noexcept {
  switch (card) {
    case VoteCard::Always: return "Strongly agree";
    case VoteCard::MostOfTheTime: return "Agree";
    case VoteCard::Seldom: return "Disagree";
    case VoteCard::Never: return "Strongly disagree";
    case VoteCard::DontKnow: return "Don't know";
  }
  return "?";
}

std::optional<VoteCard> parse_card(std::string_view text) noexcept {
  for (VoteCard c : kAllCards) {
    if (text == card_name(c) || text == agreement_label(c)) return c;
  }
  return std::nullopt;
}

void VoteDistribution::remove(VoteCard card) {
  auto& n = counts_[index(card)];
  if (n == 0) throw Error(ErrorCode::internal, "distribution: removing an absent vote");
  --n;
}

std::uint32_t VoteDistribution::total() const noexcept {
  std::uint32_t t = 0;
  for (auto n : counts_) t += n;
  return t;
}

nlohmann::ordered_json VoteDistribution::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (VoteCard c : kColumnOrder) j[std::string(agreement_label(c))] = count(c);
  return j;
}

VoteDistribution VoteDistribution::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse, "distribution must be an object");
  VoteDistribution d;
  for (const auto& [key, value] : j.items()) {
    auto card = parse_card(key);
    if (!card) throw Error(ErrorCode::parse, "distribution: unknown card '" + key + "'");
    if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0))
      throw Error(ErrorCode::parse, "distribution: count for '" + key + "' must be a non-negative integer");
    d.add(*card, value.get<std::uint32_t>());
  }
  return d;
}

std::string_view round_kind_name(RoundKind kind) noexcept {
  return kind == RoundKind::preliminary ? "preliminary" : "definitive";
}

std::string random_token(std::size_t bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::random_device rd;
  std::string out;
  out.reserve(bytes * 2);
  for (std::size_t i = 0; i < bytes; ++i) {
    const auto b = static_cast<unsigned>(rd() & 0xffu);
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

std::string BallotBox::make_round_id(const std::string& story_id, RoundKind kind) {
  return story_id + "/" + std::string(round_kind_name(kind));
}

const std::string& BallotBox::open_round(const std::string& story_id, RoundKind kind) {
  if (find(story_id, kind) != nullptr)
    throw Error(ErrorCode::conflict, "a " + std::string(round_kind_name(kind)) +
                                         " round is already open for story '" + story_id + "'");
  if (kind == RoundKind::definitive) {
    const Round* prelim = find(story_id, RoundKind::preliminary);
    if (prelim == nullptr || prelim->status != RoundStatus::revealed)
      throw Error(ErrorCode::guard, "definitive round requires the preliminary round of '" + story_id +
                                        "' to be revealed");
  }
  Round r;
  r.round_id = make_round_id(story_id, kind);
  r.story_id = story_id;
  r.kind = kind;
  auto [it, _] = rounds_.emplace(r.round_id, std::move(r));
  issued_[it->first];
  return it->first;
}

BallotBox::Round& BallotBox::require(const std::string& round_id) {
  auto it = rounds_.find(round_id);
  if (it == rounds_.end()) throw Error(ErrorCode::not_found, "unknown round '" + round_id + "'");
  return it->second;
}

std::string BallotBox::issue_token(const std::string& round_id) {
  Round& r = require(round_id);
  if (r.status == RoundStatus::revealed)
    throw Error(ErrorCode::guard, "round '" + round_id + "' is already revealed");
  std::string token = random_token();
  issued_[round_id].insert(token);
  return token;
}

bool BallotBox::cast(const std::string& round_id, const std::string& token, VoteCard card) {
  Round& r = require(round_id);
  if (r.status == RoundStatus::revealed)
    throw Error(ErrorCode::guard, "late vote: round '" + round_id + "' is already revealed");
  const auto& valid = issued_[round_id];
  if (valid.find(token) == valid.end())
    throw Error(ErrorCode::invalid_argument, "invalid ballot token for round '" + round_id + "'");
  auto [it, fresh] = r.ballots.insert_or_assign(token, card);
  return fresh;
}

bool BallotBox::has_ballot(const std::string& round_id, const std::string& token) const {
  const Round* r = find(round_id);
  return r != nullptr && r->ballots.count(token) > 0;
}

std::optional<VoteCard> BallotBox::ballot(const std::string& round_id, const std::string& token) const {
  const Round* r = find(round_id);
  if (r == nullptr) return std::nullopt;
  auto it = r->ballots.find(token);
  if (it == r->ballots.end()) return std::nullopt;
  return it->second;
}

VoteDistribution BallotBox::tally(const std::string& round_id) const {
  const Round* r = find(round_id);
  if (r == nullptr) throw Error(ErrorCode::not_found, "unknown round '" + round_id + "'");
  if (r->revealed) return *r->revealed;
  VoteDistribution d;
  for (const auto& [token, card] : r->ballots) d.add(card);
  return d;
}

void BallotBox::ensure_round(const std::string& story_id, RoundKind kind) {
  const std::string id = make_round_id(story_id, kind);
  if (rounds_.count(id)) return;
  Round r;
  r.round_id = id;
  r.story_id = story_id;
  r.kind = kind;
  rounds_.emplace(id, std::move(r));
  issued_[id];
}

std::size_t BallotBox::ballot_count(const std::string& round_id) const {
  const Round* r = find(round_id);
  if (r == nullptr) return 0;
  return r->revealed ? r->revealed->total() : r->ballots.size();
}

VoteDistribution BallotBox::reveal(const std::string& round_id, std::size_t expected) {
  Round& r = require(round_id);
  if (r.status == RoundStatus::revealed) return *r.revealed;
  if (r.ballots.size() < expected) {
    const auto missing = expected - r.ballots.size();
    throw Error(ErrorCode::guard, std::to_string(missing) + (missing == 1 ? " vote" : " votes") + " outstanding");
  }
  VoteDistribution d;
  for (const auto& [token, card] : r.ballots) d.add(card);
  r.revealed = d;
  r.status = RoundStatus::revealed;
  r.ballots.clear();
  issued_.erase(round_id);
  return d;
}

const BallotBox::Round* BallotBox::find(const std::string& round_id) const {
  auto it = rounds_.find(round_id);
  return it == rounds_.end() ? nullptr : &it->second;
}

const BallotBox::Round* BallotBox::find(const std::string& story_id, RoundKind kind) const {
  return find(make_round_id(story_id, kind));
}

nlohmann::ordered_json BallotBox::to_json() const {
  nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
  for (const auto& [id, r] : rounds_) {
    nlohmann::ordered_json rj;
    rj["round_id"] = id;
    rj["story_id"] = r.story_id;
    rj["kind"] = std::string(round_kind_name(r.kind));
    rj["status"] = r.status == RoundStatus::open ? "open" : "revealed";
    if (r.revealed) {
      rj["distribution"] = r.revealed->to_json();
    } else {
      rj["tokens"] = nlohmann::ordered_json::array();
      if (auto it = issued_.find(id); it != issued_.end())
        for (const auto& t : it->second) rj["tokens"].push_back(t);
      rj["ballots"] = nlohmann::ordered_json::object();
      for (const auto& [token, card] : r.ballots) rj["ballots"][token] = std::string(card_name(card));
    }
    rounds.push_back(std::move(rj));
  }
  return nlohmann::ordered_json{{"rounds", std::move(rounds)}};
}

BallotBox BallotBox::from_json(const nlohmann::json& j) {
  BallotBox box;
  try {
    for (const auto& rj : j.at("rounds")) {
      Round r;
      r.round_id = rj.at("round_id").get<std::string>();
      r.story_id = rj.at("story_id").get<std::string>();
      r.kind = rj.at("kind").get<std::string>() == "definitive" ? RoundKind::definitive : RoundKind::preliminary;
      r.status = rj.at("status").get<std::string>() == "revealed" ? RoundStatus::revealed : RoundStatus::open;
      if (r.status == RoundStatus::revealed) {
        r.revealed = VoteDistribution::from_json(rj.at("distribution"));
      } else {
        auto& tokens = box.issued_[r.round_id];
        for (const auto& t : rj.at("tokens")) tokens.insert(t.get<std::string>());
        for (const auto& [token, card] : rj.at("ballots").items()) {
          auto c = parse_card(card.get<std::string>());
          if (!c) throw Error(ErrorCode::parse, "ballot box: unknown card");
          r.ballots.emplace(token, *c);
        }
      }
      box.rounds_.emplace(r.round_id, std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("ballot box: ") + e.what());
  }
  return box;
}

}  // namespace nga
