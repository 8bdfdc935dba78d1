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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace nga {

/// The five cards. There is deliberately no neutral card.
enum class VoteCard : std::uint8_t { Always, MostOfTheTime, Seldom, Never, DontKnow };

inline constexpr std::array<VoteCard, 5> kAllCards = {
    VoteCard::Always, VoteCard::MostOfTheTime, VoteCard::Seldom, VoteCard::Never, VoteCard::DontKnow};

/// Column order of the Vote Table and of every serialized distribution.
inline constexpr std::array<VoteCard, 5> kColumnOrder = {
    VoteCard::Never, VoteCard::Seldom, VoteCard::MostOfTheTime, VoteCard::Always, VoteCard::DontKnow};

std::string_view card_name(VoteCard card) noexcept;       // "Always", ...
std::string_view agreement_label(VoteCard card) noexcept;  // "StronglyAgree", ...
std::string_view agreement_caption(VoteCard card) noexcept;  // "Strongly agree", ...

/// Accepts either the card name or its agreement label.
std::optional<VoteCard> parse_card(std::string_view text) noexcept;

/// Per-card counts of one round.
class VoteDistribution {
 public:
  VoteDistribution() = default;

  void add(VoteCard card, std::uint32_t n = 1) { counts_[index(card)] += n; }
  void remove(VoteCard card);
  std::uint32_t count(VoteCard card) const noexcept { return counts_[index(card)]; }
  std::uint32_t total() const noexcept;

  /// {"StronglyDisagree": n, "Disagree": n, "Agree": n, "StronglyAgree": n, "DontKnow": n}
  nlohmann::ordered_json to_json() const;
  /// Accepts agreement labels or card names as keys; throws Error(parse).
  static VoteDistribution from_json(const nlohmann::json& j);

  friend bool operator==(const VoteDistribution&, const VoteDistribution&) = default;

 private:
  static constexpr std::size_t index(VoteCard c) noexcept { return static_cast<std::size_t>(c); }
  std::array<std::uint32_t, 5> counts_{};
};

enum class RoundKind { preliminary, definitive };
enum class RoundStatus { open, revealed };

std::string_view round_kind_name(RoundKind kind) noexcept;

/// Secret ballot storage for one session. Ballots are keyed by a random
/// per-round token; the box never learns who holds a token.
class BallotBox {
 public:
  struct Round {
    std::string round_id;
    std::string story_id;
    RoundKind kind = RoundKind::preliminary;
    RoundStatus status = RoundStatus::open;
    std::map<std::string, VoteCard> ballots;  // token -> card
    std::optional<VoteDistribution> revealed;
  };

  /// Throws Error(conflict) if a round of this kind already exists for the story.
  const std::string& open_round(const std::string& story_id, RoundKind kind);

  /// Fresh unguessable token for the round.
  std::string issue_token(const std::string& round_id);

  /// Stores or replaces the ballot for a token. Returns true when the token
  /// had no ballot before. Throws on late votes and unknown tokens.
  bool cast(const std::string& round_id, const std::string& token, VoteCard card);

  bool has_ballot(const std::string& round_id, const std::string& token) const;
  std::optional<VoteCard> ballot(const std::string& round_id, const std::string& token) const;

  /// Distribution of the ballots currently in an open round, without revealing.
  VoteDistribution tally(const std::string& round_id) const;

  /// Opens a round without ordering checks unless it already exists. Used
  /// when rebuilding the box next to a replayed journal.
  void ensure_round(const std::string& story_id, RoundKind kind);
  std::size_t ballot_count(const std::string& round_id) const;

  /// Reduces ballots to their distribution and discards the tokens.
  /// Idempotent: a revealed round returns its stored distribution.
  VoteDistribution reveal(const std::string& round_id, std::size_t expected);

  const Round* find(const std::string& round_id) const;
  const Round* find(const std::string& story_id, RoundKind kind) const;

  /// Durable form. Open rounds list their token set and ballots, sorted by
  /// token so that file order carries no casting order.
  nlohmann::ordered_json to_json() const;
  static BallotBox from_json(const nlohmann::json& j);

  static std::string make_round_id(const std::string& story_id, RoundKind kind);

 private:
  Round& require(const std::string& round_id);

  std::map<std::string, Round> rounds_;
  std::map<std::string, std::set<std::string>> issued_;  // round -> valid tokens
};

/// Cryptographically random lowercase hex string of 2*bytes characters.
std::string random_token(std::size_t bytes = 16);

}  // namespace nga
