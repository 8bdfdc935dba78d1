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

// Reference reading of the vote interpretation table, written without the
// library's counting shortcuts: votes are expanded into a list and each row
// of the table is checked literally, first match wins.

#pragma once

#include <array>
#include <string>
#include <vector>

namespace nga::testing {

enum class OCard { Always, Most, Seldom, Never, DontKnow };

struct OracleResult {
  std::string rating;  // "FI", "LI", "PI", "NI", "NeedsJudgment"
  int row = 0;         // 1..5
  int rows_matching = 0;  // how many rows match when tested independently
};

inline bool oracle_positive(OCard c) { return c == OCard::Always || c == OCard::Most; }
inline bool oracle_negative(OCard c) { return c == OCard::Seldom || c == OCard::Never; }

inline OracleResult oracle_classify(const std::vector<OCard>& votes) {
  const std::size_t n = votes.size();
  auto all = [&](auto pred) {
    for (OCard c : votes)
      if (!pred(c)) return false;
    return true;
  };
  auto count = [&](auto pred) {
    std::size_t k = 0;
    for (OCard c : votes)
      if (pred(c)) ++k;
    return k;
  };
  auto is_majority = [n](std::size_t k) { return k * 2 > n; };

  const bool row1 = all(oracle_positive);
  const bool row2 = all(oracle_negative);
  const bool row3 = is_majority(count(oracle_positive)) &&
                    all([](OCard c) { return oracle_positive(c) || c == OCard::DontKnow; });
  const bool row4 =
      is_majority(count([](OCard c) { return c == OCard::Seldom || c == OCard::Most || c == OCard::DontKnow; }));
  const std::array<bool, 4> rows{row1, row2, row3, row4};
  const std::array<const char*, 4> ratings{"FI", "NI", "LI", "PI"};

  OracleResult r;
  for (bool b : rows) r.rows_matching += b ? 1 : 0;
  for (int i = 0; i < 4; ++i)
    if (rows[i]) {
      r.rating = ratings[i];
      r.row = i + 1;
      return r;
    }
  r.rating = "NeedsJudgment";
  r.row = 5;
  return r;
}

/// Calls f(counts) for every multiset of `total` votes over 5 cards; counts
/// are indexed like OCard.
template <typename F>
void for_each_multiset(int total, F&& f) {
  std::array<int, 5> c{};
  for (c[0] = 0; c[0] <= total; ++c[0])
    for (c[1] = 0; c[0] + c[1] <= total; ++c[1])
      for (c[2] = 0; c[0] + c[1] + c[2] <= total; ++c[2])
        for (c[3] = 0; c[0] + c[1] + c[2] + c[3] <= total; ++c[3]) {
          c[4] = total - c[0] - c[1] - c[2] - c[3];
          f(c);
          c[4] = 0;
        }
}

inline std::vector<OCard> expand(const std::array<int, 5>& c) {
  std::vector<OCard> v;
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < c[i]; ++k) v.push_back(static_cast<OCard>(i));
  return v;
}

}  // namespace nga::testing
