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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace nga {

/// A specific practice recast as a user story. Rendered as
/// "As {article} {role} {pronoun} {practice_instance} {connector} {benefit}";
/// an empty article drops that word (plural roles such as "developers").
struct StoryCard {
  std::string id;
  std::string model_ref;  // e.g. "REQM 1.3"
  int level = 2;          // maturity level 2..5
  std::string cmmi_text;
  std::string article = "a";
  std::string role;
  std::string pronoun;
  std::string practice_instance;
  std::string connector = "so";
  std::string benefit;
};

struct SpecificGoal {
  std::string id;
  std::string statement;
  std::vector<StoryCard> stories;
};

struct ProcessArea {
  std::string id;
  std::string name;
  std::string intent;
  std::vector<SpecificGoal> goals;

  /// Lowest maturity level among the area's stories.
  int level() const;
  std::size_t story_count() const;
};

struct Catalog {
  std::string title;
  std::string version;
  std::vector<ProcessArea> process_areas;

  std::size_t story_count() const;
  const StoryCard* find_story(std::string_view id) const;
};

/// Position of a story inside a catalog.
struct StoryLocation {
  std::size_t area = 0;
  std::size_t goal = 0;
  std::size_t story = 0;
};

std::optional<StoryLocation> locate_story(const Catalog& catalog, std::string_view id);

/// Parses and validates a catalog document. Throws Error(parse) for malformed
/// JSON or wrong shapes and ValidationError listing every violated invariant.
Catalog load_catalog(std::string_view document);
Catalog load_catalog_file(const std::string& path);

/// Every invariant violation of an already-built catalog, with paths such as
/// "process_areas[0].goals[1].stories[2].role". Empty means valid.
std::vector<std::string> validate_catalog(const Catalog& catalog);

nlohmann::ordered_json catalog_to_json(const Catalog& catalog);
std::string serialize_catalog(const Catalog& catalog);

std::string render_story(const StoryCard& story);

struct LevelCoverage {
  int level = 0;
  std::vector<std::string> process_areas;
  std::size_t story_count = 0;
  bool empty = true;  // requested but no stories at this level
};

struct ScopeReport {
  std::vector<LevelCoverage> levels;  // ascending by level
  std::size_t total_stories = 0;
  std::vector<std::string> process_areas;  // distinct, catalog order
};

ScopeReport scope_report(const Catalog& catalog, const std::set<int>& requested_levels);

}  // namespace nga
