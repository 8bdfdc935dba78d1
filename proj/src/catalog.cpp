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

#include "catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace nga {

using nlohmann::json;

int ProcessArea::level() const {
  int lowest = 0;
  for (const auto& g : goals) {
    for (const auto& s : g.stories) {
      if (lowest == 0 || s.level < lowest) lowest = s.level;
    }
  }
  return lowest;
}

std::size_t ProcessArea::story_count() const {
  std::size_t n = 0;
  for (const auto& g : goals) n += g.stories.size();
  return n;
}

std::size_t Catalog::story_count() const {
  std::size_t n = 0;
  for (const auto& a : process_areas) n += a.story_count();
  return n;
}

const StoryCard* Catalog::find_story(std::string_view id) const {
  for (const auto& a : process_areas)
    for (const auto& g : a.goals)
      for (const auto& s : g.stories)
        if (s.id == id) return &s;
  return nullptr;
}

std::optional<StoryLocation> locate_story(const Catalog& catalog, std::string_view id) {
  for (std::size_t a = 0; a < catalog.process_areas.size(); ++a) {
    const auto& goals = catalog.process_areas[a].goals;
    for (std::size_t g = 0; g < goals.size(); ++g) {
      for (std::size_t s = 0; s < goals[g].stories.size(); ++s) {
        if (goals[g].stories[s].id == id) return StoryLocation{a, g, s};
      }
    }
  }
  return std::nullopt;
}

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

// Collects shape problems instead of throwing so one pass reports everything.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& violations) : violations_(violations) {}

  std::string text(const json& obj, const char* key, const std::string& path, bool required,
                   const std::string& fallback = {}) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
      if (required) violations_.push_back(path + "." + key + ": missing");
      return fallback;
    }
    if (!it->is_string()) {
      violations_.push_back(path + "." + key + ": expected a string");
      return fallback;
    }
    return it->get<std::string>();
  }

  const json* array(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      violations_.push_back(path + "." + key + ": missing");
      return nullptr;
    }
    if (!it->is_array()) {
      violations_.push_back(path + "." + key + ": expected an array");
      return nullptr;
    }
    return &*it;
  }

  bool object(const json& value, const std::string& path) {
    if (value.is_object()) return true;
    violations_.push_back(path + ": expected an object");
    return false;
  }

  std::vector<std::string>& violations() { return violations_; }

 private:
  std::vector<std::string>& violations_;
};

StoryCard read_story(Reader& r, const json& j, const std::string& path) {
  StoryCard s;
  s.id = r.text(j, "id", path, true);
  s.model_ref = r.text(j, "model_ref", path, true);
  auto lv = j.find("level");
  if (lv == j.end()) {
    r.violations().push_back(path + ".level: missing");
    s.level = 0;
  } else if (!lv->is_number_integer()) {
    r.violations().push_back(path + ".level: expected an integer");
    s.level = 0;
  } else {
    s.level = lv->get<int>();
  }
  s.cmmi_text = r.text(j, "cmmi_text", path, false);
  s.article = r.text(j, "article", path, false, "a");
  s.role = r.text(j, "role", path, true);
  s.pronoun = r.text(j, "pronoun", path, true);
  s.practice_instance = r.text(j, "practice_instance", path, true);
  s.connector = r.text(j, "connector", path, false, "so");
  s.benefit = r.text(j, "benefit", path, true);
  return s;
}

Catalog read_catalog(const json& root, std::vector<std::string>& violations) {
  Reader r(violations);
  Catalog c;
  c.title = r.text(root, "title", "$", true);
  c.version = r.text(root, "version", "$", true);
  const json* areas = r.array(root, "process_areas", "$");
  if (!areas) return c;
  for (std::size_t ai = 0; ai < areas->size(); ++ai) {
    const std::string apath = "process_areas[" + std::to_string(ai) + "]";
    const json& aj = (*areas)[ai];
    if (!r.object(aj, apath)) continue;
    ProcessArea area;
    area.id = r.text(aj, "id", apath, true);
    area.name = r.text(aj, "name", apath, true);
    area.intent = r.text(aj, "intent", apath, false);
    if (const json* goals = r.array(aj, "goals", apath)) {
      for (std::size_t gi = 0; gi < goals->size(); ++gi) {
        const std::string gpath = apath + ".goals[" + std::to_string(gi) + "]";
        const json& gj = (*goals)[gi];
        if (!r.object(gj, gpath)) continue;
        SpecificGoal goal;
        goal.id = r.text(gj, "id", gpath, true);
        goal.statement = r.text(gj, "statement", gpath, false);
        if (const json* stories = r.array(gj, "stories", gpath)) {
          for (std::size_t si = 0; si < stories->size(); ++si) {
            const std::string spath = gpath + ".stories[" + std::to_string(si) + "]";
            const json& sj = (*stories)[si];
            if (!r.object(sj, spath)) continue;
            goal.stories.push_back(read_story(r, sj, spath));
          }
        }
        area.goals.push_back(std::move(goal));
      }
    }
    c.process_areas.push_back(std::move(area));
  }
  return c;
}

}  // namespace

std::vector<std::string> validate_catalog(const Catalog& catalog) {
  std::vector<std::string> v;
  if (blank(catalog.title)) v.push_back("$.title: must be non-empty");
  if (catalog.process_areas.empty()) v.push_back("$.process_areas: at least one process area required");

  std::map<std::string, std::string> area_ids;
  std::map<std::string, std::string> story_ids;
  for (std::size_t ai = 0; ai < catalog.process_areas.size(); ++ai) {
    const auto& area = catalog.process_areas[ai];
    const std::string apath = "process_areas[" + std::to_string(ai) + "]";
    if (blank(area.id)) {
      v.push_back(apath + ".id: must be non-empty");
    } else if (auto [it, fresh] = area_ids.emplace(area.id, apath); !fresh) {
      v.push_back(apath + ".id: duplicate process area id '" + area.id + "' (first at " +
                  it->second + ")");
    }
    if (area.goals.empty()) v.push_back(apath + ".goals: at least one goal required");

    std::map<std::string, std::string> goal_ids;
    for (std::size_t gi = 0; gi < area.goals.size(); ++gi) {
      const auto& goal = area.goals[gi];
      const std::string gpath = apath + ".goals[" + std::to_string(gi) + "]";
      if (blank(goal.id)) {
        v.push_back(gpath + ".id: must be non-empty");
      } else if (auto [it, fresh] = goal_ids.emplace(goal.id, gpath); !fresh) {
        v.push_back(gpath + ".id: duplicate goal id '" + goal.id + "' (first at " + it->second + ")");
      }
      if (goal.stories.empty()) v.push_back(gpath + ".stories: at least one story required");

      for (std::size_t si = 0; si < goal.stories.size(); ++si) {
        const auto& s = goal.stories[si];
        const std::string spath = gpath + ".stories[" + std::to_string(si) + "]";
        if (blank(s.id)) {
          v.push_back(spath + ".id: must be non-empty");
        } else if (auto [it, fresh] = story_ids.emplace(s.id, spath); !fresh) {
          v.push_back(spath + ".id: duplicate story id '" + s.id + "' (first at " + it->second + ")");
        }
        if (s.level < 2 || s.level > 5)
          v.push_back(spath + ".level: must be in 2..5, got " + std::to_string(s.level));
        if (blank(s.role)) v.push_back(spath + ".role: must be non-empty");
        if (blank(s.practice_instance)) v.push_back(spath + ".practice_instance: must be non-empty");
        if (blank(s.benefit)) v.push_back(spath + ".benefit: must be non-empty");
      }
    }
  }
  return v;
}

Catalog load_catalog(std::string_view document) {
  if (blank(std::string(document))) throw Error(ErrorCode::parse, "catalog: empty document");
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, std::string("catalog: ") + e.what());
  }
  if (!root.is_object()) throw Error(ErrorCode::parse, "catalog: top-level value must be an object");

  std::vector<std::string> violations;
  Catalog catalog = read_catalog(root, violations);
  auto semantic = validate_catalog(catalog);
  // A field already reported as missing or mistyped is not reported twice.
  for (auto& s : semantic) {
    const auto colon = s.find(':');
    const std::string path = s.substr(0, colon);
    const bool dup = std::any_of(violations.begin(), violations.end(), [&](const std::string& x) {
      return x.compare(0, path.size() + 1, path + ":") == 0;
    });
    if (!dup) violations.push_back(std::move(s));
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return catalog;
}

Catalog load_catalog_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open catalog file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_catalog(buf.str());
}

nlohmann::ordered_json catalog_to_json(const Catalog& catalog) {
  nlohmann::ordered_json root;
  root["title"] = catalog.title;
  root["version"] = catalog.version;
  root["process_areas"] = nlohmann::ordered_json::array();
  for (const auto& area : catalog.process_areas) {
    nlohmann::ordered_json a;
    a["id"] = area.id;
    a["name"] = area.name;
    a["intent"] = area.intent;
    a["goals"] = nlohmann::ordered_json::array();
    for (const auto& goal : area.goals) {
      nlohmann::ordered_json g;
      g["id"] = goal.id;
      g["statement"] = goal.statement;
      g["stories"] = nlohmann::ordered_json::array();
      for (const auto& s : goal.stories) {
        nlohmann::ordered_json sj;
        sj["id"] = s.id;
        sj["model_ref"] = s.model_ref;
        sj["level"] = s.level;
        sj["cmmi_text"] = s.cmmi_text;
        if (s.article != "a") sj["article"] = s.article;
        sj["role"] = s.role;
        sj["pronoun"] = s.pronoun;
        sj["practice_instance"] = s.practice_instance;
        if (s.connector != "so") sj["connector"] = s.connector;
        sj["benefit"] = s.benefit;
        g["stories"].push_back(std::move(sj));
      }
      a["goals"].push_back(std::move(g));
    }
    root["process_areas"].push_back(std::move(a));
  }
  return root;
}

std::string serialize_catalog(const Catalog& catalog) { return catalog_to_json(catalog).dump(2); }

std::string render_story(const StoryCard& story) {
  std::string out = "As";
  auto append = [&out](const std::string& word) {
    if (word.empty()) return;
    out += ' ';
    out += word;
  };
  append(story.article);
  append(story.role);
  append(story.pronoun);
  append(story.practice_instance);
  append(story.connector);
  append(story.benefit);
  return out;
}

ScopeReport scope_report(const Catalog& catalog, const std::set<int>& requested_levels) {
  ScopeReport report;
  for (int level : requested_levels) {
    LevelCoverage cov;
    cov.level = level;
    for (const auto& area : catalog.process_areas) {
      std::size_t n = 0;
      for (const auto& g : area.goals)
        n += static_cast<std::size_t>(std::count_if(g.stories.begin(), g.stories.end(),
                                                    [level](const StoryCard& s) { return s.level == level; }));
      if (n == 0) continue;
      cov.process_areas.push_back(area.id);
      cov.story_count += n;
      if (std::find(report.process_areas.begin(), report.process_areas.end(), area.id) ==
          report.process_areas.end())
        report.process_areas.push_back(area.id);
    }
    cov.empty = cov.story_count == 0;
    report.total_stories += cov.story_count;
    report.levels.push_back(std::move(cov));
  }
  return report;
}

}  // namespace nga
