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

#include "report.hpp"

#include <filesystem>
#include <sstream>

#include "error.hpp"

namespace nga {

using ojson = nlohmann::ordered_json;

ExportFormat parse_export_format(std::string_view text) {
  if (text == "json" || text == "structured" || text == "machine") return ExportFormat::json;
  if (text == "markdown" || text == "md" || text == "tabular" || text == "human") return ExportFormat::markdown;
  throw Error(ErrorCode::invalid_argument, "unknown export format '" + std::string(text) + "'");
}

namespace {

constexpr std::string_view kDraftBanner = "DRAFT: session in progress, findings are provisional.";

std::uint32_t percent(std::uint32_t n, std::uint32_t total) {
  if (total == 0) return 0;
  return (200 * n + total) / (2 * total);
}

bool says_none(const std::string& s) {
  return s.empty() || s == "none" || s == "None" || s == "n/a";
}

std::string rating_label(const Session& s, const std::string& story_id) {
  const StoryWork* w = s.work(story_id);
  if (w == nullptr || !w->rating) return "Pending";
  return std::string(rating_code(*w->rating));
}

ojson goal_section(const SpecificGoal& goal, const Session& s, const std::map<std::string, PracticeRating>& ratings,
                   std::optional<GoalRating>& out) {
  bool pending = false;
  for (const auto& story : goal.stories) {
    auto it = ratings.find(story.id);
    if (it == ratings.end() || it->second == PracticeRating::NeedsJudgment) pending = true;
  }
  ojson g;
  g["goal_id"] = goal.id;
  g["statement"] = goal.statement;
  ojson cites = ojson::array();
  std::string cite_text;
  for (const auto& story : goal.stories) {
    const std::string label = rating_label(s, story.id);
    cites.push_back({{"story_id", story.id}, {"model_ref", story.model_ref}, {"rating", label}});
    cite_text += (cite_text.empty() ? "" : ", ") + story.model_ref + " " + label;
  }
  const std::string head = goal.id + (goal.statement.empty() ? "" : " (" + goal.statement + ")");
  if (pending) {
    out.reset();
    g["satisfied"] = "pending";
    g["summary"] = head + ": pending (" + cite_text + ").";
    g["weaknesses"] = ojson::array();
  } else {
    GoalRating gr = rate_goal(goal, ratings);
    g["satisfied"] = std::string(satisfaction_name(gr.satisfied));
    std::string summary = head + ": ";
    if (gr.satisfied == Satisfaction::satisfied) summary += "satisfied";
    else if (gr.satisfied == Satisfaction::unsatisfied) summary += "not satisfied";
    else summary += "not rated";
    summary += " (" + cite_text + ").";
    for (const auto& w : gr.weaknesses) summary += " Gap: " + w;
    g["summary"] = summary;
    g["weaknesses"] = gr.weaknesses;
    out = std::move(gr);
  }
  g["citations"] = std::move(cites);
  return g;
}

}  // namespace

ojson build_findings(const Session& s, const ReportOptions& options) {
  if (!options.draft && s.phase() != Phase::Closed)
    throw Error(ErrorCode::guard, "guard 'session_closed' failed: session is in phase " +
                                      std::string(phase_name(s.phase())) + "; request a draft instead");
  const auto ratings = s.ratings();
  if (!options.draft) {
    for (const auto& [id, r] : ratings)
      if (r == PracticeRating::NeedsJudgment)
        throw Error(ErrorCode::guard, "guard 'judgments_resolved' failed: story '" + id +
                                          "' still needs an assessor judgment");
  }
  const Catalog& cat = s.catalog();

  ojson doc;
  doc["header"] = {{"title", cat.title},
                   {"catalog_version", cat.version},
                   {"session_date", s.created_at()},
                   {"participant_count", s.practitioner_count()},
                   {"status", options.draft ? "draft" : "final"}};

  ojson areas = ojson::array();
  ojson weaknesses = ojson::array();
  std::vector<AreaRating> area_ratings;
  bool any_pending = false;
  for (const auto& area : cat.process_areas) {
    ojson a;
    a["area_id"] = area.id;
    a["name"] = area.name;
    a["level"] = area.level();
    const AreaState& st = s.area_state(area.id);
    a["disposition"] = std::string(disposition_name(st.disposition));
    if (!st.skip_reason.empty()) a["skip_reason"] = st.skip_reason;
    ojson goals = ojson::array();
    std::vector<GoalRating> goal_ratings;
    bool pending = false;
    for (const auto& goal : area.goals) {
      std::optional<GoalRating> gr;
      goals.push_back(goal_section(goal, s, ratings, gr));
      if (gr) goal_ratings.push_back(std::move(*gr));
      else pending = true;
    }
    if (pending) {
      any_pending = true;
      a["satisfied"] = st.disposition == AreaDisposition::unsatisfied ? "unsatisfied" : "pending";
    } else {
      AreaRating ar = rate_area(area, goal_ratings, st.disposition);
      a["satisfied"] = std::string(satisfaction_name(ar.satisfied));
      area_ratings.push_back(std::move(ar));
    }
    a["goals"] = std::move(goals);
    areas.push_back(std::move(a));

    for (const auto& goal : area.goals) {
      for (const auto& story : goal.stories) {
        const StoryWork* w = s.work(story.id);
        if (w == nullptr || !w->rating) continue;
        const PracticeRating r = *w->rating;
        if (r == PracticeRating::PI || r == PracticeRating::NI) {
          ojson wk;
          wk["story_id"] = story.id;
          wk["model_ref"] = story.model_ref;
          wk["basis"] = "rating";
          wk["rating"] = std::string(rating_code(r));
          wk["text"] = story.model_ref + " is " + std::string(rating_caption(r)) + ": " + render_story(story);
          if (!says_none(w->table.implementation_blockers)) wk["blockers"] = w->table.implementation_blockers;
          weaknesses.push_back(std::move(wk));
        } else if (performed(r)) {
          const std::pair<const char*, const Answer*> checks[] = {{"relevant", &w->table.relevant},
                                                                  {"efficient", &w->table.efficient},
                                                                  {"institutionalized", &w->table.institutionalized},
                                                                  {"documented", &w->table.documented}};
          for (const auto& [name, ans] : checks) {
            if (!ans->value || *ans->value) continue;
            ojson wk;
            wk["story_id"] = story.id;
            wk["model_ref"] = story.model_ref;
            wk["basis"] = "practice_table";
            wk["field"] = name;
            std::string text = story.model_ref + " is performed but not " + name;
            if (!says_none(ans->note)) text += ": " + ans->note;
            wk["text"] = text;
            weaknesses.push_back(std::move(wk));
          }
        }
      }
    }
  }
  doc["areas"] = std::move(areas);

  ojson strengths = ojson::array();
  ojson judgments = ojson::array();
  ojson validated = ojson::array();
  ojson misinformation = ojson::array();
  for (const auto& area : cat.process_areas)
    for (const auto& goal : area.goals)
      for (const auto& story : goal.stories) {
        const StoryWork* w = s.work(story.id);
        if (w == nullptr) continue;
        if (w->rating == PracticeRating::FI && !w->strength_note.empty())
          strengths.push_back({{"story_id", story.id}, {"model_ref", story.model_ref}, {"text", w->strength_note}});
        if (!w->judgment_rationale.empty())
          judgments.push_back({{"story_id", story.id},
                               {"model_ref", story.model_ref},
                               {"rating", std::string(rating_code(*w->rating))},
                               {"rationale", w->judgment_rationale}});
        if (w->finding) {
          ojson f;
          f["story_id"] = story.id;
          f["model_ref"] = story.model_ref;
          f["rating"] = rating_label(s, story.id);
          f["status"] = std::string(validation_status_name(w->finding->status));
          f["rationale"] = w->finding->rationale;
          if (!w->finding->parking_item.empty()) f["parking_item"] = w->finding->parking_item;
          validated.push_back(std::move(f));
          if (!w->finding->misinformation_note.empty())
            misinformation.push_back(
                {{"story_id", story.id}, {"model_ref", story.model_ref}, {"note", w->finding->misinformation_note}});
        }
      }
  doc["strengths"] = std::move(strengths);
  doc["weaknesses"] = std::move(weaknesses);
  doc["judgments"] = std::move(judgments);
  doc["preliminary_findings"] = std::move(validated);
  doc["misinformation_notes"] = std::move(misinformation);

  ojson maturity;
  maturity["label"] = std::string(MaturityResult::label);
  if (any_pending) {
    maturity["level"] = nullptr;
    maturity["note"] = "withheld: assessment in progress";
  } else {
    const MaturityResult m = maturity_level(area_ratings, options.level_reference);
    maturity["level"] = m.level ? ojson(*m.level) : ojson(nullptr);
    maturity["note"] = m.note;
  }
  doc["maturity"] = std::move(maturity);

  ojson lot = ojson::array();
  for (const auto& item : s.parking_lot()) {
    ojson it;
    it["item_id"] = item.item_id;
    it["text"] = item.text;
    it["tag"] = item.tag;
    it["status"] = std::string(parking_status_name(item.status));
    it["consensus_reached"] = is_terminal(item.status) ? ojson(item.consensus_reached) : ojson(nullptr);
    it["evidence_note"] = item.evidence_note;
    if (!item.raised_story.empty()) it["story_id"] = item.raised_story;
    lot.push_back(std::move(it));
  }
  doc["parking_lot"] = std::move(lot);
  doc["external_inputs"] = "";
  return doc;
}

ojson vote_table_json(const Session& s) {
  ojson areas = ojson::array();
  for (const auto& area : s.catalog().process_areas) {
    ojson a;
    a["area_id"] = area.id;
    a["area_name"] = area.name;
    ojson rows = ojson::array();
    std::size_t index = 0;
    for (const auto& goal : area.goals) {
      for (const auto& story : goal.stories) {
        ojson row;
        row["row"] = ++index;
        row["story_id"] = story.id;
        row["model_ref"] = story.model_ref;
        const RoundRecord* def = s.round(BallotBox::make_round_id(story.id, RoundKind::definitive));
        if (def != nullptr && def->status == RoundStatus::revealed) {
          const VoteDistribution& d = *def->distribution;
          const auto total = d.total();
          row["status"] = "rated";
          row["counts"] = d.to_json();
          row["total"] = total;
          row["positive_pct"] = percent(d.count(VoteCard::Always) + d.count(VoteCard::MostOfTheTime), total);
          row["negative_pct"] = percent(d.count(VoteCard::Seldom) + d.count(VoteCard::Never), total);
          row["dont_know_pct"] = percent(d.count(VoteCard::DontKnow), total);
          const Dispersion disp = dispersion(d, s.config().dispersion);
          row["dispersion"] = {{"categories", disp.categories},
                               {"dont_know_fraction", disp.dont_know.str()},
                               {"inconsistent", disp.inconsistent}};
        } else {
          row["status"] = "NotRated";
          row["counts"] = nullptr;
          row["total"] = 0;
        }
        rows.push_back(std::move(row));
      }
    }
    a["rows"] = std::move(rows);
    areas.push_back(std::move(a));
  }
  return areas;
}

ojson practice_tables_json(const Session& s) {
  ojson out = ojson::array();
  for (const auto& area : s.catalog().process_areas)
    for (const auto& goal : area.goals)
      for (const auto& story : goal.stories) {
        ojson t;
        t["area_id"] = area.id;
        t["story_id"] = story.id;
        t["model_ref"] = story.model_ref;
        t["story"] = render_story(story);
        t["rating"] = rating_label(s, story.id);
        const StoryWork* w = s.work(story.id);
        const PracticeTable empty;
        const PracticeTable& table = w != nullptr ? w->table : empty;
        ojson fields = table.to_json(w != nullptr ? w->rating : std::nullopt);
        for (auto& [k, v] : fields.items()) t[k] = v;
        t["override_incomplete"] = w != nullptr && w->table_override;
        ojson notes = ojson::array();
        if (w != nullptr)
          for (const auto& n : w->explanations) notes.push_back({{"position", n.position + 1}, {"note", n.note}});
        t["explanations"] = std::move(notes);
        t["early_exit"] = w != nullptr && w->early_exit;
        out.push_back(std::move(t));
      }
  return out;
}

ojson machine_export(const Session& s, const ReportOptions& options) {
  ojson doc;
  doc["findings"] = build_findings(s, options);
  doc["vote_table"] = vote_table_json(s);
  doc["practice_tables"] = practice_tables_json(s);
  doc["meta"] = {{"format", "nga-findings"},
                 {"format_version", 1},
                 {"draft", options.draft},
                 {"journal_seq", s.last_seq()},
                 {"catalog_title", s.catalog().title},
                 {"catalog_version", s.catalog().version},
                 {"vote_columns", {"StronglyDisagree", "Disagree", "Agree", "StronglyAgree", "DontKnow"}}};
  return doc;
}

std::string findings_markdown(const ojson& f) {
  std::ostringstream md;
  const auto& h = f.at("header");
  const bool draft = h.at("status") == "draft";
  md << "# Findings: " << h.at("title").get<std::string>() << "\n\n";
  if (draft) md << "> " << kDraftBanner << "\n\n";
  md << "- Catalog version: " << h.at("catalog_version").get<std::string>() << "\n";
  md << "- Session date: " << h.at("session_date").get<std::string>() << "\n";
  md << "- Participants: " << h.at("participant_count").get<std::size_t>() << "\n";
  const auto& m = f.at("maturity");
  md << "- Maturity level (" << m.at("label").get<std::string>() << "): "
     << (m.at("level").is_null() ? std::string("withheld") : std::to_string(m.at("level").get<int>()));
  if (!m.at("note").get<std::string>().empty()) md << " (" << m.at("note").get<std::string>() << ")";
  md << "\n\n## Process areas\n";
  for (const auto& a : f.at("areas")) {
    md << "\n### " << a.at("area_id").get<std::string>() << ": " << a.at("name").get<std::string>() << "\n\n";
    md << "Result: **" << a.at("satisfied").get<std::string>() << "**";
    if (a.at("disposition") != "none") md << " (skipped, disposition " << a.at("disposition").get<std::string>() << ")";
    md << "\n";
    if (a.contains("skip_reason")) md << "\nSkip reason: " << a.at("skip_reason").get<std::string>() << "\n";
    md << "\n";
    for (const auto& g : a.at("goals")) md << "- " << g.at("summary").get<std::string>() << "\n";
  }
  auto list = [&md](const char* title, const ojson& items, const char* field) {
    md << "\n## " << title << "\n\n";
    if (items.empty()) {
      md << "None.\n";
      return;
    }
    for (const auto& it : items) md << "- " << it.at(field).get<std::string>() << "\n";
  };
  md << "\n## Strengths\n\n";
  if (f.at("strengths").empty()) md << "None.\n";
  for (const auto& it : f.at("strengths"))
    md << "- " << it.at("model_ref").get<std::string>() << ": " << it.at("text").get<std::string>() << "\n";
  list("Weaknesses", f.at("weaknesses"), "text");
  md << "\n## Assessor judgments\n\n";
  if (f.at("judgments").empty()) md << "None.\n";
  for (const auto& it : f.at("judgments"))
    md << "- " << it.at("model_ref").get<std::string>() << " rated " << it.at("rating").get<std::string>() << ": "
       << it.at("rationale").get<std::string>() << "\n";
  md << "\n## Misinformation notes\n\n";
  if (f.at("misinformation_notes").empty()) md << "None.\n";
  for (const auto& it : f.at("misinformation_notes"))
    md << "- " << it.at("model_ref").get<std::string>() << ": " << it.at("note").get<std::string>() << "\n";
  md << "\n## Parking lot\n\n";
  if (f.at("parking_lot").empty()) md << "None.\n";
  for (const auto& it : f.at("parking_lot")) {
    md << "- " << it.at("item_id").get<std::string>() << " [" << it.at("status").get<std::string>() << "] "
       << it.at("text").get<std::string>();
    if (it.at("consensus_reached").is_boolean() && !it.at("consensus_reached").get<bool>())
      md << " (consensus not reached)";
    if (!it.at("evidence_note").get<std::string>().empty()) md << ". " << it.at("evidence_note").get<std::string>();
    md << "\n";
  }
  return md.str();
}

std::string vote_table_markdown(const ojson& vt, bool draft) {
  std::ostringstream md;
  md << "# Vote Table\n\n";
  if (draft) md << "> " << kDraftBanner << "\n\n";
  std::size_t n = 0;
  for (const auto& a : vt) {
    md << "## " << ++n << ". " << a.at("area_name").get<std::string>() << " (" << a.at("area_id").get<std::string>()
       << ")\n\n";
    md << "| # | Practice | Strongly disagree | Disagree | Agree | Strongly agree | Don't know | Total | Agree % | "
          "Disagree % | Don't know % |\n";
    md << "|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : a.at("rows")) {
      md << "| " << r.at("row").get<std::size_t>() << " | " << r.at("model_ref").get<std::string>() << " | ";
      if (r.at("status") == "NotRated") {
        md << "NotRated | | | | | | | | |\n";
        continue;
      }
      const auto& c = r.at("counts");
      for (const char* col : {"StronglyDisagree", "Disagree", "Agree", "StronglyAgree", "DontKnow"})
        md << c.at(col).get<std::uint32_t>() << " | ";
      md << r.at("total").get<std::uint32_t>() << " | " << r.at("positive_pct").get<std::uint32_t>() << "% | "
         << r.at("negative_pct").get<std::uint32_t>() << "% | " << r.at("dont_know_pct").get<std::uint32_t>()
         << "% |\n";
    }
    md << "\n";
  }
  return md.str();
}

std::string practice_tables_markdown(const ojson& tables, bool draft) {
  std::ostringstream md;
  md << "# Practice Tables\n\n";
  if (draft) md << "> " << kDraftBanner << "\n\n";
  auto yn = [](const ojson& a) {
    std::string s = a.at("value").is_null() ? "unanswered" : (a.at("value").get<bool>() ? "yes" : "no");
    if (!a.at("note").get<std::string>().empty()) s += " (" + a.at("note").get<std::string>() + ")";
    return s;
  };
  for (const auto& t : tables) {
    md << "## " << t.at("model_ref").get<std::string>() << " (" << t.at("story_id").get<std::string>() << ")\n\n";
    md << t.at("story").get<std::string>() << "\n\n";
    md << "- Rating: " << t.at("rating").get<std::string>() << "\n";
    md << "- Performed: "
       << (t.at("performed").is_null() ? std::string("undetermined") : (t.at("performed").get<bool>() ? "yes" : "no"))
       << "\n";
    if (!t.at("alternate_practice_desc").get<std::string>().empty())
      md << "- Alternate practice: " << t.at("alternate_practice_desc").get<std::string>() << "\n";
    md << "- Relevant: " << yn(t.at("relevant")) << "\n";
    md << "- Efficient: " << yn(t.at("efficient")) << "\n";
    md << "- Institutionalized: " << yn(t.at("institutionalized")) << "\n";
    md << "- Documented: " << yn(t.at("documented")) << "\n";
    md << "- Strengths / weaknesses: " << t.at("strengths_weaknesses").get<std::string>() << "\n";
    md << "- Implementation blockers: " << t.at("implementation_blockers").get<std::string>() << "\n";
    md << "- Traceable problems: " << t.at("traceable_problems").get<std::string>() << "\n";
    md << "- Additional comments: " << t.at("additional_comments").get<std::string>() << "\n";
    if (t.at("override_incomplete").get<bool>()) md << "- Definitive vote opened with the table incomplete\n";
    if (!t.at("explanations").empty()) {
      md << "\nExplanation notes:\n\n";
      for (const auto& e : t.at("explanations"))
        md << e.at("position").get<std::size_t>() << ". " << e.at("note").get<std::string>() << "\n";
      if (t.at("early_exit").get<bool>()) md << "\n(explanations closed early: nothing new to add)\n";
    }
    md << "\n";
  }
  return md.str();
}

namespace {

Session replay_for_report(const Journal& journal) {
  try {
    return replay_journal(journal);
  } catch (const Error& e) {
    throw Error(ErrorCode::parse, std::string("corrupt journal: ") + e.what());
  }
}

}  // namespace

std::string render_findings(const Journal& journal, ExportFormat format, const ReportOptions& options) {
  const Session s = replay_for_report(journal);
  if (format == ExportFormat::json) return machine_export(s, options).dump(2) + "\n";
  return findings_markdown(build_findings(s, options));
}

std::string export_vote_table(const Journal& journal, ExportFormat format, const ReportOptions& options) {
  const Session s = replay_for_report(journal);
  const ojson vt = vote_table_json(s);
  if (format == ExportFormat::json) return vt.dump(2) + "\n";
  return vote_table_markdown(vt, options.draft || s.phase() != Phase::Closed);
}

std::string export_practice_tables(const Journal& journal, ExportFormat format, const ReportOptions& options) {
  const Session s = replay_for_report(journal);
  const ojson pt = practice_tables_json(s);
  if (format == ExportFormat::json) return pt.dump(2) + "\n";
  return practice_tables_markdown(pt, options.draft || s.phase() != Phase::Closed);
}

void write_reports(const Session& s, const std::string& out_dir, const ReportOptions& options) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create output directory '" + out_dir + "': " + ec.message());
  const ojson doc = machine_export(s, options);
  const bool draft = options.draft;
  const fs::path dir(out_dir);
  write_file_atomic(dir / "findings.json", doc.dump(2) + "\n");
  write_file_atomic(dir / "findings.md", findings_markdown(doc.at("findings")));
  write_file_atomic(dir / "vote_table.json", doc.at("vote_table").dump(2) + "\n");
  write_file_atomic(dir / "vote_table.md", vote_table_markdown(doc.at("vote_table"), draft));
  write_file_atomic(dir / "practice_tables.json", doc.at("practice_tables").dump(2) + "\n");
  write_file_atomic(dir / "practice_tables.md", practice_tables_markdown(doc.at("practice_tables"), draft));
}

}  // namespace nga
