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

#include <string>
#include <string_view>

#include <json.hpp>

#include "journal.hpp"
#include "rating.hpp"
#include "session.hpp"

namespace nga {

enum class ExportFormat { json, markdown };

/// "json" / "structured" or "markdown" / "md" / "tabular"; throws Error(invalid_argument).
ExportFormat parse_export_format(std::string_view text);

struct ReportOptions {
  /// Allows sessions that are not Closed; the output is watermarked.
  bool draft = false;
  LevelReference level_reference = default_level_reference();
};

/// Findings of a session. Requires a Closed session with every judgment
/// resolved unless options.draft is set. Never contains participant ids.
nlohmann::ordered_json build_findings(const Session& session, const ReportOptions& options = {});

/// Vote Table rows for every story in the catalog: a distribution or NotRated.
nlohmann::ordered_json vote_table_json(const Session& session);
/// One Practice Table per story in the catalog.
nlohmann::ordered_json practice_tables_json(const Session& session);

/// {findings, vote_table, practice_tables, meta}
nlohmann::ordered_json machine_export(const Session& session, const ReportOptions& options = {});

std::string findings_markdown(const nlohmann::ordered_json& findings);
std::string vote_table_markdown(const nlohmann::ordered_json& vote_table, bool draft);
std::string practice_tables_markdown(const nlohmann::ordered_json& practice_tables, bool draft);

// Journal-level entry points. Each replays the journal first; a journal that
// does not replay is reported as Error(parse) "corrupt journal".
std::string render_findings(const Journal& journal, ExportFormat format, const ReportOptions& options = {});
std::string export_vote_table(const Journal& journal, ExportFormat format, const ReportOptions& options = {});
std::string export_practice_tables(const Journal& journal, ExportFormat format, const ReportOptions& options = {});

/// Writes findings.json, findings.md, vote_table.{json,md} and
/// practice_tables.{json,md} into out_dir.
void write_reports(const Session& session, const std::string& out_dir, const ReportOptions& options = {});

}  // namespace nga
