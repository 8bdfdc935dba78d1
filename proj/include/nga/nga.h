/*
 * Copyright 2026 The nga Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * nga: group-interview process assessment core.
 *
 * Every function returning nga_status reports failures through the status
 * code plus a thread-local message readable with nga_last_error(). Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with nga_string_free().
 */
#ifndef NGA_NGA_H
#define NGA_NGA_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(NGA_BUILDING)
#    define NGA_API __declspec(dllexport)
#  else
#    define NGA_API __declspec(dllimport)
#  endif
#else
#  define NGA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nga_status {
  NGA_OK = 0,
  NGA_ERR_PARSE = 1,
  NGA_ERR_VALIDATION = 2,
  NGA_ERR_IO = 3,
  NGA_ERR_ILLEGAL_TRANSITION = 4,
  NGA_ERR_GUARD = 5,
  NGA_ERR_UNAUTHORIZED = 6,
  NGA_ERR_NOT_FOUND = 7,
  NGA_ERR_INVALID_ARGUMENT = 8,
  NGA_ERR_CONFLICT = 9,
  NGA_ERR_INTERNAL = 10
} nga_status;

typedef struct nga_catalog nga_catalog;
typedef struct nga_session nga_session;
typedef struct nga_service nga_service;

NGA_API const char* nga_version(void);
NGA_API const char* nga_status_name(nga_status status);
/* Message of the last failure on this thread; "" when none. */
NGA_API const char* nga_last_error(void);
NGA_API void nga_string_free(char* s);

/* ---- catalog ---------------------------------------------------------- */

NGA_API nga_status nga_catalog_load(const char* json, size_t len, nga_catalog** out);
NGA_API nga_status nga_catalog_load_file(const char* path, nga_catalog** out);
/* Validates a catalog file. On NGA_ERR_VALIDATION, *violations receives a
 * JSON array with one string per violation. */
NGA_API nga_status nga_catalog_validate_file(const char* path, char** violations);
NGA_API size_t nga_catalog_story_count(const nga_catalog* catalog);
/* JSON array of story ids in catalog order. */
NGA_API nga_status nga_catalog_story_ids(const nga_catalog* catalog, char** out_json);
NGA_API nga_status nga_catalog_render_story(const nga_catalog* catalog, const char* story_id, char** out);
NGA_API void nga_catalog_free(nga_catalog* catalog);

/* ---- vote interpretation ---------------------------------------------- */

/* counts[] in column order: StronglyDisagree (Never), Disagree (Seldom),
 * Agree (MostOfTheTime), StronglyAgree (Always), DontKnow. Writes the
 * rating code ("FI", "LI", "PI", "NI", "NeedsJudgment") and the 1-based
 * rule number. */
NGA_API nga_status nga_classify(const unsigned counts[5], char** rating, int* rule);

/* ---- sessions --------------------------------------------------------- */

/* request: {"catalog": {...}, "roster": [{"role": ..., "participant_id"?}],
 * "config"?: {...}}. storage_dir may be NULL for an in-memory session. */
NGA_API nga_status nga_session_create(const char* request_json, const char* storage_dir, nga_session** out);
NGA_API nga_status nga_session_recover(const char* storage_dir, nga_session** out);
/* command: {"kind": ..., "payload": {...}}; idempotency_key may be NULL. */
NGA_API nga_status nga_session_execute(nga_session* session, const char* actor_id, const char* command_json,
                                       const char* idempotency_key, char** out_json);
/* viewer_id NULL or the assessor's id: assessor view; otherwise the
 * practitioner view for that participant. */
NGA_API nga_status nga_session_snapshot(const nga_session* session, const char* viewer_id, char** out_json);
NGA_API nga_status nga_session_journal(const nga_session* session, char** out_jsonl);
NGA_API void nga_session_free(nga_session* session);

/* ---- reports ---------------------------------------------------------- */

/* artifact: "findings", "vote_table" or "practice_tables"; format: "json"
 * or "markdown". journal is a journal document (JSONL or JSON array). */
NGA_API nga_status nga_export(const char* journal, size_t len, const char* artifact, const char* format, int draft,
                              char** out);
/* Replays a transcript file and writes findings.json, findings.md,
 * vote_table.{json,md} and practice_tables.{json,md} into out_dir. */
NGA_API nga_status nga_replay(const char* transcript_path, const char* out_dir, int draft);

/* ---- service ---------------------------------------------------------- */

/* data_dir NULL or "" keeps sessions in memory. defaults_json may be NULL. */
NGA_API nga_status nga_service_create(const char* data_dir, const char* defaults_json, nga_service** out);
/* Number of sessions recovered from the data directory. */
NGA_API size_t nga_service_recovered(const nga_service* service);
/* listen: "host:port", ":port" or "port"; port 0 picks a free one. */
NGA_API nga_status nga_service_bind(nga_service* service, const char* listen, int* out_port);
/* Blocks until nga_service_stop() is called from another thread. */
NGA_API nga_status nga_service_run(nga_service* service);
NGA_API void nga_service_stop(nga_service* service);
NGA_API void nga_service_free(nga_service* service);

#ifdef __cplusplus
}
#endif

#endif /* NGA_NGA_H */
