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

// Operator entry points: serve, validate, replay.

#include <nga/nga.h>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <pthread.h>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

enum Exit { kOk = 0, kDomain = 1, kEnvironment = 2 };

int exit_for(nga_status s) {
  switch (s) {
    case NGA_OK:
      return kOk;
    case NGA_ERR_IO:
    case NGA_ERR_INTERNAL:
      return kEnvironment;
    default:
      return kDomain;
  }
}

int report(nga_status s, const std::string& what) {
  std::cerr << "nga " << what << ": " << nga_status_name(s) << ": " << nga_last_error() << "\n";
  return exit_for(s);
}

int run_validate(const std::string& path) {
  char* violations = nullptr;
  const nga_status s = nga_catalog_validate_file(path.c_str(), &violations);
  if (s == NGA_OK) {
    std::cout << path << ": ok\n";
    return kOk;
  }
  if (s == NGA_ERR_VALIDATION && violations != nullptr) {
    const auto list = nlohmann::json::parse(violations);
    nga_string_free(violations);
    std::cout << path << ": invalid (" << list.size() << " violation(s))\n";
    for (const auto& v : list) std::cout << "  " << v.get<std::string>() << "\n";
    return kDomain;
  }
  nga_string_free(violations);
  return report(s, "validate");
}

int run_replay(const std::string& transcript, const std::string& out, bool draft) {
  const nga_status s = nga_replay(transcript.c_str(), out.c_str(), draft ? 1 : 0);
  if (s != NGA_OK) return report(s, "replay");
  std::cout << "wrote findings.json, findings.md, vote_table.{json,md}, practice_tables.{json,md} to " << out << "\n";
  return kOk;
}

int run_serve(const std::string& listen, const std::string& data, const std::string& defaults) {
  // Block termination signals before any thread starts so that only the
  // waiter below receives them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  nga_service* svc = nullptr;
  nga_status s = nga_service_create(data.c_str(), defaults.empty() ? nullptr : defaults.c_str(), &svc);
  if (s != NGA_OK) return report(s, "serve");
  int port = 0;
  s = nga_service_bind(svc, listen.c_str(), &port);
  if (s != NGA_OK) {
    nga_service_free(svc);
    return report(s, "serve");
  }
  std::cerr << "nga: serving on port " << port << " with data in '" << data << "' (" << nga_service_recovered(svc)
            << " session(s) recovered)\n";

  std::thread waiter([svc, set] {
    int sig = 0;
    sigwait(&set, &sig);
    std::cerr << "nga: signal " << sig << ", shutting down\n";
    nga_service_stop(svc);
  });
  s = nga_service_run(svc);
  // Wake the waiter if the server ended on its own.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  nga_service_free(svc);
  return s == NGA_OK ? kOk : report(s, "serve");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-interview process assessment service and tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nga_version()));

  std::string listen = "127.0.0.1:8080";
  std::string data = "./nga-data";
  std::string defaults;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--listen", listen, "host:port to listen on")->envname("NGA_LISTEN")->capture_default_str();
  serve->add_option("--data", data, "Directory holding session journals")->envname("NGA_DATA")->capture_default_str();
  serve->add_option("--session-defaults", defaults, "JSON object of session config defaults")
      ->envname("NGA_SESSION_DEFAULTS");

  std::string catalog;
  auto* validate = app.add_subcommand("validate", "Validate a catalog file");
  validate->add_option("catalog", catalog, "Catalog JSON file")->required();

  std::string transcript, out;
  bool draft = false;
  auto* replay = app.add_subcommand("replay", "Replay a transcript and write the findings and exports");
  replay->add_option("transcript", transcript, "Transcript (journal) file")->required();
  replay->add_option("--out", out, "Output directory")->required();
  replay->add_flag("--draft", draft, "Allow an unfinished session; outputs are marked draft");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kEnvironment;
  }
  if (serve->parsed()) return run_serve(listen, data, defaults);
  if (validate->parsed()) return run_validate(catalog);
  return run_replay(transcript, out, draft);
}
