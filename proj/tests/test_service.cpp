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

#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "error.hpp"
#include "service.hpp"
#include "support/interview.hpp"
#include "support/tempdir.hpp"

using namespace nga;
using namespace nga::testing;
using nlohmann::json;

namespace {

class Running {
 public:
  explicit Running(ServiceOptions o) : hub(std::move(o)), http(hub) {
    hub.recover_all();
    port = http.bind({"127.0.0.1", 0});
    thread = std::thread([this] { http.run(); });
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    for (int i = 0; i < 100 && !client->Get("/healthz"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ~Running() {
    http.stop();
    thread.join();
  }

  SessionHub hub;
  HttpService http;
  int port = 0;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;
};

json create_body(std::size_t practitioners) {
  json roster = json::array({{{"display_name", "Ana (assessor)"}, {"role", "assessor"}}});
  for (std::size_t i = 1; i <= practitioners; ++i)
    roster.push_back({{"display_name", "Person " + std::to_string(i)}, {"role", "practitioner"}});
  return {{"catalog", json::parse(read_file(source_dir() / "tests/fixtures/fixture_catalog.json"))},
          {"roster", roster}};
}

struct Session_ {
  std::string id;
  std::string assessor;
  std::vector<std::string> practitioners;
};

Session_ create(httplib::Client& c, std::size_t practitioners) {
  auto res = c.Post("/sessions", create_body(practitioners).dump(), "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 201);
  const json body = json::parse(res->body);
  Session_ s;
  s.id = body["session_id"];
  for (const auto& cred : body["credentials"]) {
    if (cred["role"] == "assessor") s.assessor = cred["credential"];
    else s.practitioners.push_back(cred["credential"]);
  }
  return s;
}

httplib::Result command(httplib::Client& c, const Session_& s, const std::string& cred, const std::string& kind,
                        json payload = json::object(), const std::string& key = "") {
  json env = {{"credential", cred}, {"command", {{"kind", kind}, {"payload", payload}}}};
  if (!key.empty()) env["idempotency_key"] = key;
  return c.Post(("/sessions/" + s.id + "/commands").c_str(), env.dump(), "application/json");
}

json ok(const httplib::Result& r) {
  REQUIRE(r);
  INFO(r->body);
  REQUIRE(r->status == 200);
  return json::parse(r->body);
}

std::vector<json> parse_sse(const std::string& body) {
  std::vector<json> out;
  std::size_t pos = 0;
  while ((pos = body.find("data: ", pos)) != std::string::npos) {
    const auto end = body.find('\n', pos);
    out.push_back(json::parse(body.substr(pos + 6, end - pos - 6)));
    pos = end;
  }
  return out;
}

httplib::Headers bearer(const std::string& cred) { return {{"Authorization", "Bearer " + cred}}; }

}  // namespace

TEST_CASE("session creation over HTTP") {
  Running svc({});
  auto& c = *svc.client;
  CHECK(c.Get("/healthz")->status == 200);
  const Session_ s = create(c, 3);
  CHECK(s.id.size() == 16);
  CHECK(s.practitioners.size() == 3);

  json bad = create_body(3);
  bad["catalog"]["process_areas"][0]["goals"][0]["stories"][1]["id"] = "PP-1.1";
  bad["catalog"]["process_areas"][0]["goals"][1]["stories"] = json::array();
  auto res = c.Post("/sessions", bad.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  const json err = json::parse(res->body)["error"];
  CHECK(err["code"] == "validation_error");
  CHECK(err["violations"].size() == 2);

  res = c.Post("/sessions", "{not json", "application/json");
  CHECK(res->status == 400);
  json no_assessor = create_body(2);
  no_assessor["roster"].erase(0);
  CHECK(c.Post("/sessions", no_assessor.dump(), "application/json")->status == 400);
}

TEST_CASE("commands, roles and idempotency over HTTP") {
  Running svc({});
  auto& c = *svc.client;
  const Session_ s = create(c, 3);

  auto r = command(c, s, s.practitioners[0], "advance", {{"command", "begin"}});
  CHECK(r->status == 403);
  r = command(c, s, "forged", "advance", {{"command", "begin"}});
  CHECK(r->status == 403);
  r = c.Post("/sessions/0123456789abcdef/commands", json{{"credential", s.assessor}}.dump(), "application/json");
  CHECK(r->status == 404);

  ok(command(c, s, s.assessor, "advance", {{"command", "begin"}}));
  ok(command(c, s, s.assessor, "advance", {{"command", "present_story"}}));
  ok(command(c, s, s.assessor, "advance", {{"command", "open_clarification"}}));
  r = command(c, s, s.practitioners[0], "cast_vote", {{"card", "Always"}});
  CHECK(r->status == 409);
  CHECK(json::parse(r->body)["error"]["message"].get<std::string>().rfind("guard 'phase' failed", 0) == 0);

  ok(command(c, s, s.assessor, "advance", {{"command", "open_preliminary"}}));
  for (const auto& p : s.practitioners) ok(command(c, s, p, "cast_vote", {{"card", "MostOfTheTime"}}));
  const json first = ok(command(c, s, s.assessor, "advance", {{"command", "reveal"}}, "reveal-1"));
  const auto seq = first["seq"].get<std::uint64_t>();
  const json again = ok(command(c, s, s.assessor, "advance", {{"command", "reveal"}}, "reveal-1"));
  CHECK(again == first);
  const auto events = parse_sse(
      c.Get(("/sessions/" + s.id + "/events?follow=0&from=1").c_str(), bearer(s.assessor))->body);
  CHECK(events.back()["seq"] == seq);

  // Keys are scoped per participant.
  const json p_vote = ok(command(c, s, s.assessor, "select_presenter", {}, "same-key"));
  r = command(c, s, s.practitioners[0], "parking_add", {{"text", "x"}}, "same-key");
  CHECK(ok(r)["item_id"] == "PL-1");
  CHECK(p_vote.contains("starter"));
}

TEST_CASE("event stream filtering and export permissions") {
  Running svc({});
  auto& c = *svc.client;
  const Session_ s = create(c, 2);
  ok(command(c, s, s.assessor, "advance", {{"command", "begin"}}));
  ok(command(c, s, s.assessor, "advance", {{"command", "present_story"}}));
  ok(command(c, s, s.assessor, "advance", {{"command", "open_clarification"}}));
  ok(command(c, s, s.assessor, "advance", {{"command", "open_preliminary"}}));
  ok(command(c, s, s.practitioners[0], "cast_vote", {{"card", "Seldom"}}));

  const std::string path = "/sessions/" + s.id + "/events?follow=0";
  const auto as_practitioner = parse_sse(c.Get(path.c_str(), bearer(s.practitioners[1]))->body);
  const auto as_assessor = parse_sse(c.Get(path.c_str(), bearer(s.assessor))->body);
  REQUIRE(as_practitioner.size() == as_assessor.size());
  CHECK(as_assessor.back()["kind"] == "vote_cast");
  CHECK(as_assessor.back()["payload"].contains("participant_id"));
  CHECK_FALSE(as_practitioner.back()["payload"].contains("participant_id"));
  CHECK(as_practitioner.back()["payload"]["cast_count"] == 1);
  for (const auto& e : as_practitioner) CHECK(e.dump().find("Seldom") == std::string::npos);

  // Resume from a sequence number.
  const auto tail = parse_sse(c.Get((path + "&from=5").c_str(), bearer(s.assessor))->body);
  REQUIRE_FALSE(tail.empty());
  CHECK(tail.front()["seq"] == 5);
  CHECK(c.Get(path.c_str(), bearer("nope"))->status == 403);

  // State snapshots follow the role.
  const json ps = json::parse(c.Get(("/sessions/" + s.id + "/state").c_str(), bearer(s.practitioners[0]))->body);
  CHECK(ps["state"]["round"]["cast_count"] == 1);
  CHECK_FALSE(ps["state"]["round"].contains("has_cast"));
  CHECK(ps["state"]["round"]["you_have_cast"] == true);
  const json as = json::parse(c.Get(("/sessions/" + s.id + "/state").c_str(), bearer(s.assessor))->body);
  CHECK(as["state"]["round"]["has_cast"].size() == 2);

  const std::string exp = "/sessions/" + s.id + "/export/vote_table?format=markdown&draft=1";
  CHECK(c.Get(exp.c_str(), bearer(s.practitioners[0]))->status == 403);
  auto r = c.Get(exp.c_str(), bearer(s.assessor));
  CHECK(r->status == 200);
  CHECK(r->body.find("DRAFT") != std::string::npos);
  r = c.Get(("/sessions/" + s.id + "/export/findings?format=json").c_str(), bearer(s.assessor));
  CHECK(r->status == 409);  // not closed and not a draft
  r = c.Get(("/sessions/" + s.id + "/export/findings?format=pdf").c_str(), bearer(s.assessor));
  CHECK(r->status == 400);
  r = c.Get(("/sessions/" + s.id + "/export/journal").c_str(), bearer(s.assessor));
  CHECK(r->status == 200);
  CHECK(parse_journal(r->body).size() == 6);
}

TEST_CASE("live events reach a following client") {
  Running svc({});
  auto& c = *svc.client;
  const Session_ s = create(c, 2);
  std::atomic<bool> got_begin{false};
  std::string received;
  std::thread reader([&] {
    httplib::Client sc("127.0.0.1", svc.port);
    sc.set_read_timeout(5, 0);
    sc.Get(("/sessions/" + s.id + "/events?from=1").c_str(), bearer(s.practitioners[0]),
           [&](const char* data, std::size_t len) {
             received.append(data, len);
             if (received.find("\"command\":\"begin\"") != std::string::npos) {
               got_begin = true;
               return false;
             }
             return true;
           });
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  ok(command(c, s, s.assessor, "advance", {{"command", "begin"}}));
  reader.join();
  CHECK(got_begin);
  const auto events = parse_sse(received);
  REQUIRE(events.size() >= 2);
  CHECK(events[0]["kind"] == "session_created");
  for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i]["seq"] == events[i - 1]["seq"].get<int>() + 1);
}

TEST_CASE("concurrent casts are serialized") {
  Running svc({});
  auto& c = *svc.client;
  const Session_ s = create(c, 9);
  for (const char* cmd : {"begin", "present_story", "open_clarification", "open_preliminary"})
    ok(command(c, s, s.assessor, "advance", {{"command", cmd}}));
  std::vector<std::thread> voters;
  std::atomic<int> failures{0};
  for (std::size_t i = 0; i < s.practitioners.size(); ++i)
    voters.emplace_back([&, i] {
      httplib::Client pc("127.0.0.1", svc.port);
      for (int k = 0; k < 3; ++k) {  // retries and changes of mind
        json env = {{"credential", s.practitioners[i]},
                    {"command", {{"kind", "cast_vote"}, {"payload", {{"card", k == 2 ? "Always" : "Never"}}}}}};
        auto r = pc.Post(("/sessions/" + s.id + "/commands").c_str(), env.dump(), "application/json");
        if (!r || r->status != 200) ++failures;
      }
    });
  for (auto& t : voters) t.join();
  CHECK(failures == 0);
  const json r = ok(command(c, s, s.assessor, "advance", {{"command", "reveal"}}));
  CHECK(r["distribution"]["StronglyAgree"] == 9);
}

TEST_CASE("sessions and credentials survive a restart") {
  TempDir dir;
  ServiceOptions o;
  o.data_dir = dir.path();
  Session_ s;
  json before;
  {
    Running svc(o);
    s = create(*svc.client, 2);
    ok(command(*svc.client, s, s.assessor, "advance", {{"command", "begin"}}, "k-begin"));
    before = json::parse(svc.client->Get(("/sessions/" + s.id + "/state").c_str(), bearer(s.assessor))->body);
  }
  CHECK(std::filesystem::exists(dir / s.id / "journal.jsonl"));
  CHECK(std::filesystem::exists(dir / s.id / "credentials.json"));
  // Credentials never enter the journal.
  CHECK(read_file(dir / s.id / "journal.jsonl").find(s.assessor) == std::string::npos);
  {
    Running svc(o);
    const json after = json::parse(svc.client->Get(("/sessions/" + s.id + "/state").c_str(), bearer(s.assessor))->body);
    CHECK(after == before);
    const json again = ok(command(*svc.client, s, s.assessor, "advance", {{"command", "begin"}}, "k-begin"));
    CHECK(again["seq"] == before["state"]["seq"]);
    ok(command(*svc.client, s, s.assessor, "advance", {{"command", "present_story"}}));
  }
}

TEST_CASE("listen addresses") {
  CHECK(parse_listen_address("0.0.0.0:9000").host == "0.0.0.0");
  CHECK(parse_listen_address("0.0.0.0:9000").port == 9000);
  CHECK(parse_listen_address(":81").host == "127.0.0.1");
  CHECK(parse_listen_address("8081").port == 8081);
  CHECK(parse_listen_address("[::1]:80").host == "::1");
  CHECK_THROWS_AS(parse_listen_address("host:http"), Error);
  CHECK_THROWS_AS(parse_listen_address("host:70000"), Error);
  CHECK(http_status(ErrorCode::guard) == 409);
  CHECK(http_status(ErrorCode::unauthorized) == 403);
}
