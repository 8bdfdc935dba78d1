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

// Regenerates tests/fixtures/interview.jsonl from the scripted interview.

#include <iostream>

#include "support/interview.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture <out.jsonl>\n";
    return 2;
  }
  try {
    const auto live = nga::testing::run_fixture_interview();
    nga::write_file_atomic(argv[1], nga::journal_to_jsonl(live->journal()));
    std::cout << "wrote " << live->journal().size() << " events to " << argv[1] << "\n";
  } catch (const std::exception& e) {
    std::cerr << "make_fixture: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
