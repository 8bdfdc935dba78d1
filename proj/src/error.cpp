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

#include "error.hpp"

namespace nga {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse: return "parse_error";
    case ErrorCode::validation: return "validation_error";
    case ErrorCode::io: return "io_error";
    case ErrorCode::illegal_transition: return "illegal_transition";
    case ErrorCode::guard: return "guard_failure";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::internal: return "internal_error";
  }
  return "unknown_error";
}

namespace {

std::string join_violations(const std::vector<std::string>& violations) {
  std::string out = std::to_string(violations.size()) + " violation(s)";
  for (const auto& v : violations) {
    out += "\n  ";
    out += v;
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(ErrorCode::validation, join_violations(violations)),
      violations_(std::move(violations)) {}

}  // namespace nga
