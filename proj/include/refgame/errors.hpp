// Copyright 2026 The refgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace refgame {

enum class ErrorKind {
  config,          // malformed or inadmissible configuration
  no_equilibrium,  // threshold system has no root in the search box
  assumption,      // a structural assumption on the model/payoffs fails
  stale,           // artifact does not match the current configuration
  check_failure,   // a verification check did not pass
  domain,          // evaluation outside the state interval
  numeric,         // quadrature / ODE / linear algebra breakdown
  construction,    // an object could not be built with its invariants
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::no_equilibrium: return "no_equilibrium";
    case ErrorKind::assumption: return "assumption";
    case ErrorKind::stale: return "stale";
    case ErrorKind::check_failure: return "check_failure";
    case ErrorKind::domain: return "domain";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::construction: return "construction";
  }
  return "unknown";
}

/// Exit code contract of the command line tool.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return 1;
    case ErrorKind::no_equilibrium: return 2;
    case ErrorKind::assumption: return 3;
    case ErrorKind::stale: return 4;
    case ErrorKind::check_failure: return 5;
    default: return 6;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string stage = {})
      : std::runtime_error(stage.empty() ? what : stage + ": " + what),
        kind_(kind),
        stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

/// Runs f and re-throws any refgame error tagged with the stage name.
template <class F>
decltype(auto) in_stage(const std::string& stage, F&& f) {
  try {
    return std::forward<F>(f)();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw Error(e.kind(), e.what(), stage);
  }
}

}  // namespace refgame
