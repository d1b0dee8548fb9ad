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

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace refgame {

enum class Status { pass, warn, fail };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::warn: return "warn";
    case Status::fail: return "fail";
  }
  return "unknown";
}

struct CheckItem {
  std::string name;
  Status status = Status::pass;
  std::string detail;
  std::vector<std::pair<std::string, double>> evidence;
};

struct ConditionReport {
  std::vector<CheckItem> items;

  bool any_fail() const {
    for (const auto& i : items)
      if (i.status == Status::fail) return true;
    return false;
  }
  const CheckItem* find(const std::string& name) const {
    for (const auto& i : items)
      if (i.name == name) return &i;
    return nullptr;
  }
  void add(CheckItem item) { items.push_back(std::move(item)); }
};

/// Worst violation of one clause of an equality/inequality system on a grid.
struct ClauseResult {
  std::string clause;
  double worst = 0.0;  // largest violation, already scaled
  double at = 0.0;     // location of the worst violation
  double tol = 0.0;
  std::size_t points = 0;
  bool ok = true;
};

struct InequalityReport {
  std::vector<ClauseResult> clauses;

  bool ok() const {
    for (const auto& c : clauses)
      if (!c.ok) return false;
    return true;
  }
  const ClauseResult* find(const std::string& name) const {
    for (const auto& c : clauses)
      if (c.clause == name) return &c;
    return nullptr;
  }
};

/// Accumulates the worst scaled violation of a clause over grid points.
class ClauseAccumulator {
 public:
  ClauseAccumulator(std::string name, double tol) { r_.clause = std::move(name); r_.tol = tol; }

  void add(double x, double violation) {
    ++r_.points;
    if (std::isnan(violation)) {
      if (!nan_) r_.at = x;
      nan_ = true;
      return;
    }
    if (r_.points == 1 || violation > r_.worst) {
      r_.worst = violation;
      if (!nan_) r_.at = x;
    }
  }
  ClauseResult finish() const {
    ClauseResult out = r_;
    if (nan_) out.worst = std::numeric_limits<double>::quiet_NaN();
    out.ok = !nan_ && (out.points == 0 || out.worst <= out.tol);
    return out;
  }

 private:
  ClauseResult r_;
  bool nan_ = false;
};

}  // namespace refgame
