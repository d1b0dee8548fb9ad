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

// Thresholds and values of the symmetric linear game on a coarse grid.

#include <cstdio>

#include "refgame/game.hpp"

int main() {
  const auto g = refgame::symmetric_linear_game();
  const auto s = refgame::solve_game(g);
  std::printf("a* = %.10f  b* = %.10f  kappa = (%.6f, %.6f)\n", s.eq.a_star, s.eq.b_star, s.kappas.k1, s.kappas.k2);
  std::printf("%8s %12s %12s %12s %12s\n", "x", "v1", "v2", "V1", "V2");
  for (double x = -4.0; x <= 4.0 + 1e-12; x += 0.5)
    std::printf("%8.2f %12.6f %12.6f %12.6f %12.6f\n", x, s.sv.v1(x), s.sv.v2(x), s.cv.V1(x), s.cv.V2(x));
}
