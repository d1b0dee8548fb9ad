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

// Pollution game: compare the analytic values with a short simulation of the
// reflected equilibrium from a few starting points.

#include <cstdio>

#include "refgame/game.hpp"

int main() {
  using namespace refgame;
  const auto g = pollution_game(PollutionConfig{});
  const auto s = solve_game(g);
  std::printf("a* = %.6f  b* = %.6f\n", s.eq.a_star, s.eq.b_star);
  ControlMcConfig mc;
  mc.n_paths = 2000;
  mc.sim.dt = 2e-3;
  mc.sim.horizon = 16.0;
  mc.sim.seed = 11;
  const auto [nu, xi] = equilibrium_strategies(s.eq.a_star, s.eq.b_star);
  std::printf("%8s %12s %12s %12s %12s\n", "x0", "V1", "MC1", "V2", "MC2");
  for (double x0 : default_starts(s)) {
    const auto e = control_payoff_mc(g.model, g.control, nu, xi, x0, mc);
    std::printf("%8.3f %12.5f %12.5f %12.5f %12.5f\n", x0, s.cv.V1(x0), e.psi1.mean, s.cv.V2(x0), e.psi2.mean);
  }
}
