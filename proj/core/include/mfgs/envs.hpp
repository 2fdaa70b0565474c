#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfgs/environment.hpp"
#include "mfgs/params.hpp"

namespace mfgs {

/// Two-action congestion game on three states {init, left, right}.  The
/// whole population starts at init, one transition moves it left or right,
/// and the terminal reward is minus the mass sharing the chosen side.  The
/// uniform split is the equilibrium (exploitability 0); the all-left policy
/// has exploitability exactly 1.
Environment make_left_right(ValidationMode mode = ValidationMode::validating);

/// Line of n positions with moves {-1, 0, +1} clipped to the ends.  With
/// probability `noise` the move is replaced by a uniformly random one.
/// Rewards trade distance to the bar against crowd aversion:
/// r(s) = -|s - bar|/n - log(m_t(s) + log_eps), collected at every stage.
Environment make_beach_bar(int n = 10, int bar = 5, double noise = 0.1, int horizon = 5,
                           double log_eps = 1e-3,
                           ValidationMode mode = ValidationMode::validating);

/// Cyclic matching game on states {init, R, P, S}: action i moves to state
/// i+1 and the terminal payoff of each gesture is the mass of the gesture it
/// beats minus the mass of the one it loses to.  Uniform play is the
/// equilibrium; pure Rock has exploitability exactly 1.
Environment make_rock_paper_scissors(ValidationMode mode = ValidationMode::validating);

/// Seeded environment with Uniform(-1,1) base rewards, random column-
/// normalized transition kernels (independent of the population), and a
/// reward coupling that is linear in L_t:
///   r_t = R0[t] + coupling * <W[t][s][a], L_t>,  W ~ Uniform(-1,1).
/// r_max = 1 + coupling * max|W| holds exactly because L_t is a
/// distribution.  Smooth in L and exactly reproducible from the seed, which
/// makes it the designated fixture for finite-difference and brute-force
/// oracle checks.
Environment make_random_linear(std::uint64_t seed, int horizon, int n_states, int n_actions,
                               double coupling = 0.5,
                               ValidationMode mode = ValidationMode::validating);

struct EnvParamSpec {
  std::string name;
  bool integer = false;
  double default_value = 0.0;
  std::string doc;
};

struct EnvEntry {
  std::string name;
  std::vector<EnvParamSpec> params;
  bool seeded = false;  // accepts a "seed" kwarg fed from the CLI --seed flag
  std::function<Environment(const Config&, ValidationMode)> make;
};

/// Built-in environments instantiable by name: left_right, beach_bar,
/// rock_paper_scissors, random_linear.
const std::vector<EnvEntry>& environment_registry();

const EnvEntry* find_environment(const std::string& name);

/// Instantiates a registry environment; unknown names or kwargs throw
/// std::invalid_argument naming the valid choices.
Environment make_environment(const std::string& name, const Config& args,
                             ValidationMode mode = ValidationMode::validating);

}  // namespace mfgs
