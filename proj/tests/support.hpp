#pragma once

// Shared test fixtures and independent oracles.  The oracles mirror the
// definitions directly (forward simulation, exhaustive enumeration, finite
// differences) and never reuse the backward-induction code paths they check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "mfgs/core.hpp"
#include "mfgs/envs.hpp"
#include "mfgs/rng.hpp"

namespace testsupport {

inline bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

/// Random policy with strictly positive normalized rows.
inline mfgs::Policy random_policy(const mfgs::Environment& env, std::uint64_t seed) {
  mfgs::Rng rng(seed);
  mfgs::Policy policy = mfgs::uniform_policy(env);
  const std::size_t na = env.num_actions();
  for (std::size_t t = 0; t < env.num_stages(); ++t) {
    const auto row = policy.stage(t);
    for (std::size_t s = 0; s < env.num_states(); ++s) {
      double total = 0.0;
      for (std::size_t a = 0; a < na; ++a) {
        row[s * na + a] = 0.05 + rng.uniform01();
        total += row[s * na + a];
      }
      for (std::size_t a = 0; a < na; ++a) row[s * na + a] /= total;
    }
  }
  return policy;
}

/// Random per-stage distributions over S x A (not dynamics-consistent; used
/// as frozen flows for value computations).
inline mfgs::MeanFieldFlow random_flow(const mfgs::Environment& env, std::uint64_t seed) {
  mfgs::Rng rng(seed);
  mfgs::MeanFieldFlow flow{
      mfgs::make_staged_grid(env.num_stages(), env.state_shape(), env.action_shape())};
  for (std::size_t t = 0; t < env.num_stages(); ++t) {
    const auto stage = flow.stage(t);
    double total = 0.0;
    for (auto& x : stage) {
      x = -std::log(1.0 - rng.uniform01());
      total += x;
    }
    for (auto& x : stage) x /= total;
  }
  return flow;
}

/// Population-independent random tabular environment; supports
/// multidimensional state/action shapes.
inline mfgs::Environment make_random_tabular_env(
    std::uint64_t seed, int horizon, mfgs::Shape state_shape, mfgs::Shape action_shape,
    mfgs::ValidationMode mode = mfgs::ValidationMode::validating) {
  mfgs::Rng rng(seed);
  const std::size_t ns = mfgs::shape_size(state_shape);
  const std::size_t na = mfgs::shape_size(action_shape);
  const std::size_t nsa = ns * na;
  const auto stages = static_cast<std::size_t>(horizon) + 1;

  auto rewards = std::make_shared<std::vector<mfgs::Tensor>>();
  for (std::size_t t = 0; t < stages; ++t) {
    mfgs::Tensor r(mfgs::shape_cat(state_shape, action_shape));
    for (std::size_t i = 0; i < nsa; ++i) r[i] = rng.uniform(-1.0, 1.0);
    rewards->push_back(std::move(r));
  }
  auto kernels = std::make_shared<std::vector<mfgs::Tensor>>();
  for (int t = 0; t < horizon; ++t) {
    mfgs::Tensor p(mfgs::shape_cat(state_shape, mfgs::shape_cat(state_shape, action_shape)));
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.01 + rng.uniform01();
    for (std::size_t col = 0; col < nsa; ++col) {
      double sum = 0.0;
      for (std::size_t sp = 0; sp < ns; ++sp) sum += p[sp * nsa + col];
      for (std::size_t sp = 0; sp < ns; ++sp) p[sp * nsa + col] /= sum;
    }
    kernels->push_back(std::move(p));
  }

  mfgs::Tensor mu0(state_shape);
  double total = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    mu0[s] = 0.1 + rng.uniform01();
    total += mu0[s];
  }
  for (std::size_t s = 0; s < ns; ++s) mu0[s] /= total;

  auto reward = [rewards](int t, const mfgs::Tensor&) {
    return (*rewards)[static_cast<std::size_t>(t)];
  };
  auto transition = [kernels](int t, const mfgs::Tensor&) {
    return (*kernels)[static_cast<std::size_t>(t)];
  };
  return mfgs::Environment(horizon, state_shape, action_shape, std::move(mu0), 1.0, reward,
                           horizon > 0 ? mfgs::Environment::TableFn(transition)
                                       : mfgs::Environment::TableFn(),
                           mode);
}

/// Tables of a frozen flow, the inputs to the enumeration oracle.
struct FrozenTables {
  std::vector<mfgs::Tensor> reward;
  std::vector<mfgs::Tensor> transition;
};

inline FrozenTables freeze_tables(const mfgs::Environment& env, const mfgs::MeanFieldFlow& flow) {
  FrozenTables tables;
  for (int t = 0; t <= env.horizon(); ++t) {
    tables.reward.push_back(env.reward(t, flow.stage_tensor(t)));
    if (t < env.horizon()) tables.transition.push_back(env.transition(t, flow.stage_tensor(t)));
  }
  return tables;
}

/// Value of a deterministic policy (one action per (t, s)) under frozen
/// tables, computed by forward simulation from mu0.
inline double forward_value(const mfgs::Environment& env, const FrozenTables& tables,
                            std::span<const std::size_t> actions) {
  const std::size_t ns = env.num_states();
  const std::size_t na = env.num_actions();
  std::vector<double> mu(env.initial_dist().data(), env.initial_dist().data() + ns);
  std::vector<double> next(ns);
  double total = 0.0;
  for (int t = 0; t <= env.horizon(); ++t) {
    const mfgs::Tensor& r = tables.reward[static_cast<std::size_t>(t)];
    for (std::size_t s = 0; s < ns; ++s)
      total += mu[s] * r[s * na + actions[static_cast<std::size_t>(t) * ns + s]];
    if (t < env.horizon()) {
      const mfgs::Tensor& p = tables.transition[static_cast<std::size_t>(t)];
      for (std::size_t sp = 0; sp < ns; ++sp) {
        double acc = 0.0;
        for (std::size_t s = 0; s < ns; ++s)
          acc += p[sp * ns * na + s * na + actions[static_cast<std::size_t>(t) * ns + s]] * mu[s];
        next[sp] = acc;
      }
      mu.swap(next);
    }
  }
  return total;
}

/// Exhaustive maximum over all |A|^((T+1)|S|) deterministic policies.
inline double brute_force_best_value(const mfgs::Environment& env,
                                     const mfgs::MeanFieldFlow& flow) {
  const FrozenTables tables = freeze_tables(env, flow);
  const std::size_t slots = env.num_stages() * env.num_states();
  const std::size_t na = env.num_actions();
  std::vector<std::size_t> actions(slots, 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    best = std::max(best, forward_value(env, tables, actions));
    std::size_t k = 0;
    while (k < slots) {
      if (++actions[k] < na) break;
      actions[k] = 0;
      ++k;
    }
    if (k == slots) break;
  }
  return best;
}

}  // namespace testsupport
