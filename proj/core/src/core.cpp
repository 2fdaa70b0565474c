#include "mfgs/core.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

namespace mfgs {

Tensor StagedGrid::stage_tensor(std::size_t t) const {
  const auto view = stage(t);
  return Tensor(shape_cat(state_shape, action_shape),
                std::vector<double>(view.begin(), view.end()));
}

StagedGrid make_staged_grid(std::size_t stages, Shape state_shape, Shape action_shape,
                            double fill) {
  StagedGrid grid;
  grid.values = Tensor(shape_cat(stages, state_shape, action_shape), fill);
  grid.state_shape = std::move(state_shape);
  grid.action_shape = std::move(action_shape);
  return grid;
}

namespace {

void check_compat(const Environment& env, const StagedGrid& grid, const char* what) {
  if (grid.state_shape != env.state_shape() || grid.action_shape != env.action_shape() ||
      grid.num_stages() != env.num_stages())
    throw std::invalid_argument(
        std::string(what) + " with shape " + shape_to_string(grid.values.shape()) +
        " does not match an environment with " + std::to_string(env.num_stages()) +
        " stages, states " + shape_to_string(env.state_shape()) + " and actions " +
        shape_to_string(env.action_shape()));
}

}  // namespace

Policy uniform_policy(const Environment& env) {
  return Policy{make_staged_grid(env.num_stages(), env.state_shape(), env.action_shape(),
                                 1.0 / static_cast<double>(env.num_actions()))};
}

MeanFieldFlow induced_mean_field(const Environment& env, const Policy& policy) {
  check_compat(env, policy, "policy");
  const std::size_t ns = env.num_states();
  const std::size_t na = env.num_actions();
  MeanFieldFlow flow{make_staged_grid(env.num_stages(), env.state_shape(), env.action_shape())};
  std::vector<double> mu(env.initial_dist().data(), env.initial_dist().data() + ns);
  std::vector<double> next(ns);
  for (int t = 0; t <= env.horizon(); ++t) {
    const auto lt = flow.stage(t);
    const auto pit = policy.stage(t);
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t a = 0; a < na; ++a) lt[s * na + a] = mu[s] * pit[s * na + a];
    if (t < env.horizon()) {
      const Tensor p = env.transition(t, flow.stage_tensor(t));
      for (std::size_t sp = 0; sp < ns; ++sp) {
        const double* row = p.data() + sp * ns * na;
        double acc = 0.0;
        for (std::size_t i = 0; i < ns * na; ++i) acc += row[i] * lt[i];
        next[sp] = acc;
      }
      mu.swap(next);
    }
  }
  return flow;
}

QFunction policy_q_values(const Environment& env, const Policy& policy,
                          const MeanFieldFlow& flow) {
  check_compat(env, policy, "policy");
  check_compat(env, flow, "flow");
  const std::size_t ns = env.num_states();
  const std::size_t na = env.num_actions();
  QFunction out;
  out.q = make_staged_grid(env.num_stages(), env.state_shape(), env.action_shape());
  out.v = Tensor(shape_cat(env.num_stages(), env.state_shape()));
  for (int t = env.horizon(); t >= 0; --t) {
    const Tensor r = env.reward(t, flow.stage_tensor(t));
    const auto qt = out.q.stage(t);
    std::copy(r.data(), r.data() + ns * na, qt.begin());
    if (t < env.horizon()) {
      const Tensor p = env.transition(t, flow.stage_tensor(t));
      const auto vnext = out.v_stage(t + 1);
      for (std::size_t i = 0; i < ns * na; ++i) {
        double acc = 0.0;
        for (std::size_t sp = 0; sp < ns; ++sp) acc += p[sp * ns * na + i] * vnext[sp];
        qt[i] += acc;
      }
    }
    const auto vt = out.v_stage(t);
    const auto pit = policy.stage(t);
    for (std::size_t s = 0; s < ns; ++s) {
      double acc = 0.0;
      for (std::size_t a = 0; a < na; ++a) acc += pit[s * na + a] * qt[s * na + a];
      vt[s] = acc;
    }
  }
  return out;
}

BestResponse best_response(const Environment& env, const MeanFieldFlow& flow) {
  check_compat(env, flow, "flow");
  const std::size_t ns = env.num_states();
  const std::size_t na = env.num_actions();
  BestResponse out;
  out.policy = Policy{make_staged_grid(env.num_stages(), env.state_shape(), env.action_shape())};
  out.values.q = make_staged_grid(env.num_stages(), env.state_shape(), env.action_shape());
  out.values.v = Tensor(shape_cat(env.num_stages(), env.state_shape()));
  for (int t = env.horizon(); t >= 0; --t) {
    const Tensor r = env.reward(t, flow.stage_tensor(t));
    const auto qt = out.values.q.stage(t);
    std::copy(r.data(), r.data() + ns * na, qt.begin());
    if (t < env.horizon()) {
      const Tensor p = env.transition(t, flow.stage_tensor(t));
      const auto vnext = out.values.v_stage(t + 1);
      for (std::size_t i = 0; i < ns * na; ++i) {
        double acc = 0.0;
        for (std::size_t sp = 0; sp < ns; ++sp) acc += p[sp * ns * na + i] * vnext[sp];
        qt[i] += acc;
      }
    }
    const auto vt = out.values.v_stage(t);
    const auto pit = out.policy.stage(t);
    for (std::size_t s = 0; s < ns; ++s) {
      // First maximizer in row-major action order; strict > keeps ties stable.
      std::size_t best = 0;
      double best_q = qt[s * na];
      for (std::size_t a = 1; a < na; ++a) {
        if (qt[s * na + a] > best_q) {
          best_q = qt[s * na + a];
          best = a;
        }
      }
      vt[s] = best_q;
      pit[s * na + best] = 1.0;
    }
  }
  return out;
}

Policy policy_from_mean_field(const MeanFieldFlow& flow) {
  const std::size_t ns = flow.num_states();
  const std::size_t na = flow.num_actions();
  Policy policy{make_staged_grid(flow.num_stages(), flow.state_shape, flow.action_shape)};
  for (std::size_t t = 0; t < flow.num_stages(); ++t) {
    const auto lt = flow.stage(t);
    const auto pit = policy.stage(t);
    for (std::size_t s = 0; s < ns; ++s) {
      double mass = 0.0;
      for (std::size_t a = 0; a < na; ++a) mass += lt[s * na + a];
      if (mass <= kZeroMassThreshold) {
        for (std::size_t a = 0; a < na; ++a) pit[s * na + a] = 1.0 / static_cast<double>(na);
      } else {
        for (std::size_t a = 0; a < na; ++a) pit[s * na + a] = lt[s * na + a] / mass;
      }
    }
  }
  return policy;
}

double exploitability(const Environment& env, const Policy& policy) {
  const MeanFieldFlow flow = induced_mean_field(env, policy);
  const BestResponse br = best_response(env, flow);
  const QFunction own = policy_q_values(env, policy, flow);
  const auto v_br = br.values.v_stage(0);
  const auto v_own = own.v_stage(0);
  const double* mu0 = env.initial_dist().data();
  double gap = 0.0;
  for (std::size_t s = 0; s < env.num_states(); ++s) gap += mu0[s] * (v_br[s] - v_own[s]);
  return gap;
}

}  // namespace mfgs
