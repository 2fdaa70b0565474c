#pragma once

#include <cstddef>
#include <span>

#include "mfgs/environment.hpp"
#include "mfgs/tensor.hpp"

namespace mfgs {

/// Stage-major array over the state-action grid.  The tensor shape is
/// (stages,) + state_shape + action_shape, so stage t occupies one
/// contiguous row-major slab.
struct StagedGrid {
  Tensor values;
  Shape state_shape;
  Shape action_shape;

  std::size_t num_stages() const { return values.shape().empty() ? 0 : values.shape()[0]; }
  std::size_t num_states() const { return shape_size(state_shape); }
  std::size_t num_actions() const { return shape_size(action_shape); }
  std::size_t stage_size() const { return num_states() * num_actions(); }

  std::span<double> stage(std::size_t t) {
    return values.span().subspan(t * stage_size(), stage_size());
  }
  std::span<const double> stage(std::size_t t) const {
    return values.span().subspan(t * stage_size(), stage_size());
  }
  /// Copy of stage t as a standalone tensor of shape state_shape+action_shape
  /// (the form the environment callables receive).
  Tensor stage_tensor(std::size_t t) const;
};

StagedGrid make_staged_grid(std::size_t stages, Shape state_shape, Shape action_shape,
                            double fill = 0.0);

/// pi[t][s][.] is the action distribution played in state s at stage t;
/// rows are nonnegative and sum to one.
struct Policy : StagedGrid {};

/// L[t] is the joint state-action distribution of the population at stage t;
/// every stage is nonnegative and sums to one.
struct MeanFieldFlow : StagedGrid {};

/// Stage-to-go action values Q[t][s][a] with the matching state values V.
/// V is the policy aggregation (policy_q_values) or the max aggregation
/// (best_response) of Q, depending on which operation produced it.
struct QFunction {
  StagedGrid q;
  Tensor v;  // shape (stages,) + state_shape

  std::span<double> v_stage(std::size_t t) {
    return v.span().subspan(t * q.num_states(), q.num_states());
  }
  std::span<const double> v_stage(std::size_t t) const {
    return v.span().subspan(t * q.num_states(), q.num_states());
  }
};

/// States whose stage mass is at or below this threshold are treated as
/// unreachable when conditioning a flow into a policy; their rows come out
/// uniform.
inline constexpr double kZeroMassThreshold = 1e-12;

/// pi[t][s][a] = 1/|A| everywhere.
Policy uniform_policy(const Environment& env);

/// Pushes the initial distribution forward under the policy and the
/// environment dynamics: L[t][s][a] = mu_t(s) pi[t][s][a] and
/// mu_{t+1} = transition(t, L_t) . L_t, evaluated sequentially so the
/// transition at stage t sees the just-computed L_t.
MeanFieldFlow induced_mean_field(const Environment& env, const Policy& policy);

/// Backward induction of the policy's stage-to-go values against a frozen
/// flow: Q[T] = r_T and Q[t] = r_t + P_t . V[t+1], with V the
/// policy-weighted aggregation of Q.
QFunction policy_q_values(const Environment& env, const Policy& policy,
                          const MeanFieldFlow& flow);

struct BestResponse {
  Policy policy;      // deterministic, first maximizing action in row-major order
  QFunction values;   // V[t][s] = max_a Q[t][s][a]
};

/// Best achievable values against a frozen flow, with the maximizing
/// deterministic policy.  Ties select the first maximizer in row-major
/// action order, with no tolerance band, so results are reproducible.
BestResponse best_response(const Environment& env, const MeanFieldFlow& flow);

/// Conditional policy of a flow: pi[t][s][.] = L[t][s][.] / m_t(s), and
/// uniform where the state mass m_t(s) is at or below kZeroMassThreshold.
Policy policy_from_mean_field(const MeanFieldFlow& flow);

/// Gap between the best-response start value against the policy's induced
/// flow and the policy's own start value, both weighted by the initial
/// distribution.  Zero exactly at a Nash equilibrium; the raw difference is
/// returned (theoretically >= 0, numerically >= -1e-9).
double exploitability(const Environment& env, const Policy& policy);

}  // namespace mfgs
