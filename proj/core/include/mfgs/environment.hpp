#pragma once

#include <cstddef>
#include <functional>

#include "mfgs/errors.hpp"
#include "mfgs/tensor.hpp"

namespace mfgs {

/// Absolute tolerance for probability and normalization checks.
inline constexpr double kProbTol = 1e-9;

/// Whether environment callable outputs are checked on every query.
enum class ValidationMode { validating, fast };

/// A finite-horizon mean-field game.
///
/// The game runs for horizon() transitions, i.e. decision stages
/// t = 0..horizon(), and rewards accrue at every stage *including the
/// terminal one*.  Rewards and transitions are callables of the stage index
/// and the joint state-action distribution L_t of the population at that
/// stage, which is how population coupling enters the model.  The callables
/// are opaque to the library; in validating mode every output is checked
/// against the stochasticity and reward-bound invariants, in fast mode the
/// outputs are trusted.
class Environment {
 public:
  /// reward:     (t, L_t over SxA) -> tensor of shape S+A, |entries| <= r_max.
  /// transition: (t, L_t over SxA) -> tensor of shape S'+S+A whose leading
  ///             block is a next-state distribution per (s, a); queried only
  ///             for t < horizon.
  using TableFn = std::function<Tensor(int, const Tensor&)>;

  Environment(int horizon, Shape state_shape, Shape action_shape,
              Tensor initial_dist, double max_reward, TableFn reward_fn,
              TableFn transition_fn,
              ValidationMode mode = ValidationMode::validating);

  int horizon() const { return horizon_; }
  /// horizon() + 1: stages t = 0..horizon() all collect rewards.
  std::size_t num_stages() const { return static_cast<std::size_t>(horizon_) + 1; }
  const Shape& state_shape() const { return state_shape_; }
  const Shape& action_shape() const { return action_shape_; }
  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  const Tensor& initial_dist() const { return initial_dist_; }
  double max_reward() const { return max_reward_; }
  ValidationMode mode() const { return mode_; }

  /// Copy of this environment with a different validation mode.
  Environment with_mode(ValidationMode mode) const;

  Tensor reward(int t, const Tensor& flow_stage) const;
  Tensor transition(int t, const Tensor& flow_stage) const;

  /// Raw callable outputs without value checks (shape is still enforced).
  /// Used by derivative probes that evaluate slightly off the simplex,
  /// where the bound invariants need not hold.
  Tensor reward_unchecked(int t, const Tensor& flow_stage) const;
  Tensor transition_unchecked(int t, const Tensor& flow_stage) const;

 private:
  Tensor call_reward(int t, const Tensor& flow_stage) const;
  Tensor call_transition(int t, const Tensor& flow_stage) const;

  int horizon_ = 0;
  Shape state_shape_;
  Shape action_shape_;
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  Tensor initial_dist_;
  double max_reward_ = 0.0;
  TableFn reward_fn_;
  TableFn transition_fn_;
  ValidationMode mode_ = ValidationMode::validating;
  Shape reward_shape_;      // S+A
  Shape transition_shape_;  // S'+S+A
};

}  // namespace mfgs
