#include "mfgs/environment.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace mfgs {

namespace {

void check_shape_positive(const Shape& shape, const char* what) {
  if (shape.empty())
    throw std::invalid_argument(std::string(what) + " shape must have at least one axis");
  for (std::size_t d : shape)
    if (d == 0) throw std::invalid_argument(std::string(what) + " shape has a zero axis");
}

}  // namespace

Environment::Environment(int horizon, Shape state_shape, Shape action_shape, Tensor initial_dist,
                         double max_reward, TableFn reward_fn, TableFn transition_fn,
                         ValidationMode mode)
    : horizon_(horizon),
      state_shape_(std::move(state_shape)),
      action_shape_(std::move(action_shape)),
      initial_dist_(std::move(initial_dist)),
      max_reward_(max_reward),
      reward_fn_(std::move(reward_fn)),
      transition_fn_(std::move(transition_fn)),
      mode_(mode) {
  if (horizon_ < 0) throw std::invalid_argument("horizon must be >= 0");
  check_shape_positive(state_shape_, "state");
  check_shape_positive(action_shape_, "action");
  num_states_ = shape_size(state_shape_);
  num_actions_ = shape_size(action_shape_);
  reward_shape_ = shape_cat(state_shape_, action_shape_);
  transition_shape_ = shape_cat(state_shape_, shape_cat(state_shape_, action_shape_));

  if (initial_dist_.shape() != state_shape_)
    throw std::invalid_argument("initial distribution shape " +
                                shape_to_string(initial_dist_.shape()) +
                                " does not match the state shape " + shape_to_string(state_shape_));
  double total = 0.0;
  for (std::size_t s = 0; s < num_states_; ++s) {
    const double p = initial_dist_[s];
    if (!std::isfinite(p) || p < -kProbTol)
      throw std::invalid_argument("initial distribution entry " +
                                  flat_index_to_string(s, state_shape_) + " is negative");
    total += p;
  }
  if (std::abs(total - 1.0) > kProbTol)
    throw std::invalid_argument("initial distribution sums to " + std::to_string(total));

  if (!(std::isfinite(max_reward_) && max_reward_ > 0.0))
    throw std::invalid_argument("r_max must be positive and finite");
  if (!reward_fn_) throw std::invalid_argument("reward_fn must be set");
  if (horizon_ > 0 && !transition_fn_)
    throw std::invalid_argument("transition_fn must be set when horizon > 0");
}

Environment Environment::with_mode(ValidationMode mode) const {
  Environment copy = *this;
  copy.mode_ = mode;
  return copy;
}

Tensor Environment::call_reward(int t, const Tensor& flow_stage) const {
  if (t < 0 || t > horizon_)
    throw std::invalid_argument("reward queried at t=" + std::to_string(t) + ", valid range 0.." +
                                std::to_string(horizon_));
  Tensor r = reward_fn_(t, flow_stage);
  if (r.shape() != reward_shape_)
    throw ValidationError("reward tensor at t=" + std::to_string(t) + " has shape " +
                          shape_to_string(r.shape()) + ", expected " +
                          shape_to_string(reward_shape_));
  return r;
}

Tensor Environment::call_transition(int t, const Tensor& flow_stage) const {
  if (t < 0 || t >= horizon_)
    throw std::invalid_argument("transition queried at t=" + std::to_string(t) +
                                ", valid range 0.." + std::to_string(horizon_ - 1));
  Tensor p = transition_fn_(t, flow_stage);
  if (p.shape() != transition_shape_)
    throw ValidationError("transition tensor at t=" + std::to_string(t) + " has shape " +
                          shape_to_string(p.shape()) + ", expected " +
                          shape_to_string(transition_shape_));
  return p;
}

Tensor Environment::reward(int t, const Tensor& flow_stage) const {
  Tensor r = call_reward(t, flow_stage);
  if (mode_ == ValidationMode::validating) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double x = r[i];
      const std::size_t s = i / num_actions_;
      const std::size_t a = i % num_actions_;
      const std::string where = "(t=" + std::to_string(t) + ", s=" +
                                flat_index_to_string(s, state_shape_) + ", a=" +
                                flat_index_to_string(a, action_shape_) + ")";
      if (!std::isfinite(x)) throw ValidationError("reward " + where + " is not finite");
      if (std::abs(x) > max_reward_ + kProbTol)
        throw ValidationError("reward " + where + " = " + std::to_string(x) +
                              " exceeds r_max = " + std::to_string(max_reward_));
    }
  }
  return r;
}

Tensor Environment::transition(int t, const Tensor& flow_stage) const {
  Tensor p = call_transition(t, flow_stage);
  if (mode_ == ValidationMode::validating) {
    const std::size_t block = num_states_ * num_actions_;
    for (std::size_t sp = 0; sp < num_states_; ++sp) {
      for (std::size_t i = 0; i < block; ++i) {
        const double x = p[sp * block + i];
        if (std::isfinite(x) && x >= -kProbTol) continue;
        const std::size_t s = i / num_actions_;
        const std::size_t a = i % num_actions_;
        throw ValidationError("transition entry (t=" + std::to_string(t) + ", s'=" +
                              flat_index_to_string(sp, state_shape_) + ", s=" +
                              flat_index_to_string(s, state_shape_) + ", a=" +
                              flat_index_to_string(a, action_shape_) + ") = " + std::to_string(x) +
                              " is negative or not finite");
      }
    }
    for (std::size_t i = 0; i < block; ++i) {
      double col = 0.0;
      for (std::size_t sp = 0; sp < num_states_; ++sp) col += p[sp * block + i];
      if (std::abs(col - 1.0) > kProbTol) {
        const std::size_t s = i / num_actions_;
        const std::size_t a = i % num_actions_;
        throw ValidationError("transition column (t=" + std::to_string(t) + ", s=" +
                              flat_index_to_string(s, state_shape_) + ", a=" +
                              flat_index_to_string(a, action_shape_) + ") sums to " +
                              std::to_string(col));
      }
    }
  }
  return p;
}

Tensor Environment::reward_unchecked(int t, const Tensor& flow_stage) const {
  return call_reward(t, flow_stage);
}

Tensor Environment::transition_unchecked(int t, const Tensor& flow_stage) const {
  return call_transition(t, flow_stage);
}

}  // namespace mfgs
