#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfgs/errors.hpp"
#include "mfgs/solvers.hpp"

namespace mfgs {

void project_simplex_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (n == 0) throw std::invalid_argument("project_simplex: empty vector");
  // Sorting-based threshold construction: with u the entries in descending
  // order, rho is the largest j with u_j + (1 - sum_{i<=j} u_i)/j > 0 and the
  // projection is max(v + theta, 0) at theta = (1 - sum_{i<=rho} u_i)/rho.
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    cumulative += u[j - 1];
    const double candidate = (1.0 - cumulative) / static_cast<double>(j);
    if (u[j - 1] + candidate > 0.0) theta = candidate;
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = std::max(v[i] + theta, 0.0);
}

std::vector<double> project_simplex(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  project_simplex_inplace(out);
  return out;
}

MfomoPoint MfomoPoint::initial(const Environment& env) {
  MfomoPoint point;
  point.flow = induced_mean_field(env, uniform_policy(env));
  point.y = Tensor(shape_cat(env.num_stages(), env.state_shape()));
  point.z = make_staged_grid(env.num_stages(), env.state_shape(), env.action_shape());
  point.y_cap = static_cast<double>(env.num_stages()) * env.max_reward();
  point.z_cap = 2.0 * point.y_cap;
  return point;
}

namespace {

struct StageTables {
  std::vector<Tensor> reward;      // one per stage
  std::vector<Tensor> transition;  // one per stage t < T
};

StageTables evaluate_tables(const Environment& env, const MeanFieldFlow& flow) {
  StageTables tables;
  for (int t = 0; t <= env.horizon(); ++t) {
    tables.reward.push_back(env.reward(t, flow.stage_tensor(t)));
    if (t < env.horizon()) tables.transition.push_back(env.transition(t, flow.stage_tensor(t)));
  }
  return tables;
}

struct Residuals {
  std::vector<double> flow_res;  // (stages) x states: consistency A_L L - b
  std::vector<double> dual_res;  // (stages) x states x actions: A_L^T y - z - c_L
};

Residuals compute_residuals(const Environment& env, const MfomoPoint& point,
                            const StageTables& tables) {
  const std::size_t ns = env.num_states();
  const std::size_t na = env.num_actions();
  const std::size_t nsa = ns * na;
  const int horizon = env.horizon();
  Residuals res;
  res.flow_res.assign(env.num_stages() * ns, 0.0);
  res.dual_res.assign(env.num_stages() * nsa, 0.0);

  for (int t = 0; t <= horizon; ++t) {
    const auto lt = point.flow.stage(static_cast<std::size_t>(t));
    for (std::size_t s = 0; s < ns; ++s) {
      double mass = 0.0;
      for (std::size_t a = 0; a < na; ++a) mass += lt[s * na + a];
      double expected;
      if (t == 0) {
        expected = env.initial_dist()[s];
      } else {
        const Tensor& p = tables.transition[static_cast<std::size_t>(t - 1)];
        const auto prev = point.flow.stage(static_cast<std::size_t>(t - 1));
        double inflow = 0.0;
        for (std::size_t i = 0; i < nsa; ++i) inflow += p[s * nsa + i] * prev[i];
        expected = inflow;
      }
      res.flow_res[static_cast<std::size_t>(t) * ns + s] = mass - expected;
    }
  }

  for (int t = 0; t <= horizon; ++t) {
    const Tensor& r = tables.reward[static_cast<std::size_t>(t)];
    const auto zt = point.z.stage(static_cast<std::size_t>(t));
    const double* yt = point.y.data() + static_cast<std::size_t>(t) * ns;
    double* out = res.dual_res.data() + static_cast<std::size_t>(t) * nsa;
    if (t < horizon) {
      const Tensor& p = tables.transition[static_cast<std::size_t>(t)];
      const double* ynext = point.y.data() + static_cast<std::size_t>(t + 1) * ns;
      for (std::size_t i = 0; i < nsa; ++i) {
        double continuation = 0.0;
        for (std::size_t sp = 0; sp < ns; ++sp) continuation += p[sp * nsa + i] * ynext[sp];
        out[i] = yt[i / na] - continuation - zt[i] - r[i];
      }
    } else {
      for (std::size_t i = 0; i < nsa; ++i) out[i] = yt[i / na] - zt[i] - r[i];
    }
  }
  return res;
}

double objective_from_residuals(const MfomoPoint& point, const Residuals& res, double c1,
                                double c2, double c3) {
  double term1 = 0.0;
  for (const double x : res.flow_res) term1 += x * x;
  double term2 = 0.0;
  for (const double x : res.dual_res) term2 += x * x;
  double term3 = 0.0;
  const auto l = point.flow.values.span();
  const auto z = point.z.values.span();
  for (std::size_t i = 0; i < l.size(); ++i) term3 += z[i] * l[i];
  return c1 * term1 + c2 * term2 + c3 * term3;
}

void check_point(const Environment& env, const MfomoPoint& point) {
  if (point.flow.state_shape != env.state_shape() ||
      point.flow.action_shape != env.action_shape() ||
      point.flow.num_stages() != env.num_stages() ||
      point.z.values.shape() != point.flow.values.shape() ||
      point.y.shape() != shape_cat(env.num_stages(), env.state_shape()))
    throw std::invalid_argument("MFOMO point shapes do not match the environment");
}

// Step for the central differences through the environment callables.
constexpr double kCallableFdStep = 1e-6;

// Population-coupling corrections to the L-block of the gradient: the
// residual terms depend on L through the reward/transition tables as well,
// so the adjoint weights accumulated from the residuals are contracted with
// the callable Jacobians, obtained column by column via central differences.
// Exact (up to roundoff) when the tables are affine in L_t, as in
// random_linear; zero automatically when they do not depend on L_t at all.
void add_coupling_corrections(const Environment& env, const MfomoPoint& point,
                              const Residuals& res, double c1, double c2,
                              std::span<double> grad_flow) {
  const std::size_t ns = env.num_states();
  const std::size_t na = env.num_actions();
  const std::size_t nsa = ns * na;
  const int horizon = env.horizon();
  std::vector<double> reward_adjoint(nsa);
  std::vector<double> transition_adjoint(ns * nsa);

  for (int t = 0; t <= horizon; ++t) {
    const std::size_t ts = static_cast<std::size_t>(t);
    const double* res2 = res.dual_res.data() + ts * nsa;
    for (std::size_t i = 0; i < nsa; ++i) reward_adjoint[i] = -2.0 * c2 * res2[i];
    const bool with_transition = t < horizon;
    if (with_transition) {
      const double* res1_next = res.flow_res.data() + (ts + 1) * ns;
      const auto lt = point.flow.stage(ts);
      const double* ynext = point.y.data() + (ts + 1) * ns;
      for (std::size_t sp = 0; sp < ns; ++sp)
        for (std::size_t i = 0; i < nsa; ++i)
          transition_adjoint[sp * nsa + i] =
              -2.0 * c1 * res1_next[sp] * lt[i] - 2.0 * c2 * res2[i] * ynext[sp];
    }

    Tensor probe = point.flow.stage_tensor(ts);
    for (std::size_t direction = 0; direction < nsa; ++direction) {
      const double original = probe[direction];
      probe[direction] = original + kCallableFdStep;
      const Tensor r_plus = env.reward_unchecked(t, probe);
      const Tensor p_plus = with_transition ? env.transition_unchecked(t, probe) : Tensor();
      probe[direction] = original - kCallableFdStep;
      const Tensor r_minus = env.reward_unchecked(t, probe);
      const Tensor p_minus = with_transition ? env.transition_unchecked(t, probe) : Tensor();
      probe[direction] = original;

      double correction = 0.0;
      for (std::size_t i = 0; i < nsa; ++i)
        correction += reward_adjoint[i] * (r_plus[i] - r_minus[i]);
      if (with_transition)
        for (std::size_t j = 0; j < ns * nsa; ++j)
          correction += transition_adjoint[j] * (p_plus[j] - p_minus[j]);
      grad_flow[ts * nsa + direction] += correction / (2.0 * kCallableFdStep);
    }
  }
}

double objective_and_gradient(const Environment& env, const MfomoPoint& point, double c1,
                              double c2, double c3, MfomoGradient* grad) {
  check_point(env, point);
  const StageTables tables = evaluate_tables(env, point.flow);
  const Residuals res = compute_residuals(env, point, tables);
  const double objective = objective_from_residuals(point, res, c1, c2, c3);
  if (grad == nullptr) return objective;

  const std::size_t ns = env.num_states();
  const std::size_t na = env.num_actions();
  const std::size_t nsa = ns * na;
  const int horizon = env.horizon();
  grad->flow = Tensor(point.flow.values.shape());
  grad->y = Tensor(point.y.shape());
  grad->z = Tensor(point.z.values.shape());

  // L block, tables frozen: own-stage consistency row, next-stage inflow
  // column, and the complementarity term.
  for (int t = 0; t <= horizon; ++t) {
    const std::size_t ts = static_cast<std::size_t>(t);
    const double* res1 = res.flow_res.data() + ts * ns;
    const auto zt = point.z.stage(ts);
    double* g = grad->flow.data() + ts * nsa;
    for (std::size_t i = 0; i < nsa; ++i) g[i] = 2.0 * c1 * res1[i / na] + c3 * zt[i];
    if (t < horizon) {
      const Tensor& p = tables.transition[ts];
      const double* res1_next = res.flow_res.data() + (ts + 1) * ns;
      for (std::size_t i = 0; i < nsa; ++i) {
        double acc = 0.0;
        for (std::size_t sp = 0; sp < ns; ++sp) acc += res1_next[sp] * p[sp * nsa + i];
        g[i] -= 2.0 * c1 * acc;
      }
    }
  }

  // y block: own dual rows minus the previous stage's continuation columns.
  for (int t = 0; t <= horizon; ++t) {
    const std::size_t ts = static_cast<std::size_t>(t);
    const double* res2 = res.dual_res.data() + ts * nsa;
    double* g = grad->y.data() + ts * ns;
    for (std::size_t s = 0; s < ns; ++s) {
      double acc = 0.0;
      for (std::size_t a = 0; a < na; ++a) acc += res2[s * na + a];
      g[s] = 2.0 * c2 * acc;
    }
    if (t >= 1) {
      const Tensor& p = tables.transition[ts - 1];
      const double* res2_prev = res.dual_res.data() + (ts - 1) * nsa;
      for (std::size_t s = 0; s < ns; ++s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < nsa; ++i) acc += res2_prev[i] * p[s * nsa + i];
        g[s] -= 2.0 * c2 * acc;
      }
    }
  }

  // z block.
  {
    const auto l = point.flow.values.span();
    for (std::size_t i = 0; i < l.size(); ++i)
      grad->z[i] = -2.0 * c2 * res.dual_res[i] + c3 * l[i];
  }

  add_coupling_corrections(env, point, res, c1, c2, grad->flow.span());
  return objective;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

double mfomo_objective(const Environment& env, const MfomoPoint& point, double c1, double c2,
                       double c3) {
  return objective_and_gradient(env, point, c1, c2, c3, nullptr);
}

MfomoGradient mfomo_gradient(const Environment& env, const MfomoPoint& point, double c1,
                             double c2, double c3) {
  MfomoGradient grad;
  objective_and_gradient(env, point, c1, c2, c3, &grad);
  return grad;
}

MfomoRun::MfomoRun(const Environment& env) : MfomoRun(env, Options{}) {}

MfomoRun::MfomoRun(const Environment& env, Options options)
    : MfomoRun(env, options, MfomoPoint::initial(env)) {}

MfomoRun::MfomoRun(const Environment& env, Options options, MfomoPoint start)
    : env_(&env), options_(options), point_(std::move(start)) {
  if (!(options_.learning_rate > 0.0)) throw std::invalid_argument("mfomo lr must be positive");
  check_point(env, point_);
  policy_ = policy_from_mean_field(point_.flow);
}

double MfomoRun::objective() const {
  return mfomo_objective(*env_, point_, options_.c1, options_.c2, options_.c3);
}

void MfomoRun::step() {
  MfomoGradient grad;
  const double objective =
      objective_and_gradient(*env_, point_, options_.c1, options_.c2, options_.c3, &grad);
  if (!std::isfinite(objective))
    throw NumericalError("non-finite MFOMO objective at iteration " + std::to_string(iteration_));
  if (!all_finite(grad.flow.span()) || !all_finite(grad.y.span()) || !all_finite(grad.z.span()))
    throw NumericalError("non-finite MFOMO gradient at iteration " + std::to_string(iteration_));

  const double lr = options_.learning_rate;
  const auto l = point_.flow.values.span();
  for (std::size_t i = 0; i < l.size(); ++i) l[i] -= lr * grad.flow[i];
  for (std::size_t t = 0; t < point_.flow.num_stages(); ++t)
    project_simplex_inplace(point_.flow.stage(t));

  const auto y = point_.y.span();
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = std::clamp(y[i] - lr * grad.y[i], -point_.y_cap, point_.y_cap);

  const auto z = point_.z.values.span();
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = std::clamp(z[i] - lr * grad.z[i], 0.0, point_.z_cap);

  ++iteration_;
  policy_ = policy_from_mean_field(point_.flow);
}

}  // namespace mfgs
