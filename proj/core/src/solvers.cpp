#include "mfgs/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mfgs/errors.hpp"

namespace mfgs {

void validate_settings(const SolveSettings& settings) {
  if (settings.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (!(settings.atol >= 0.0)) throw std::invalid_argument("atol must be >= 0");
  if (!(settings.rtol >= 0.0)) throw std::invalid_argument("rtol must be >= 0");
  if (settings.record_every < 1 || settings.record_every > settings.max_iter)
    throw std::invalid_argument("record_every must lie in [1, max_iter]");
}

bool check_stop(const SolveSettings& settings, double expl_first, double expl_now) {
  return expl_now <= settings.atol + settings.rtol * expl_first;
}

namespace {

// Shared record/stop loop: iteration n snapshots exploitability of the
// current policy whenever due, stops on check_stop or after max_iter steps.
template <typename Run>
SolveResult drive(const Environment& env, const SolveSettings& settings, Run& run,
                  const IterationCallback& on_record) {
  validate_settings(settings);
  SolveResult result;
  const auto start = std::chrono::steady_clock::now();
  double expl_first = 0.0;
  for (int iter = 0;; ++iter) {
    const bool last = iter == settings.max_iter;
    if (iter % settings.record_every == 0 || last) {
      const Policy& pi = run.policy();
      const double expl = exploitability(env, pi);
      if (!std::isfinite(expl))
        throw NumericalError("non-finite exploitability at iteration " + std::to_string(iter));
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (result.exploitabilities.empty()) expl_first = expl;
      result.policies.push_back(pi);
      result.recorded_iterations.push_back(iter);
      result.exploitabilities.push_back(expl);
      result.runtimes.push_back(elapsed);
      if (on_record) on_record(iter, expl, elapsed);
      if (check_stop(settings, expl_first, expl)) {
        result.converged = true;
        result.iterations_run = iter;
        return result;
      }
    }
    if (last) {
      result.iterations_run = iter;
      return result;
    }
    run.step();
  }
}

}  // namespace

// --------------------------------------------------------------------------
// Fictitious play
// --------------------------------------------------------------------------

FictitiousPlayRun::FictitiousPlayRun(const Environment& env, std::optional<double> damping)
    : env_(&env), damping_(damping) {
  if (damping_ && !(*damping_ > 0.0 && *damping_ <= 1.0))
    throw std::invalid_argument("fictitious play alpha must lie in (0, 1]");
  mean_field_ = induced_mean_field(env, uniform_policy(env));
  policy_ = policy_from_mean_field(mean_field_);
}

void FictitiousPlayRun::step() {
  const MeanFieldFlow flow = induced_mean_field(*env_, policy_);
  const BestResponse br = best_response(*env_, flow);
  const MeanFieldFlow br_flow = induced_mean_field(*env_, br.policy);
  const double w = damping_ ? *damping_ : 1.0 / (iteration_ + 2.0);
  const auto avg = mean_field_.values.span();
  const auto target = br_flow.values.span();
  for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = (1.0 - w) * avg[i] + w * target[i];
  ++iteration_;
  policy_ = policy_from_mean_field(mean_field_);
}

SolveResult solve_fictitious_play(const Environment& env, const SolveSettings& settings,
                                  std::optional<double> alpha,
                                  const IterationCallback& on_record) {
  FictitiousPlayRun run(env, alpha);
  return drive(env, settings, run, on_record);
}

// --------------------------------------------------------------------------
// Online mirror descent
// --------------------------------------------------------------------------

Policy softmax_policy(const StagedGrid& values) {
  const std::size_t ns = values.num_states();
  const std::size_t na = values.num_actions();
  Policy policy{make_staged_grid(values.num_stages(), values.state_shape, values.action_shape)};
  for (std::size_t t = 0; t < values.num_stages(); ++t) {
    const auto row = values.stage(t);
    const auto out = policy.stage(t);
    for (std::size_t s = 0; s < ns; ++s) {
      double max_v = row[s * na];
      for (std::size_t a = 1; a < na; ++a) max_v = std::max(max_v, row[s * na + a]);
      double norm = 0.0;
      for (std::size_t a = 0; a < na; ++a) {
        const double e = std::exp(row[s * na + a] - max_v);
        out[s * na + a] = e;
        norm += e;
      }
      for (std::size_t a = 0; a < na; ++a) out[s * na + a] /= norm;
    }
  }
  return policy;
}

MirrorDescentRun::MirrorDescentRun(const Environment& env, double learning_rate)
    : env_(&env), learning_rate_(learning_rate) {
  if (!(learning_rate_ > 0.0))
    throw std::invalid_argument("online mirror descent alpha must be positive");
  cumulative_q_ = make_staged_grid(env.num_stages(), env.state_shape(), env.action_shape());
  policy_ = softmax_policy(cumulative_q_);
}

void MirrorDescentRun::step() {
  const MeanFieldFlow flow = induced_mean_field(*env_, policy_);
  const QFunction values = policy_q_values(*env_, policy_, flow);
  const auto acc = cumulative_q_.values.span();
  const auto q = values.q.values.span();
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += learning_rate_ * q[i];
  policy_ = softmax_policy(cumulative_q_);
}

SolveResult solve_online_mirror_descent(const Environment& env, const SolveSettings& settings,
                                        double alpha, const IterationCallback& on_record) {
  MirrorDescentRun run(env, alpha);
  return drive(env, settings, run, on_record);
}

// --------------------------------------------------------------------------
// Prior descent
// --------------------------------------------------------------------------

Policy soft_best_response(const Environment& env, const MeanFieldFlow& flow, const Policy& prior,
                          double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  const std::size_t ns = env.num_states();
  const std::size_t na = env.num_actions();
  Policy out{make_staged_grid(env.num_stages(), env.state_shape(), env.action_shape())};
  std::vector<double> v(ns), q(ns * na);
  for (int t = env.horizon(); t >= 0; --t) {
    const Tensor r = env.reward(t, flow.stage_tensor(t));
    std::copy(r.data(), r.data() + ns * na, q.begin());
    if (t < env.horizon()) {
      const Tensor p = env.transition(t, flow.stage_tensor(t));
      for (std::size_t i = 0; i < ns * na; ++i) {
        double acc = 0.0;
        for (std::size_t sp = 0; sp < ns; ++sp) acc += p[sp * ns * na + i] * v[sp];
        q[i] += acc;
      }
    }
    const auto qt = prior.stage(t);
    const auto pit = out.stage(t);
    for (std::size_t s = 0; s < ns; ++s) {
      // Max shift over the prior's support keeps every exponent <= 0 and the
      // normalizer >= max prior weight, so neither overflow nor log(0) can
      // occur even for |Q|/eta up to 1e4.
      double shift = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < na; ++a)
        if (qt[s * na + a] > 0.0) shift = std::max(shift, q[s * na + a]);
      double norm = 0.0;
      for (std::size_t a = 0; a < na; ++a) {
        const double weight =
            qt[s * na + a] > 0.0 ? qt[s * na + a] * std::exp((q[s * na + a] - shift) / eta) : 0.0;
        pit[s * na + a] = weight;
        norm += weight;
      }
      v[s] = eta * std::log(norm) + shift;
      for (std::size_t a = 0; a < na; ++a) pit[s * na + a] /= norm;
    }
  }
  return out;
}

PriorDescentRun::PriorDescentRun(const Environment& env, double eta, int n_inner)
    : env_(&env), eta_(eta), n_inner_(n_inner) {
  if (!(eta_ > 0.0)) throw std::invalid_argument("prior descent eta must be positive");
  if (n_inner_ < 1) throw std::invalid_argument("prior descent n_inner must be >= 1");
  prior_ = uniform_policy(env);
  policy_ = prior_;
}

void PriorDescentRun::step() {
  const MeanFieldFlow flow = induced_mean_field(*env_, policy_);
  policy_ = soft_best_response(*env_, flow, prior_, eta_);
  ++inner_;
  if (inner_ % n_inner_ == 0) prior_ = policy_;
}

SolveResult solve_prior_descent(const Environment& env, const SolveSettings& settings, double eta,
                                int n_inner, const IterationCallback& on_record) {
  PriorDescentRun run(env, eta, n_inner);
  return drive(env, settings, run, on_record);
}

SolveResult solve_mfomo(const Environment& env, const SolveSettings& settings, double lr,
                        double c1, double c2, double c3, const IterationCallback& on_record) {
  MfomoRun run(env, MfomoRun::Options{lr, c1, c2, c3});
  return drive(env, settings, run, on_record);
}

// --------------------------------------------------------------------------
// Registry
// --------------------------------------------------------------------------

namespace {

std::string known_alg_names() {
  std::string names;
  for (const auto& entry : algorithm_registry()) {
    if (!names.empty()) names += ", ";
    names += entry.name;
  }
  return names;
}

void check_param_keys(const AlgEntry& entry, const Config& params) {
  for (const auto& [key, value] : params) {
    const bool known = std::any_of(entry.params.begin(), entry.params.end(),
                                   [&key](const AlgParamSpec& p) { return p.name == key; });
    if (!known) {
      std::string valid;
      for (const auto& p : entry.params) {
        if (!valid.empty()) valid += ", ";
        valid += p.name;
      }
      throw std::invalid_argument("unknown parameter '" + key + "' for algorithm '" + entry.name +
                                  "' (valid: " + valid + ")");
    }
  }
}

}  // namespace

const std::vector<AlgEntry>& algorithm_registry() {
  static const std::vector<AlgEntry> entries = [] {
    std::vector<AlgEntry> v;
    v.push_back(
        {"fictitious_play",
         {{"alpha", false, std::nullopt, "damping weight in (0, 1]; unset = 1/(n+2) averaging"}},
         [](const Environment& env, const SolveSettings& s, const Config& c,
            const IterationCallback& cb) {
           std::optional<double> alpha;
           if (c.count("alpha")) alpha = as_real(c.at("alpha"), "alpha");
           return solve_fictitious_play(env, s, alpha, cb);
         }});
    v.push_back({"online_mirror_descent",
                 {{"alpha", false, 1.0, "learning rate"}},
                 [](const Environment& env, const SolveSettings& s, const Config& c,
                    const IterationCallback& cb) {
                   return solve_online_mirror_descent(env, s, config_real(c, "alpha", 1.0), cb);
                 }});
    v.push_back({"prior_descent",
                 {{"eta", false, 1.0, "soft best-response temperature"},
                  {"n_inner", true, 50.0, "inner steps per prior refresh"}},
                 [](const Environment& env, const SolveSettings& s, const Config& c,
                    const IterationCallback& cb) {
                   return solve_prior_descent(env, s, config_real(c, "eta", 1.0),
                                              static_cast<int>(config_int(c, "n_inner", 50)), cb);
                 }});
    v.push_back({"mfomo",
                 {{"lr", false, 0.1, "projected gradient step size"},
                  {"c1", false, 1.0, "flow-feasibility weight"},
                  {"c2", false, 1.0, "dual-feasibility weight"},
                  {"c3", false, 1.0, "complementarity weight"}},
                 [](const Environment& env, const SolveSettings& s, const Config& c,
                    const IterationCallback& cb) {
                   return solve_mfomo(env, s, config_real(c, "lr", 0.1),
                                      config_real(c, "c1", 1.0), config_real(c, "c2", 1.0),
                                      config_real(c, "c3", 1.0), cb);
                 }});
    return v;
  }();
  return entries;
}

const AlgEntry* find_algorithm(const std::string& name) {
  for (const auto& entry : algorithm_registry())
    if (entry.name == name) return &entry;
  return nullptr;
}

SolveResult run_algorithm(const std::string& name, const Environment& env,
                          const SolveSettings& settings, const Config& params,
                          const IterationCallback& on_record) {
  const AlgEntry* entry = find_algorithm(name);
  if (entry == nullptr)
    throw std::invalid_argument("unknown algorithm '" + name +
                                "'; available: " + known_alg_names());
  check_param_keys(*entry, params);
  return entry->run(env, settings, params, on_record);
}

}  // namespace mfgs
