#include "mfgs/tuner.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfgs {

void validate_space(const ParamSpace& space) {
  for (const auto& spec : space) {
    if (spec.name.empty()) throw std::invalid_argument("parameter name must not be empty");
    switch (spec.kind) {
      case ParamKind::continuous:
        if (!(spec.lo <= spec.hi))
          throw std::invalid_argument("parameter '" + spec.name + "' has an empty range");
        if (spec.scale == ParamScale::logarithmic && !(spec.lo > 0.0))
          throw std::invalid_argument("parameter '" + spec.name +
                                      "' uses a logarithmic scale with non-positive bounds");
        break;
      case ParamKind::integer:
        if (spec.int_lo > spec.int_hi)
          throw std::invalid_argument("parameter '" + spec.name + "' has an empty range");
        if (spec.scale == ParamScale::logarithmic)
          throw std::invalid_argument("parameter '" + spec.name +
                                      "' cannot combine integer kind with logarithmic scale");
        break;
      case ParamKind::categorical:
        if (spec.choices.empty())
          throw std::invalid_argument("parameter '" + spec.name + "' has no choices");
        break;
    }
  }
}

namespace {

ParamSpec log_uniform_spec(std::string name, double lo, double hi, bool maybe_unset = false) {
  ParamSpec spec;
  spec.name = std::move(name);
  spec.kind = ParamKind::continuous;
  spec.scale = ParamScale::logarithmic;
  spec.lo = lo;
  spec.hi = hi;
  spec.maybe_unset = maybe_unset;
  return spec;
}

ParamSpec integer_spec(std::string name, std::int64_t lo, std::int64_t hi) {
  ParamSpec spec;
  spec.name = std::move(name);
  spec.kind = ParamKind::integer;
  spec.int_lo = lo;
  spec.int_hi = hi;
  return spec;
}

}  // namespace

ParamSpace default_param_space(const std::string& alg_name) {
  if (alg_name == "fictitious_play")
    return {log_uniform_spec("alpha", 1e-3, 1.0, /*maybe_unset=*/true)};
  if (alg_name == "online_mirror_descent") return {log_uniform_spec("alpha", 1e-2, 1e2)};
  if (alg_name == "prior_descent")
    return {log_uniform_spec("eta", 1e-3, 1e2), integer_spec("n_inner", 1, 100)};
  if (alg_name == "mfomo")
    return {log_uniform_spec("lr", 1e-4, 1.0), log_uniform_spec("c3", 1e-2, 1e2)};
  throw std::invalid_argument("no default parameter space for algorithm '" + alg_name + "'");
}

TuneMetric parse_metric(const std::string& name) {
  if (name == "shifted_geo_mean") return TuneMetric::shifted_geo_mean;
  if (name == "failure_rate") return TuneMetric::failure_rate;
  throw std::invalid_argument("unknown metric '" + name +
                              "'; available: shifted_geo_mean, failure_rate");
}

std::string to_string(TuneMetric metric) {
  return metric == TuneMetric::shifted_geo_mean ? "shifted_geo_mean" : "failure_rate";
}

Config sample_config(const ParamSpace& space, Rng& rng) {
  validate_space(space);
  Config config;
  for (const auto& spec : space) {
    if (spec.maybe_unset && rng.uniform01() < 0.5) continue;
    switch (spec.kind) {
      case ParamKind::continuous:
        config[spec.name] = spec.scale == ParamScale::logarithmic
                                ? rng.log_uniform(spec.lo, spec.hi)
                                : rng.uniform(spec.lo, spec.hi);
        break;
      case ParamKind::integer:
        config[spec.name] = rng.uniform_int(spec.int_lo, spec.int_hi);
        break;
      case ParamKind::categorical:
        config[spec.name] = spec.choices[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(spec.choices.size()) - 1))];
        break;
    }
  }
  return config;
}

std::vector<EnvOutcome> evaluate_config(const std::string& alg_name, const Config& config,
                                        std::span<const Environment> suite,
                                        const SolveSettings& settings) {
  SolveSettings per_trial = settings;
  per_trial.record_every = 1;  // the stopping rule needs every iteration's exploitability
  std::vector<EnvOutcome> outcomes;
  outcomes.reserve(suite.size());
  for (const Environment& env : suite) {
    EnvOutcome outcome;
    try {
      const SolveResult result = run_algorithm(alg_name, env, per_trial, config);
      outcome.converged = result.converged;
      outcome.iterations = result.converged ? result.iterations_run : per_trial.max_iter;
      outcome.final_expl = result.exploitabilities.back();
    } catch (const std::exception&) {
      outcome.converged = false;
      outcome.iterations = per_trial.max_iter;
      outcome.final_expl = std::numeric_limits<double>::infinity();
      outcome.error = true;
    }
    outcomes.push_back(outcome);
  }
  return outcomes;
}

double score_shifted_geo_mean(std::span<const EnvOutcome> outcomes, int max_iter) {
  if (outcomes.empty()) throw std::invalid_argument("no outcomes to score");
  double acc = 0.0;
  for (const EnvOutcome& o : outcomes) {
    const double cost = o.converged ? static_cast<double>(o.iterations) : 2.0 * max_iter;
    acc += std::log1p(cost);
  }
  return std::expm1(acc / static_cast<double>(outcomes.size()));
}

bool operator<(const FailureRateScore& a, const FailureRateScore& b) {
  if (a.rate != b.rate) return a.rate < b.rate;
  return a.mean_final_expl < b.mean_final_expl;
}

FailureRateScore score_failure_rate(std::span<const EnvOutcome> outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("no outcomes to score");
  FailureRateScore score;
  std::size_t failures = 0;
  double expl_sum = 0.0;
  for (const EnvOutcome& o : outcomes) {
    if (!o.converged) ++failures;
    expl_sum += o.final_expl;
  }
  score.rate = static_cast<double>(failures) / static_cast<double>(outcomes.size());
  score.mean_final_expl = expl_sum / static_cast<double>(outcomes.size());
  return score;
}

namespace {

double mean_final_expl(std::span<const EnvOutcome> outcomes) {
  double acc = 0.0;
  for (const EnvOutcome& o : outcomes) acc += o.final_expl;
  return acc / static_cast<double>(outcomes.size());
}

bool strictly_better(TuneMetric metric, const TrialRecord& a, const TrialRecord& b) {
  if (metric == TuneMetric::failure_rate)
    return FailureRateScore{a.score, a.mean_final_expl} < FailureRateScore{b.score, b.mean_final_expl};
  return a.score < b.score;
}

}  // namespace

TuneResult tune(const std::string& alg_name, std::span<const Environment> suite,
                const ParamSpace& space, const TuneSettings& settings,
                const std::function<void(const TrialRecord&)>& on_trial) {
  if (suite.empty()) throw std::invalid_argument("environment suite must not be empty");
  if (settings.n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  if (find_algorithm(alg_name) == nullptr) {
    std::string names;
    for (const auto& entry : algorithm_registry()) {
      if (!names.empty()) names += ", ";
      names += entry.name;
    }
    throw std::invalid_argument("unknown algorithm '" + alg_name + "'; available: " + names);
  }
  validate_space(space);
  {
    // Bad solve settings are a caller error, not a per-trial failure.
    SolveSettings effective = settings.solve;
    effective.record_every = 1;  // what evaluate_config actually runs
    validate_settings(effective);
  }

  // Per-trial seeds are drawn up front so each trial's config depends only
  // on (seed, trial index); parallel and serial evaluation would agree.
  Rng master(settings.seed);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(settings.n_trials));
  for (auto& s : seeds) s = master.next_seed();

  const auto start = std::chrono::steady_clock::now();
  TuneResult result;
  for (int trial = 0; trial < settings.n_trials; ++trial) {
    if (settings.timeout_s && trial > 0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (elapsed > *settings.timeout_s) break;
    }
    Rng trial_rng(seeds[static_cast<std::size_t>(trial)]);
    TrialRecord record;
    record.index = trial;
    record.config = sample_config(space, trial_rng);
    const auto trial_start = std::chrono::steady_clock::now();
    record.outcomes = evaluate_config(alg_name, record.config, suite, settings.solve);
    record.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - trial_start).count();
    record.mean_final_expl = mean_final_expl(record.outcomes);
    record.score = settings.metric == TuneMetric::shifted_geo_mean
                       ? score_shifted_geo_mean(record.outcomes, settings.solve.max_iter)
                       : score_failure_rate(record.outcomes).rate;
    if (on_trial) on_trial(record);
    result.trials.push_back(std::move(record));
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.trials.size(); ++i)
    if (strictly_better(settings.metric, result.trials[i], result.trials[best])) best = i;
  result.best_index = result.trials[best].index;
  result.best_config = result.trials[best].config;
  return result;
}

}  // namespace mfgs
