#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfgs/params.hpp"
#include "mfgs/rng.hpp"
#include "mfgs/solvers.hpp"

namespace mfgs {

enum class ParamKind { continuous, integer, categorical };
enum class ParamScale { linear, logarithmic };

/// One searchable hyperparameter.  Continuous parameters draw uniformly on
/// [lo, hi] (or on the log of that interval); integers draw uniformly on
/// [int_lo, int_hi]; categoricals pick a choice uniformly.  When maybe_unset
/// is set the parameter is omitted from the config with probability 1/2.
struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::continuous;
  ParamScale scale = ParamScale::linear;
  double lo = 0.0;
  double hi = 0.0;
  std::int64_t int_lo = 0;
  std::int64_t int_hi = 0;
  std::vector<std::string> choices;
  bool maybe_unset = false;
};

using ParamSpace = std::vector<ParamSpec>;

/// Throws std::invalid_argument on empty ranges or a logarithmic scale with
/// non-positive bounds.
void validate_space(const ParamSpace& space);

/// Built-in search space per algorithm (log-uniform rates, integer inner
/// loops, and the optional damping weight for fictitious play).
ParamSpace default_param_space(const std::string& alg_name);

enum class TuneMetric { shifted_geo_mean, failure_rate };

/// Exact metric strings: "shifted_geo_mean", "failure_rate".
TuneMetric parse_metric(const std::string& name);
std::string to_string(TuneMetric metric);

struct TuneSettings {
  TuneMetric metric = TuneMetric::shifted_geo_mean;
  int n_trials = 20;
  std::optional<double> timeout_s;  // stop starting new trials once elapsed
  std::uint64_t seed = 0;
  SolveSettings solve;  // applied to every trial; snapshots every iteration
};

struct EnvOutcome {
  bool converged = false;
  int iterations = 0;       // iterations to the first check_stop success, else max_iter
  double final_expl = 0.0;  // +inf when the solver errored out
  bool error = false;
};

struct TrialRecord {
  int index = 0;
  Config config;
  std::vector<EnvOutcome> outcomes;  // aligned with the suite order
  double score = 0.0;                // finite; lower is better
  double mean_final_expl = 0.0;      // failure_rate tie-break; may be +inf
  double wall_time_s = 0.0;
};

struct TuneResult {
  Config best_config;
  int best_index = 0;
  std::vector<TrialRecord> trials;
};

/// Independent per-parameter draws, deterministic given the rng state.
Config sample_config(const ParamSpace& space, Rng& rng);

/// Runs the named algorithm on every suite environment independently, in
/// order.  Solver errors become failure outcomes instead of propagating.
std::vector<EnvOutcome> evaluate_config(const std::string& alg_name, const Config& config,
                                        std::span<const Environment> suite,
                                        const SolveSettings& settings);

/// exp(mean_i log(c_i + 1)) - 1 with c_i = iterations when converged and
/// 2 * max_iter otherwise, so failures dominate every success while the
/// score stays finite.
double score_shifted_geo_mean(std::span<const EnvOutcome> outcomes, int max_iter);

struct FailureRateScore {
  double rate = 0.0;             // (# not converged) / (# envs)
  double mean_final_expl = 0.0;  // tie-break, lower wins
};

/// Lexicographic comparison (rate, mean exploitability).
bool operator<(const FailureRateScore& a, const FailureRateScore& b);

FailureRateScore score_failure_rate(std::span<const EnvOutcome> outcomes);

/// Seeded random search over the space: up to n_trials independent trials
/// (at least one; once timeout_s elapses no new trial starts), scored by the
/// chosen metric, lowest score winning with ties broken by the metric's own
/// tie-break and then the earlier trial index.  Deterministic given the seed
/// when no timeout truncation occurs.
TuneResult tune(const std::string& alg_name, std::span<const Environment> suite,
                const ParamSpace& space, const TuneSettings& settings,
                const std::function<void(const TrialRecord&)>& on_trial = {});

}  // namespace mfgs
