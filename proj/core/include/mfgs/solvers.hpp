#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfgs/core.hpp"
#include "mfgs/params.hpp"

namespace mfgs {

struct SolveSettings {
  int max_iter = 300;        // maximum number of update steps
  double atol = 1e-8;        // absolute early-stopping tolerance
  double rtol = 1e-8;        // relative tolerance against iteration-0 exploitability
  int record_every = 1;      // snapshot thinning; iteration 0 and the last are always kept
};

/// Throws std::invalid_argument when the settings are out of range
/// (max_iter >= 1, atol/rtol >= 0, 1 <= record_every <= max_iter).
void validate_settings(const SolveSettings& settings);

/// True iff expl_now <= atol + rtol * expl_first.
bool check_stop(const SolveSettings& settings, double expl_first, double expl_now);

struct SolveResult {
  std::vector<Policy> policies;            // snapshots, aligned with the series below
  std::vector<int> recorded_iterations;    // iteration index of each snapshot
  std::vector<double> exploitabilities;    // >= -1e-9
  std::vector<double> runtimes;            // cumulative wall-clock seconds, nondecreasing
  bool converged = false;
  int iterations_run = 0;

  const Policy& final_policy() const { return policies.back(); }
};

/// Invoked once per recorded iteration; used by the CLI for live logging.
using IterationCallback = std::function<void(int iteration, double expl, double elapsed_s)>;

// ---------------------------------------------------------------------------
// Per-iteration stepping API.  Each Run object owns the algorithm state and
// advances it one update at a time; the solve_* drivers below wrap a Run in
// the shared record/stop loop.  The Run classes are public so callers can
// drive the dynamics for a fixed number of steps regardless of the stopping
// rule.
// ---------------------------------------------------------------------------

/// (Damped) fictitious play: averages best-response induced flows with
/// weights 1/(n+2), or with a constant weight when `damping` is set.  With
/// damping = 1 this reduces to plain best-response (fixed point) iteration.
class FictitiousPlayRun {
 public:
  FictitiousPlayRun(const Environment& env, std::optional<double> damping = {});
  const Policy& policy() const { return policy_; }
  const MeanFieldFlow& mean_field() const { return mean_field_; }
  void step();

 private:
  const Environment* env_;
  std::optional<double> damping_;
  MeanFieldFlow mean_field_;
  Policy policy_;
  int iteration_ = 0;
};

/// Row-wise max-shifted softmax over actions of accumulated values.
Policy softmax_policy(const StagedGrid& values);

/// Online mirror descent: accumulates the policy's own Q-values and maps
/// them back through a row-wise softmax.
class MirrorDescentRun {
 public:
  MirrorDescentRun(const Environment& env, double learning_rate = 1.0);
  const Policy& policy() const { return policy_; }
  void step();

 private:
  const Environment* env_;
  double learning_rate_;
  StagedGrid cumulative_q_;
  Policy policy_;
};

/// Soft best response anchored at a prior: backward induction with
/// V[t][s] = eta log sum_a q[t][s][a] exp(Q[t][s][a]/eta) and the matching
/// prior-weighted softmax policy.  Computed in max-shifted form, so |Q|/eta
/// up to 1e4 cannot overflow.
Policy soft_best_response(const Environment& env, const MeanFieldFlow& flow,
                          const Policy& prior, double eta);

/// Prior descent: fixed-point iteration of the prior-anchored soft best
/// response, refreshing the prior to the current policy every n_inner steps.
/// One step() is one inner iteration.
class PriorDescentRun {
 public:
  PriorDescentRun(const Environment& env, double eta = 1.0, int n_inner = 50);
  const Policy& policy() const { return policy_; }
  const Policy& prior() const { return prior_; }
  void step();

 private:
  const Environment* env_;
  double eta_;
  int n_inner_;
  Policy prior_;
  Policy policy_;
  int inner_ = 0;
};

// ---------------------------------------------------------------------------
// Mean-field occupation measure optimization (MFOMO).  The equilibrium
// conditions -- flow feasibility, Bellman dual feasibility with slack z >= 0,
// and complementary slackness <z, L> = 0 -- become a nonnegative objective
//   c1 ||A_L L - b||^2 + c2 ||A_L^T y - z - c_L||^2 + c3 <z, L>
// over the occupation measure L, multipliers y and slack z, minimized by
// projected gradient descent.  Objective zero certifies an equilibrium.
// ---------------------------------------------------------------------------

struct MfomoPoint {
  MeanFieldFlow flow;  // L, per-stage distribution over S x A
  Tensor y;            // multipliers, shape (stages,) + state_shape
  StagedGrid z;        // Bellman-gap slack, >= 0, same layout as flow
  // Box bounds: values are bounded by (T+1) r_max and the gap V - Q by twice
  // that, so the clamps never exclude an equilibrium certificate.
  double y_cap = 0.0;
  double z_cap = 0.0;

  /// L = flow of the uniform policy, y = 0, z = 0, caps from the horizon.
  static MfomoPoint initial(const Environment& env);
};

double mfomo_objective(const Environment& env, const MfomoPoint& point, double c1 = 1.0,
                       double c2 = 1.0, double c3 = 1.0);

struct MfomoGradient {
  Tensor flow;  // same flat layout as point.flow.values
  Tensor y;
  Tensor z;
};

/// Exact adjoint of the residual terms with the transition/reward tables
/// frozen, plus the population-coupling corrections obtained by central
/// differences through the environment callables.  On environments whose
/// tables are affine in L_t (e.g. random_linear) the result is exact up to
/// roundoff; for general smooth couplings the correction is O(h^2).
MfomoGradient mfomo_gradient(const Environment& env, const MfomoPoint& point, double c1 = 1.0,
                             double c2 = 1.0, double c3 = 1.0);

/// Euclidean projection onto the probability simplex {w >= 0, sum w = 1}
/// via the sorting-based threshold construction; the output is the unique
/// nearest feasible point.
void project_simplex_inplace(std::span<double> v);
std::vector<double> project_simplex(std::span<const double> v);

class MfomoRun {
 public:
  struct Options {
    double learning_rate = 0.1;
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;
  };

  explicit MfomoRun(const Environment& env);
  MfomoRun(const Environment& env, Options options);
  MfomoRun(const Environment& env, Options options, MfomoPoint start);
  const Policy& policy() const { return policy_; }
  const MfomoPoint& point() const { return point_; }
  double objective() const;
  /// One projected-gradient step jointly in (L, y, z); throws NumericalError
  /// (naming the iteration) when the objective or gradient is non-finite.
  void step();

 private:
  const Environment* env_;
  Options options_;
  MfomoPoint point_;
  Policy policy_;
  int iteration_ = 0;
};

// ---------------------------------------------------------------------------
// Solve drivers.  Iteration n records exploitability(policy at n) whenever
// n is a multiple of record_every (iteration 0 and the final iteration are
// always recorded), then stops as soon as check_stop passes at a recorded
// iteration or max_iter steps have been taken.  The recorded policy is the
// solver's solution-quality signal: the averaged-flow policy for fictitious
// play, the softmax policy for OMD, the inner-step policy for prior descent
// and the conditional policy of L for MFOMO.
// ---------------------------------------------------------------------------

SolveResult solve_fictitious_play(const Environment& env, const SolveSettings& settings,
                                  std::optional<double> alpha = {},
                                  const IterationCallback& on_record = {});

SolveResult solve_online_mirror_descent(const Environment& env, const SolveSettings& settings,
                                        double alpha = 1.0,
                                        const IterationCallback& on_record = {});

SolveResult solve_prior_descent(const Environment& env, const SolveSettings& settings,
                                double eta = 1.0, int n_inner = 50,
                                const IterationCallback& on_record = {});

SolveResult solve_mfomo(const Environment& env, const SolveSettings& settings, double lr = 0.1,
                        double c1 = 1.0, double c2 = 1.0, double c3 = 1.0,
                        const IterationCallback& on_record = {});

struct AlgParamSpec {
  std::string name;
  bool integer = false;
  std::optional<double> default_value;  // nullopt renders as "unset"
  std::string doc;
};

struct AlgEntry {
  std::string name;
  std::vector<AlgParamSpec> params;
  std::function<SolveResult(const Environment&, const SolveSettings&, const Config&,
                            const IterationCallback&)>
      run;
};

/// Algorithms instantiable by name: fictitious_play, online_mirror_descent,
/// prior_descent, mfomo.
const std::vector<AlgEntry>& algorithm_registry();

const AlgEntry* find_algorithm(const std::string& name);

/// Dispatches by registry name; unknown names or parameters throw
/// std::invalid_argument naming the valid choices.
SolveResult run_algorithm(const std::string& name, const Environment& env,
                          const SolveSettings& settings, const Config& params,
                          const IterationCallback& on_record = {});

}  // namespace mfgs
