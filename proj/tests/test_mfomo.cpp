#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mfgs/envs.hpp"
#include "mfgs/errors.hpp"
#include "mfgs/solvers.hpp"
#include "support.hpp"

using namespace mfgs;

namespace {

// Hand-derived equilibrium certificate of left_right: the uniform split puts
// half the population on each side, both sides pay -1/2, so the stage values
// are y1 = (0, -1/2, -1/2) and y0 = -1/2 everywhere, with zero Bellman gap.
MfomoPoint left_right_equilibrium(const Environment& env) {
  MfomoPoint point = MfomoPoint::initial(env);
  const auto l0 = point.flow.stage(0);
  const auto l1 = point.flow.stage(1);
  std::fill(l0.begin(), l0.end(), 0.0);
  std::fill(l1.begin(), l1.end(), 0.0);
  l0[0] = 0.5;  // (init, left-action)
  l0[1] = 0.5;  // (init, right-action)
  l1[2] = l1[3] = l1[4] = l1[5] = 0.25;
  point.y[0] = point.y[1] = point.y[2] = -0.5;  // stage 0
  point.y[3] = 0.0;                             // stage 1, init
  point.y[4] = point.y[5] = -0.5;               // stage 1, sides
  std::fill(point.z.values.span().begin(), point.z.values.span().end(), 0.0);
  return point;
}

MfomoPoint random_feasible_point(const Environment& env, Rng& rng) {
  MfomoPoint point = MfomoPoint::initial(env);
  for (std::size_t t = 0; t < point.flow.num_stages(); ++t) {
    const auto stage = point.flow.stage(t);
    double total = 0.0;
    for (auto& x : stage) {
      x = -std::log(1.0 - rng.uniform01());
      total += x;
    }
    for (auto& x : stage) x /= total;
  }
  for (auto& x : point.y.span()) x = rng.uniform(-point.y_cap, point.y_cap);
  for (auto& x : point.z.values.span()) x = rng.uniform(0.0, point.z_cap);
  return point;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

}  // namespace

TEST_CASE("project_simplex on the worked examples") {
  {
    const std::vector<double> v{0.3, 0.3, 0.4};
    const std::vector<double> w = project_simplex(v);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(w[i] - v[i]) <= 1e-15);
  }
  {
    const std::vector<double> w = project_simplex(std::vector<double>{2.0, 0.0});
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 0.0);
  }
  {
    const std::vector<double> w = project_simplex(std::vector<double>{1.0, 1.0});
    CHECK(w[0] == 0.5);
    CHECK(w[1] == 0.5);
  }
}

TEST_CASE("project_simplex is feasible, idempotent and distance minimizing") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = static_cast<std::size_t>(rng.uniform_int(2, 16));
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.uniform(-5.0, 5.0);
    const std::vector<double> w = project_simplex(v);

    double sum = 0.0;
    for (const double x : w) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    const std::vector<double> ww = project_simplex(w);
    for (std::size_t i = 0; i < dim; ++i) CHECK(std::abs(ww[i] - w[i]) <= 1e-12);

    const double own = squared_distance(v, w);
    for (int candidate = 0; candidate < 1000; ++candidate) {
      std::vector<double> c(dim);
      double total = 0.0;
      for (auto& x : c) {
        x = -std::log(1.0 - rng.uniform01());
        total += x;
      }
      for (auto& x : c) x /= total;
      CHECK(own <= squared_distance(v, c) + 1e-12);
    }
  }
}

TEST_CASE("initial point is the uniform flow with zeroed multipliers") {
  const Environment env = make_left_right();
  const MfomoPoint point = MfomoPoint::initial(env);
  const MeanFieldFlow expected = induced_mean_field(env, uniform_policy(env));
  CHECK(testsupport::bitwise_equal(point.flow.values.span(), expected.values.span()));
  for (const double x : point.y.span()) CHECK(x == 0.0);
  for (const double x : point.z.values.span()) CHECK(x == 0.0);
  CHECK(point.y_cap == 2.0);  // (T+1) r_max
  CHECK(point.z_cap == 4.0);
}

TEST_CASE("objective vanishes at the left_right equilibrium certificate") {
  const Environment env = make_left_right();
  const MfomoPoint point = left_right_equilibrium(env);
  CHECK(mfomo_objective(env, point) <= 1e-12);
}

TEST_CASE("flow feasibility kills the first residual term for induced flows") {
  const Environment env = make_random_linear(2, 3, 3, 2);
  MfomoPoint point = MfomoPoint::initial(env);
  point.flow = induced_mean_field(env, testsupport::random_policy(env, 5));
  Rng rng(6);
  for (auto& x : point.y.span()) x = rng.uniform(-1.0, 1.0);
  // c2 = c3 = 0 isolates the consistency term; it must vanish for any y.
  CHECK(mfomo_objective(env, point, 1.0, 0.0, 0.0) <= 1e-22);
}

TEST_CASE("objective is nonnegative at random feasible points") {
  const Environment env = make_random_linear(8, 2, 3, 3);
  Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const MfomoPoint point = random_feasible_point(env, rng);
    CHECK(mfomo_objective(env, point) >= 0.0);
    CHECK(mfomo_objective(env, point, 2.0, 0.5, 3.0) >= 0.0);
  }
}

TEST_CASE("gradient matches central finite differences on random_linear") {
  // The population couples into the rewards (coupling 0.5), so this check
  // fails unless the gradient accounts for the callable Jacobians.
  const Environment env = make_random_linear(0, 2, 3, 2, 0.5, ValidationMode::fast);
  Rng rng(123);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    MfomoPoint point = random_feasible_point(env, rng);
    const MfomoGradient grad = mfomo_gradient(env, point);
    const auto fd_block_error = [&](Tensor& block, const Tensor& gblock) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < block.size(); ++i) {
        const double orig = block[i];
        block[i] = orig + h;
        const double fp = mfomo_objective(env, point);
        block[i] = orig - h;
        const double fm = mfomo_objective(env, point);
        block[i] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        num += (gblock[i] - fd) * (gblock[i] - fd);
        den += fd * fd;
      }
      return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
    };
    CHECK(fd_block_error(point.flow.values, grad.flow) <= 1e-4);
    CHECK(fd_block_error(point.y, grad.y) <= 1e-4);
    CHECK(fd_block_error(point.z.values, grad.z) <= 1e-4);
  }
}

TEST_CASE("projected gradient stays at the equilibrium certificate") {
  const Environment env = make_left_right();
  const MfomoPoint start = left_right_equilibrium(env);
  MfomoRun run(env, MfomoRun::Options{0.1, 1.0, 1.0, 1.0}, start);
  for (int n = 0; n < 5; ++n) {
    CHECK(std::abs(exploitability(env, run.policy())) <= 1e-12);
    run.step();
    CHECK(run.objective() <= 1e-12);
    for (std::size_t i = 0; i < start.flow.values.size(); ++i)
      CHECK(std::abs(run.point().flow.values[i] - start.flow.values[i]) <= 1e-15);
    for (std::size_t i = 0; i < start.y.size(); ++i)
      CHECK(std::abs(run.point().y[i] - start.y[i]) <= 1e-15);
    for (const double z : run.point().z.values.span()) CHECK(z == 0.0);
  }
}

TEST_CASE("projected gradient descends on random_linear") {
  const Environment env = make_random_linear(0, 2, 3, 2);
  MfomoRun run(env, MfomoRun::Options{0.01, 1.0, 1.0, 1.0});
  const double initial = run.objective();
  for (int n = 0; n < 200; ++n) run.step();
  CHECK(run.objective() < initial);
}

TEST_CASE("iterates stay inside the feasible box") {
  const Environment env = make_beach_bar(4, 1, 0.2, 2);
  MfomoRun run(env, MfomoRun::Options{0.5, 1.0, 1.0, 1.0});
  for (int n = 0; n < 20; ++n) {
    run.step();
    const MfomoPoint& point = run.point();
    for (std::size_t t = 0; t < point.flow.num_stages(); ++t) {
      double sum = 0.0;
      for (const double x : point.flow.stage(t)) {
        CHECK(x >= 0.0);
        sum += x;
      }
      // Pre-projection entries reach ~1e3 here, so the projected sums carry
      // magnitude-proportional roundoff; the probability tolerance applies.
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
    for (const double y : point.y.span()) CHECK(std::abs(y) <= point.y_cap);
    for (const double z : point.z.values.span()) {
      CHECK(z >= 0.0);
      CHECK(z <= point.z_cap);
    }
  }
}

TEST_CASE("solve_mfomo produces a well-formed result") {
  const Environment env = make_random_linear(4, 2, 3, 2);
  SolveSettings settings;
  settings.max_iter = 30;
  settings.atol = 0.0;
  settings.rtol = 0.0;
  const SolveResult result = solve_mfomo(env, settings, 0.05);
  CHECK(result.iterations_run == 30);
  CHECK(result.exploitabilities.size() == 31);
  for (const double e : result.exploitabilities) CHECK(e >= -1e-9);
  for (std::size_t i = 1; i < result.runtimes.size(); ++i)
    CHECK(result.runtimes[i] >= result.runtimes[i - 1]);
  const std::size_t na = env.num_actions();
  for (const Policy& policy : result.policies) {
    for (std::size_t t = 0; t < policy.num_stages(); ++t) {
      for (std::size_t s = 0; s < env.num_states(); ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < na; ++a) {
          CHECK(policy.stage(t)[s * na + a] >= 0.0);
          sum += policy.stage(t)[s * na + a];
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("non-finite rewards surface as a numerical error with the iteration") {
  const auto reward = [](int, const Tensor&) {
    return Tensor(Shape{2, 2}, std::numeric_limits<double>::infinity());
  };
  const auto transition = [](int, const Tensor&) {
    Tensor p(Shape{2, 2, 2});
    for (std::size_t i = 0; i < 4; ++i) p[i] = 1.0;
    return p;
  };
  Tensor mu0(Shape{2});
  mu0[0] = 1.0;
  const Environment env(1, Shape{2}, Shape{2}, mu0, 1.0, reward, transition,
                        ValidationMode::fast);
  MfomoRun run(env, MfomoRun::Options{});
  CHECK_THROWS_WITH_AS(run.step(), doctest::Contains("iteration 0"), NumericalError);
}
