// Command-line front end: enumerate environments, run a solve with live
// iteration logging, run a tune, and emit machine-readable JSON results.
//
// Exit codes are a stable contract for scripting:
//   0  success (converged or iteration-capped)
//   2  usage and registry errors
//   3  data-validation errors (environment files, invariant violations)
//   4  numerical failures

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfgs/envs.hpp"
#include "mfgs/errors.hpp"
#include "mfgs/io.hpp"
#include "mfgs/solvers.hpp"
#include "mfgs/tuner.hpp"
#include "mfgs/version.hpp"

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string param_default_string(const mfgs::EnvParamSpec& p) {
  if (p.integer) return std::to_string(static_cast<long long>(p.default_value));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", p.default_value);
  return buf;
}

int cmd_list_envs(bool with_algs) {
  std::printf("environments:\n");
  for (const auto& entry : mfgs::environment_registry()) {
    std::string args;
    for (const auto& p : entry.params) {
      if (!args.empty()) args += ", ";
      args += p.name + "=" + param_default_string(p);
    }
    std::printf("  %s(%s)\n", entry.name.c_str(), args.c_str());
  }
  if (with_algs) {
    std::printf("algorithms:\n");
    for (const auto& entry : mfgs::algorithm_registry()) {
      std::string args;
      for (const auto& p : entry.params) {
        if (!args.empty()) args += ", ";
        args += p.name + "=";
        if (!p.default_value) {
          args += "unset";
        } else if (p.integer) {
          args += std::to_string(static_cast<long long>(*p.default_value));
        } else {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%g", *p.default_value);
          args += buf;
        }
      }
      std::printf("  %s(%s)\n", entry.name.c_str(), args.c_str());
    }
  }
  return 0;
}

mfgs::Config parse_key_values(const std::vector<std::string>& items) {
  mfgs::Config config;
  for (const std::string& item : items) {
    const auto [key, value] = mfgs::split_key_value(item);
    config[key] = mfgs::parse_param_value(value);
  }
  return config;
}

struct SolveFlags {
  std::string env_name;
  std::string env_file;
  std::vector<std::string> env_args;
  std::string alg_name;
  std::vector<std::string> params;
  mfgs::SolveSettings settings;
  std::string output;
  std::string log_mode = "table";
  std::int64_t seed = 0;
  bool seed_given = false;
};

mfgs::Config resolve_alg_params(const mfgs::AlgEntry& entry, const mfgs::Config& given) {
  mfgs::Config resolved = given;
  for (const auto& p : entry.params) {
    if (resolved.count(p.name) || !p.default_value) continue;
    if (p.integer) {
      resolved[p.name] = static_cast<std::int64_t>(*p.default_value);
    } else {
      resolved[p.name] = *p.default_value;
    }
  }
  return resolved;
}

mfgs::Config resolve_env_args(const mfgs::EnvEntry& entry, const mfgs::Config& given) {
  mfgs::Config resolved = given;
  for (const auto& p : entry.params) {
    if (resolved.count(p.name)) continue;
    if (p.integer) {
      resolved[p.name] = static_cast<std::int64_t>(p.default_value);
    } else {
      resolved[p.name] = p.default_value;
    }
  }
  return resolved;
}

int cmd_solve(const SolveFlags& flags) {
  if (flags.env_name.empty() == flags.env_file.empty())
    throw UsageError("exactly one of --env and --env-file is required");

  mfgs::Config env_args = parse_key_values(flags.env_args);
  std::string env_label;
  std::optional<mfgs::Environment> env;
  if (!flags.env_file.empty()) {
    if (!env_args.empty())
      throw UsageError("--env-arg applies only to registry environments, not --env-file");
    env = mfgs::load_tabular_env(flags.env_file);
    env_label = flags.env_file;
  } else {
    const mfgs::EnvEntry* entry = mfgs::find_environment(flags.env_name);
    if (entry == nullptr) {
      std::string names;
      for (const auto& e : mfgs::environment_registry()) {
        if (!names.empty()) names += ", ";
        names += e.name;
      }
      throw UsageError("unknown environment '" + flags.env_name + "'; available: " + names);
    }
    if (entry->seeded && flags.seed_given && !env_args.count("seed"))
      env_args["seed"] = flags.seed;
    env_args = resolve_env_args(*entry, env_args);
    env = mfgs::make_environment(flags.env_name, env_args);
    env_label = flags.env_name;
  }

  const mfgs::AlgEntry* alg = mfgs::find_algorithm(flags.alg_name);
  if (alg == nullptr) {
    std::string names;
    for (const auto& e : mfgs::algorithm_registry()) {
      if (!names.empty()) names += ", ";
      names += e.name;
    }
    throw UsageError("unknown algorithm '" + flags.alg_name + "'; available: " + names);
  }
  const mfgs::Config alg_params = resolve_alg_params(*alg, parse_key_values(flags.params));

  double best_expl = std::numeric_limits<double>::infinity();
  const bool table = flags.log_mode == "table";
  const bool jsonl = flags.log_mode == "jsonl";
  if (table)
    std::printf("%10s %16s %16s %12s\n", "iter", "expl", "best_expl", "elapsed_s");
  const mfgs::IterationCallback on_record = [&](int iter, double expl, double elapsed) {
    best_expl = std::min(best_expl, expl);
    if (table) {
      std::printf("%10d %16.8e %16.8e %12.4f\n", iter, expl, best_expl, elapsed);
      std::fflush(stdout);
    } else if (jsonl) {
      const json row{{"iter", iter}, {"expl", expl}, {"best_expl", best_expl},
                     {"elapsed_s", elapsed}};
      std::printf("%s\n", row.dump().c_str());
      std::fflush(stdout);
    }
  };

  const mfgs::SolveResult result =
      mfgs::run_algorithm(flags.alg_name, *env, flags.settings, alg_params, on_record);

  if (jsonl) {
    const json summary{{"converged", result.converged},
                       {"iterations_run", result.iterations_run},
                       {"final_expl", result.exploitabilities.back()},
                       {"elapsed_s", result.runtimes.back()}};
    std::printf("%s\n", summary.dump().c_str());
  } else {
    std::printf("done: converged=%s iterations_run=%d final_expl=%.8e elapsed_s=%.4f\n",
                result.converged ? "true" : "false", result.iterations_run,
                result.exploitabilities.back(), result.runtimes.back());
  }
  std::fflush(stdout);

  if (!flags.output.empty()) {
    mfgs::RunRecord record;
    record.env_name = env_label;
    record.env_args = env_args;
    record.alg_name = flags.alg_name;
    record.alg_params = alg_params;
    record.settings = flags.settings;
    record.state_shape = env->state_shape();
    record.action_shape = env->action_shape();
    for (std::size_t i = 0; i < result.exploitabilities.size(); ++i)
      record.series.push_back({result.recorded_iterations[i], result.exploitabilities[i],
                               result.runtimes[i]});
    record.converged = result.converged;
    record.iterations_run = result.iterations_run;
    record.final_policy = result.final_policy();
    record.version = mfgs::kVersion;
    mfgs::write_run_record(record, flags.output);
  }
  return 0;
}

struct TuneFlags {
  std::vector<std::string> env_specs;
  std::string alg_name;
  std::string metric = "shifted_geo_mean";
  int n_trials = 20;
  std::optional<double> timeout_s;
  std::int64_t seed = 0;
  mfgs::SolveSettings settings;
  std::string output;
};

int cmd_tune(const TuneFlags& flags) {
  if (flags.env_specs.empty()) throw UsageError("at least one --env is required");
  std::vector<mfgs::Environment> suite;
  std::vector<std::string> names;
  for (const std::string& spec : flags.env_specs) {
    // NAME[:key=value,...]
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    mfgs::Config args;
    if (colon != std::string::npos) {
      std::string rest = spec.substr(colon + 1);
      std::size_t start = 0;
      while (start <= rest.size()) {
        const auto comma = rest.find(',', start);
        const std::string item =
            rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) {
          const auto [key, value] = mfgs::split_key_value(item);
          args[key] = mfgs::parse_param_value(value);
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
    if (mfgs::find_environment(name) == nullptr) {
      std::string known;
      for (const auto& e : mfgs::environment_registry()) {
        if (!known.empty()) known += ", ";
        known += e.name;
      }
      throw UsageError("unknown environment '" + name + "'; available: " + known);
    }
    suite.push_back(mfgs::make_environment(name, args));
    names.push_back(spec);
  }

  mfgs::TuneSettings settings;
  settings.metric = mfgs::parse_metric(flags.metric);
  settings.n_trials = flags.n_trials;
  settings.timeout_s = flags.timeout_s;
  settings.seed = static_cast<std::uint64_t>(flags.seed);
  settings.solve = flags.settings;

  const mfgs::ParamSpace space = mfgs::default_param_space(flags.alg_name);
  const auto on_trial = [](const mfgs::TrialRecord& trial) {
    std::printf("trial %d: score=%.6g config=%s wall_s=%.3f\n", trial.index, trial.score,
                mfgs::to_string(trial.config).c_str(), trial.wall_time_s);
    std::fflush(stdout);
  };
  const mfgs::TuneResult result = mfgs::tune(flags.alg_name, suite, space, settings, on_trial);

  const auto& best = result.trials[static_cast<std::size_t>(result.best_index)];
  std::printf("best: trial %d score=%.6g config=%s\n", result.best_index, best.score,
              mfgs::to_string(result.best_config).c_str());
  std::fflush(stdout);
  if (!flags.output.empty())
    mfgs::write_tune_report(flags.output, flags.alg_name, names, settings, result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-horizon mean-field game solvers"};
  app.set_version_flag("--version", mfgs::kVersion);
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list-envs", "List built-in environments and their arguments");
  bool with_algs = false;
  list->add_flag("--algs", with_algs, "Also list algorithms and their parameters");

  SolveFlags solve;
  auto* solve_cmd = app.add_subcommand(
      "solve",
      "Solve one environment with one algorithm, logging the iteration series.\n"
      "Environments come from the registry (--env) or from a JSON table file\n"
      "(--env-file). File-based environments are restricted to rewards and\n"
      "transitions that do not depend on the population distribution;\n"
      "population-coupled environments are a library-API feature.");
  solve_cmd->add_option("--env", solve.env_name, "Registry environment name");
  solve_cmd->add_option("--env-file", solve.env_file, "Tabular environment JSON file");
  solve_cmd->add_option("--env-arg", solve.env_args, "Environment argument key=value (repeatable)");
  solve_cmd->add_option("--alg", solve.alg_name, "Algorithm name")->required();
  solve_cmd->add_option("--param", solve.params, "Algorithm parameter key=value (repeatable)");
  solve_cmd->add_option("--max-iter", solve.settings.max_iter, "Iteration cap");
  solve_cmd->add_option("--atol", solve.settings.atol, "Absolute stopping tolerance");
  solve_cmd->add_option("--rtol", solve.settings.rtol, "Relative stopping tolerance");
  solve_cmd->add_option("--record-every", solve.settings.record_every, "Snapshot thinning");
  solve_cmd->add_option("--output", solve.output, "Write the run record JSON here");
  solve_cmd->add_option("--log", solve.log_mode, "Log style: table, jsonl or none")
      ->check(CLI::IsMember({"table", "jsonl", "none"}));
  auto* seed_opt = solve_cmd->add_option("--seed", solve.seed, "Seed consumed by seeded environments");

  TuneFlags tune;
  auto* tune_cmd = app.add_subcommand(
      "tune", "Tune an algorithm's hyperparameters over an environment suite");
  tune_cmd->add_option("--env", tune.env_specs, "Suite entry NAME[:key=value,...] (repeatable)");
  tune_cmd->add_option("--alg", tune.alg_name, "Algorithm name")->required();
  tune_cmd->add_option("--metric", tune.metric, "shifted_geo_mean or failure_rate");
  tune_cmd->add_option("--n-trials", tune.n_trials, "Number of trials");
  double timeout = 0.0;
  auto* timeout_opt = tune_cmd->add_option("--timeout", timeout, "Wall-clock budget in seconds");
  tune_cmd->add_option("--seed", tune.seed, "Search seed");
  tune_cmd->add_option("--max-iter", tune.settings.max_iter, "Per-trial iteration cap");
  tune_cmd->add_option("--atol", tune.settings.atol, "Absolute stopping tolerance");
  tune_cmd->add_option("--rtol", tune.settings.rtol, "Relative stopping tolerance");
  tune_cmd->add_option("--output", tune.output, "Write the tune report JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*list) return cmd_list_envs(with_algs);
    if (*solve_cmd) {
      solve.seed_given = seed_opt->count() > 0;
      return cmd_solve(solve);
    }
    if (*tune_cmd) {
      if (timeout_opt->count() > 0) tune.timeout_s = timeout;
      return cmd_tune(tune);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const mfgs::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 3;
  } catch (const mfgs::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
