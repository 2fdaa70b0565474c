#include "mfgs/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "mfgs/rng.hpp"
#include "mfgs/version.hpp"

namespace mfgs {

using nlohmann::json;

namespace {

json value_to_json(const ParamValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
  if (const auto* d = std::get_if<double>(&value)) return *d;
  return std::get<std::string>(value);
}

ParamValue json_to_value(const json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  return j.get<std::string>();
}

json config_to_json(const Config& config) {
  json out = json::object();
  for (const auto& [key, value] : config) out[key] = value_to_json(value);
  return out;
}

Config config_from_json(const json& j) {
  Config out;
  for (const auto& [key, value] : j.items()) out[key] = json_to_value(value);
  return out;
}

json shape_to_json(const Shape& shape) {
  json out = json::array();
  for (std::size_t d : shape) out.push_back(d);
  return out;
}

// Row-major nesting in index order: the outermost array runs over the first
// axis, the innermost over the last.
json nest_axis(const double*& cursor, const Shape& shape, std::size_t axis) {
  json out = json::array();
  if (axis + 1 == shape.size()) {
    for (std::size_t i = 0; i < shape[axis]; ++i) out.push_back(*cursor++);
  } else {
    for (std::size_t i = 0; i < shape[axis]; ++i) out.push_back(nest_axis(cursor, shape, axis + 1));
  }
  return out;
}

json tensor_to_nested(const Tensor& tensor) {
  const double* cursor = tensor.data();
  return nest_axis(cursor, tensor.shape(), 0);
}

void unnest_axis(const json& j, const Shape& shape, std::size_t axis, std::vector<double>& out,
                 std::string& path, const char* field) {
  if (!j.is_array() || j.size() != shape[axis])
    throw ValidationError(std::string(field) + path + " must be an array of length " +
                          std::to_string(shape[axis]));
  const std::size_t path_len = path.size();
  for (std::size_t i = 0; i < shape[axis]; ++i) {
    path += "[" + std::to_string(i) + "]";
    if (axis + 1 == shape.size()) {
      if (!j[i].is_number())
        throw ValidationError(std::string(field) + path + " must be a number");
      out.push_back(j[i].get<double>());
    } else {
      unnest_axis(j[i], shape, axis + 1, out, path, field);
    }
    path.resize(path_len);
  }
}

Tensor tensor_from_nested(const json& j, const Shape& shape, const char* field) {
  std::vector<double> data;
  data.reserve(shape_size(shape));
  std::string path;
  unnest_axis(j, shape, 0, data, path, field);
  return Tensor(shape, std::move(data));
}

json settings_to_json(const SolveSettings& settings) {
  return json{{"max_iter", settings.max_iter},
              {"atol", settings.atol},
              {"rtol", settings.rtol},
              {"record_every", settings.record_every}};
}

SolveSettings settings_from_json(const json& j) {
  SolveSettings settings;
  settings.max_iter = j.at("max_iter").get<int>();
  settings.atol = j.at("atol").get<double>();
  settings.rtol = j.at("rtol").get<double>();
  settings.record_every = j.at("record_every").get<int>();
  return settings;
}

Shape shape_from_json(const json& j, const char* field) {
  if (!j.is_array() || j.empty())
    throw ValidationError(std::string("field '") + field + "' must be a nonempty array");
  Shape shape;
  for (const auto& d : j) {
    if (!d.is_number_integer() || d.get<std::int64_t>() < 1)
      throw ValidationError(std::string("field '") + field +
                            "' must contain positive integers");
    shape.push_back(d.get<std::size_t>());
  }
  return shape;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string run_record_to_json(const RunRecord& record) {
  json series = json::array();
  for (const IterationPoint& p : record.series)
    series.push_back(
        {{"iter", p.iteration}, {"expl", p.exploitability}, {"elapsed_s", p.elapsed_s}});
  const json j{{"version", record.version},
               {"environment", {{"name", record.env_name}, {"args", config_to_json(record.env_args)}}},
               {"algorithm", {{"name", record.alg_name}, {"params", config_to_json(record.alg_params)}}},
               {"settings", settings_to_json(record.settings)},
               {"state_shape", shape_to_json(record.state_shape)},
               {"action_shape", shape_to_json(record.action_shape)},
               {"converged", record.converged},
               {"iterations_run", record.iterations_run},
               {"series", series},
               {"final_policy", tensor_to_nested(record.final_policy.values)}};
  return j.dump(2);
}

RunRecord run_record_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run record parse error: ") + e.what());
  }
  RunRecord record;
  record.version = j.at("version").get<std::string>();
  record.env_name = j.at("environment").at("name").get<std::string>();
  record.env_args = config_from_json(j.at("environment").at("args"));
  record.alg_name = j.at("algorithm").at("name").get<std::string>();
  record.alg_params = config_from_json(j.at("algorithm").at("params"));
  record.settings = settings_from_json(j.at("settings"));
  record.state_shape = shape_from_json(j.at("state_shape"), "state_shape");
  record.action_shape = shape_from_json(j.at("action_shape"), "action_shape");
  record.converged = j.at("converged").get<bool>();
  record.iterations_run = j.at("iterations_run").get<int>();
  for (const auto& p : j.at("series"))
    record.series.push_back({p.at("iter").get<int>(), p.at("expl").get<double>(),
                             p.at("elapsed_s").get<double>()});
  const std::size_t stages = j.at("final_policy").size();
  const Shape full = shape_cat(stages, record.state_shape, record.action_shape);
  record.final_policy.values = tensor_from_nested(j.at("final_policy"), full, "final_policy");
  record.final_policy.state_shape = record.state_shape;
  record.final_policy.action_shape = record.action_shape;
  return record;
}

void write_run_record(const RunRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path.string());
  out << run_record_to_json(record) << '\n';
  if (!out) throw std::invalid_argument("failed writing output file: " + path.string());
}

RunRecord read_run_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return run_record_from_json(text);
}

// ---------------------------------------------------------------------------
// Tabular environments
// ---------------------------------------------------------------------------

namespace {

struct TabularData {
  int horizon = 0;
  Shape state_shape;
  Shape action_shape;
  Tensor mu0;
  double r_max = 0.0;
  std::vector<Tensor> rewards;      // per stage, shape S+A
  std::vector<Tensor> transitions;  // per stage t < T, shape S+S+A
};

void validate_tabular(const TabularData& data) {
  const std::size_t ns = shape_size(data.state_shape);
  const std::size_t na = shape_size(data.action_shape);

  double total = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    if (!(data.mu0[s] >= -kProbTol) || !std::isfinite(data.mu0[s]))
      throw ValidationError("mu0 entry " + flat_index_to_string(s, data.state_shape) +
                            " is negative or not finite");
    total += data.mu0[s];
  }
  if (std::abs(total - 1.0) > kProbTol)
    throw ValidationError("mu0 sums to " + std::to_string(total));

  if (!(std::isfinite(data.r_max) && data.r_max > 0.0))
    throw ValidationError("r_max must be positive and finite");

  for (std::size_t t = 0; t < data.rewards.size(); ++t) {
    const Tensor& r = data.rewards[t];
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (std::isfinite(r[i]) && std::abs(r[i]) <= data.r_max + kProbTol) continue;
      throw ValidationError("rewards entry (t=" + std::to_string(t) + ", s=" +
                            flat_index_to_string(i / na, data.state_shape) + ", a=" +
                            flat_index_to_string(i % na, data.action_shape) + ") = " +
                            std::to_string(r[i]) + " violates |r| <= r_max = " +
                            std::to_string(data.r_max));
    }
  }

  for (std::size_t t = 0; t < data.transitions.size(); ++t) {
    const Tensor& p = data.transitions[t];
    const std::size_t block = ns * na;
    for (std::size_t sp = 0; sp < ns; ++sp) {
      for (std::size_t i = 0; i < block; ++i) {
        const double x = p[sp * block + i];
        if (std::isfinite(x) && x >= -kProbTol) continue;
        throw ValidationError("transitions entry (t=" + std::to_string(t) + ", s'=" +
                              flat_index_to_string(sp, data.state_shape) + ", s=" +
                              flat_index_to_string(i / na, data.state_shape) + ", a=" +
                              flat_index_to_string(i % na, data.action_shape) +
                              ") is negative or not finite");
      }
    }
    for (std::size_t i = 0; i < block; ++i) {
      double col = 0.0;
      for (std::size_t sp = 0; sp < ns; ++sp) col += p[sp * block + i];
      if (std::abs(col - 1.0) > kProbTol)
        throw ValidationError("transitions column (t=" + std::to_string(t) + ", s=" +
                              flat_index_to_string(i / na, data.state_shape) + ", a=" +
                              flat_index_to_string(i % na, data.action_shape) + ") sums to " +
                              std::to_string(col));
    }
  }
}

}  // namespace

Environment load_tabular_env(const std::filesystem::path& path, ValidationMode mode) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open environment file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("environment file parse error: " + std::string(e.what()));
  }

  auto data = std::make_shared<TabularData>();
  try {
    if (!j.at("T").is_number_integer() || j.at("T").get<int>() < 0)
      throw ValidationError("field 'T' must be a nonnegative integer");
    data->horizon = j.at("T").get<int>();
    data->state_shape = shape_from_json(j.at("S"), "S");
    data->action_shape = shape_from_json(j.at("A"), "A");
    if (!j.at("r_max").is_number()) throw ValidationError("field 'r_max' must be a number");
    data->r_max = j.at("r_max").get<double>();
    data->mu0 = tensor_from_nested(j.at("mu0"), data->state_shape, "mu0");

    const Shape sa = shape_cat(data->state_shape, data->action_shape);
    const Shape ssa = shape_cat(data->state_shape, sa);
    const auto& rewards = j.at("rewards");
    if (!rewards.is_array() || rewards.size() != static_cast<std::size_t>(data->horizon) + 1)
      throw ValidationError("field 'rewards' must hold T+1 stage tables");
    for (const auto& stage : rewards)
      data->rewards.push_back(tensor_from_nested(stage, sa, "rewards"));
    const auto& transitions = j.at("transitions");
    if (!transitions.is_array() || transitions.size() != static_cast<std::size_t>(data->horizon))
      throw ValidationError("field 'transitions' must hold T stage tables");
    for (const auto& stage : transitions)
      data->transitions.push_back(tensor_from_nested(stage, ssa, "transitions"));
  } catch (const json::exception& e) {
    throw ValidationError("environment file is missing a field: " + std::string(e.what()));
  }

  validate_tabular(*data);

  auto reward = [data](int t, const Tensor&) { return data->rewards[static_cast<std::size_t>(t)]; };
  auto transition = [data](int t, const Tensor&) {
    return data->transitions[static_cast<std::size_t>(t)];
  };
  return Environment(data->horizon, data->state_shape, data->action_shape, data->mu0, data->r_max,
                     reward,
                     data->horizon > 0 ? Environment::TableFn(transition)
                                       : Environment::TableFn(),
                     mode);
}

void dump_tabular_env(const Environment& env, const std::filesystem::path& path) {
  const std::size_t size = env.num_states() * env.num_actions();
  const Shape sa = shape_cat(env.state_shape(), env.action_shape());
  Rng rng(0x7ab1e5);
  const auto random_stage_dist = [&rng, size, &sa] {
    Tensor l(sa);
    double total = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      l[i] = -std::log(1.0 - rng.uniform01());
      total += l[i];
    }
    for (std::size_t i = 0; i < size; ++i) l[i] /= total;
    return l;
  };
  // Only population-independent environments have a faithful tabular form;
  // probe each stage at two random distributions before committing.
  for (int t = 0; t <= env.horizon(); ++t) {
    const Tensor a = random_stage_dist();
    const Tensor b = random_stage_dist();
    const Tensor ra = env.reward_unchecked(t, a);
    const Tensor rb = env.reward_unchecked(t, b);
    for (std::size_t i = 0; i < ra.size(); ++i)
      if (std::abs(ra[i] - rb[i]) > 1e-12)
        throw std::invalid_argument(
            "environment rewards depend on the population distribution; only "
            "population-independent environments can be stored as tables");
    if (t < env.horizon()) {
      const Tensor pa = env.transition_unchecked(t, a);
      const Tensor pb = env.transition_unchecked(t, b);
      for (std::size_t i = 0; i < pa.size(); ++i)
        if (std::abs(pa[i] - pb[i]) > 1e-12)
          throw std::invalid_argument(
              "environment transitions depend on the population distribution; only "
              "population-independent environments can be stored as tables");
    }
  }

  const Tensor uniform(sa, 1.0 / static_cast<double>(size));
  json rewards = json::array();
  json transitions = json::array();
  for (int t = 0; t <= env.horizon(); ++t) {
    rewards.push_back(tensor_to_nested(env.reward(t, uniform)));
    if (t < env.horizon()) transitions.push_back(tensor_to_nested(env.transition(t, uniform)));
  }
  const json j{{"T", env.horizon()},
               {"S", shape_to_json(env.state_shape())},
               {"A", shape_to_json(env.action_shape())},
               {"mu0", tensor_to_nested(env.initial_dist())},
               {"r_max", env.max_reward()},
               {"rewards", rewards},
               {"transitions", transitions}};
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path.string());
  out << j.dump(2) << '\n';
}

void write_tune_report(const std::filesystem::path& path, const std::string& alg_name,
                       const std::vector<std::string>& env_names, const TuneSettings& settings,
                       const TuneResult& result) {
  json trials = json::array();
  for (const TrialRecord& trial : result.trials) {
    json outcomes = json::array();
    for (const EnvOutcome& o : trial.outcomes)
      outcomes.push_back({{"converged", o.converged},
                          {"iterations", o.iterations},
                          {"final_expl", finite_or_null(o.final_expl)},
                          {"error", o.error}});
    trials.push_back({{"trial", trial.index},
                      {"config", config_to_json(trial.config)},
                      {"score", trial.score},
                      {"mean_final_expl", finite_or_null(trial.mean_final_expl)},
                      {"wall_time_s", trial.wall_time_s},
                      {"outcomes", outcomes}});
  }
  const TrialRecord& best = result.trials[static_cast<std::size_t>(result.best_index)];
  const json j{{"version", kVersion},
               {"algorithm", alg_name},
               {"metric", to_string(settings.metric)},
               {"suite", env_names},
               {"settings",
                {{"n_trials", settings.n_trials},
                 {"seed", settings.seed},
                 {"timeout_s", settings.timeout_s ? json(*settings.timeout_s) : json(nullptr)},
                 {"solve", settings_to_json(settings.solve)}}},
               {"best", {{"trial", result.best_index},
                         {"config", config_to_json(result.best_config)},
                         {"score", best.score}}},
               {"trials", trials}};
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace mfgs
