#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfgs/core.hpp"
#include "mfgs/params.hpp"
#include "mfgs/tuner.hpp"

namespace mfgs {

// On-disk formats are UTF-8 JSON with explicit shape fields and arrays in
// row-major nesting, index order (t, s..., a...).  Doubles are written in
// shortest round-trip form, so a parsed file reproduces the in-memory
// values bit for bit.

struct IterationPoint {
  int iteration = 0;
  double exploitability = 0.0;
  double elapsed_s = 0.0;
};

/// Serialized record of one solve: inputs, settings, the recorded iteration
/// series and the final policy.
struct RunRecord {
  std::string env_name;
  Config env_args;
  std::string alg_name;
  Config alg_params;
  SolveSettings settings;
  Shape state_shape;
  Shape action_shape;
  std::vector<IterationPoint> series;
  bool converged = false;
  int iterations_run = 0;
  Policy final_policy;
  std::string version;
};

std::string run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const std::string& text);
void write_run_record(const RunRecord& record, const std::filesystem::path& path);
RunRecord read_run_record(const std::filesystem::path& path);

/// Loads a population-independent environment from a JSON table file with
/// fields T, S, A, mu0, r_max, rewards (t, s..., a...) and transitions
/// (t, s'..., s..., a...).  All invariants are checked up front; violations
/// raise ValidationError naming the offending index path.  Missing files
/// raise std::invalid_argument.
Environment load_tabular_env(const std::filesystem::path& path,
                             ValidationMode mode = ValidationMode::validating);

/// Writes an environment as a tabular file.  Only population-independent
/// environments can be stored; the callables are probed at random
/// distributions and a population-coupled environment is rejected with
/// std::invalid_argument.
void dump_tabular_env(const Environment& env, const std::filesystem::path& path);

void write_tune_report(const std::filesystem::path& path, const std::string& alg_name,
                       const std::vector<std::string>& env_names, const TuneSettings& settings,
                       const TuneResult& result);

}  // namespace mfgs
