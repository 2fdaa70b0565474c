#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <variant>

namespace mfgs {

/// Value of one environment kwarg or algorithm hyperparameter.
using ParamValue = std::variant<std::int64_t, double, std::string>;

/// Named parameter set.  An absent key means "use the default" (and for
/// fictitious play's alpha, "use the classic 1/(n+2) averaging").
using Config = std::map<std::string, ParamValue>;

std::string to_string(const ParamValue& value);
std::string to_string(const Config& config);

/// Parses "3" -> int64, "0.5"/"1e-3" -> double, anything else -> string.
ParamValue parse_param_value(const std::string& text);

/// Splits "key=value" at the first '='; throws std::invalid_argument when
/// '=' is missing or the key is empty.
std::pair<std::string, std::string> split_key_value(const std::string& text);

/// Typed access; integers coerce to reals, nothing else converts.
double as_real(const ParamValue& value, const std::string& param_name);
std::int64_t as_int(const ParamValue& value, const std::string& param_name);

double config_real(const Config& config, const std::string& name, double fallback);
std::int64_t config_int(const Config& config, const std::string& name, std::int64_t fallback);

}  // namespace mfgs
