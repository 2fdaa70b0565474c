#include "mfgs/params.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace mfgs {

std::string to_string(const ParamValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&value)) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", *d);
    return buf;
  }
  return std::get<std::string>(value);
}

std::string to_string(const Config& config) {
  std::string out = "{";
  bool first = true;
  for (const auto& [key, value] : config) {
    if (!first) out += ", ";
    first = false;
    out += key + "=" + to_string(value);
  }
  out += "}";
  return out;
}

ParamValue parse_param_value(const std::string& text) {
  if (!text.empty()) {
    errno = 0;
    char* end = nullptr;
    const long long as_ll = std::strtoll(text.c_str(), &end, 10);
    if (end == text.c_str() + text.size() && errno == 0) return static_cast<std::int64_t>(as_ll);
    errno = 0;
    end = nullptr;
    const double as_d = std::strtod(text.c_str(), &end);
    if (end == text.c_str() + text.size() && errno == 0) return as_d;
  }
  return text;
}

std::pair<std::string, std::string> split_key_value(const std::string& text) {
  const auto pos = text.find('=');
  if (pos == std::string::npos || pos == 0)
    throw std::invalid_argument("expected key=value, got '" + text + "'");
  return {text.substr(0, pos), text.substr(pos + 1)};
}

double as_real(const ParamValue& value, const std::string& param_name) {
  if (const auto* d = std::get_if<double>(&value)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
  throw std::invalid_argument("parameter '" + param_name + "' expects a number, got '" +
                              std::get<std::string>(value) + "'");
}

std::int64_t as_int(const ParamValue& value, const std::string& param_name) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
  throw std::invalid_argument("parameter '" + param_name + "' expects an integer, got '" +
                              to_string(value) + "'");
}

double config_real(const Config& config, const std::string& name, double fallback) {
  const auto it = config.find(name);
  return it == config.end() ? fallback : as_real(it->second, name);
}

std::int64_t config_int(const Config& config, const std::string& name, std::int64_t fallback) {
  const auto it = config.find(name);
  return it == config.end() ? fallback : as_int(it->second, name);
}

}  // namespace mfgs
