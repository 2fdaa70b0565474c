#include "mfgs/envs.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "mfgs/rng.hpp"

namespace mfgs {

Environment make_left_right(ValidationMode mode) {
  // States {0: init, 1: left, 2: right}; action 0 goes left, action 1 right.
  Tensor mu0(Shape{3});
  mu0[0] = 1.0;
  auto reward = [](int t, const Tensor& l) {
    Tensor r(Shape{3, 2});
    if (t == 1) {
      for (std::size_t s = 1; s <= 2; ++s) {
        const double mass = l[s * 2] + l[s * 2 + 1];
        r[s * 2] = -mass;
        r[s * 2 + 1] = -mass;
      }
    }
    return r;
  };
  auto transition = [](int, const Tensor&) {
    Tensor p(Shape{3, 3, 2});
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 2; ++a) p[(a + 1) * 6 + s * 2 + a] = 1.0;
    return p;
  };
  return Environment(1, Shape{3}, Shape{2}, std::move(mu0), 1.0, reward, transition, mode);
}

Environment make_rock_paper_scissors(ValidationMode mode) {
  // States {0: init, 1: R, 2: P, 3: S}; action i moves any state to i+1.
  Tensor mu0(Shape{4});
  mu0[0] = 1.0;
  auto reward = [](int t, const Tensor& l) {
    Tensor r(Shape{4, 3});
    if (t == 1) {
      const auto mass = [&l](std::size_t s) { return l[s * 3] + l[s * 3 + 1] + l[s * 3 + 2]; };
      const double pay[4] = {0.0, mass(3) - mass(2), mass(1) - mass(3), mass(2) - mass(1)};
      for (std::size_t s = 0; s < 4; ++s)
        for (std::size_t a = 0; a < 3; ++a) r[s * 3 + a] = pay[s];
    }
    return r;
  };
  auto transition = [](int, const Tensor&) {
    Tensor p(Shape{4, 4, 3});
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t a = 0; a < 3; ++a) p[(a + 1) * 12 + s * 3 + a] = 1.0;
    return p;
  };
  return Environment(1, Shape{4}, Shape{3}, std::move(mu0), 1.0, reward, transition, mode);
}

Environment make_beach_bar(int n, int bar, double noise, int horizon, double log_eps,
                           ValidationMode mode) {
  if (n < 2) throw std::invalid_argument("beach_bar: n must be >= 2");
  if (bar < 0 || bar >= n) throw std::invalid_argument("beach_bar: bar must satisfy 0 <= bar < n");
  if (noise < 0.0 || noise > 1.0)
    throw std::invalid_argument("beach_bar: noise must lie in [0, 1]");
  if (horizon < 1) throw std::invalid_argument("beach_bar: T must be >= 1");
  if (!(log_eps > 0.0)) throw std::invalid_argument("beach_bar: log_eps must be positive");

  const auto ns = static_cast<std::size_t>(n);
  Tensor mu0(Shape{ns}, 1.0 / n);

  // Moves {-1, 0, +1} clipped to [0, n-1]; the noisy branch picks one of
  // the three moves uniformly and applies its clipped result.
  const auto dest = [n](int pos, int move) { return std::clamp(pos + move - 1, 0, n - 1); };
  auto kernel = std::make_shared<Tensor>(Shape{ns, ns, 3});
  for (int pos = 0; pos < n; ++pos) {
    for (int act = 0; act < 3; ++act) {
      const std::size_t col = static_cast<std::size_t>(pos) * 3 + static_cast<std::size_t>(act);
      (*kernel)[static_cast<std::size_t>(dest(pos, act)) * ns * 3 + col] += 1.0 - noise;
      for (int alt = 0; alt < 3; ++alt)
        (*kernel)[static_cast<std::size_t>(dest(pos, alt)) * ns * 3 + col] += noise / 3.0;
    }
  }
  auto transition = [kernel](int, const Tensor&) { return *kernel; };

  auto reward = [n, bar, log_eps, ns](int, const Tensor& l) {
    Tensor r(Shape{ns, 3});
    for (std::size_t pos = 0; pos < ns; ++pos) {
      const double mass = l[pos * 3] + l[pos * 3 + 1] + l[pos * 3 + 2];
      const double value = -std::abs(static_cast<double>(pos) - bar) / n - std::log(mass + log_eps);
      for (std::size_t a = 0; a < 3; ++a) r[pos * 3 + a] = value;
    }
    return r;
  };
  const double r_max = 1.0 + std::abs(std::log(log_eps));
  return Environment(horizon, Shape{ns}, Shape{3}, std::move(mu0), r_max, reward, transition,
                     mode);
}

Environment make_random_linear(std::uint64_t seed, int horizon, int n_states, int n_actions,
                               double coupling, ValidationMode mode) {
  if (horizon < 0) throw std::invalid_argument("random_linear: T must be >= 0");
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("random_linear: n_states and n_actions must be >= 1");
  if (!(coupling >= 0.0)) throw std::invalid_argument("random_linear: coupling must be >= 0");

  const auto ns = static_cast<std::size_t>(n_states);
  const auto na = static_cast<std::size_t>(n_actions);
  const std::size_t nsa = ns * na;
  const auto stages = static_cast<std::size_t>(horizon) + 1;

  Rng rng(seed);
  auto base = std::make_shared<std::vector<Tensor>>();
  for (std::size_t t = 0; t < stages; ++t) {
    Tensor r(Shape{ns, na});
    for (std::size_t i = 0; i < nsa; ++i) r[i] = rng.uniform(-1.0, 1.0);
    base->push_back(std::move(r));
  }
  auto kernels = std::make_shared<std::vector<Tensor>>();
  for (int t = 0; t < horizon; ++t) {
    Tensor p(Shape{ns, ns, na});
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform01();
    for (std::size_t col = 0; col < nsa; ++col) {
      double sum = 0.0;
      for (std::size_t sp = 0; sp < ns; ++sp) sum += p[sp * nsa + col];
      if (sum <= 0.0) {
        for (std::size_t sp = 0; sp < ns; ++sp) p[sp * nsa + col] = 1.0 / ns;
      } else {
        for (std::size_t sp = 0; sp < ns; ++sp) p[sp * nsa + col] /= sum;
      }
    }
    kernels->push_back(std::move(p));
  }
  auto weights = std::make_shared<std::vector<Tensor>>();
  double max_abs_w = 0.0;
  for (std::size_t t = 0; t < stages; ++t) {
    Tensor w(Shape{nsa, nsa});
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = rng.uniform(-1.0, 1.0);
      max_abs_w = std::max(max_abs_w, std::abs(w[i]));
    }
    weights->push_back(std::move(w));
  }

  Tensor mu0(Shape{ns}, 1.0 / n_states);
  auto reward = [base, weights, coupling, nsa](int t, const Tensor& l) {
    Tensor r = (*base)[static_cast<std::size_t>(t)];
    if (coupling != 0.0) {
      const Tensor& w = (*weights)[static_cast<std::size_t>(t)];
      for (std::size_t i = 0; i < nsa; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < nsa; ++j) acc += w[i * nsa + j] * l[j];
        r[i] += coupling * acc;
      }
    }
    return r;
  };
  auto transition = [kernels](int t, const Tensor&) { return (*kernels)[static_cast<std::size_t>(t)]; };
  const double r_max = 1.0 + coupling * max_abs_w;
  return Environment(horizon, Shape{ns}, Shape{na}, std::move(mu0), r_max, reward,
                     horizon > 0 ? Environment::TableFn(transition) : Environment::TableFn(),
                     mode);
}

namespace {

std::string known_env_names() {
  std::string names;
  for (const auto& entry : environment_registry()) {
    if (!names.empty()) names += ", ";
    names += entry.name;
  }
  return names;
}

}  // namespace

const std::vector<EnvEntry>& environment_registry() {
  static const std::vector<EnvEntry> entries = [] {
    std::vector<EnvEntry> v;
    v.push_back({"left_right",
                 {},
                 false,
                 [](const Config&, ValidationMode m) { return make_left_right(m); }});
    v.push_back({"beach_bar",
                 {{"n", true, 10, "number of positions"},
                  {"bar", true, 5, "bar position, 0 <= bar < n"},
                  {"noise", false, 0.1, "probability of a uniformly random move"},
                  {"T", true, 5, "number of transitions"},
                  {"log_eps", false, 1e-3, "crowd penalty floor"}},
                 false,
                 [](const Config& c, ValidationMode m) {
                   return make_beach_bar(static_cast<int>(config_int(c, "n", 10)),
                                         static_cast<int>(config_int(c, "bar", 5)),
                                         config_real(c, "noise", 0.1),
                                         static_cast<int>(config_int(c, "T", 5)),
                                         config_real(c, "log_eps", 1e-3), m);
                 }});
    v.push_back({"rock_paper_scissors",
                 {},
                 false,
                 [](const Config&, ValidationMode m) { return make_rock_paper_scissors(m); }});
    v.push_back({"random_linear",
                 {{"seed", true, 0, "generator seed"},
                  {"T", true, 3, "number of transitions"},
                  {"n_states", true, 4, "state count"},
                  {"n_actions", true, 3, "action count"},
                  {"coupling", false, 0.5, "reward coupling strength"}},
                 true,
                 [](const Config& c, ValidationMode m) {
                   return make_random_linear(static_cast<std::uint64_t>(config_int(c, "seed", 0)),
                                             static_cast<int>(config_int(c, "T", 3)),
                                             static_cast<int>(config_int(c, "n_states", 4)),
                                             static_cast<int>(config_int(c, "n_actions", 3)),
                                             config_real(c, "coupling", 0.5), m);
                 }});
    return v;
  }();
  return entries;
}

const EnvEntry* find_environment(const std::string& name) {
  for (const auto& entry : environment_registry())
    if (entry.name == name) return &entry;
  return nullptr;
}

Environment make_environment(const std::string& name, const Config& args, ValidationMode mode) {
  const EnvEntry* entry = find_environment(name);
  if (entry == nullptr)
    throw std::invalid_argument("unknown environment '" + name +
                                "'; available: " + known_env_names());
  for (const auto& [key, value] : args) {
    const bool known = std::any_of(entry->params.begin(), entry->params.end(),
                                   [&key](const EnvParamSpec& p) { return p.name == key; });
    if (!known) {
      std::string valid;
      for (const auto& p : entry->params) {
        if (!valid.empty()) valid += ", ";
        valid += p.name;
      }
      throw std::invalid_argument("unknown argument '" + key + "' for environment '" + name +
                                  "'" + (valid.empty() ? " (takes no arguments)"
                                                       : " (valid: " + valid + ")"));
    }
  }
  return entry->make(args, mode);
}

}  // namespace mfgs
