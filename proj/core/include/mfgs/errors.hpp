#pragma once

#include <stdexcept>

namespace mfgs {

/// Model data violated an invariant: a transition kernel that is not
/// stochastic, a reward outside the declared bound, a distribution that
/// does not normalize.  Messages name the violated invariant and the
/// offending stage/index.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfgs
