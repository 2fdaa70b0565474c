#pragma once

namespace mfgs {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mfgs
