#pragma once

namespace ctseg {

inline constexpr const char* kToolName = "ctseg";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace ctseg
