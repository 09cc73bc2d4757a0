#pragma once

namespace fredholm {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace fredholm
