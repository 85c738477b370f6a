#pragma once

namespace nvforge {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nvforge
