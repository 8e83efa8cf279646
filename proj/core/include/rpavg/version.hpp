#pragma once

namespace rpavg {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace rpavg
