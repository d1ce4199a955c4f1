#pragma once

namespace vecurve {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vecurve
