#pragma once

namespace msp {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace msp
