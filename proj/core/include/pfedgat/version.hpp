#pragma once

namespace pfedgat {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace pfedgat
