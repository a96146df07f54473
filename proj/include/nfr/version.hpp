#pragma once

namespace nfr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nfr
