#pragma once

namespace qphase {

inline constexpr const char* version = "0.1.0";

} // namespace qphase
