#pragma once

namespace isodiff {

inline constexpr const char* version = "0.1.0";

}  // namespace isodiff
