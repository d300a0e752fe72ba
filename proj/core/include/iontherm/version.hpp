#pragma once

namespace iontherm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace iontherm
