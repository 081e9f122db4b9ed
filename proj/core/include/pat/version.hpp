#pragma once

namespace pat {

inline constexpr const char* kToolkitVersion = "0.1.0";

}  // namespace pat
