#pragma once

namespace shrinkeq {

inline constexpr const char* version = "0.1.0";

}  // namespace shrinkeq
