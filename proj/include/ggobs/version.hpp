#pragma once

namespace ggobs {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ggobs
