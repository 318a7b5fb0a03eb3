#pragma once

namespace timo3 {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace timo3
