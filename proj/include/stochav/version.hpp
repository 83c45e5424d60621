#pragma once

namespace stochav {
inline constexpr const char* kVersion = "0.1.0";
}
