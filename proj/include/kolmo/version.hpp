#pragma once

namespace kolmo {
inline constexpr const char* kVersion = "0.1.0";
}
