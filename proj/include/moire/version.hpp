#pragma once

namespace moire {
inline constexpr const char* kVersion = "0.1.0";
}
