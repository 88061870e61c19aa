#pragma once

namespace pepakit {
inline constexpr const char* kVersion = "0.1.0";
}
