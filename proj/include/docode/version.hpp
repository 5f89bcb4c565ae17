#pragma once

namespace docode {

inline constexpr const char* kVersion = "0.1.0";

} // namespace docode
