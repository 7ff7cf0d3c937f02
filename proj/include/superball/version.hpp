#pragma once

namespace superball {

#ifdef SUPERBALL_VERSION
inline constexpr const char* version = SUPERBALL_VERSION;
#else
inline constexpr const char* version = "0.3.0";
#endif

}  // namespace superball
