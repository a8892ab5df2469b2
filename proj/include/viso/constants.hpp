#pragma once

namespace viso {

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr double two_pi = 6.28318530717958647692528676655900577;

}  // namespace viso
