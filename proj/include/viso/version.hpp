#pragma once

namespace viso {

inline constexpr const char* version_string = "1.0.0";
inline constexpr const char* output_schema_version = "1";

}  // namespace viso
