#pragma once

#include <string>

#ifndef QEL_GIT_REVISION
#define QEL_GIT_REVISION "unknown"
#endif

namespace qel {

inline constexpr const char* version_number = "0.1.0";

/// Version plus the source revision the binary was configured from.
inline std::string version_string() { return std::string(version_number) + " (" + QEL_GIT_REVISION + ")"; }

}  // namespace qel
