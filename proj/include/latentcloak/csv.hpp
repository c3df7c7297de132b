#pragma once

#include <cstdio>
#include <string>

namespace latentcloak {

/// Shortest round-trippable decimal form of a double.
inline std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace latentcloak
