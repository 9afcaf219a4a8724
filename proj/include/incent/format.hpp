#pragma once

#include <cstdio>
#include <string>

namespace incent {

/// Canonical decimal form used everywhere a float leaves the library: 12
/// significant digits. Exact grouping and byte-identical reports both depend
/// on this being the single choke point.
inline std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

/// Round to the value fmt12 prints, so in-memory aggregates match re-parsed
/// report files bit for bit.
inline double round12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::strtod(buf, nullptr);
}

}  // namespace incent
