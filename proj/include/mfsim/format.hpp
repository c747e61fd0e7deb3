#pragma once

#include <cstdio>
#include <string>

namespace mfsim {

/// Decimal text with 12 significant digits, the precision used for every
/// number written to disk.
inline std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Round-trips `v` through its 12-digit text form.
inline double round12(double v) { return std::stod(fmt12(v)); }

} // namespace mfsim
