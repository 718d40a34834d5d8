#pragma once

#include <charconv>
#include <string>

namespace coxfuse {

// Shortest decimal form that parses back to the same double; keeps every
// emitted table byte-reproducible and round-trippable.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace coxfuse
