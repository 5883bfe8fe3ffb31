#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace nnsa::detail {

/// Shortest round-trip decimal representation; locale-free. Infinities and
/// NaNs come out as "inf"/"nan".
inline void append_number(std::string& out, double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

inline void append_number(std::string& out, std::uint64_t v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace nnsa::detail
