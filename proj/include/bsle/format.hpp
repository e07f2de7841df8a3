#pragma once

#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace bsle {

// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{}) {
        throw std::invalid_argument("not a number: '" + text + "'");
    }
    return v;
}

}  // namespace bsle
