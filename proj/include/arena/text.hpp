#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

namespace arena {

// Shortest round-trip decimal form (17 significant digits at most). All CSV
// output goes through this so reruns are byte-comparable.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;  // 32 bytes always suffice for double
    return std::string(buf, ptr);
}

inline std::string format_int(std::int64_t v) {
    char buf[24];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

// strict full-field numeric parses; return false on trailing garbage
inline bool parse_double(std::string_view s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

inline bool parse_int64(std::string_view s, std::int64_t& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace arena
