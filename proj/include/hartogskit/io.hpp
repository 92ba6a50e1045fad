#ifndef HARTOGSKIT_IO_HPP
#define HARTOGSKIT_IO_HPP

#include <string>
#include <string_view>
#include <vector>

namespace hk {

/// Shortest-ambiguity-free rendering with 17 significant digits; "inf", "-inf", "nan".
std::string format_double(double v);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

/// Parses a double, accepting "inf"/"-inf". Throws ConfigError on malformed text.
double parse_double(std::string_view s);
int parse_int(std::string_view s);

} // namespace hk

#endif // HARTOGSKIT_IO_HPP
