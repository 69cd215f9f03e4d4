// Small text helpers shared by the file readers. Internal header.
#ifndef RMODE_SRC_TEXT_UTIL_HPP
#define RMODE_SRC_TEXT_UTIL_HPP

#include <string>
#include <string_view>
#include <vector>

namespace rmode::detail {

std::string_view trim(std::string_view s);

/// Drops everything from the first '#'.
std::string_view strip_comment(std::string_view s);

/// Splits on any run of the given delimiter characters; empty fields are
/// dropped.
std::vector<std::string_view> split(std::string_view s, std::string_view delims = " \t\r");

bool iequals(std::string_view a, std::string_view b);

/// Whole-token parse (leading '+' accepted). Returns false on trailing junk.
bool parse_double(std::string_view token, double& out);
bool parse_long(std::string_view token, long& out);

/// Shortest round-trip representation when significant_digits == 0,
/// otherwise %.<n>g style.
std::string format_double(double v, int significant_digits = 0);

} // namespace rmode::detail

#endif
