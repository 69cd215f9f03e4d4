#include "text_util.hpp"

#include <array>
#include <cctype>
#include <charconv>

namespace rmode::detail {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string_view strip_comment(std::string_view s) {
    const auto hash = s.find('#');
    return hash == std::string_view::npos ? s : s.substr(0, hash);
}

std::vector<std::string_view> split(std::string_view s, std::string_view delims) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto start = s.find_first_not_of(delims, pos);
        if (start == std::string_view::npos)
            break;
        auto end = s.find_first_of(delims, start);
        if (end == std::string_view::npos)
            end = s.size();
        out.push_back(s.substr(start, end - start));
        pos = end;
    }
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

bool parse_double(std::string_view token, double& out) {
    token = trim(token);
    if (!token.empty() && token.front() == '+')
        token.remove_prefix(1);
    if (token.empty())
        return false;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size();
}

bool parse_long(std::string_view token, long& out) {
    token = trim(token);
    if (!token.empty() && token.front() == '+')
        token.remove_prefix(1);
    if (token.empty())
        return false;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size();
}

std::string format_double(double v, int significant_digits) {
    std::array<char, 64> buf{};
    const auto res = significant_digits <= 0
                         ? std::to_chars(buf.data(), buf.data() + buf.size(), v)
                         : std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                         std::chars_format::general, significant_digits);
    return std::string(buf.data(), res.ptr);
}

} // namespace rmode::detail
