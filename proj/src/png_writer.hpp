#ifndef RMODE_SRC_PNG_WRITER_HPP
#define RMODE_SRC_PNG_WRITER_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace rmode::detail {

/// 8-bit RGB PNG of width x height pixels, rows top to bottom. Throws
/// EncodingError.
std::string encode_rgb_png(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height);

} // namespace rmode::detail

#endif
