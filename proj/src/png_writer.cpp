#include "png_writer.hpp"

#include "rmode/error.hpp"

#include <png.h>

#include <csetjmp>
#include <vector>

namespace rmode::detail {

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), length);
}

void no_flush(png_structp) {}

class PngWriteHandle {
public:
    PngWriteHandle() {
        png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png_ != nullptr)
            info_ = png_create_info_struct(png_);
    }
    ~PngWriteHandle() { png_destroy_write_struct(&png_, &info_); }
    PngWriteHandle(const PngWriteHandle&) = delete;
    PngWriteHandle& operator=(const PngWriteHandle&) = delete;

    png_structp png() const { return png_; }
    png_infop info() const { return info_; }

private:
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

} // namespace

std::string encode_rgb_png(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height) {
    if (width == 0 || height == 0 || rgb.size() != width * height * 3)
        throw EncodingError("png pixel buffer does not match its dimensions");

    PngWriteHandle handle;
    if (handle.png() == nullptr || handle.info() == nullptr)
        throw EncodingError("libpng initialization failed");

    std::string out;
    std::vector<png_bytep> rows(height);
    for (std::size_t y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(rgb.data() + y * width * 3);

    // libpng reports errors by longjmp; nothing with a destructor is
    // created between here and the end of the write.
    if (setjmp(png_jmpbuf(handle.png())))
        throw EncodingError("libpng failed while encoding");

    png_set_write_fn(handle.png(), &out, append_bytes, no_flush);
    png_set_IHDR(handle.png(), handle.info(), static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(handle.png(), handle.info());
    png_write_image(handle.png(), rows.data());
    png_write_end(handle.png(), nullptr);
    return out;
}

} // namespace rmode::detail
