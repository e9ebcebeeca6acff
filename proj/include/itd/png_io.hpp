#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "itd/error.hpp"
#include "itd/image.hpp"

namespace itd {

struct FormatError : Error {
    using Error::Error;
};

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major
};

// Minimal deterministic PNG codec: 8-bit grayscale, no alpha, no interlace,
// filter type 0 on every scanline, fixed zlib compression level. Identical
// pixel input always produces identical bytes.
std::vector<std::uint8_t> encode_png_gray(const std::uint8_t* pixels, int width, int height);
void write_png_gray(const std::filesystem::path& path, const std::uint8_t* pixels, int width,
                    int height);

// Accepts any 8-bit grayscale non-interlaced PNG (all five scanline filters);
// throws FormatError for other color types or depths.
GrayImage decode_png_gray(const std::vector<std::uint8_t>& bytes);
GrayImage read_png_gray(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const BehaviorImage& image);

// FormatError unless the file is 8-bit grayscale and exactly 32x32.
BehaviorImage read_png(const std::filesystem::path& path);

}  // namespace itd
