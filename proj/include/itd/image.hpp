#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "itd/dataset.hpp"
#include "itd/error.hpp"
#include "itd/features.hpp"

namespace itd {

inline constexpr int kImageSize = 32;  // pixels per side
inline constexpr int kGridRows = 4;
inline constexpr int kGridCols = 5;

// 32x32 8-bit grayscale encoding of one normalized feature vector.
struct BehaviorImage {
    std::array<std::uint8_t, kImageSize * kImageSize> pixels{};
    std::string user;
    Date date;
    LabelClass label = LabelClass::non_malicious;

    std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row * kImageSize + col)]; }
    std::uint8_t& at(int row, int col) { return pixels[static_cast<std::size_t>(row * kImageSize + col)]; }
};

struct OutOfRange : Error {
    using Error::Error;
};

// round half up of v*255; v must lie in [0,1] within 1e-9
std::uint8_t quantize(double v);

// slot k occupies cell (k div 5, k mod 5), row-major
std::array<std::uint8_t, kFeatureCount> layout_grid(const FeatureVector& vector);

// nearest-neighbor: dst[r][c] = grid[r*4/32][c*5/32]
BehaviorImage upscale_nearest(const std::array<std::uint8_t, kFeatureCount>& grid);

BehaviorImage encode_image(const LabeledSample& sample);

// reads one representative pixel per source cell and returns pixel/255
FeatureVector decode_image(const BehaviorImage& image);

// <user>_<YYYYMMDD>_<label>.png
std::string image_filename(const std::string& user, Date date, LabelClass label);

}  // namespace itd
