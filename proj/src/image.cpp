#include "itd/image.hpp"

#include <cmath>

namespace itd {

std::uint8_t quantize(double v) {
    constexpr double tol = 1e-9;
    if (!(v >= -tol && v <= 1.0 + tol))
        throw OutOfRange("quantize: value " + std::to_string(v) + " outside [0,1]");
    v = std::min(1.0, std::max(0.0, v));
    return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

std::array<std::uint8_t, kFeatureCount> layout_grid(const FeatureVector& vector) {
    std::array<std::uint8_t, kFeatureCount> grid{};
    for (int k = 0; k < kFeatureCount; ++k)
        grid[static_cast<std::size_t>(k)] = quantize(vector[static_cast<std::size_t>(k)]);
    return grid;  // row-major 4x5 by construction of the slot order
}

BehaviorImage upscale_nearest(const std::array<std::uint8_t, kFeatureCount>& grid) {
    BehaviorImage image;
    for (int r = 0; r < kImageSize; ++r) {
        const int src_row = r * kGridRows / kImageSize;
        for (int c = 0; c < kImageSize; ++c) {
            const int src_col = c * kGridCols / kImageSize;
            image.at(r, c) = grid[static_cast<std::size_t>(src_row * kGridCols + src_col)];
        }
    }
    return image;
}

BehaviorImage encode_image(const LabeledSample& sample) {
    BehaviorImage image = upscale_nearest(layout_grid(sample.features));
    image.user = sample.user;
    image.date = sample.date;
    image.label = sample.label;
    return image;
}

FeatureVector decode_image(const BehaviorImage& image) {
    FeatureVector v;
    v.scale = FeatureScale::normalized;
    for (int k = 0; k < kFeatureCount; ++k) {
        const int src_row = k / kGridCols;
        const int src_col = k % kGridCols;
        // first destination row/column of each source band
        const int r = src_row * kImageSize / kGridRows;
        const int c = (src_col * kImageSize + kGridCols - 1) / kGridCols;
        v[static_cast<std::size_t>(k)] = image.at(r, c) / 255.0;
    }
    return v;
}

std::string image_filename(const std::string& user, Date date, LabelClass label) {
    return user + "_" + date.compact() + "_" + std::string(to_string(label)) + ".png";
}

}  // namespace itd
