#include <doctest.h>

#include <cmath>

#include "itd/image.hpp"
#include "itd/rng.hpp"

using namespace itd;

namespace {

FeatureVector normalized_vector() {
    FeatureVector v;
    v.scale = FeatureScale::normalized;
    return v;
}

}  // namespace

TEST_CASE("quantize endpoints, rounding and derived value") {
    CHECK(quantize(0.0) == 0);
    CHECK(quantize(1.0) == 255);
    CHECK(quantize(0.5) == 128);  // half up of 127.5
    CHECK(quantize(0.2) == 51);   // 0.2*255 = 51 exactly
}

TEST_CASE("quantize tolerates 1e-9 slop and rejects more") {
    CHECK(quantize(-5e-10) == 0);
    CHECK(quantize(1.0 + 5e-10) == 255);
    CHECK_THROWS_AS(quantize(-1e-6), OutOfRange);
    CHECK_THROWS_AS(quantize(1.000001), OutOfRange);
}

TEST_CASE("grid layout is row-major with cell (k/5, k%5)") {
    FeatureVector v = normalized_vector();
    const auto zero_grid = layout_grid(v);
    for (const auto pixel : zero_grid) CHECK(pixel == 0);

    v[0] = 1.0;
    auto grid = layout_grid(v);
    CHECK(grid[0] == 255);
    for (int k = 1; k < kFeatureCount; ++k) CHECK(grid[static_cast<std::size_t>(k)] == 0);

    // slot 7 lands in cell (1, 2)
    FeatureVector w = normalized_vector();
    w[7] = 1.0;
    grid = layout_grid(w);
    CHECK(grid[1 * kGridCols + 2] == 255);
}

TEST_CASE("nearest upscale of a constant grid is constant") {
    std::array<std::uint8_t, kFeatureCount> grid;
    grid.fill(77);
    const BehaviorImage image = upscale_nearest(grid);
    for (const auto pixel : image.pixels) CHECK(pixel == 77);
}

TEST_CASE("row bands are exact eights; column bands follow floor(c*5/32)") {
    std::array<std::uint8_t, kFeatureCount> grid{};
    for (int k = 0; k < kFeatureCount; ++k) grid[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(k * 10);
    const BehaviorImage image = upscale_nearest(grid);

    for (int r = 0; r < kImageSize; ++r) {
        for (int c = 0; c < kImageSize; ++c) {
            const int src_row = r / 8;                  // 32/4 bands of 8 rows
            const int src_col = c * kGridCols / kImageSize;
            CHECK(image.at(r, c) == grid[static_cast<std::size_t>(src_row * kGridCols + src_col)]);
        }
    }
    // brute-force spot values
    CHECK(31 * kGridCols / kImageSize == 4);  // last column maps to source col 4
    CHECK(image.at(0, 31) == grid[4]);
    CHECK(image.at(31, 0) == grid[15]);

    // band widths across columns are 7,6,7,6,6
    int widths[5] = {0, 0, 0, 0, 0};
    for (int c = 0; c < kImageSize; ++c) ++widths[c * kGridCols / kImageSize];
    CHECK(widths[0] == 7);
    CHECK(widths[1] == 6);
    CHECK(widths[2] == 7);
    CHECK(widths[3] == 6);
    CHECK(widths[4] == 6);
}

TEST_CASE("bands tile the image: every pixel equals its source cell") {
    Rng rng(31);
    std::array<std::uint8_t, kFeatureCount> grid;
    for (auto& g : grid) g = static_cast<std::uint8_t>(rng.below(256));
    const BehaviorImage image = upscale_nearest(grid);
    int covered = 0;
    for (int k = 0; k < kFeatureCount; ++k) {
        const int r0 = (k / kGridCols) * 8;
        const int c0 = ((k % kGridCols) * kImageSize + kGridCols - 1) / kGridCols;
        const int c1 = (((k % kGridCols) + 1) * kImageSize + kGridCols - 1) / kGridCols;
        for (int r = r0; r < r0 + 8; ++r)
            for (int c = c0; c < c1; ++c) {
                CHECK(image.at(r, c) == grid[static_cast<std::size_t>(k)]);
                ++covered;
            }
    }
    CHECK(covered == kImageSize * kImageSize);
}

TEST_CASE("decode inverts encode within the quantization bound") {
    FeatureVector v = normalized_vector();
    for (int k = 0; k < kFeatureCount; ++k)
        v[static_cast<std::size_t>(k)] = static_cast<double>(k) / (kFeatureCount - 1);
    LabeledSample s{"U1", {2010, 1, 4}, v, LabelClass::non_malicious};
    const FeatureVector back = decode_image(encode_image(s));
    for (int k = 0; k < kFeatureCount; ++k)
        CHECK(std::abs(back[static_cast<std::size_t>(k)] - v[static_cast<std::size_t>(k)]) <=
              1.0 / 255.0);
}

TEST_CASE("all-255 image decodes to all ones") {
    BehaviorImage image;
    image.pixels.fill(255);
    const FeatureVector v = decode_image(image);
    for (int k = 0; k < kFeatureCount; ++k) CHECK(v[static_cast<std::size_t>(k)] == 1.0);
}

TEST_CASE("1000 random vectors stay within the half-up rounding bound") {
    Rng rng(1234);
    double worst = 0.0;
    for (int round = 0; round < 1000; ++round) {
        FeatureVector v = normalized_vector();
        for (int k = 0; k < kFeatureCount; ++k) v[static_cast<std::size_t>(k)] = rng.uniform();
        LabeledSample s{"U", {2010, 1, 4}, v, LabelClass::non_malicious};
        const FeatureVector back = decode_image(encode_image(s));
        for (int k = 0; k < kFeatureCount; ++k)
            worst = std::max(worst, std::abs(back[static_cast<std::size_t>(k)] -
                                             v[static_cast<std::size_t>(k)]));
    }
    CHECK(worst <= 1.0 / 510.0 + 1e-12);
}

TEST_CASE("vectors that differ after quantization produce different images") {
    Rng rng(77);
    for (int round = 0; round < 200; ++round) {
        FeatureVector a = normalized_vector(), b = normalized_vector();
        for (int k = 0; k < kFeatureCount; ++k) {
            a[static_cast<std::size_t>(k)] = rng.uniform();
            b[static_cast<std::size_t>(k)] = rng.uniform();
        }
        const auto grid_a = layout_grid(a);
        const auto grid_b = layout_grid(b);
        const BehaviorImage ia = upscale_nearest(grid_a);
        const BehaviorImage ib = upscale_nearest(grid_b);
        if (grid_a != grid_b) CHECK(ia.pixels != ib.pixels);
        else CHECK(ia.pixels == ib.pixels);
    }
}

TEST_CASE("image filenames follow user_YYYYMMDD_label") {
    CHECK(image_filename("U0007", {2010, 3, 9}, LabelClass::malicious) ==
          "U0007_20100309_malicious.png");
    CHECK(image_filename("AAA0001", {2011, 12, 31}, LabelClass::non_malicious) ==
          "AAA0001_20111231_non-malicious.png");
}

TEST_CASE("encode keeps provenance") {
    LabeledSample s{"U3", {2010, 2, 1}, normalized_vector(), LabelClass::malicious};
    const BehaviorImage image = encode_image(s);
    CHECK(image.user == "U3");
    CHECK(image.date == Date{2010, 2, 1});
    CHECK(image.label == LabelClass::malicious);
}
