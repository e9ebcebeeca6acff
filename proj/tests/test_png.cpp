#include <doctest.h>

#include <zlib.h>

#include <cstring>

#include "itd/png_io.hpp"
#include "itd/rng.hpp"
#include "test_util.hpp"

using namespace itd;

namespace {

// independent PNG assembler for exercising the reader: pixels are
// forward-filtered here with the chosen per-row filter types
std::vector<std::uint8_t> build_png(int width, int height, std::uint8_t color_type,
                                    const std::vector<std::uint8_t>& pixels,
                                    const std::vector<std::uint8_t>& row_filters) {
    const int bpp = color_type == 2 ? 3 : 1;
    std::vector<std::uint8_t> raw;
    for (int y = 0; y < height; ++y) {
        const std::uint8_t filter = row_filters[static_cast<std::size_t>(y)];
        raw.push_back(filter);
        for (int x = 0; x < width * bpp; ++x) {
            const auto at = [&](int yy, int xx) -> int {
                if (yy < 0 || xx < 0) return 0;
                return pixels[static_cast<std::size_t>(yy) * width * bpp + xx];
            };
            const int cur = at(y, x);
            const int a = at(y, x - bpp), b = at(y - 1, x), c = at(y - 1, x - bpp);
            int encoded = cur;
            switch (filter) {
                case 0: break;
                case 1: encoded = cur - a; break;
                case 2: encoded = cur - b; break;
                case 3: encoded = cur - (a + b) / 2; break;
                case 4: {
                    const int p = a + b - c;
                    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
                    const int pred = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
                    encoded = cur - pred;
                    break;
                }
            }
            raw.push_back(static_cast<std::uint8_t>(encoded & 0xff));
        }
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> idat(bound);
    REQUIRE(compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) == Z_OK);
    idat.resize(bound);

    std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    auto put_u32 = [&out](std::uint32_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 24));
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    };
    auto chunk = [&](const char type[4], const std::vector<std::uint8_t>& data) {
        put_u32(static_cast<std::uint32_t>(data.size()));
        const std::size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        put_u32(static_cast<std::uint32_t>(
            crc32(0, out.data() + start, static_cast<uInt>(out.size() - start))));
    };

    std::vector<std::uint8_t> ihdr(13, 0);
    ihdr[0] = static_cast<std::uint8_t>(width >> 24);
    ihdr[1] = static_cast<std::uint8_t>(width >> 16);
    ihdr[2] = static_cast<std::uint8_t>(width >> 8);
    ihdr[3] = static_cast<std::uint8_t>(width);
    ihdr[4] = static_cast<std::uint8_t>(height >> 24);
    ihdr[5] = static_cast<std::uint8_t>(height >> 16);
    ihdr[6] = static_cast<std::uint8_t>(height >> 8);
    ihdr[7] = static_cast<std::uint8_t>(height);
    ihdr[8] = 8;
    ihdr[9] = color_type;
    chunk("IHDR", ihdr);
    chunk("IDAT", idat);
    chunk("IEND", {});
    return out;
}

}  // namespace

TEST_CASE("png round-trips bit-exactly") {
    TempDir dir("png_rt");
    Rng rng(5);
    BehaviorImage image;
    for (auto& pixel : image.pixels) pixel = static_cast<std::uint8_t>(rng.below(256));

    const auto path = dir.path / "x.png";
    write_png(path, image);
    const BehaviorImage back = read_png(path);
    CHECK(back.pixels == image.pixels);
}

TEST_CASE("identical pixels encode to identical bytes") {
    Rng rng(6);
    std::vector<std::uint8_t> pixels(32 * 32);
    for (auto& p : pixels) p = static_cast<std::uint8_t>(rng.below(256));
    const auto a = encode_png_gray(pixels.data(), 32, 32);
    const auto b = encode_png_gray(pixels.data(), 32, 32);
    CHECK(a == b);

    TempDir dir("png_det");
    write_png_gray(dir.path / "a.png", pixels.data(), 32, 32);
    write_png_gray(dir.path / "b.png", pixels.data(), 32, 32);
    CHECK(read_bytes(dir.path / "a.png") == read_bytes(dir.path / "b.png"));
}

TEST_CASE("reading a 16x16 file as a behavior image fails") {
    TempDir dir("png_16");
    std::vector<std::uint8_t> pixels(16 * 16, 9);
    write_png_gray(dir.path / "small.png", pixels.data(), 16, 16);
    CHECK_THROWS_AS(read_png(dir.path / "small.png"), FormatError);
    // but the plain gray reader accepts it
    const GrayImage gray = read_png_gray(dir.path / "small.png");
    CHECK(gray.width == 16);
    CHECK(gray.height == 16);
}

TEST_CASE("non-grayscale input is rejected") {
    TempDir dir("png_rgb");
    std::vector<std::uint8_t> rgb(8 * 8 * 3, 100);
    const auto bytes = build_png(8, 8, 2, rgb, std::vector<std::uint8_t>(8, 0));
    write_text(dir.path / "rgb.png", std::string(bytes.begin(), bytes.end()));
    CHECK_THROWS_WITH_AS(static_cast<void>(read_png_gray(dir.path / "rgb.png")),
                         doctest::Contains("not 8-bit grayscale"), FormatError);
}

TEST_CASE("all five scanline filters decode against the forward-filter oracle") {
    Rng rng(7);
    std::vector<std::uint8_t> pixels(8 * 6);
    for (auto& p : pixels) p = static_cast<std::uint8_t>(rng.below(256));
    for (std::uint8_t filter = 0; filter <= 4; ++filter) {
        const auto bytes = build_png(8, 6, 0, pixels, std::vector<std::uint8_t>(6, filter));
        const GrayImage image = decode_png_gray(bytes);
        REQUIRE(image.width == 8);
        REQUIRE(image.height == 6);
        CHECK(image.pixels == pixels);
    }
    // mixed filters per row
    const std::vector<std::uint8_t> mixed = {0, 1, 2, 3, 4, 1};
    const auto bytes = build_png(8, 6, 0, pixels, mixed);
    CHECK(decode_png_gray(bytes).pixels == pixels);
}

TEST_CASE("corrupt inputs are rejected") {
    std::vector<std::uint8_t> pixels(8 * 8, 1);
    auto good = encode_png_gray(pixels.data(), 8, 8);

    SUBCASE("bad signature") {
        good[0] ^= 0xff;
        CHECK_THROWS_AS(decode_png_gray(good), FormatError);
    }
    SUBCASE("chunk crc mismatch") {
        good[good.size() - 5] ^= 0x01;  // inside IEND crc
        CHECK_THROWS_AS(decode_png_gray(good), FormatError);
    }
    SUBCASE("truncated") {
        good.resize(good.size() / 2);
        CHECK_THROWS_AS(decode_png_gray(good), FormatError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(read_png_gray("/nonexistent/x.png"), IoError); }
}
