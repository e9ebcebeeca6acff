#include "itd/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>

namespace itd {

namespace {

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::uint8_t* data, std::size_t size) {
    put_u32(out, static_cast<std::uint32_t>(size));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    if (size) out.insert(out.end(), data, data + size);
    const auto crc = static_cast<std::uint32_t>(
        crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
    put_u32(out, crc);
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

std::vector<std::uint8_t> encode_png_gray(const std::uint8_t* pixels, int width, int height) {
    if (width <= 0 || height <= 0) throw FormatError("png: bad dimensions");

    std::vector<std::uint8_t> out(kSignature, kSignature + 8);

    std::uint8_t ihdr[13];
    ihdr[0] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(width) >> 24);
    ihdr[1] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(width) >> 16);
    ihdr[2] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(width) >> 8);
    ihdr[3] = static_cast<std::uint8_t>(width);
    ihdr[4] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(height) >> 24);
    ihdr[5] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(height) >> 16);
    ihdr[6] = static_cast<std::uint8_t>(static_cast<std::uint32_t>(height) >> 8);
    ihdr[7] = static_cast<std::uint8_t>(height);
    ihdr[8] = 8;   // bit depth
    ihdr[9] = 0;   // color type: grayscale
    ihdr[10] = 0;  // compression
    ihdr[11] = 0;  // filter method
    ihdr[12] = 0;  // no interlace
    append_chunk(out, "IHDR", ihdr, sizeof(ihdr));

    // filter byte 0 before every scanline
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(height) * (static_cast<std::size_t>(width) + 1));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), pixels + static_cast<std::size_t>(y) * width,
                   pixels + static_cast<std::size_t>(y + 1) * width);
    }

    uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(compressed_size);
    if (compress2(compressed.data(), &compressed_size, raw.data(), static_cast<uLong>(raw.size()),
                  Z_BEST_COMPRESSION) != Z_OK)
        throw Error("png: deflate failed");
    append_chunk(out, "IDAT", compressed.data(), compressed_size);
    append_chunk(out, "IEND", nullptr, 0);
    return out;
}

void write_png_gray(const std::filesystem::path& path, const std::uint8_t* pixels, int width,
                    int height) {
    const auto bytes = encode_png_gray(pixels, width, height);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

GrayImage decode_png_gray(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
        throw FormatError("png: bad signature");

    std::size_t pos = 8;
    bool saw_ihdr = false, saw_iend = false;
    int width = 0, height = 0;
    std::vector<std::uint8_t> idat;

    while (pos + 12 <= bytes.size() && !saw_iend) {
        const std::uint32_t length = get_u32(&bytes[pos]);
        if (pos + 12 + length > bytes.size()) throw FormatError("png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* data = &bytes[pos + 8];

        const auto expect_crc = get_u32(&bytes[pos + 8 + length]);
        const auto actual_crc = static_cast<std::uint32_t>(
            crc32(0, &bytes[pos + 4], static_cast<uInt>(4 + length)));
        if (expect_crc != actual_crc) throw FormatError("png: chunk crc mismatch");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (length != 13) throw FormatError("png: bad IHDR");
            width = static_cast<int>(get_u32(data));
            height = static_cast<int>(get_u32(data + 4));
            const int depth = data[8], color = data[9], interlace = data[12];
            if (depth != 8 || color != 0)
                throw FormatError("png: not 8-bit grayscale (depth " + std::to_string(depth) +
                                  ", color type " + std::to_string(color) + ")");
            if (data[10] != 0 || data[11] != 0) throw FormatError("png: bad compression/filter method");
            if (interlace != 0) throw FormatError("png: interlaced input unsupported");
            if (width <= 0 || height <= 0) throw FormatError("png: bad dimensions");
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            if (!saw_ihdr) throw FormatError("png: IDAT before IHDR");
            idat.insert(idat.end(), data, data + length);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        // ancillary chunks are skipped
        pos += 12 + length;
    }
    if (!saw_ihdr || !saw_iend) throw FormatError("png: missing critical chunk");

    const std::size_t stride = static_cast<std::size_t>(width) + 1;
    const std::size_t raw_size = stride * static_cast<std::size_t>(height);
    std::vector<std::uint8_t> raw(raw_size);
    uLongf out_size = static_cast<uLongf>(raw_size);
    const int rc = uncompress(raw.data(), &out_size, idat.data(), static_cast<uLong>(idat.size()));
    if (rc != Z_OK || out_size != raw_size) throw FormatError("png: inflate failed");

    GrayImage image;
    image.width = width;
    image.height = height;
    image.pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));

    // reverse the scanline filters (bytes-per-pixel = 1)
    for (int y = 0; y < height; ++y) {
        const std::uint8_t filter = raw[static_cast<std::size_t>(y) * stride];
        const std::uint8_t* src = &raw[static_cast<std::size_t>(y) * stride + 1];
        std::uint8_t* dst = &image.pixels[static_cast<std::size_t>(y) * width];
        const std::uint8_t* above =
            y > 0 ? &image.pixels[static_cast<std::size_t>(y - 1) * width] : nullptr;
        for (int x = 0; x < width; ++x) {
            const int a = x > 0 ? dst[x - 1] : 0;
            const int b = above ? above[x] : 0;
            const int c = (x > 0 && above) ? above[x - 1] : 0;
            int value = src[x];
            switch (filter) {
                case 0: break;
                case 1: value += a; break;
                case 2: value += b; break;
                case 3: value += (a + b) / 2; break;
                case 4: value += paeth(a, b, c); break;
                default: throw FormatError("png: unknown scanline filter " + std::to_string(filter));
            }
            dst[x] = static_cast<std::uint8_t>(value & 0xff);
        }
    }
    return image;
}

GrayImage read_png_gray(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_png_gray(bytes);
}

void write_png(const std::filesystem::path& path, const BehaviorImage& image) {
    write_png_gray(path, image.pixels.data(), kImageSize, kImageSize);
}

BehaviorImage read_png(const std::filesystem::path& path) {
    const GrayImage gray = read_png_gray(path);
    if (gray.width != kImageSize || gray.height != kImageSize)
        throw FormatError(path.string() + ": expected " + std::to_string(kImageSize) + "x" +
                          std::to_string(kImageSize) + ", got " + std::to_string(gray.width) + "x" +
                          std::to_string(gray.height));
    BehaviorImage image;
    std::copy(gray.pixels.begin(), gray.pixels.end(), image.pixels.begin());
    return image;
}

}  // namespace itd
