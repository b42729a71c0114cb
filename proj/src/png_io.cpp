#include "rtcs/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace rtcs {

namespace {

void push_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void write_chunk(std::ofstream& os, const char type[4], const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> head;
    push_u32_be(head, static_cast<std::uint32_t>(payload.size()));
    os.write(reinterpret_cast<const char*>(head.data()), 4);
    os.write(type, 4);
    if (!payload.empty()) {
        os.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    }
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!payload.empty()) crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
    std::vector<std::uint8_t> tail;
    push_u32_be(tail, static_cast<std::uint32_t>(crc));
    os.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const std::vector<std::uint8_t>& rgb,
                   std::int64_t height, std::int64_t width) {
    if (height < 1 || width < 1) throw std::invalid_argument("write_png_rgb: empty image");
    if (rgb.size() != static_cast<std::size_t>(height * width * 3)) {
        throw std::invalid_argument("write_png_rgb: buffer size " + std::to_string(rgb.size()) +
                                    " does not match " + std::to_string(height) + "x" +
                                    std::to_string(width) + "x3");
    }

    // filter type 0 (None) per scanline
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(height * (width * 3 + 1)));
    for (std::int64_t y = 0; y < height; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = rgb.data() + y * width * 3;
        raw.insert(raw.end(), row, row + width * 3);
    }
    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
        throw std::runtime_error("write_png_rgb: deflate failed");
    }
    comp.resize(comp_len);

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_png_rgb: cannot open " + path.string());
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    os.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<std::uint8_t> ihdr;
    push_u32_be(ihdr, static_cast<std::uint32_t>(width));
    push_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace
    write_chunk(os, "IHDR", ihdr);
    write_chunk(os, "IDAT", comp);
    write_chunk(os, "IEND", {});
    if (!os) throw std::runtime_error("write_png_rgb: write failed for " + path.string());
}

}  // namespace rtcs
