#pragma once

#include <zlib.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "ddc/depth_field.hpp"
#include "ddc/errors.hpp"

namespace ddc {

inline constexpr const char* kVersion = "ddc 0.1.0";

namespace io_detail {

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                         const std::vector<std::uint8_t>& data) {
    put_be32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + type_at, static_cast<uInt>(4 + data.size()));
    put_be32(out, crc);
}

inline std::vector<std::uint8_t> zlib_compress(const std::vector<std::uint8_t>& raw) {
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> out(bound);
    if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw NumericalError("png: zlib compression failed");
    out.resize(bound);
    return out;
}

inline std::vector<std::uint8_t> zlib_decompress(const std::vector<std::uint8_t>& comp,
                                                 std::size_t expected, std::size_t offset_hint) {
    std::vector<std::uint8_t> out(expected);
    uLongf out_len = static_cast<uLongf>(expected);
    const int rc = uncompress(out.data(), &out_len, comp.data(), static_cast<uLong>(comp.size()));
    if (rc != Z_OK || out_len != expected)
        throw FormatError("png: corrupt compressed image data", offset_hint);
    return out;
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

struct PngImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    int bit_depth = 0;       // 8 or 16
    std::vector<std::uint16_t> samples;  // row-major
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("cannot open file: " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return data;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParameterError("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw ParameterError("failed writing file: " + path);
}

inline PngImage decode_png_gray(const std::vector<std::uint8_t>& buf) {
    static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (buf.size() < 8 || std::memcmp(buf.data(), sig, 8) != 0)
        throw FormatError("png: bad signature", 0);

    PngImage img;
    std::vector<std::uint8_t> idat;
    bool saw_ihdr = false, saw_iend = false;
    std::size_t pos = 8;
    while (pos < buf.size()) {
        if (pos + 8 > buf.size()) throw FormatError("png: truncated chunk header", pos);
        const std::uint32_t len = get_be32(buf.data() + pos);
        const char* type = reinterpret_cast<const char*>(buf.data() + pos + 4);
        if (pos + 12 + len > buf.size()) throw FormatError("png: truncated chunk data", pos);
        const std::uint8_t* data = buf.data() + pos + 8;

        std::uint32_t crc = crc32(0L, Z_NULL, 0);
        crc = crc32(crc, buf.data() + pos + 4, 4 + len);
        if (crc != get_be32(data + len)) throw FormatError("png: chunk crc mismatch", pos + 8 + len);

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw FormatError("png: bad IHDR length", pos);
            img.width = get_be32(data);
            img.height = get_be32(data + 4);
            img.bit_depth = data[8];
            const int color_type = data[9];
            if (img.width == 0 || img.height == 0)
                throw FormatError("png: zero dimensions", pos + 8);
            if (color_type != 0)
                throw FormatError("png: only grayscale (color type 0) supported", pos + 17);
            if (img.bit_depth != 8 && img.bit_depth != 16)
                throw FormatError("png: only 8/16-bit depth supported", pos + 16);
            if (data[10] != 0 || data[11] != 0) throw FormatError("png: bad method", pos + 18);
            if (data[12] != 0) throw FormatError("png: interlaced images unsupported", pos + 20);
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
            break;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr) throw FormatError("png: missing IHDR", 8);
    if (!saw_iend) throw FormatError("png: missing IEND", buf.size());

    const std::size_t bpp = img.bit_depth == 16 ? 2 : 1;
    const std::size_t stride = static_cast<std::size_t>(img.width) * bpp;
    const std::size_t raw_size = (stride + 1) * img.height;
    std::vector<std::uint8_t> raw = zlib_decompress(idat, raw_size, pos);

    // Undo per-row filters.
    std::vector<std::uint8_t> cur(stride, 0), prev(stride, 0);
    img.samples.resize(static_cast<std::size_t>(img.width) * img.height);
    for (std::uint32_t y = 0; y < img.height; ++y) {
        const std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
        const int filter = row[0];
        for (std::size_t x = 0; x < stride; ++x) {
            const int rv = row[1 + x];
            const int a = x >= bpp ? cur[x - bpp] : 0;
            const int b = prev[x];
            const int c = x >= bpp ? prev[x - bpp] : 0;
            int v;
            switch (filter) {
                case 0: v = rv; break;
                case 1: v = rv + a; break;
                case 2: v = rv + b; break;
                case 3: v = rv + (a + b) / 2; break;
                case 4: v = rv + paeth(a, b, c); break;
                default:
                    throw FormatError("png: unknown filter type",
                                      static_cast<std::size_t>(y) * (stride + 1));
            }
            cur[x] = static_cast<std::uint8_t>(v & 0xff);
        }
        for (std::uint32_t x = 0; x < img.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
            img.samples[i] = img.bit_depth == 16
                                 ? static_cast<std::uint16_t>((cur[2 * x] << 8) | cur[2 * x + 1])
                                 : cur[x];
        }
        std::swap(cur, prev);
    }
    return img;
}

inline std::vector<std::uint8_t> encode_png_gray(const PngImage& img) {
    std::vector<std::uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};
    std::vector<std::uint8_t> ihdr;
    put_be32(ihdr, img.width);
    put_be32(ihdr, img.height);
    ihdr.push_back(static_cast<std::uint8_t>(img.bit_depth));
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    append_chunk(out, "IHDR", ihdr);

    const std::size_t bpp = img.bit_depth == 16 ? 2 : 1;
    const std::size_t stride = static_cast<std::size_t>(img.width) * bpp;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (std::uint32_t y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        for (std::uint32_t x = 0; x < img.width; ++x) {
            const std::uint16_t v = img.samples[static_cast<std::size_t>(y) * img.width + x];
            if (img.bit_depth == 16) {
                raw.push_back(static_cast<std::uint8_t>(v >> 8));
                raw.push_back(static_cast<std::uint8_t>(v & 0xff));
            } else {
                raw.push_back(static_cast<std::uint8_t>(v & 0xff));
            }
        }
    }
    append_chunk(out, "IDAT", zlib_compress(raw));
    append_chunk(out, "IEND", {});
    return out;
}

}  // namespace io_detail

// 16-bit grayscale PNG depth convention: stored value = round(meters * 256),
// 0 marks invalid/missing. Representable range is (0, 255.996] m with
// round-trip error at most 1/512 m.
inline void write_depth_png16(const std::string& path, const DepthField& field) {
    io_detail::PngImage img;
    img.width = static_cast<std::uint32_t>(field.width);
    img.height = static_cast<std::uint32_t>(field.height);
    img.bit_depth = 16;
    img.samples.resize(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (!field.valid[i]) {
            img.samples[i] = 0;
            continue;
        }
        const double m = field.values[i];
        if (!std::isfinite(m) || !(m > 0.0))
            throw RangeError("png16: valid depth must be positive and finite");
        const long v = std::lround(m * 256.0);
        if (v < 1 || v > 65535)
            throw RangeError("png16: depth " + std::to_string(m) +
                             " m outside representable range (0, 255.996]");
        img.samples[i] = static_cast<std::uint16_t>(v);
    }
    io_detail::write_file(path, io_detail::encode_png_gray(img));
}

inline DepthField read_depth_png16(const std::string& path) {
    const io_detail::PngImage img = io_detail::decode_png_gray(io_detail::read_file(path));
    if (img.bit_depth != 16) throw FormatError("png16: expected 16-bit depth image", 24);
    DepthField field(static_cast<int>(img.width), static_cast<int>(img.height));
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (img.samples[i] == 0) {
            field.values[i] = 0.0;
            field.valid[i] = 0;
        } else {
            field.values[i] = img.samples[i] / 256.0;
            field.valid[i] = 1;
        }
    }
    return field;
}

inline void write_guidance_png(const std::string& path, const GuidanceImage& img) {
    io_detail::PngImage png;
    png.width = static_cast<std::uint32_t>(img.width);
    png.height = static_cast<std::uint32_t>(img.height);
    png.bit_depth = 8;
    png.samples.resize(img.intensity.size());
    for (std::size_t i = 0; i < img.intensity.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, img.intensity[i]));
        png.samples[i] = static_cast<std::uint16_t>(std::lround(v * 255.0));
    }
    io_detail::write_file(path, io_detail::encode_png_gray(png));
}

inline GuidanceImage read_guidance_png(const std::string& path) {
    const io_detail::PngImage img = io_detail::decode_png_gray(io_detail::read_file(path));
    GuidanceImage out(static_cast<int>(img.width), static_cast<int>(img.height));
    const double scale = img.bit_depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    for (std::size_t i = 0; i < out.intensity.size(); ++i)
        out.intensity[i] = img.samples[i] * scale;
    return out;
}

// PFM grayscale, 32-bit float, little-endian (negative scale header), rows
// stored bottom-up. Invalid pixels round-trip as NaN.
inline void write_depth_pfm(const std::string& path, const DepthField& field) {
    std::string header = "Pf\n" + std::to_string(field.width) + " " +
                         std::to_string(field.height) + "\n-1.0\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + field.size() * 4);
    for (int y = field.height - 1; y >= 0; --y) {
        for (int x = 0; x < field.width; ++x) {
            const std::size_t i = field.idx(x, y);
            const float v = field.valid[i] ? static_cast<float>(field.values[i])
                                           : std::numeric_limits<float>::quiet_NaN();
            std::uint8_t bytes[4];
            std::memcpy(bytes, &v, 4);
            out.insert(out.end(), bytes, bytes + 4);
        }
    }
    io_detail::write_file(path, out);
}

inline DepthField read_depth_pfm(const std::string& path) {
    const std::vector<std::uint8_t> buf = io_detail::read_file(path);
    std::size_t pos = 0;
    auto token = [&buf, &pos]() {
        while (pos < buf.size() && std::isspace(buf[pos])) ++pos;
        const std::size_t start = pos;
        while (pos < buf.size() && !std::isspace(buf[pos])) ++pos;
        if (start == pos) throw FormatError("pfm: truncated header", start);
        return std::string(buf.begin() + static_cast<std::ptrdiff_t>(start),
                           buf.begin() + static_cast<std::ptrdiff_t>(pos));
    };

    if (token() != "Pf") throw FormatError("pfm: expected grayscale magic 'Pf'", 0);
    int width = 0, height = 0;
    double scale = 0.0;
    try {
        width = std::stoi(token());
        height = std::stoi(token());
        scale = std::stod(token());
    } catch (const std::exception&) {
        throw FormatError("pfm: malformed header fields", pos);
    }
    if (width <= 0 || height <= 0) throw FormatError("pfm: bad dimensions", pos);
    if (scale >= 0.0) throw FormatError("pfm: big-endian data unsupported", pos);
    if (pos >= buf.size() || !std::isspace(buf[pos]))
        throw FormatError("pfm: missing header terminator", pos);
    ++pos;  // single whitespace after the scale

    const std::size_t need = static_cast<std::size_t>(width) * height * 4;
    if (buf.size() - pos < need) throw FormatError("pfm: truncated pixel data", buf.size());

    DepthField field(width, height);
    for (int y = height - 1; y >= 0; --y) {
        for (int x = 0; x < width; ++x) {
            float v;
            std::memcpy(&v, buf.data() + pos, 4);
            pos += 4;
            const std::size_t i = field.idx(x, y);
            if (std::isnan(v)) {
                field.values[i] = 0.0;
                field.valid[i] = 0;
            } else {
                field.values[i] = v;
                field.valid[i] = 1;
            }
        }
    }
    return field;
}

enum class DepthFormat { Png16, Pfm };

inline DepthFormat format_from_path(const std::string& path) {
    const auto dot = path.find_last_of('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "png") return DepthFormat::Png16;
    if (ext == "pfm") return DepthFormat::Pfm;
    throw ParameterError("cannot infer depth format from extension: " + path);
}

inline void write_depth(const std::string& path, const DepthField& field, DepthFormat format) {
    format == DepthFormat::Png16 ? write_depth_png16(path, field) : write_depth_pfm(path, field);
}

inline void write_depth(const std::string& path, const DepthField& field) {
    write_depth(path, field, format_from_path(path));
}

inline DepthField read_depth(const std::string& path, DepthFormat format) {
    return format == DepthFormat::Png16 ? read_depth_png16(path) : read_depth_pfm(path);
}

inline DepthField read_depth(const std::string& path) {
    return read_depth(path, format_from_path(path));
}

}  // namespace ddc
