#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "ddc/io.hpp"
#include "ddc/rng.hpp"

using namespace ddc;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

DepthField random_depth(int w, int h, std::uint64_t seed, double lo, double hi,
                        double invalid_rate = 0.1) {
    Rng rng(seed);
    DepthField f(w, h, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (rng.uniform() < invalid_rate) {
            f.valid[i] = 0;
            f.values[i] = 0.0;
        } else {
            f.values[i] = rng.uniform(lo, hi);
        }
    }
    return f;
}

}  // namespace

TEST_CASE("pfm round-trip is bit exact including the invalid mask") {
    const DepthField f = random_depth(23, 17, 5, 0.2, 90.0);
    const std::string path = temp_path("ddc_test_roundtrip.pfm");
    write_depth_pfm(path, f);
    const DepthField back = read_depth_pfm(path);
    REQUIRE(back.width == f.width);
    REQUIRE(back.height == f.height);
    CHECK(back.valid == f.valid);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f.valid[i])
            CHECK(back.values[i] == static_cast<double>(static_cast<float>(f.values[i])));
    std::remove(path.c_str());
}

TEST_CASE("png16 encodes 5 m as 1280 and round-trips within 1/512 m") {
    DepthField f(4, 3, 5.0);
    const std::string path = temp_path("ddc_test_five.png");
    write_depth_png16(path, f);

    const auto img = io_detail::decode_png_gray(io_detail::read_file(path));
    CHECK(img.bit_depth == 16);
    CHECK(img.samples[0] == 1280);

    const DepthField back = read_depth_png16(path);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(5.0).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("png16 round-trip error stays below the quantization bound") {
    const DepthField f = random_depth(31, 22, 9, 0.5, 120.0);
    const std::string path = temp_path("ddc_test_quant.png");
    write_depth_png16(path, f);
    const DepthField back = read_depth_png16(path);
    CHECK(back.valid == f.valid);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f.valid[i]) CHECK(std::abs(back.values[i] - f.values[i]) <= 1.0 / 512.0);
    std::remove(path.c_str());
}

TEST_CASE("png16 range errors") {
    DepthField too_far(2, 2, 300.0);
    CHECK_THROWS_AS(write_depth_png16(temp_path("ddc_test_range.png"), too_far), RangeError);
    DepthField negative(2, 2, -1.0);
    CHECK_THROWS_AS(write_depth_png16(temp_path("ddc_test_range.png"), negative), RangeError);
    DepthField denormal(2, 2, 1e-4);  // rounds to the invalid marker
    CHECK_THROWS_AS(write_depth_png16(temp_path("ddc_test_range.png"), denormal), RangeError);
}

TEST_CASE("malformed png reports the byte offset") {
    const std::string path = temp_path("ddc_test_bad.png");
    {
        DepthField f(4, 4, 2.0);
        write_depth_png16(path, f);
    }
    auto bytes = io_detail::read_file(path);
    bytes[1] = 'X';  // clobber the signature
    io_detail::write_file(path, bytes);
    try {
        read_depth_png16(path);
        CHECK(false);
    } catch (const FormatError& e) {
        CHECK(e.byte_offset == 0);
    }

    // Truncation inside a chunk.
    {
        DepthField f(4, 4, 2.0);
        write_depth_png16(path, f);
    }
    bytes = io_detail::read_file(path);
    bytes.resize(bytes.size() - 6);
    io_detail::write_file(path, bytes);
    CHECK_THROWS_AS(read_depth_png16(path), FormatError);
    std::remove(path.c_str());
}

TEST_CASE("png decoder handles the standard row filters") {
    // Hand-build a 3x3 8-bit grayscale PNG exercising filters Sub/Up/Average.
    using namespace io_detail;
    std::vector<std::uint8_t> raw = {
        1, 10, 5, 5,    // Sub: 10, 15, 20
        2, 10, 10, 10,  // Up: 20, 25, 30
        3, 5, 13, 14,   // Average: 15, 33, 45  (avg of left and up)
    };
    std::vector<std::uint8_t> png = {137, 80, 78, 71, 13, 10, 26, 10};
    std::vector<std::uint8_t> ihdr;
    put_be32(ihdr, 3);
    put_be32(ihdr, 3);
    ihdr.push_back(8);
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    append_chunk(png, "IHDR", ihdr);
    append_chunk(png, "IDAT", zlib_compress(raw));
    append_chunk(png, "IEND", {});

    const PngImage img = decode_png_gray(png);
    const std::vector<std::uint16_t> want = {10, 15, 20, 20, 25, 30, 15, 33, 45};
    CHECK(img.samples == want);
}

TEST_CASE("pfm rejects malformed headers with byte offsets") {
    const std::string path = temp_path("ddc_test_bad.pfm");
    io_detail::write_file(path, {'P', 'F', '\n'});  // color magic, unsupported
    CHECK_THROWS_AS(read_depth_pfm(path), FormatError);

    io_detail::write_file(path, {'P', 'f', '\n', '4', ' ', '4', '\n', '1', '.', '0', '\n'});
    CHECK_THROWS_AS(read_depth_pfm(path), FormatError);  // positive scale

    io_detail::write_file(path,
                          {'P', 'f', '\n', '2', ' ', '2', '\n', '-', '1', '\n', 0, 0, 0, 0});
    CHECK_THROWS_AS(read_depth_pfm(path), FormatError);  // truncated pixels
    std::remove(path.c_str());
}

TEST_CASE("guidance png round-trips within 8-bit precision") {
    GuidanceImage img(9, 7, 0.0);
    Rng rng(3);
    for (auto& v : img.intensity) v = rng.uniform();
    const std::string path = temp_path("ddc_test_guidance.png");
    write_guidance_png(path, img);
    const GuidanceImage back = read_guidance_png(path);
    REQUIRE(back.width == img.width);
    for (std::size_t i = 0; i < img.intensity.size(); ++i)
        CHECK(std::abs(back.intensity[i] - img.intensity[i]) <= 0.5 / 255.0);
    std::remove(path.c_str());
}

TEST_CASE("depth format inferred from the extension") {
    CHECK(format_from_path("a/b/depth.png") == DepthFormat::Png16);
    CHECK(format_from_path("a/b/depth.pfm") == DepthFormat::Pfm);
    CHECK_THROWS_AS(format_from_path("a/b/depth.jpg"), ParameterError);
}

TEST_CASE("missing files raise parameter errors") {
    CHECK_THROWS_AS(read_depth_png16("/nonexistent/depth.png"), ParameterError);
    CHECK_THROWS_AS(read_depth_pfm("/nonexistent/depth.pfm"), ParameterError);
}
