#include "spev/frame.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <png.h>

#include "spev/error.hpp"

namespace spev {

namespace {

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;

double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (r == g && g == b) return r / 255.0;
    return std::clamp((kLumaR * r + kLumaG * g + kLumaB * b) / 255.0, 0.0, 1.0);
}

bool has_png_signature(std::span<const std::uint8_t> bytes) {
    static constexpr std::array<std::uint8_t, 8> sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return bytes.size() >= sig.size() && std::equal(sig.begin(), sig.end(), bytes.begin());
}

GrayFrame decode_png(std::span<const std::uint8_t> bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        fail(Errc::UnsupportedFormat, fmt::format("png header: {}", image.message));
    }
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        fail(Errc::UnsupportedFormat, "only 8-bit PNG is supported");
    }
    if (image.width == 0 || image.height == 0) {
        png_image_free(&image);
        fail(Errc::ZeroSizedImage, "png has zero width or height");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const std::size_t channels = color ? 3 : 1;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        fail(Errc::UnsupportedFormat, fmt::format("png decode: {}", image.message));
    }
    const int w = static_cast<int>(image.width);
    const int h = static_cast<int>(image.height);
    if (w < 2 || h < 2) fail(Errc::ZeroSizedImage, fmt::format("{}x{} image is too small", w, h));
    GrayFrame frame(w, h);
    auto px = frame.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        const std::uint8_t* p = buffer.data() + i * channels;
        px[i] = color ? luma(p[0], p[1], p[2]) : p[0] / 255.0;
    }
    return frame;
}

// Binary PGM: "P5" <ws> width <ws> height <ws> maxval <single ws> raster.
GrayFrame decode_pgm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 2;
    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space_and_comments();
        long value = 0;
        std::size_t digits = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > (1L << 30)) fail(Errc::UnsupportedFormat, "pgm header value out of range");
            ++pos;
            ++digits;
        }
        if (digits == 0) fail(Errc::UnsupportedFormat, "malformed pgm header");
        return value;
    };
    const long w = read_int();
    const long h = read_int();
    const long maxval = read_int();
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail(Errc::UnsupportedFormat, "malformed pgm header");
    ++pos;
    if (w == 0 || h == 0) fail(Errc::ZeroSizedImage, "pgm has zero width or height");
    if (maxval < 1 || maxval > 255) fail(Errc::UnsupportedFormat, "only 8-bit PGM is supported");
    if (w < 2 || h < 2) fail(Errc::ZeroSizedImage, fmt::format("{}x{} image is too small", w, h));
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - pos < n) fail(Errc::UnsupportedFormat, "truncated pgm raster");
    GrayFrame frame(static_cast<int>(w), static_cast<int>(h));
    auto px = frame.pixels();
    const double scale = static_cast<double>(maxval);
    for (std::size_t i = 0; i < n; ++i) px[i] = std::min(bytes[pos + i] / scale, 1.0);
    return frame;
}

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Index into [0, n) with edge replication.
inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

}  // namespace

GrayFrame::GrayFrame(int width, int height, double fill) : width_(width), height_(height) {
    if (width < 2 || height < 2) {
        fail(Errc::ZeroSizedImage, fmt::format("frame must be at least 2x2, got {}x{}", width, height));
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

void GrayFrame::copy_metadata(const GrayFrame& other) {
    timestamp = other.timestamp;
    camera_id = other.camera_id;
    frame_index = other.frame_index;
}

void GrayFrame::validate() const {
    for (double v : data_) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            fail(Errc::InvalidArgument, fmt::format("intensity {} outside [0, 1]", v));
        }
    }
}

GrayFrame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) fail(Errc::ZeroSizedImage, "empty image buffer");
    if (has_png_signature(bytes)) return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
    fail(Errc::UnsupportedFormat, "expected PNG or binary PGM (P5)");
}

GrayFrame load_frame(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::UnreadableFile, fmt::format("cannot open '{}'", path.string()));
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(Errc::UnreadableFile, fmt::format("read error on '{}'", path.string()));
    return decode_frame(bytes);
}

std::vector<std::uint8_t> encode_pgm(const GrayFrame& frame) {
    const std::string header = fmt::format("P5\n{} {}\n255\n", frame.width(), frame.height());
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + frame.size());
    for (double v : frame.pixels()) out.push_back(quantize(v));
    return out;
}

std::vector<std::uint8_t> encode_png(const GrayFrame& frame) {
    std::vector<std::uint8_t> raster;
    raster.reserve(frame.size());
    for (double v : frame.pixels()) raster.push_back(quantize(v));

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(frame.width());
    image.height = static_cast<png_uint_32>(frame.height());
    image.format = PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, raster.data(), 0, nullptr)) {
        fail(Errc::UnsupportedFormat, fmt::format("png encode: {}", image.message));
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, raster.data(), 0, nullptr)) {
        fail(Errc::UnsupportedFormat, fmt::format("png encode: {}", image.message));
    }
    out.resize(size);
    return out;
}

void save_frame(const GrayFrame& frame, const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    std::vector<std::uint8_t> bytes;
    if (ext == ".png" || ext == ".PNG") {
        bytes = encode_png(frame);
    } else if (ext == ".pgm" || ext == ".PGM") {
        bytes = encode_pgm(frame);
    } else {
        fail(Errc::UnsupportedFormat, fmt::format("unknown image extension '{}'", ext));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::UnreadableFile, fmt::format("cannot write '{}'", path.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> gaussian_kernel(double sigma, int radius) {
    require(sigma > 0.0 && std::isfinite(sigma), Errc::InvalidArgument, "sigma must be positive");
    require(radius >= 1, Errc::InvalidArgument, "radius must be >= 1");
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

GrayFrame gaussian_smooth(const GrayFrame& frame, double sigma, int radius) {
    const auto k = gaussian_kernel(sigma, radius);
    const int w = frame.width();
    const int h = frame.height();

    GrayFrame tmp(w, h);
    for (int r = 0; r < h; ++r) {
        const auto src = frame.row(r);
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j) acc += k[j + radius] * src[clamp_index(c + j, w)];
            tmp(r, c) = acc;
        }
    }

    GrayFrame out(w, h);
    out.copy_metadata(frame);
    std::vector<double> acc(w);
    for (int r = 0; r < h; ++r) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int j = -radius; j <= radius; ++j) {
            const double wk = k[j + radius];
            const auto src = tmp.row(clamp_index(r + j, h));
            for (int c = 0; c < w; ++c) acc[c] += wk * src[c];
        }
        for (int c = 0; c < w; ++c) out(r, c) = acc[c];
    }
    return out;
}

GrayFrame median_denoise(const GrayFrame& frame) {
    const int w = frame.width();
    const int h = frame.height();
    GrayFrame out(w, h);
    out.copy_metadata(frame);
    std::array<double, 9> window{};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            std::size_t n = 0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) window[n++] = frame(clamp_index(r + dr, h), clamp_index(c + dc, w));
            std::nth_element(window.begin(), window.begin() + 4, window.end());
            out(r, c) = window[4];
        }
    }
    return out;
}

}  // namespace spev
