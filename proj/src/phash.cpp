#include "themescope/phash.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <numbers>
#include <unordered_map>

#include <jpeglib.h>
#include <png.h>

#include "detail.hpp"
#include "themescope/error.hpp"

namespace themescope {

namespace {

double luma601(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw ValidationError(std::string("cannot decode PNG: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw ValidationError("cannot decode PNG: " + msg);
  }
  GrayImage out{image.width, image.height, std::vector<double>(std::size_t{image.width} * image.height)};
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = luma601(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

GrayImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> rgb;
  std::size_t width = 0, height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ValidationError(std::string("cannot decode JPEG: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = cinfo.output_width;
  height = cinfo.output_height;
  rgb.resize(width * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + std::size_t{cinfo.output_scanline} * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  GrayImage out{width, height, std::vector<double>(width * height)};
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = luma601(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  }
  return out;
}

constexpr std::size_t kResize = 32;
constexpr std::size_t kBlock = 8;

// Rows 0..7 of the orthonormal 32-point DCT-II basis.
const std::array<std::array<double, kResize>, kBlock>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, kResize>, kBlock> b{};
    for (std::size_t k = 0; k < kBlock; ++k) {
      const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(kResize));
      for (std::size_t n = 0; n < kResize; ++n) {
        b[k][n] = scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(n) + 1.0) *
                                   static_cast<double>(k) / (2.0 * kResize));
      }
    }
    return b;
  }();
  return basis;
}

}  // namespace

GrayImage decode_luma(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::equal(std::begin(kPng), std::end(kPng), bytes.begin())) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return decode_jpeg(bytes);
  }
  throw ValidationError("unsupported image format (PNG and JPEG are accepted)");
}

GrayImage resize_bilinear(const GrayImage& image, std::size_t width, std::size_t height) {
  if (image.width == 0 || image.height == 0) throw ValidationError("cannot resize an empty image");
  GrayImage out{width, height, std::vector<double>(width * height)};
  const double sx = static_cast<double>(image.width) / static_cast<double>(width);
  const double sy = static_cast<double>(image.height) / static_cast<double>(height);
  auto src = [&](std::size_t x, std::size_t y) { return image.pixels[y * image.width + x]; };
  for (std::size_t oy = 0; oy < height; ++oy) {
    double fy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(image.height - 1));
    const auto y0 = static_cast<std::size_t>(std::floor(fy));
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < width; ++ox) {
      double fx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(image.width - 1));
      const auto x0 = static_cast<std::size_t>(std::floor(fx));
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = src(x0, y0) + (src(x1, y0) - src(x0, y0)) * wx;
      const double bottom = src(x0, y1) + (src(x1, y1) - src(x0, y1)) * wx;
      out.pixels[oy * width + ox] = top + (bottom - top) * wy;
    }
  }
  return out;
}

std::uint64_t phash64(const GrayImage& luma) {
  const GrayImage small = resize_bilinear(luma, kResize, kResize);
  const auto& basis = dct_basis();

  // coeff = B * X * B^T restricted to the low 8x8 block.
  std::array<std::array<double, kResize>, kBlock> partial{};
  for (std::size_t k = 0; k < kBlock; ++k) {
    for (std::size_t x = 0; x < kResize; ++x) {
      double s = 0.0;
      for (std::size_t y = 0; y < kResize; ++y) s += basis[k][y] * small.pixels[y * kResize + x];
      partial[k][x] = s;
    }
  }
  std::array<double, kBlock * kBlock> coeffs{};
  for (std::size_t u = 0; u < kBlock; ++u) {
    for (std::size_t v = 0; v < kBlock; ++v) {
      double s = 0.0;
      for (std::size_t x = 0; x < kResize; ++x) s += partial[u][x] * basis[v][x];
      coeffs[u * kBlock + v] = s;
    }
  }

  std::array<double, kBlock * kBlock - 1> ac{};
  std::copy(coeffs.begin() + 1, coeffs.end(), ac.begin());
  std::array<double, kBlock * kBlock - 1> sorted = ac;
  std::nth_element(sorted.begin(), sorted.begin() + 31, sorted.end());
  const double med = sorted[31];

  // Rounding residue in a flat image must not produce bits.
  double scale = 1.0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  const double eps = 1e-9 * scale;

  std::uint64_t hash = 0;
  for (std::size_t k = 1; k < kBlock * kBlock; ++k) {
    if (coeffs[k] - med > eps) hash |= std::uint64_t{1} << (63 - k);
  }
  return hash;
}

std::uint64_t phash64(std::span<const std::uint8_t> image_bytes) {
  return phash64(decode_luma(image_bytes));
}

std::uint64_t phash64_file(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return phash64(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

DedupResult dedup(const std::map<std::string, std::uint64_t>& hashes, int threshold) {
  DedupResult result;
  if (threshold < 0) {
    for (const auto& [id, h] : hashes) result.kept.insert(id);
    return result;
  }
  // Pigeonhole index: with threshold+1 disjoint bit bands, two hashes within
  // `threshold` bits agree exactly on at least one band.
  const int bands = std::min(threshold + 1, 64);
  std::vector<std::pair<int, int>> band_bits;  // (shift, width)
  for (int b = 0, start = 0; b < bands; ++b) {
    const int width = 64 / bands + (b < 64 % bands ? 1 : 0);
    band_bits.emplace_back(start, width);
    start += width;
  }
  auto band_key = [&](std::uint64_t h, int b) {
    const auto [shift, width] = band_bits[static_cast<std::size_t>(b)];
    const std::uint64_t mask = width == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1);
    return (h >> shift) & mask;
  };

  std::vector<std::uint64_t> kept_hashes;
  std::vector<std::unordered_multimap<std::uint64_t, std::size_t>> index(static_cast<std::size_t>(bands));
  for (const auto& [id, h] : hashes) {  // std::map iterates in ascending id order
    bool duplicate = false;
    for (int b = 0; b < bands && !duplicate; ++b) {
      auto [lo, hi] = index[static_cast<std::size_t>(b)].equal_range(band_key(h, b));
      for (auto it = lo; it != hi; ++it) {
        if (hamming_distance(h, kept_hashes[it->second]) <= threshold) {
          duplicate = true;
          break;
        }
      }
    }
    if (duplicate) {
      result.discarded.insert(id);
      continue;
    }
    const std::size_t slot = kept_hashes.size();
    kept_hashes.push_back(h);
    for (int b = 0; b < bands; ++b) index[static_cast<std::size_t>(b)].emplace(band_key(h, b), slot);
    result.kept.insert(id);
  }
  return result;
}

}  // namespace themescope
