#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace themescope {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;
};

/// Decodes PNG or JPEG bytes into ITU-R 601 luma. Throws ValidationError on
/// anything else or on a corrupt stream.
GrayImage decode_luma(std::span<const std::uint8_t> bytes);

/// Bilinear resampling with pixel-centre alignment and edge clamping.
GrayImage resize_bilinear(const GrayImage& image, std::size_t width, std::size_t height);

/// Perceptual hash: luma, 32x32 bilinear, 2-D orthonormal DCT-II, the 8x8
/// lowest-frequency block with the DC term dropped, each of the 63 remaining
/// coefficients compared with their median (strictly greater sets the bit).
/// Row-major block index k lands in bit 63-k, so bit 63 (DC) is always 0.
std::uint64_t phash64(std::span<const std::uint8_t> image_bytes);
std::uint64_t phash64_file(const std::filesystem::path& path);
std::uint64_t phash64(const GrayImage& luma);

inline int hamming_distance(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

struct DedupResult {
  std::set<std::string> kept;
  std::set<std::string> discarded;
};

inline constexpr int kDefaultDedupThreshold = 5;

/// Scans images in ascending id order and discards one when it lies within
/// `threshold` bits of an image kept earlier.
DedupResult dedup(const std::map<std::string, std::uint64_t>& hashes,
                  int threshold = kDefaultDedupThreshold);

}  // namespace themescope
