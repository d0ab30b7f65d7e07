#ifndef WSN_ENCODE_HPP
#define WSN_ENCODE_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>

#include "wsn/ingest.hpp"

namespace wsn {

constexpr int kImageSide = 16;

using GrayMatrix = Eigen::Matrix<std::uint8_t, kImageSide, kImageSide, Eigen::RowMajor>;

/// Per-feature extrema (T, H, L, V) used for min-max scaling.
struct NormStats {
  Eigen::Array4d min = Eigen::Array4d::Zero();
  Eigen::Array4d max = Eigen::Array4d::Zero();
};

struct GrayImage {
  GrayMatrix pixels = GrayMatrix::Zero();
  int node_id = 0;
  std::size_t start = 0;
};

/// Extrema over every sample of the given (training) windows.
NormStats fit_stats(std::span<const Window> windows);

/// (x - lo) / (hi - lo) clamped to [0, 1]; 0 when hi == lo.
template <typename Scalar>
Scalar normalize(Scalar x, Scalar lo, Scalar hi) {
  if (!(hi > lo)) return Scalar(0);
  return std::clamp((x - lo) / (hi - lo), Scalar(0), Scalar(1));
}

/// x * 255 rounded half up.
inline std::uint8_t to_gray(double x_norm) {
  const double y = std::floor(std::clamp(x_norm, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::min(y, 255.0));
}

/// Block k of four rows holds samples 16k..16k+15; within it the rows are
/// temperature, humidity, light, voltage.
GrayImage encode_window(const Window& window, const NormStats& stats);

/// Pixels as gray / 255, row-major, length 256.
Eigen::VectorXd image_features(const GrayImage& image);

/// Binary PGM (P5, 16x16, maxval 255).
void export_pgm(const GrayImage& image, const std::filesystem::path& path);
GrayImage read_pgm(const std::filesystem::path& path);

}  // namespace wsn

#endif  // WSN_ENCODE_HPP
