#include "wsn/encode.hpp"

#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>

#include "wsn/error.hpp"

namespace wsn {

NormStats fit_stats(std::span<const Window> windows) {
  if (windows.empty()) throw EmptyInputError("encode", "fit_stats needs at least one window");
  NormStats stats;
  stats.min.setConstant(std::numeric_limits<double>::infinity());
  stats.max.setConstant(-std::numeric_limits<double>::infinity());
  for (const auto& w : windows)
    for (const auto& s : w.values)
      for (int k = 0; k < kFeatureCount; ++k) {
        stats.min(k) = std::min(stats.min(k), s.feature(k));
        stats.max(k) = std::max(stats.max(k), s.feature(k));
      }
  return stats;
}

GrayImage encode_window(const Window& window, const NormStats& stats) {
  if (window.values.size() != kWindowLength)
    throw ShapeError("encode", "window must hold " + std::to_string(kWindowLength) + " samples, got " +
                                   std::to_string(window.values.size()));
  GrayImage image;
  image.node_id = window.node_id;
  image.start = window.start;
  for (int block = 0; block < 4; ++block)
    for (int col = 0; col < kImageSide; ++col) {
      const auto& s = window.values[static_cast<std::size_t>(block * kImageSide + col)];
      for (int k = 0; k < kFeatureCount; ++k)
        image.pixels(4 * block + k, col) = to_gray(normalize(s.feature(k), stats.min(k), stats.max(k)));
    }
  return image;
}

Eigen::VectorXd image_features(const GrayImage& image) {
  Eigen::VectorXd v(kImageSide * kImageSide);
  for (int r = 0; r < kImageSide; ++r)
    for (int c = 0; c < kImageSide; ++c) v(r * kImageSide + c) = image.pixels(r, c) / 255.0;
  return v;
}

void export_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("encode", "cannot open " + path.string() + " for writing");
  out << "P5\n" << kImageSide << ' ' << kImageSide << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), kImageSide * kImageSide);
  if (!out) throw IoError("encode", "write failure on " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("encode", "cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || width != kImageSide || height != kImageSide || maxval != 255)
    throw IoError("encode", path.string() + " is not a 16x16 8-bit P5 image");
  in.get();  // single whitespace after maxval
  GrayImage image;
  in.read(reinterpret_cast<char*>(image.pixels.data()), kImageSide * kImageSide);
  if (in.gcount() != kImageSide * kImageSide) throw IoError("encode", path.string() + " is truncated");
  return image;
}

}  // namespace wsn
