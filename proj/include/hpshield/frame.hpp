#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace hpshield {

/// Row-major grayscale image with intensities in [0, 1].
class Frame {
 public:
  Frame() = default;
  /// Throws std::invalid_argument for empty dimensions.
  Frame(std::size_t height, std::size_t width, double fill = 0.0);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  const std::vector<double>& data() const { return data_; }

  /// Copy `patch` with its top-left corner at (row, col); parts outside are cut off.
  void blit(const Frame& patch, std::ptrdiff_t row, std::ptrdiff_t col);
  /// Clamp every value into [0, 1]; non-finite values become 0.
  void clip();
  /// Frame shifted by (dr, dc) with zero fill.
  Frame shifted(std::ptrdiff_t dr, std::ptrdiff_t dc) const;

  bool operator==(const Frame&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Binary PGM (P5), 8 bits per pixel.
void write_pgm(std::ostream& out, const Frame& f);
Frame read_pgm(std::istream& in);
Frame read_pgm(const std::filesystem::path& path);

}  // namespace hpshield
