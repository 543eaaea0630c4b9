#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace pidal {

/// Real-valued 2-D intensity grid stored row-major.
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, double fill = 0.0);
  Image(std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> pixels() { return data_; }
  std::span<const double> pixels() const { return data_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double> release() && { return std::move(data_); }

  double max() const;
  double min() const;
  double sum() const;

  /// Throws std::invalid_argument if any entry is not finite.
  void require_finite(const char* what) const;
  /// Throws std::invalid_argument if any entry is negative or not finite.
  void require_nonnegative(const char* what) const;
  /// Throws std::invalid_argument unless every entry is a nonnegative integer.
  void require_counts(const char* what) const;

  bool operator==(const Image&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

bool same_shape(const Image& a, const Image& b);
void require_same_shape(const Image& a, const Image& b, const char* what);

/// Point-spread function: a small nonnegative stencil with unit sum.
/// The tap at (height/2, width/2) is the kernel origin.
struct Psf {
  enum class Kind { gaussian, uniform, custom };

  Kind kind = Kind::custom;
  double sigma = 0.0;  // gaussian only
  Image kernel;
};

/// Gaussian sampled on the integer grid of a size x size stencil, then normalized.
Psf make_gaussian_psf(std::size_t size, double sigma);
/// size x size box filter.
Psf make_uniform_psf(std::size_t size);
/// Validates (odd sides, nonnegative, positive sum) and normalizes an arbitrary stencil.
Psf make_custom_psf(Image kernel);

/// Rectangular window starting at (row, col). Throws if it leaves the image.
Image crop(const Image& img, std::size_t row, std::size_t col, std::size_t height,
           std::size_t width);

/// Returns img * (peak / max(img)).
Image scale_to_max(const Image& img, double peak);

/// Draws an independent Poisson variate per pixel. Each pixel owns a
/// counter-based stream keyed by (seed, pixel index), so the result does not
/// depend on traversal order.
Image poisson_sample(const Image& lambda, std::uint64_t seed);

/// Improvement in SNR, 10 log10(|y - x|^2 / |xhat - x|^2) in dB.
/// Returns +infinity when xhat == x.
double isnr(const Image& observed, const Image& truth, const Image& estimate);

/// Mean absolute error |xhat - x|_1 / n.
double mae(const Image& truth, const Image& estimate);

}  // namespace pidal
