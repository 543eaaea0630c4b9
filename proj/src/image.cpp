#include "pidal/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pidal {

Image::Image(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill) {}

Image::Image(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != height * width) {
    throw std::invalid_argument("Image: data length " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(height) + "x" +
                                std::to_string(width));
  }
}

double Image::max() const {
  if (data_.empty()) throw std::invalid_argument("Image::max: empty image");
  return *std::max_element(data_.begin(), data_.end());
}

double Image::min() const {
  if (data_.empty()) throw std::invalid_argument("Image::min: empty image");
  return *std::min_element(data_.begin(), data_.end());
}

double Image::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

void Image::require_finite(const char* what) const {
  for (double v : data_) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

void Image::require_nonnegative(const char* what) const {
  for (double v : data_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument(std::string(what) + ": entries must be finite and >= 0");
    }
  }
}

void Image::require_counts(const char* what) const {
  for (double v : data_) {
    if (!std::isfinite(v) || v < 0.0 || v != std::floor(v)) {
      throw std::invalid_argument(std::string(what) + ": entries must be nonnegative integers");
    }
  }
}

bool same_shape(const Image& a, const Image& b) {
  return a.height() == b.height() && a.width() == b.width();
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!same_shape(a, b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                                " vs " + std::to_string(b.height()) + "x" +
                                std::to_string(b.width()) + ")");
  }
}

namespace {

void require_odd_size(std::size_t size) {
  if (size == 0 || size % 2 == 0) {
    throw std::invalid_argument("PSF size must be odd and >= 1, got " + std::to_string(size));
  }
}

void normalize_in_place(Image& kernel) {
  const double total = kernel.sum();
  if (!(total > 0.0)) throw std::invalid_argument("PSF must have a strictly positive sum");
  for (double& v : kernel.pixels()) v /= total;
}

}  // namespace

Psf make_gaussian_psf(std::size_t size, double sigma) {
  require_odd_size(size);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("Gaussian PSF sigma must be positive");
  }
  const auto half = static_cast<long>(size / 2);
  Image kernel(size, size);
  for (long r = -half; r <= half; ++r) {
    for (long c = -half; c <= half; ++c) {
      kernel(static_cast<std::size_t>(r + half), static_cast<std::size_t>(c + half)) =
          std::exp(-static_cast<double>(r * r + c * c) / (2.0 * sigma * sigma));
    }
  }
  normalize_in_place(kernel);
  return Psf{Psf::Kind::gaussian, sigma, std::move(kernel)};
}

Psf make_uniform_psf(std::size_t size) {
  require_odd_size(size);
  Image kernel(size, size, 1.0 / static_cast<double>(size * size));
  return Psf{Psf::Kind::uniform, 0.0, std::move(kernel)};
}

Psf make_custom_psf(Image kernel) {
  require_odd_size(kernel.height());
  require_odd_size(kernel.width());
  kernel.require_nonnegative("make_custom_psf");
  normalize_in_place(kernel);
  return Psf{Psf::Kind::custom, 0.0, std::move(kernel)};
}

Image crop(const Image& img, std::size_t row, std::size_t col, std::size_t height,
           std::size_t width) {
  if (height == 0 || width == 0 || row + height > img.height() || col + width > img.width()) {
    throw std::invalid_argument("crop: window does not fit inside the image");
  }
  Image out(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) out(r, c) = img(row + r, col + c);
  }
  return out;
}

Image scale_to_max(const Image& img, double peak) {
  if (!(peak > 0.0) || !std::isfinite(peak)) {
    throw std::invalid_argument("scale_to_max: target maximum must be positive");
  }
  img.require_finite("scale_to_max");
  const double current = img.max();
  if (!(current > 0.0)) {
    throw std::invalid_argument("scale_to_max: image maximum must be strictly positive");
  }
  const double factor = peak / current;
  Image out = img;
  for (double& v : out.pixels()) v *= factor;
  // Pin the peak pixels exactly.
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (img[i] == current) out[i] = peak;
  }
  return out;
}

double isnr(const Image& observed, const Image& truth, const Image& estimate) {
  require_same_shape(observed, truth, "isnr");
  require_same_shape(estimate, truth, "isnr");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double a = observed[i] - truth[i];
    const double b = estimate[i] - truth[i];
    num += a * a;
    den += b * b;
  }
  if (num == 0.0) throw std::invalid_argument("isnr: observation equals the truth");
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

double mae(const Image& truth, const Image& estimate) {
  require_same_shape(truth, estimate, "mae");
  if (truth.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += std::abs(estimate[i] - truth[i]);
  return acc / static_cast<double>(truth.size());
}

}  // namespace pidal
