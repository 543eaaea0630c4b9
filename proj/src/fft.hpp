#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace pidal::detail {

/// Real 2-D DFT of a fixed shape backed by FFTW. Plans are built once under a
/// global lock (the FFTW planner is not reentrant); execution is thread-safe.
class Fft2 {
 public:
  Fft2(std::size_t height, std::size_t width);
  ~Fft2();
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  /// Columns kept in the half-plane spectrum, width/2 + 1.
  std::size_t spectrum_width() const { return width_ / 2 + 1; }
  std::size_t spectrum_size() const { return height_ * spectrum_width(); }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Unnormalized inverse; destroys `in`.
  void inverse(std::span<std::complex<double>> in, std::span<double> out) const;

 private:
  std::size_t height_;
  std::size_t width_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace pidal::detail
