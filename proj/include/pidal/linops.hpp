#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "pidal/image.hpp"

namespace pidal {

namespace detail {
class Fft2;
}

/// Periodic 2-D convolution K = U^H D U, stored by its DFT diagonal D.
///
/// The diagonal is kept in FFTW's half-plane layout: height rows by
/// width/2 + 1 columns, row-major. Entry (k, l) is the DFT of the kernel at
/// vertical frequency k and horizontal frequency l; the remaining columns
/// follow from Hermitian symmetry since the kernel is real. K^T uses the
/// conjugate diagonal.
///
/// PSF taps are placed with their center at pixel (0, 0) and negative
/// offsets wrapped around the far edges, so blurring introduces no shift.
///
/// Instances are immutable and can be shared between threads.
class CirculantOperator {
 public:
  static CirculantOperator from_psf(const Psf& psf, std::size_t height, std::size_t width);
  static CirculantOperator identity(std::size_t height, std::size_t width);
  /// Takes a half-plane diagonal directly. Throws if the self-conjugate bins
  /// violate Hermitian symmetry by more than 1e-10, since such a diagonal
  /// would not describe a real operator.
  static CirculantOperator from_diagonal(std::size_t height, std::size_t width,
                                         std::vector<std::complex<double>> diagonal);

  std::size_t height() const;
  std::size_t width() const;
  std::span<const std::complex<double>> dft_diagonal() const { return diagonal_; }

  Image apply(const Image& x) const;
  Image adjoint(const Image& x) const;

  /// Multiplies the spectrum of x by a real gain per half-plane bin.
  Image filter(const Image& x, std::span<const double> gain) const;

 private:
  CirculantOperator(std::shared_ptr<const detail::Fft2> fft,
                    std::vector<std::complex<double>> diagonal);
  Image multiply(const Image& x, bool conjugate) const;

  std::shared_ptr<const detail::Fft2> fft_;
  std::vector<std::complex<double>> diagonal_;
};

/// Minimum |D| over all frequencies. K is injective iff this is > 0.
double injectivity_margin(const CirculantOperator& op);

/// (K^T K + 2 I)^{-1} gamma, solved exactly in the DFT domain.
Image solve_ktk_plus_2i(const CirculantOperator& op, const Image& gamma);

using Coefficients = std::vector<double>;

/// Undecimated (shift-invariant) 2-D Haar frame with periodic boundaries,
/// normalized so the analysis operator P satisfies P^T P = I.
///
/// Level j (1-based) combines each pixel with its neighbours at offset
/// 2^(j-1); each 1-D step uses the filter pair (1, 1)/2 and (1, -1)/2.
/// Coefficient layout: for each level the LH, HL, HH detail subbands (low/high
/// along rows then columns), followed by the final approximation subband.
/// Every subband has height * width entries.
class HaarFrame {
 public:
  HaarFrame(std::size_t height, std::size_t width, int levels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  int levels() const { return levels_; }
  std::size_t pixel_count() const { return height_ * width_; }
  std::size_t subband_count() const { return 3 * static_cast<std::size_t>(levels_) + 1; }
  /// Total coefficient count d.
  std::size_t redundancy() const { return subband_count() * pixel_count(); }
  /// Offset of the approximation subband inside a coefficient vector.
  std::size_t approximation_offset() const { return redundancy() - pixel_count(); }

  Coefficients analysis(const Image& x) const;
  Image synthesis(std::span<const double> coefficients) const;

 private:
  std::size_t height_;
  std::size_t width_;
  int levels_;
};

/// (W^T K^T K W + I + W^T W)^{-1} gamma for a Parseval synthesis operator W,
/// evaluated as gamma - W^T [U^H (I + (|D|^2 + I)^{-1})^{-1} U] W gamma.
Coefficients solve_fs_normal(const CirculantOperator& op, const HaarFrame& frame,
                             std::span<const double> gamma);

}  // namespace pidal
