#include "pidal/linops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fft.hpp"

namespace pidal {

CirculantOperator::CirculantOperator(std::shared_ptr<const detail::Fft2> fft,
                                     std::vector<std::complex<double>> diagonal)
    : fft_(std::move(fft)), diagonal_(std::move(diagonal)) {}

std::size_t CirculantOperator::height() const { return fft_->height(); }
std::size_t CirculantOperator::width() const { return fft_->width(); }

CirculantOperator CirculantOperator::from_psf(const Psf& psf, std::size_t height,
                                              std::size_t width) {
  const Image& k = psf.kernel;
  if (k.empty()) throw std::invalid_argument("from_psf: empty kernel");
  if (k.height() > height || k.width() > width) {
    throw std::invalid_argument("from_psf: PSF " + std::to_string(k.height()) + "x" +
                                std::to_string(k.width()) + " larger than image " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
  auto fft = std::make_shared<const detail::Fft2>(height, width);
  Image embedded(height, width);
  const auto ch = static_cast<long>(k.height() / 2);
  const auto cw = static_cast<long>(k.width() / 2);
  const auto h = static_cast<long>(height);
  const auto w = static_cast<long>(width);
  for (long r = 0; r < static_cast<long>(k.height()); ++r) {
    for (long c = 0; c < static_cast<long>(k.width()); ++c) {
      const auto rr = static_cast<std::size_t>(((r - ch) % h + h) % h);
      const auto cc = static_cast<std::size_t>(((c - cw) % w + w) % w);
      embedded(rr, cc) += k(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    }
  }
  std::vector<std::complex<double>> diag(fft->spectrum_size());
  fft->forward(embedded.pixels(), diag);
  return CirculantOperator(std::move(fft), std::move(diag));
}

CirculantOperator CirculantOperator::identity(std::size_t height, std::size_t width) {
  auto fft = std::make_shared<const detail::Fft2>(height, width);
  std::vector<std::complex<double>> diag(fft->spectrum_size(), {1.0, 0.0});
  return CirculantOperator(std::move(fft), std::move(diag));
}

CirculantOperator CirculantOperator::from_diagonal(std::size_t height, std::size_t width,
                                                   std::vector<std::complex<double>> diagonal) {
  auto fft = std::make_shared<const detail::Fft2>(height, width);
  if (diagonal.size() != fft->spectrum_size()) {
    throw std::invalid_argument("from_diagonal: expected " + std::to_string(fft->spectrum_size()) +
                                " half-plane entries");
  }
  // Columns 0 and (for even width) width/2 are their own mirror images: entry
  // (k, l) must equal conj of (-k mod h, l).
  const std::size_t sw = fft->spectrum_width();
  std::vector<std::size_t> mirrored_cols{0};
  if (width % 2 == 0 && width / 2 != 0) mirrored_cols.push_back(width / 2);
  for (std::size_t col : mirrored_cols) {
    for (std::size_t row = 0; row < height; ++row) {
      const std::size_t mirror = (height - row) % height;
      const auto a = diagonal[row * sw + col];
      const auto b = std::conj(diagonal[mirror * sw + col]);
      if (std::abs(a - b) > 1e-10) {
        throw std::invalid_argument("from_diagonal: spectrum is not Hermitian; operator not real");
      }
    }
  }
  return CirculantOperator(std::move(fft), std::move(diagonal));
}

Image CirculantOperator::multiply(const Image& x, bool conjugate) const {
  if (x.height() != height() || x.width() != width()) {
    throw std::invalid_argument("CirculantOperator: image shape does not match operator");
  }
  std::vector<std::complex<double>> spec(fft_->spectrum_size());
  fft_->forward(x.pixels(), spec);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    spec[i] *= (conjugate ? std::conj(diagonal_[i]) : diagonal_[i]) * scale;
  }
  Image out(height(), width());
  fft_->inverse(spec, out.pixels());
  return out;
}

Image CirculantOperator::apply(const Image& x) const { return multiply(x, false); }
Image CirculantOperator::adjoint(const Image& x) const { return multiply(x, true); }

Image CirculantOperator::filter(const Image& x, std::span<const double> gain) const {
  if (x.height() != height() || x.width() != width()) {
    throw std::invalid_argument("CirculantOperator::filter: shape mismatch");
  }
  if (gain.size() != diagonal_.size()) {
    throw std::invalid_argument("CirculantOperator::filter: gain size mismatch");
  }
  std::vector<std::complex<double>> spec(fft_->spectrum_size());
  fft_->forward(x.pixels(), spec);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= gain[i] * scale;
  Image out(height(), width());
  fft_->inverse(spec, out.pixels());
  return out;
}

double injectivity_margin(const CirculantOperator& op) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& d : op.dft_diagonal()) margin = std::min(margin, std::abs(d));
  return margin;
}

Image solve_ktk_plus_2i(const CirculantOperator& op, const Image& gamma) {
  std::vector<double> gain(op.dft_diagonal().size());
  std::transform(op.dft_diagonal().begin(), op.dft_diagonal().end(), gain.begin(),
                 [](const std::complex<double>& d) { return 1.0 / (std::norm(d) + 2.0); });
  return op.filter(gamma, gain);
}

HaarFrame::HaarFrame(std::size_t height, std::size_t width, int levels)
    : height_(height), width_(width), levels_(levels) {
  if (height == 0 || width == 0) throw std::invalid_argument("HaarFrame: empty shape");
  if (levels < 1) throw std::invalid_argument("HaarFrame: levels must be >= 1");
  const std::size_t min_dim = std::min(height, width);
  if (levels >= 63 || (std::size_t{1} << levels) > min_dim) {
    throw std::invalid_argument("HaarFrame: " + std::to_string(levels) +
                                " levels exceed log2 of the smallest dimension " +
                                std::to_string(min_dim));
  }
}

Coefficients HaarFrame::analysis(const Image& x) const {
  if (x.height() != height_ || x.width() != width_) {
    throw std::invalid_argument("HaarFrame::analysis: image shape does not match frame");
  }
  const std::size_t n = pixel_count();
  Coefficients out(redundancy());
  std::vector<double> approx(x.pixels().begin(), x.pixels().end());
  std::vector<double> next(n);
  for (int level = 0; level < levels_; ++level) {
    const std::size_t s = std::size_t{1} << level;
    double* lh = out.data() + (3 * level + 0) * n;
    double* hl = out.data() + (3 * level + 1) * n;
    double* hh = out.data() + (3 * level + 2) * n;
    for (std::size_t r = 0; r < height_; ++r) {
      const std::size_t r1 = (r + s) % height_;
      for (std::size_t c = 0; c < width_; ++c) {
        const std::size_t c1 = (c + s) % width_;
        const double a00 = approx[r * width_ + c];
        const double a01 = approx[r * width_ + c1];
        const double a10 = approx[r1 * width_ + c];
        const double a11 = approx[r1 * width_ + c1];
        const std::size_t i = r * width_ + c;
        next[i] = 0.25 * (a00 + a01 + a10 + a11);
        lh[i] = 0.25 * (a00 + a01 - a10 - a11);
        hl[i] = 0.25 * (a00 - a01 + a10 - a11);
        hh[i] = 0.25 * (a00 - a01 - a10 + a11);
      }
    }
    approx.swap(next);
  }
  std::copy(approx.begin(), approx.end(), out.begin() + static_cast<long>(approximation_offset()));
  return out;
}

Image HaarFrame::synthesis(std::span<const double> coefficients) const {
  if (coefficients.size() != redundancy()) {
    throw std::invalid_argument("HaarFrame::synthesis: expected " + std::to_string(redundancy()) +
                                " coefficients, got " + std::to_string(coefficients.size()));
  }
  const std::size_t n = pixel_count();
  std::vector<double> approx(coefficients.begin() + static_cast<long>(approximation_offset()),
                             coefficients.end());
  std::vector<double> prev(n);
  for (int level = levels_ - 1; level >= 0; --level) {
    const std::size_t s = std::size_t{1} << level;
    const double* lh = coefficients.data() + (3 * level + 0) * n;
    const double* hl = coefficients.data() + (3 * level + 1) * n;
    const double* hh = coefficients.data() + (3 * level + 2) * n;
    // Adjoint of the analysis step: pixel (r, c) was the a00, a01, a10, a11
    // tap of the coefficients at (r, c), (r, c-s), (r-s, c), (r-s, c-s).
    for (std::size_t r = 0; r < height_; ++r) {
      const std::size_t rm = (r + height_ - s % height_) % height_;
      for (std::size_t c = 0; c < width_; ++c) {
        const std::size_t cm = (c + width_ - s % width_) % width_;
        const std::size_t i00 = r * width_ + c;
        const std::size_t i01 = r * width_ + cm;
        const std::size_t i10 = rm * width_ + c;
        const std::size_t i11 = rm * width_ + cm;
        prev[i00] = 0.25 * ((approx[i00] + lh[i00] + hl[i00] + hh[i00]) +
                            (approx[i01] + lh[i01] - hl[i01] - hh[i01]) +
                            (approx[i10] - lh[i10] + hl[i10] - hh[i10]) +
                            (approx[i11] - lh[i11] - hl[i11] + hh[i11]));
      }
    }
    approx.swap(prev);
  }
  return Image(height_, width_, std::move(approx));
}

Coefficients solve_fs_normal(const CirculantOperator& op, const HaarFrame& frame,
                             std::span<const double> gamma) {
  if (op.height() != frame.height() || op.width() != frame.width()) {
    throw std::invalid_argument("solve_fs_normal: frame and operator shapes differ");
  }
  if (gamma.size() != frame.redundancy()) {
    throw std::invalid_argument("solve_fs_normal: coefficient vector has wrong length");
  }
  std::vector<double> gain(op.dft_diagonal().size());
  std::transform(op.dft_diagonal().begin(), op.dft_diagonal().end(), gain.begin(),
                 [](const std::complex<double>& d) {
                   const double p = std::norm(d);
                   return (p + 1.0) / (p + 2.0);
                 });
  const Image filtered = op.filter(frame.synthesis(gamma), gain);
  Coefficients out = frame.analysis(filtered);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gamma[i] - out[i];
  return out;
}

}  // namespace pidal
