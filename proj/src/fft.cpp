#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>
#include <vector>

namespace pidal::detail {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

Fft2::Fft2(std::size_t height, std::size_t width) : height_(height), width_(width) {
  if (height == 0 || width == 0) throw std::invalid_argument("Fft2: empty shape");
  std::vector<double> real(height * width);
  std::vector<std::complex<double>> spec(spectrum_size());
  const int h = static_cast<int>(height);
  const int w = static_cast<int>(width);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_r2c_2d(h, w, real.data(), as_fftw(spec.data()), flags);
  inverse_plan_ = fftw_plan_dft_c2r_2d(h, w, as_fftw(spec.data()), real.data(),
                                       flags | FFTW_DESTROY_INPUT);
  if (!forward_plan_ || !inverse_plan_) throw std::runtime_error("Fft2: FFTW planning failed");
}

Fft2::~Fft2() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void Fft2::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() != height_ * width_ || out.size() != spectrum_size()) {
    throw std::invalid_argument("Fft2::forward: size mismatch");
  }
  // r2c does not modify its input; FFTW's signature is simply not const.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                       as_fftw(out.data()));
}

void Fft2::inverse(std::span<std::complex<double>> in, std::span<double> out) const {
  if (out.size() != height_ * width_ || in.size() != spectrum_size()) {
    throw std::invalid_argument("Fft2::inverse: size mismatch");
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), as_fftw(in.data()), out.data());
}

}  // namespace pidal::detail
