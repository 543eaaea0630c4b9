#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "pidal/image.hpp"

namespace pidal {

/// A value on (-inf, +inf]. Objectives in this library are proper, so -inf
/// never occurs.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)
  static constexpr ExtendedReal infinity() {
    return ExtendedReal(std::numeric_limits<double>::infinity());
  }

  constexpr bool is_infinite() const { return value_ == std::numeric_limits<double>::infinity(); }
  constexpr double value() const { return value_; }

  friend constexpr ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    return ExtendedReal(a.value_ + b.value_);
  }
  ExtendedReal& operator+=(ExtendedReal other) {
    value_ += other.value_;
    return *this;
  }
  friend constexpr bool operator==(ExtendedReal, ExtendedReal) = default;

 private:
  double value_ = 0.0;
};

/// Per-pixel Poisson data term: +inf for z < 0, else z - y log z with
/// log 0 = -inf and 0 log 0 = 0.
ExtendedReal xi(double z, double count);

/// Sum of xi over pixels. The constant sum log(y_i!) is omitted.
ExtendedReal neg_log_likelihood(const Image& z, const Image& counts);

/// Proximity operator of xi(., y)/mu applied pixelwise:
///   v = (nu - 1/mu + sqrt((nu - 1/mu)^2 + 4 y / mu)) / 2.
/// The discriminant carries y/mu (not y): that is what the stationarity
/// condition mu (v - nu) + 1 - y / v = 0 gives; the two agree only at mu = 1.
double poisson_prox(double nu, double count, double mu);
Image poisson_prox(const Image& nu, const Image& counts, double mu);

/// sign(v) max(|v| - theta, 0) componentwise.
std::vector<double> soft_threshold(std::span<const double> v, double theta);
void soft_threshold_in_place(std::span<double> v, double theta);

Image project_nonneg(const Image& v);

/// Isotropic TV with forward differences and periodic wrap.
double tv_value(const Image& x);

/// Dual field of Chambolle's TV projection algorithm: one horizontal and one
/// vertical component per pixel, each pixel's pair kept inside the unit disc.
class ChambolleState {
 public:
  ChambolleState() = default;
  ChambolleState(std::size_t height, std::size_t width);

  std::size_t height() const { return horizontal.height(); }
  std::size_t width() const { return horizontal.width(); }
  bool empty() const { return horizontal.empty(); }
  void reset();
  /// Largest per-pixel magnitude sqrt(ph^2 + pv^2).
  double max_dual_norm() const;

  Image horizontal;
  Image vertical;
};

/// Runs exactly `iterations` steps of Chambolle's dual fixed-point scheme
/// (step 1/8) for argmin_v 0.5 |v - r|^2 + beta TV(v), starting from `state`
/// and leaving the final dual field in it. An empty state is treated as zeros.
Image tv_denoise(const Image& r, double beta, int iterations, ChambolleState& state);

/// Estimate r - beta div p implied by a dual field.
Image tv_primal_from_dual(const Image& r, double beta, const ChambolleState& state);

/// Primal minus dual objective of the TV prox problem at the current dual
/// field; nonnegative, and zero exactly at the solution.
double tv_duality_gap(const Image& r, double beta, const ChambolleState& state);

}  // namespace pidal
