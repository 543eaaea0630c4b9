#include "pidal/prox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pidal {

ExtendedReal xi(double z, double count) {
  if (z < 0.0) return ExtendedReal::infinity();
  if (count == 0.0) return z;
  if (z == 0.0) return ExtendedReal::infinity();
  return z - count * std::log(z);
}

ExtendedReal neg_log_likelihood(const Image& z, const Image& counts) {
  require_same_shape(z, counts, "neg_log_likelihood");
  counts.require_counts("neg_log_likelihood");
  ExtendedReal total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const ExtendedReal term = xi(z[i], counts[i]);
    if (term.is_infinite()) return term;
    total += term;
  }
  return total;
}

double poisson_prox(double nu, double count, double mu) {
  const double a = nu - 1.0 / mu;
  const double c = 4.0 * count / mu;
  const double root = std::sqrt(a * a + c);
  // Rationalized branch avoids cancellation when a is large and negative.
  return a >= 0.0 ? 0.5 * (a + root) : (c == 0.0 ? 0.0 : 0.5 * c / (root - a));
}

Image poisson_prox(const Image& nu, const Image& counts, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("poisson_prox: mu must be positive");
  require_same_shape(nu, counts, "poisson_prox");
  Image out(nu.height(), nu.width());
  for (std::size_t i = 0; i < nu.size(); ++i) out[i] = poisson_prox(nu[i], counts[i], mu);
  return out;
}

void soft_threshold_in_place(std::span<double> v, double theta) {
  if (!(theta >= 0.0)) throw std::invalid_argument("soft_threshold: theta must be >= 0");
  for (double& x : v) {
    const double mag = std::abs(x) - theta;
    x = mag > 0.0 ? std::copysign(mag, x) : 0.0;
  }
}

std::vector<double> soft_threshold(std::span<const double> v, double theta) {
  std::vector<double> out(v.begin(), v.end());
  soft_threshold_in_place(out, theta);
  return out;
}

Image project_nonneg(const Image& v) {
  Image out = v;
  for (double& x : out.pixels()) x = std::max(x, 0.0);
  return out;
}

double tv_value(const Image& x) {
  const std::size_t h = x.height();
  const std::size_t w = x.width();
  double total = 0.0;
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t rd = (r + 1) % h;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t cr = (c + 1) % w;
      const double dh = x(r, cr) - x(r, c);
      const double dv = x(rd, c) - x(r, c);
      total += std::sqrt(dh * dh + dv * dv);
    }
  }
  return total;
}

ChambolleState::ChambolleState(std::size_t height, std::size_t width)
    : horizontal(height, width), vertical(height, width) {}

void ChambolleState::reset() {
  std::fill(horizontal.pixels().begin(), horizontal.pixels().end(), 0.0);
  std::fill(vertical.pixels().begin(), vertical.pixels().end(), 0.0);
}

double ChambolleState::max_dual_norm() const {
  double m = 0.0;
  for (std::size_t i = 0; i < horizontal.size(); ++i) {
    m = std::max(m, std::hypot(horizontal[i], vertical[i]));
  }
  return m;
}

namespace {

constexpr double kChambolleStep = 0.125;

// div p = -grad^T p with periodic backward differences.
void divergence(const ChambolleState& p, std::span<double> out) {
  const std::size_t h = p.height();
  const std::size_t w = p.width();
  const double* ph = p.horizontal.pixels().data();
  const double* pv = p.vertical.pixels().data();
  for (std::size_t r = 0; r < h; ++r) {
    const double* hrow = ph + r * w;
    const double* vrow = pv + r * w;
    const double* vup = pv + ((r + h - 1) % h) * w;
    double* o = out.data() + r * w;
    o[0] = hrow[0] - hrow[w - 1] + vrow[0] - vup[0];
    for (std::size_t c = 1; c < w; ++c) o[c] = hrow[c] - hrow[c - 1] + vrow[c] - vup[c];
  }
}

void require_state_shape(const Image& r, ChambolleState& state) {
  if (state.empty()) {
    state = ChambolleState(r.height(), r.width());
  } else if (state.height() != r.height() || state.width() != r.width()) {
    throw std::invalid_argument("tv_denoise: dual state shape does not match image");
  }
}

}  // namespace

Image tv_denoise(const Image& r, double beta, int iterations, ChambolleState& state) {
  if (!(beta > 0.0)) throw std::invalid_argument("tv_denoise: beta must be positive");
  if (iterations < 1) throw std::invalid_argument("tv_denoise: iteration count must be >= 1");
  require_state_shape(r, state);

  const std::size_t h = r.height();
  const std::size_t w = r.width();
  const double inv_beta = 1.0 / beta;
  std::vector<double> scaled(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) scaled[i] = r[i] * inv_beta;
  std::vector<double> field(r.size());
  double* ph = state.horizontal.pixels().data();
  double* pv = state.vertical.pixels().data();
  auto update = [&](std::size_t i, double gh, double gv) {
    const double scale = 1.0 / (1.0 + kChambolleStep * std::sqrt(gh * gh + gv * gv));
    ph[i] = (ph[i] + kChambolleStep * gh) * scale;
    pv[i] = (pv[i] + kChambolleStep * gv) * scale;
  };
  for (int it = 0; it < iterations; ++it) {
    divergence(state, field);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] -= scaled[i];
    for (std::size_t row = 0; row < h; ++row) {
      const double* f = field.data() + row * w;
      const double* fd = field.data() + ((row + 1) % h) * w;
      const std::size_t base = row * w;
      for (std::size_t c = 0; c + 1 < w; ++c) update(base + c, f[c + 1] - f[c], fd[c] - f[c]);
      update(base + w - 1, f[0] - f[w - 1], fd[w - 1] - f[w - 1]);
    }
  }
  return tv_primal_from_dual(r, beta, state);
}

Image tv_primal_from_dual(const Image& r, double beta, const ChambolleState& state) {
  if (state.height() != r.height() || state.width() != r.width()) {
    throw std::invalid_argument("tv_primal_from_dual: dual state shape does not match image");
  }
  Image out(r.height(), r.width());
  divergence(state, out.pixels());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r[i] - beta * out[i];
  return out;
}

double tv_duality_gap(const Image& r, double beta, const ChambolleState& state) {
  const Image u = tv_primal_from_dual(r, beta, state);
  double fidelity = 0.0;
  double r_sq = 0.0;
  double u_sq = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    fidelity += (u[i] - r[i]) * (u[i] - r[i]);
    r_sq += r[i] * r[i];
    u_sq += u[i] * u[i];
  }
  const double primal = 0.5 * fidelity + beta * tv_value(u);
  const double dual = 0.5 * (r_sq - u_sq);
  return primal - dual;
}

}  // namespace pidal
