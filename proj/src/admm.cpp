#include "pidal/admm.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace pidal {

namespace {

double norm2(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

Vector random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void validate_terms(std::span<const TermSpec> terms) {
  if (terms.empty()) throw std::invalid_argument("admm_solve: at least one term is required");
  for (const auto& t : terms) {
    if (t.block_size == 0 || !t.forward || !t.adjoint || !t.prox) {
      throw std::invalid_argument("admm_solve: term '" + t.name + "' is incomplete");
    }
  }
}

void validate_state(const SplitState& s, std::span<const TermSpec> terms, std::size_t dimension) {
  if (!s.z.empty() && s.z.size() != dimension) {
    throw std::invalid_argument("admm_solve: initial z has wrong length");
  }
  if (s.u.size() != terms.size() || s.d.size() != terms.size()) {
    throw std::invalid_argument("admm_solve: state must hold one u and d block per term");
  }
  for (std::size_t j = 0; j < terms.size(); ++j) {
    if (s.u[j].size() != terms[j].block_size || s.d[j].size() != terms[j].block_size) {
      throw std::invalid_argument("admm_solve: block size mismatch for term '" + terms[j].name +
                                  "'");
    }
  }
}

// Residual of one random solve against sum_j H_j^T H_j.
double normal_solver_mismatch(std::span<const TermSpec> terms, const NormalSolver& solver,
                              std::size_t dimension) {
  std::mt19937_64 rng(11);
  const Vector rhs = random_vector(dimension, rng);
  Vector x(dimension);
  solver(rhs, x);
  Vector back(dimension, 0.0);
  Vector tmp(dimension);
  for (const auto& t : terms) {
    Vector hx(t.block_size);
    t.forward(x, hx);
    t.adjoint(hx, tmp);
    for (std::size_t i = 0; i < dimension; ++i) back[i] += tmp[i];
  }
  double err = 0.0;
  for (std::size_t i = 0; i < dimension; ++i) err += (back[i] - rhs[i]) * (back[i] - rhs[i]);
  return std::sqrt(err) / norm2(rhs);
}

}  // namespace

double adjoint_mismatch(const TermSpec& term, std::size_t dimension, int trials, unsigned seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  Vector hx(term.block_size);
  Vector hty(dimension);
  for (int t = 0; t < trials; ++t) {
    const Vector x = random_vector(dimension, rng);
    const Vector y = random_vector(term.block_size, rng);
    term.forward(x, hx);
    term.adjoint(y, hty);
    const double gap = std::abs(dot(hx, y) - dot(x, hty));
    worst = std::max(worst, gap / (norm2(x) * norm2(y)));
  }
  return worst;
}

double primal_residual(const SplitState& state, std::span<const TermSpec> terms) {
  double acc = 0.0;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    Vector hz(terms[j].block_size);
    terms[j].forward(state.z, hz);
    for (std::size_t i = 0; i < hz.size(); ++i) {
      const double r = hz[i] - state.u[j][i];
      acc += r * r;
    }
  }
  return std::sqrt(acc);
}

double dual_residual(const SplitState& previous, const SplitState& current,
                     std::span<const TermSpec> terms, double mu) {
  const std::size_t dimension = current.z.size();
  Vector acc(dimension, 0.0);
  Vector tmp(dimension);
  for (std::size_t j = 0; j < terms.size(); ++j) {
    Vector du(terms[j].block_size);
    for (std::size_t i = 0; i < du.size(); ++i) du[i] = current.u[j][i] - previous.u[j][i];
    terms[j].adjoint(du, tmp);
    for (std::size_t i = 0; i < dimension; ++i) acc[i] += tmp[i];
  }
  return mu * norm2(acc);
}

AdmmResult admm_solve(std::span<const TermSpec> terms, const NormalSolver& normal_solver,
                      std::size_t dimension, SplitState init, const AdmmConfig& config,
                      const AdmmObserver& observer) {
  if (!(config.mu > 0.0)) throw std::invalid_argument("admm_solve: mu must be positive");
  if (!(config.tol >= 0.0)) throw std::invalid_argument("admm_solve: tol must be >= 0");
  if (!normal_solver) throw std::invalid_argument("admm_solve: normal solver missing");
  if (dimension == 0) throw std::invalid_argument("admm_solve: dimension must be positive");
  validate_terms(terms);
  validate_state(init, terms, dimension);

  if (config.verify_operators) {
    for (const auto& t : terms) {
      if (adjoint_mismatch(t, dimension) > 1e-8) {
        throw std::invalid_argument("admm_solve: term '" + t.name +
                                    "' forward/adjoint pair is inconsistent");
      }
    }
    if (normal_solver_mismatch(terms, normal_solver, dimension) > 1e-8) {
      throw std::invalid_argument("admm_solve: normal solver does not invert sum H^T H");
    }
  }

  AdmmResult result;
  SplitState& s = result.state;
  s = std::move(init);
  const bool have_previous_z = !s.z.empty();
  Vector z_prev = s.z;
  s.z.assign(dimension, 0.0);

  const std::size_t J = terms.size();
  Vector gamma(dimension);
  Vector tmp(dimension);
  std::vector<Vector> hz(J);
  std::vector<Vector> nu(J);
  std::vector<Vector> u_prev(J);
  std::vector<Vector> d_prev(J);
  for (std::size_t j = 0; j < J; ++j) {
    hz[j].resize(terms[j].block_size);
    nu[j].resize(terms[j].block_size);
  }

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < config.max_iters; ++k) {
    // z-update: quadratic solve on the stacked operator.
    std::fill(gamma.begin(), gamma.end(), 0.0);
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t i = 0; i < nu[j].size(); ++i) nu[j][i] = s.u[j][i] + s.d[j][i];
      terms[j].adjoint(nu[j], tmp);
      for (std::size_t i = 0; i < dimension; ++i) gamma[i] += tmp[i];
    }
    normal_solver(gamma, s.z);

    // u- and d-updates, decoupled across terms.
    for (std::size_t j = 0; j < J; ++j) {
      terms[j].forward(s.z, hz[j]);
      for (std::size_t i = 0; i < hz[j].size(); ++i) nu[j][i] = hz[j][i] - s.d[j][i];
      u_prev[j] = s.u[j];
      terms[j].prox(nu[j], config.mu, s.u[j]);
      d_prev[j] = s.d[j];
      for (std::size_t i = 0; i < hz[j].size(); ++i) s.d[j][i] -= hz[j][i] - s.u[j][i];
    }
    s.iter += 1;

    if (!all_finite(s.z)) {
      throw DivergenceError("admm_solve: non-finite primal iterate at iteration " +
                            std::to_string(s.iter));
    }
    for (std::size_t j = 0; j < J; ++j) {
      if (!all_finite(s.u[j]) || !all_finite(s.d[j])) {
        throw DivergenceError("admm_solve: non-finite iterate in term '" + terms[j].name +
                              "' at iteration " + std::to_string(s.iter));
      }
    }

    TraceRow row;
    row.iter = s.iter;
    {
      // H_j z - u_j is exactly the multiplier decrement.
      double acc = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t i = 0; i < hz[j].size(); ++i) {
          const double r = d_prev[j][i] - s.d[j][i];
          acc += r * r;
        }
      }
      row.primal_residual = std::sqrt(acc);
    }
    if (config.record_trace) {
      std::fill(gamma.begin(), gamma.end(), 0.0);
      for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t i = 0; i < nu[j].size(); ++i) nu[j][i] = s.u[j][i] - u_prev[j][i];
        terms[j].adjoint(nu[j], tmp);
        for (std::size_t i = 0; i < dimension; ++i) gamma[i] += tmp[i];
      }
      row.dual_residual = config.mu * norm2(gamma);
    }
    if (k > 0 || have_previous_z) {
      double diff = 0.0;
      for (std::size_t i = 0; i < dimension; ++i) {
        diff += (s.z[i] - z_prev[i]) * (s.z[i] - z_prev[i]);
      }
      const double base = norm2(z_prev);
      row.rel_change = base > 0.0 ? std::sqrt(diff) / base
                                  : (diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    }
    row.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    z_prev = s.z;

    if (config.record_trace) result.trace.push_back(row);
    if (observer) observer(s, row);

    if (config.tol > 0.0 && row.rel_change <= config.tol) {
      result.termination = Termination::converged;
      break;
    }
  }
  return result;
}

}  // namespace pidal
