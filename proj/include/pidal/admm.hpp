#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pidal {

using Vector = std::vector<double>;

/// Raised when an iterate stops being finite. By the Eckstein-Bertsekas
/// theorem this is how a problem without a minimizer shows up.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear map between flat vectors; writes its result into `out`.
using LinearMap = std::function<void(std::span<const double> in, std::span<double> out)>;

/// Proximity operator Psi_{g/mu}: argmin_v g(v) + (mu/2) |v - nu|^2, written
/// into `out`. May carry state between calls (e.g. a warm-started inner solver).
using ProxMap = std::function<void(std::span<const double> nu, double mu, std::span<double> out)>;

/// (sum_j H_j^T H_j)^{-1} applied to a vector of length d.
using NormalSolver = std::function<void(std::span<const double> in, std::span<double> out)>;

/// One term g_j(H_j z) of the objective.
struct TermSpec {
  std::string name;
  std::size_t block_size = 0;  // p_j, rows of H_j
  LinearMap forward;           // H_j
  LinearMap adjoint;           // H_j^T
  ProxMap prox;
  /// H_j = I. Any such block makes the stacked operator full column rank.
  bool is_identity = false;
};

/// Iterate bundle. u and d hold one block per term; d is the scaled multiplier.
struct SplitState {
  Vector z;
  std::vector<Vector> u;
  std::vector<Vector> d;
  std::size_t iter = 0;
};

struct AdmmConfig {
  double mu = 1.0;
  std::size_t max_iters = 1000;
  /// Stop once |z_k - z_{k-1}| / |z_{k-1}| <= tol. Zero disables the test.
  double tol = 0.0;
  bool record_trace = true;
  /// Spot-check adjointness of every term and the normal solver on entry.
  bool verify_operators = true;
};

struct TraceRow {
  std::size_t iter = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// Relative z change; infinite on the first iteration.
  double rel_change = std::numeric_limits<double>::infinity();
  double elapsed_seconds = 0.0;
};

enum class Termination { converged, max_iterations };

struct AdmmResult {
  SplitState state;
  std::vector<TraceRow> trace;
  Termination termination = Termination::max_iterations;
};

/// Called once per iteration after the multiplier update.
using AdmmObserver = std::function<void(const SplitState&, const TraceRow&)>;

/// Minimizes sum_j g_j(H_j z) with the multi-term ADMM:
///   zeta_j = u_j + d_j
///   z      = (sum_j H_j^T H_j)^{-1} sum_j H_j^T zeta_j
///   u_j    = Psi_{g_j/mu}(H_j z - d_j)
///   d_j    = d_j - (H_j z - u_j)
/// The driver never evaluates g_j; objective reporting belongs to the caller.
///
/// `init.z` may be empty; its length is otherwise the problem dimension d and
/// is required when no term fixes it implicitly. `dimension` gives d.
AdmmResult admm_solve(std::span<const TermSpec> terms, const NormalSolver& normal_solver,
                      std::size_t dimension, SplitState init, const AdmmConfig& config,
                      const AdmmObserver& observer = {});

/// |G z - u|_2 over the stacked blocks.
double primal_residual(const SplitState& state, std::span<const TermSpec> terms);

/// mu |G^T (u_k - u_{k-1})|_2.
double dual_residual(const SplitState& previous, const SplitState& current,
                     std::span<const TermSpec> terms, double mu);

/// Largest |<H x, y> - <x, H^T y>| / (|x| |y|) over `trials` random pairs.
double adjoint_mismatch(const TermSpec& term, std::size_t dimension, int trials = 3,
                        unsigned seed = 7);

}  // namespace pidal
