#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "pidal/admm.hpp"
#include "pidal/image.hpp"
#include "pidal/linops.hpp"
#include "pidal/prox.hpp"

namespace pidal {

enum class Regularizer { tv, fa, fs };

const char* to_string(Regularizer r);
/// Parses "tv", "fa" or "fs"; throws std::invalid_argument otherwise.
Regularizer parse_regularizer(const std::string& name);

struct PidalConfig {
  double tau = 0.0;
  /// ADMM penalty. When unset, default_mu(tau, peak) is used.
  std::optional<double> mu;
  /// Maximum intensity M of the original image, for the mu rule. Falls back
  /// to the maximum observed count.
  std::optional<double> peak;
  std::size_t max_iters = 1000;
  double tol = 1e-3;
  /// Chambolle iterations per outer iteration (TV only).
  int inner_tv_iters = 5;
  /// Carry the Chambolle dual field across outer iterations (TV only).
  bool warm_start = true;
  /// Haar decomposition depth (FA/FS only).
  int levels = 4;
  /// Leave the coarsest approximation subband out of the l1 penalty (FA/FS).
  bool exclude_approximation = false;
};

/// mu = 60 tau / M.
double default_mu(double tau, double peak);
/// Relative-change threshold: 0.005 for M <= 5, else 0.001.
double default_tol(double peak);

struct ReportRow {
  std::size_t iter = 0;
  /// Objective at the clipped estimate, without the constant sum log(y_i!).
  double objective = 0.0;
  /// NaN when no ground truth was supplied.
  double isnr = 0.0;
  double mae = 0.0;
  double primal_residual = 0.0;
  double rel_change = 0.0;
  double elapsed_seconds = 0.0;
};

struct RunReport {
  Regularizer method = Regularizer::tv;
  std::vector<ReportRow> rows;
  /// max(x, 0) of the final image-domain iterate.
  Image estimate;
  Termination termination = Termination::max_iterations;
  std::size_t iterations = 0;
  double mu = 0.0;
  double tau = 0.0;
  /// |min(x, 0)|_2 of the unclipped final iterate.
  double infeasibility = 0.0;
  double seconds = 0.0;
};

/// Column order: iter, objective, isnr, mae, primal_residual, rel_change,
/// elapsed_seconds.
void write_report_csv(std::ostream& out, const RunReport& report, bool include_timing = true);
/// Column order: iter, primal_residual, dual_residual, rel_change, elapsed_seconds.
void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace, bool include_timing = true);

/// Observes each inner TV prox call: outer iteration (0-based), the prox input
/// nu and the returned approximation u.
using TvProbe = std::function<void(std::size_t outer_iter, const Image& nu, const Image& u)>;

/// A PIDAL instance laid out for the generic driver. Everything it needs is
/// captured by value, so it may outlive its inputs.
struct Problem {
  Regularizer method = Regularizer::tv;
  std::vector<TermSpec> terms;
  NormalSolver normal_solver;
  std::size_t dimension = 0;
  SplitState init;
  double mu = 0.0;
  /// Maps the optimization variable to image space (identity or W).
  std::function<Image(std::span<const double>)> to_image;
  /// Trace objective for the variable, evaluated at the clipped image.
  std::function<double(std::span<const double>)> objective;
  /// Chambolle dual field threaded through the TV prox (TV only).
  std::shared_ptr<ChambolleState> tv_state;
};

/// Terms per method, all with J = 3:
///   TV: (L, K), (tau TV, I), (indicator, I);   z-solve (K^T K + 2I)^{-1}
///   FA: (L, K), (tau l1, P), (indicator, I);   z-solve (K^T K + 2I)^{-1}
///   FS: (L, K W), (tau l1, I), (indicator, W); z-solve via SMW
/// Initial state: u1 = y, u2 = y | P y | W^T K^T y, u3 = y | y | K^T y, d = 0.
Problem assemble_tv(const Image& counts, const CirculantOperator& blur, const PidalConfig& cfg,
                    TvProbe probe = {});
Problem assemble_fa(const Image& counts, const CirculantOperator& blur, const HaarFrame& frame,
                    const PidalConfig& cfg);
Problem assemble_fs(const Image& counts, const CirculantOperator& blur, const HaarFrame& frame,
                    const PidalConfig& cfg);

/// True when some H_j is the identity, so the stacked G has full column rank.
bool has_identity_block(std::span<const TermSpec> terms);

/// Runs an assembled problem and builds its report. `truth` enables ISNR/MAE.
RunReport run_problem(const Problem& problem, const Image& counts, const Image* truth,
                      const PidalConfig& cfg, const AdmmObserver& observer = {});

RunReport pidal_tv(const Image& counts, const CirculantOperator& blur, const Image* truth,
                   const PidalConfig& cfg, TvProbe probe = {});
RunReport pidal_fa(const Image& counts, const CirculantOperator& blur, const HaarFrame& frame,
                   const Image* truth, const PidalConfig& cfg);
RunReport pidal_fs(const Image& counts, const CirculantOperator& blur, const HaarFrame& frame,
                   const Image* truth, const PidalConfig& cfg);

/// L(Kx) + tau TV(x) + indicator(x >= 0).
ExtendedReal objective_tv(const Image& x, const Image& counts, const CirculantOperator& blur,
                          double tau);
/// L(Kx) + tau |Px|_1 + indicator(x >= 0).
ExtendedReal objective_fa(const Image& x, const Image& counts, const CirculantOperator& blur,
                          const HaarFrame& frame, double tau, bool exclude_approximation = false);
/// L(KWs) + tau |s|_1 + indicator(Ws >= 0).
ExtendedReal objective_fs(std::span<const double> s, const Image& counts,
                          const CirculantOperator& blur, const HaarFrame& frame, double tau,
                          bool exclude_approximation = false);

enum class Verdict { yes, no, unknown };
const char* to_string(Verdict v);

/// Sufficient conditions for a minimizer to exist and be unique. Conditions
/// that are not met leave the verdict at `unknown`, never `no`.
struct ConditionReport {
  bool k_injective = false;
  double injectivity_margin = 0.0;
  bool counts_all_positive = false;
  bool k_nonneg_with_positive = false;
  /// Constant images are not in the null space of K (DC gain nonzero).
  bool constants_visible = false;
  Verdict existence = Verdict::unknown;
  Verdict uniqueness = Verdict::unknown;
};

ConditionReport check_existence_conditions(const CirculantOperator& blur, const Image& counts,
                                           Regularizer regularizer);

}  // namespace pidal
