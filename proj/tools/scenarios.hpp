#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pidal/image.hpp"
#include "pidal/linops.hpp"
#include "pidal/pidal.hpp"

namespace pidal::scenarios {

/// Directory named by PIDAL_DATA_DIR. Throws IoError when unset.
std::filesystem::path data_dir();

/// Resolves an image argument: the name "cameraman" maps to the bundled
/// test image, anything else is a path.
Image load_named_image(const std::string& name_or_path);

/// Window of the 256x256 Cameraman used for the 84x84 experiments.
inline constexpr std::size_t kCropRow = 30;
inline constexpr std::size_t kCropCol = 80;
inline constexpr std::size_t kCropSize = 84;

struct Observation {
  Image truth;   // scaled to the peak intensity
  Image lambda;  // K truth
  Image counts;  // Poisson(lambda)
};

/// truth = scale_to_max(x, peak), lambda = K truth, counts ~ Poisson(lambda).
Observation simulate(const Image& x, double peak, const CirculantOperator& blur,
                     std::uint64_t seed);

struct MethodSetup {
  Regularizer method = Regularizer::tv;
  PidalConfig config;
};

struct Scenario {
  std::string name;
  Image image;  // before intensity scaling
  double peak = 0.0;
  Psf psf;
  std::vector<MethodSetup> methods;
};

/// 84x84 crop, peak 3000, 9x9 Gaussian (sigma 1), mu = tau/50, 430 iterations.
Scenario steidl(const Image& cameraman);
/// Full image, peak 17600, 9x9 uniform blur, 160 iterations.
Scenario foi(const Image& cameraman);
/// Full image, 7x7 uniform blur, peak 255 or 100, relative-change stopping.
Scenario dfs_table(const Image& cameraman, double peak);

/// Replaces tau in every method; mu follows its scenario rule.
void override_tau(Scenario& scenario, double tau);

struct RunSummary {
  Regularizer method = Regularizer::tv;
  std::uint64_t seed = 0;
  double isnr = 0.0;
  double mae = 0.0;
  std::size_t iterations = 0;
  double seconds = 0.0;
  /// ISNR after each iteration.
  std::vector<double> isnr_trace;
};

/// One observation per seed, every method restored from it.
std::vector<RunSummary> run_seed(const Scenario& scenario, std::uint64_t seed);

struct Aggregate {
  Regularizer method = Regularizer::tv;
  double tau = 0.0;
  std::size_t runs = 0;
  double mean_isnr = 0.0;
  double mean_mae = 0.0;
  double mean_iterations = 0.0;
  double mean_seconds = 0.0;
};

/// Seeds base_seed, base_seed + 1, ..., base_seed + runs - 1.
std::vector<Aggregate> bench(const Scenario& scenario, std::uint64_t base_seed, std::size_t runs,
                             std::vector<RunSummary>* per_run = nullptr);

struct PowerFit {
  double amplitude = 0.0;  // A
  double exponent = 0.0;   // omega in A k^-omega
};

/// Least squares on log rho = log A - omega log k over k = first..last
/// (1-based, inclusive). Nonpositive entries are skipped.
PowerFit fit_power_law(std::span<const double> rho, std::size_t first, std::size_t last);

/// rho_{k+1} <= rho_k for all k in first..last-1 (1-based).
bool nonincreasing(std::span<const double> rho, std::size_t first, std::size_t last);

struct WarmStartRun {
  int inner_iters = 0;
  bool warm = true;
  /// rho[k-1] = |u_k - reference prox of nu_k|, k = 1..outer.
  std::vector<double> rho;
};

/// PIDAL-TV on `counts` with the TV prox approximated by `inner_iters`
/// Chambolle steps, warm or cold started. Each prox input is also solved
/// with `reference_iters` steps from a zero dual field.
WarmStartRun warmstart_run(const Image& counts, const CirculantOperator& blur, double tau,
                           double mu, int inner_iters, bool warm, std::size_t outer,
                           int reference_iters);

}  // namespace pidal::scenarios
