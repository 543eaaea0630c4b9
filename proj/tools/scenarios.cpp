#include "scenarios.hpp"

#include <cmath>
#include <cstdlib>

#include "pidal/io.hpp"

namespace pidal::scenarios {

std::filesystem::path data_dir() {
  const char* dir = std::getenv("PIDAL_DATA_DIR");
  if (dir == nullptr || *dir == '\0') {
    throw IoError("PIDAL_DATA_DIR is not set; run scripts/fetch_cameraman.py into a directory "
                  "and point PIDAL_DATA_DIR at it");
  }
  return dir;
}

Image load_named_image(const std::string& name_or_path) {
  if (name_or_path == "cameraman") return read_pgm(data_dir() / "cameraman.pgm");
  return read_image(name_or_path);
}

Observation simulate(const Image& x, double peak, const CirculantOperator& blur,
                     std::uint64_t seed) {
  Observation obs;
  obs.truth = scale_to_max(x, peak);
  obs.lambda = blur.apply(obs.truth);
  // Exact zeros can come back as -1e-13 from the FFT.
  for (double& v : obs.lambda.pixels()) v = std::max(v, 0.0);
  obs.counts = poisson_sample(obs.lambda, seed);
  return obs;
}

namespace {

MethodSetup method(Regularizer r, double tau, std::size_t max_iters, double tol) {
  MethodSetup m;
  m.method = r;
  m.config.tau = tau;
  m.config.max_iters = max_iters;
  m.config.tol = tol;
  m.config.levels = 4;
  return m;
}

}  // namespace

Scenario steidl(const Image& cameraman) {
  Scenario s;
  s.name = "steidl";
  s.image = crop(cameraman, kCropRow, kCropCol, kCropSize, kCropSize);
  s.peak = 3000.0;
  s.psf = make_gaussian_psf(9, 1.0);
  s.methods = {method(Regularizer::tv, 0.008, 430, 0.0), method(Regularizer::fa, 0.004, 430, 0.0),
               method(Regularizer::fs, 0.004, 430, 0.0)};
  for (auto& m : s.methods) m.config.mu = m.config.tau / 50.0;
  return s;
}

Scenario foi(const Image& cameraman) {
  Scenario s;
  s.name = "foi";
  s.image = cameraman;
  s.peak = 17600.0;
  s.psf = make_uniform_psf(9);
  s.methods = {method(Regularizer::tv, 0.0003, 160, 0.0),
               method(Regularizer::fa, 0.0002, 160, 0.0)};
  for (auto& m : s.methods) m.config.peak = s.peak;
  return s;
}

Scenario dfs_table(const Image& cameraman, double peak) {
  Scenario s;
  s.name = "dfs-table";
  s.image = cameraman;
  s.peak = peak;
  s.psf = make_uniform_psf(7);
  const double tol = default_tol(peak);
  const bool bright = peak >= 255.0;
  s.methods = {method(Regularizer::tv, bright ? 0.008 : 0.015, 1000, tol),
               method(Regularizer::fa, bright ? 0.005 : 0.01, 1000, tol)};
  for (auto& m : s.methods) m.config.peak = s.peak;
  return s;
}

void override_tau(Scenario& scenario, double tau) {
  for (auto& m : scenario.methods) {
    if (m.config.mu && scenario.name == "steidl") m.config.mu = tau / 50.0;
    m.config.tau = tau;
  }
}

std::vector<RunSummary> run_seed(const Scenario& scenario, std::uint64_t seed) {
  const auto blur =
      CirculantOperator::from_psf(scenario.psf, scenario.image.height(), scenario.image.width());
  const Observation obs = simulate(scenario.image, scenario.peak, blur, seed);
  std::vector<RunSummary> out;
  for (const auto& m : scenario.methods) {
    RunReport report;
    if (m.method == Regularizer::tv) {
      report = pidal_tv(obs.counts, blur, &obs.truth, m.config);
    } else {
      const HaarFrame frame(obs.counts.height(), obs.counts.width(), m.config.levels);
      report = m.method == Regularizer::fa ? pidal_fa(obs.counts, blur, frame, &obs.truth, m.config)
                                           : pidal_fs(obs.counts, blur, frame, &obs.truth, m.config);
    }
    RunSummary r;
    r.method = m.method;
    r.seed = seed;
    r.isnr = isnr(obs.counts, obs.truth, report.estimate);
    r.mae = mae(obs.truth, report.estimate);
    r.iterations = report.iterations;
    r.seconds = report.seconds;
    for (const auto& row : report.rows) r.isnr_trace.push_back(row.isnr);
    out.push_back(r);
  }
  return out;
}

std::vector<Aggregate> bench(const Scenario& scenario, std::uint64_t base_seed, std::size_t runs,
                             std::vector<RunSummary>* per_run) {
  std::vector<Aggregate> agg(scenario.methods.size());
  for (std::size_t j = 0; j < agg.size(); ++j) {
    agg[j].method = scenario.methods[j].method;
    agg[j].tau = scenario.methods[j].config.tau;
  }
  for (std::size_t i = 0; i < runs; ++i) {
    const auto rows = run_seed(scenario, base_seed + i);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      agg[j].runs += 1;
      agg[j].mean_isnr += rows[j].isnr;
      agg[j].mean_mae += rows[j].mae;
      agg[j].mean_iterations += static_cast<double>(rows[j].iterations);
      agg[j].mean_seconds += rows[j].seconds;
    }
    if (per_run) per_run->insert(per_run->end(), rows.begin(), rows.end());
  }
  for (auto& a : agg) {
    if (a.runs == 0) continue;
    const double n = static_cast<double>(a.runs);
    a.mean_isnr /= n;
    a.mean_mae /= n;
    a.mean_iterations /= n;
    a.mean_seconds /= n;
  }
  return agg;
}

PowerFit fit_power_law(std::span<const double> rho, std::size_t first, std::size_t last) {
  if (first < 1 || last > rho.size() || first >= last) {
    throw std::invalid_argument("fit_power_law: bad index range");
  }
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = first; k <= last; ++k) {
    if (!(rho[k - 1] > 0.0)) continue;
    const double lx = std::log(static_cast<double>(k));
    const double ly = std::log(rho[k - 1]);
    n += 1;
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  if (n < 2) throw std::invalid_argument("fit_power_law: fewer than two positive samples");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  return {std::exp(intercept), -slope};
}

bool nonincreasing(std::span<const double> rho, std::size_t first, std::size_t last) {
  for (std::size_t k = first; k < last; ++k) {
    if (rho[k] > rho[k - 1]) return false;
  }
  return true;
}

WarmStartRun warmstart_run(const Image& counts, const CirculantOperator& blur, double tau,
                           double mu, int inner_iters, bool warm, std::size_t outer,
                           int reference_iters) {
  WarmStartRun run;
  run.inner_iters = inner_iters;
  run.warm = warm;
  run.rho.reserve(outer);
  const double beta = tau / mu;
  auto probe = [&](std::size_t, const Image& nu, const Image& u) {
    ChambolleState fresh(nu.height(), nu.width());
    const Image ref = tv_denoise(nu, beta, reference_iters, fresh);
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += (u[i] - ref[i]) * (u[i] - ref[i]);
    run.rho.push_back(std::sqrt(acc));
  };
  PidalConfig cfg;
  cfg.tau = tau;
  cfg.mu = mu;
  cfg.max_iters = outer;
  cfg.tol = 0.0;
  cfg.inner_tv_iters = inner_iters;
  cfg.warm_start = warm;
  pidal_tv(counts, blur, nullptr, cfg, probe);
  return run;
}

}  // namespace pidal::scenarios
