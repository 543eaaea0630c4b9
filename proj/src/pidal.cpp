#include "pidal/pidal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pidal/io.hpp"

namespace pidal {

const char* to_string(Regularizer r) {
  switch (r) {
    case Regularizer::tv: return "tv";
    case Regularizer::fa: return "fa";
    case Regularizer::fs: return "fs";
  }
  return "?";
}

Regularizer parse_regularizer(const std::string& name) {
  if (name == "tv") return Regularizer::tv;
  if (name == "fa") return Regularizer::fa;
  if (name == "fs") return Regularizer::fs;
  throw std::invalid_argument("unknown method '" + name + "' (expected tv, fa or fs)");
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "yes";
    case Verdict::no: return "no";
    case Verdict::unknown: return "unknown";
  }
  return "?";
}

double default_mu(double tau, double peak) {
  if (!(tau > 0.0) || !(peak > 0.0)) {
    throw std::invalid_argument("default_mu: tau and peak intensity must be positive");
  }
  return 60.0 * tau / peak;
}

double default_tol(double peak) { return peak <= 5.0 ? 0.005 : 0.001; }

namespace {

Image as_image(std::size_t h, std::size_t w, std::span<const double> v) {
  return Image(h, w, std::vector<double>(v.begin(), v.end()));
}

void copy_into(const Image& img, std::span<double> out) {
  std::copy(img.pixels().begin(), img.pixels().end(), out.begin());
}

void copy_into(const std::vector<double>& v, std::span<double> out) {
  std::copy(v.begin(), v.end(), out.begin());
}

double resolve_mu(const PidalConfig& cfg, const Image& counts) {
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("PIDAL: tau must be positive");
  if (cfg.inner_tv_iters < 1) throw std::invalid_argument("PIDAL: inner TV iterations must be >= 1");
  if (cfg.mu) {
    if (!(*cfg.mu > 0.0)) throw std::invalid_argument("PIDAL: mu must be positive");
    return *cfg.mu;
  }
  const double peak = cfg.peak ? *cfg.peak : counts.max();
  if (!(peak > 0.0)) {
    throw std::invalid_argument("PIDAL: cannot default mu without a positive peak intensity");
  }
  return default_mu(cfg.tau, peak);
}

void check_inputs(const Image& counts, const CirculantOperator& blur) {
  counts.require_counts("PIDAL observation");
  if (counts.height() != blur.height() || counts.width() != blur.width()) {
    throw std::invalid_argument("PIDAL: observation and blur operator shapes differ");
  }
}

void check_frame(const Image& counts, const HaarFrame& frame) {
  if (counts.height() != frame.height() || counts.width() != frame.width()) {
    throw std::invalid_argument("PIDAL: observation and frame shapes differ");
  }
}

TermSpec identity_term(std::string name, std::size_t n, ProxMap prox) {
  TermSpec t;
  t.name = std::move(name);
  t.block_size = n;
  t.forward = [](std::span<const double> in, std::span<double> out) {
    std::copy(in.begin(), in.end(), out.begin());
  };
  t.adjoint = t.forward;
  t.prox = std::move(prox);
  t.is_identity = true;
  return t;
}

ProxMap poisson_prox_map(const Image& counts) {
  return [counts](std::span<const double> nu, double mu, std::span<double> out) {
    for (std::size_t i = 0; i < nu.size(); ++i) out[i] = poisson_prox(nu[i], counts[i], mu);
  };
}

ProxMap nonneg_prox_map() {
  return [](std::span<const double> nu, double, std::span<double> out) {
    for (std::size_t i = 0; i < nu.size(); ++i) out[i] = std::max(nu[i], 0.0);
  };
}

// Soft threshold at tau/mu; the approximation subband optionally passes through.
ProxMap l1_prox_map(double tau, std::size_t approx_offset, bool exclude_approximation) {
  return [=](std::span<const double> nu, double mu, std::span<double> out) {
    std::copy(nu.begin(), nu.end(), out.begin());
    const std::size_t stop = exclude_approximation ? approx_offset : out.size();
    soft_threshold_in_place(out.subspan(0, stop), tau / mu);
  };
}

TermSpec blur_term(const CirculantOperator& blur, ProxMap prox) {
  const std::size_t h = blur.height();
  const std::size_t w = blur.width();
  TermSpec t;
  t.name = "poisson";
  t.block_size = h * w;
  t.forward = [blur, h, w](std::span<const double> in, std::span<double> out) {
    copy_into(blur.apply(as_image(h, w, in)), out);
  };
  t.adjoint = [blur, h, w](std::span<const double> in, std::span<double> out) {
    copy_into(blur.adjoint(as_image(h, w, in)), out);
  };
  t.prox = std::move(prox);
  return t;
}

NormalSolver ktk_plus_2i_solver(const CirculantOperator& blur) {
  const std::size_t h = blur.height();
  const std::size_t w = blur.width();
  return [blur, h, w](std::span<const double> in, std::span<double> out) {
    copy_into(solve_ktk_plus_2i(blur, as_image(h, w, in)), out);
  };
}

void zero_multipliers(Problem& p) {
  p.init.d.clear();
  for (const auto& t : p.terms) p.init.d.emplace_back(t.block_size, 0.0);
}

double l1_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += std::abs(x);
  return acc;
}

// L(K x) for x >= 0. FFT rounding can leave entries of Kx a hair below zero
// where the exact value is 0; those are clamped, genuine negatives are not.
ExtendedReal likelihood_of_blurred(const Image& x, const Image& counts,
                                   const CirculantOperator& blur) {
  Image kx = blur.apply(x);
  double scale = 0.0;
  for (double v : kx.pixels()) scale = std::max(scale, std::abs(v));
  const double slack = 1e-9 * (1.0 + scale);
  for (double& v : kx.pixels()) {
    if (v < 0.0 && v >= -slack) v = 0.0;
  }
  return neg_log_likelihood(kx, counts);
}

bool has_negative(std::span<const double> v) {
  return std::any_of(v.begin(), v.end(), [](double x) { return x < 0.0; });
}

}  // namespace

bool has_identity_block(std::span<const TermSpec> terms) {
  return std::any_of(terms.begin(), terms.end(), [](const TermSpec& t) { return t.is_identity; });
}

Problem assemble_tv(const Image& counts, const CirculantOperator& blur, const PidalConfig& cfg,
                    TvProbe probe) {
  check_inputs(counts, blur);
  Problem p;
  p.method = Regularizer::tv;
  p.mu = resolve_mu(cfg, counts);
  const std::size_t h = counts.height();
  const std::size_t w = counts.width();
  const std::size_t n = counts.size();
  p.dimension = n;
  p.tv_state = std::make_shared<ChambolleState>(h, w);

  auto state = p.tv_state;
  const double tau = cfg.tau;
  const int inner = cfg.inner_tv_iters;
  const bool warm = cfg.warm_start;
  auto outer = std::make_shared<std::size_t>(0);
  ProxMap tv_prox = [=](std::span<const double> nu, double mu, std::span<double> out) {
    if (!warm) state->reset();
    const Image input = as_image(h, w, nu);
    const Image u = tv_denoise(input, tau / mu, inner, *state);
    if (probe) probe(*outer, input, u);
    ++*outer;
    copy_into(u, out);
  };

  p.terms.push_back(blur_term(blur, poisson_prox_map(counts)));
  p.terms.push_back(identity_term("tv", n, std::move(tv_prox)));
  p.terms.push_back(identity_term("nonneg", n, nonneg_prox_map()));
  p.normal_solver = ktk_plus_2i_solver(blur);

  p.init.u.assign(3, counts.data());
  zero_multipliers(p);

  p.to_image = [h, w](std::span<const double> z) { return as_image(h, w, z); };
  p.objective = [=](std::span<const double> z) {
    return objective_tv(project_nonneg(as_image(h, w, z)), counts, blur, tau).value();
  };
  return p;
}

Problem assemble_fa(const Image& counts, const CirculantOperator& blur, const HaarFrame& frame,
                    const PidalConfig& cfg) {
  check_inputs(counts, blur);
  check_frame(counts, frame);
  Problem p;
  p.method = Regularizer::fa;
  p.mu = resolve_mu(cfg, counts);
  const std::size_t h = counts.height();
  const std::size_t w = counts.width();
  const std::size_t n = counts.size();
  p.dimension = n;

  TermSpec analysis;
  analysis.name = "l1-analysis";
  analysis.block_size = frame.redundancy();
  analysis.forward = [frame, h, w](std::span<const double> in, std::span<double> out) {
    copy_into(frame.analysis(as_image(h, w, in)), out);
  };
  analysis.adjoint = [frame](std::span<const double> in, std::span<double> out) {
    copy_into(frame.synthesis(in), out);
  };
  analysis.prox = l1_prox_map(cfg.tau, frame.approximation_offset(), cfg.exclude_approximation);

  p.terms.push_back(blur_term(blur, poisson_prox_map(counts)));
  p.terms.push_back(std::move(analysis));
  p.terms.push_back(identity_term("nonneg", n, nonneg_prox_map()));
  // P^T P = I, so the z-solve is the same as for TV.
  p.normal_solver = ktk_plus_2i_solver(blur);

  p.init.u = {counts.data(), frame.analysis(counts), counts.data()};
  zero_multipliers(p);

  const double tau = cfg.tau;
  const bool exclude = cfg.exclude_approximation;
  p.to_image = [h, w](std::span<const double> z) { return as_image(h, w, z); };
  p.objective = [=](std::span<const double> z) {
    return objective_fa(project_nonneg(as_image(h, w, z)), counts, blur, frame, tau, exclude)
        .value();
  };
  return p;
}

Problem assemble_fs(const Image& counts, const CirculantOperator& blur, const HaarFrame& frame,
                    const PidalConfig& cfg) {
  check_inputs(counts, blur);
  check_frame(counts, frame);
  Problem p;
  p.method = Regularizer::fs;
  p.mu = resolve_mu(cfg, counts);
  const std::size_t h = counts.height();
  const std::size_t w = counts.width();
  const std::size_t n = counts.size();
  const std::size_t d = frame.redundancy();
  p.dimension = d;

  TermSpec data_term;
  data_term.name = "poisson";
  data_term.block_size = n;
  data_term.forward = [blur, frame](std::span<const double> in, std::span<double> out) {
    copy_into(blur.apply(frame.synthesis(in)), out);
  };
  data_term.adjoint = [blur, frame, h, w](std::span<const double> in, std::span<double> out) {
    copy_into(frame.analysis(blur.adjoint(as_image(h, w, in))), out);
  };
  data_term.prox = poisson_prox_map(counts);

  TermSpec synthesis;
  synthesis.name = "nonneg-synthesis";
  synthesis.block_size = n;
  synthesis.forward = [frame](std::span<const double> in, std::span<double> out) {
    copy_into(frame.synthesis(in), out);
  };
  synthesis.adjoint = [frame, h, w](std::span<const double> in, std::span<double> out) {
    copy_into(frame.analysis(as_image(h, w, in)), out);
  };
  synthesis.prox = nonneg_prox_map();

  p.terms.push_back(std::move(data_term));
  p.terms.push_back(identity_term(
      "l1", d, l1_prox_map(cfg.tau, frame.approximation_offset(), cfg.exclude_approximation)));
  p.terms.push_back(std::move(synthesis));
  p.normal_solver = [blur, frame](std::span<const double> in, std::span<double> out) {
    copy_into(solve_fs_normal(blur, frame, in), out);
  };

  const Image kty = blur.adjoint(counts);
  p.init.u = {counts.data(), frame.analysis(kty), kty.data()};
  zero_multipliers(p);

  const double tau = cfg.tau;
  const bool exclude = cfg.exclude_approximation;
  p.to_image = [frame](std::span<const double> s) { return frame.synthesis(s); };
  p.objective = [=](std::span<const double> s) {
    const Image x = project_nonneg(frame.synthesis(s));
    const std::size_t stop = exclude ? frame.approximation_offset() : s.size();
    return (likelihood_of_blurred(x, counts, blur) + tau * l1_norm(s.subspan(0, stop))).value();
  };
  return p;
}

RunReport run_problem(const Problem& problem, const Image& counts, const Image* truth,
                      const PidalConfig& cfg, const AdmmObserver& observer) {
  if (!has_identity_block(problem.terms)) {
    throw std::invalid_argument("PIDAL: stacked operator has no identity block");
  }
  if (truth) require_same_shape(*truth, counts, "PIDAL ground truth");

  RunReport report;
  report.method = problem.method;
  report.mu = problem.mu;
  report.tau = cfg.tau;

  AdmmConfig admm;
  admm.mu = problem.mu;
  admm.max_iters = cfg.max_iters;
  admm.tol = cfg.tol;
  admm.record_trace = false;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto record = [&](const SplitState& s, const TraceRow& row) {
    const Image x = project_nonneg(problem.to_image(s.z));
    ReportRow r;
    r.iter = row.iter;
    r.objective = problem.objective(s.z);
    r.isnr = truth ? isnr(counts, *truth, x) : nan;
    r.mae = truth ? mae(*truth, x) : nan;
    r.primal_residual = row.primal_residual;
    r.rel_change = row.rel_change;
    r.elapsed_seconds = row.elapsed_seconds;
    report.rows.push_back(r);
    if (observer) observer(s, row);
  };

  AdmmResult result =
      admm_solve(problem.terms, problem.normal_solver, problem.dimension, problem.init, admm, record);

  const Image raw = problem.to_image(result.state.z);
  double neg = 0.0;
  for (double v : raw.pixels()) neg += v < 0.0 ? v * v : 0.0;
  report.infeasibility = std::sqrt(neg);
  report.estimate = project_nonneg(raw);
  report.termination = result.termination;
  report.iterations = result.state.iter;
  report.seconds = report.rows.empty() ? 0.0 : report.rows.back().elapsed_seconds;
  return report;
}

RunReport pidal_tv(const Image& counts, const CirculantOperator& blur, const Image* truth,
                   const PidalConfig& cfg, TvProbe probe) {
  return run_problem(assemble_tv(counts, blur, cfg, std::move(probe)), counts, truth, cfg);
}

RunReport pidal_fa(const Image& counts, const CirculantOperator& blur, const HaarFrame& frame,
                   const Image* truth, const PidalConfig& cfg) {
  return run_problem(assemble_fa(counts, blur, frame, cfg), counts, truth, cfg);
}

RunReport pidal_fs(const Image& counts, const CirculantOperator& blur, const HaarFrame& frame,
                   const Image* truth, const PidalConfig& cfg) {
  return run_problem(assemble_fs(counts, blur, frame, cfg), counts, truth, cfg);
}

ExtendedReal objective_tv(const Image& x, const Image& counts, const CirculantOperator& blur,
                          double tau) {
  require_same_shape(x, counts, "objective_tv");
  if (has_negative(x.pixels())) return ExtendedReal::infinity();
  return likelihood_of_blurred(x, counts, blur) + tau * tv_value(x);
}

ExtendedReal objective_fa(const Image& x, const Image& counts, const CirculantOperator& blur,
                          const HaarFrame& frame, double tau, bool exclude_approximation) {
  require_same_shape(x, counts, "objective_fa");
  if (has_negative(x.pixels())) return ExtendedReal::infinity();
  const Coefficients px = frame.analysis(x);
  const std::size_t stop = exclude_approximation ? frame.approximation_offset() : px.size();
  return likelihood_of_blurred(x, counts, blur) +
         tau * l1_norm(std::span<const double>(px).subspan(0, stop));
}

ExtendedReal objective_fs(std::span<const double> s, const Image& counts,
                          const CirculantOperator& blur, const HaarFrame& frame, double tau,
                          bool exclude_approximation) {
  const Image x = frame.synthesis(s);
  require_same_shape(x, counts, "objective_fs");
  if (has_negative(x.pixels())) return ExtendedReal::infinity();
  const std::size_t stop = exclude_approximation ? frame.approximation_offset() : s.size();
  return likelihood_of_blurred(x, counts, blur) + tau * l1_norm(s.subspan(0, stop));
}

ConditionReport check_existence_conditions(const CirculantOperator& blur, const Image& counts,
                                           Regularizer regularizer) {
  ConditionReport rep;
  const auto diag = blur.dft_diagonal();
  double peak = 0.0;
  for (const auto& v : diag) peak = std::max(peak, std::abs(v));
  rep.injectivity_margin = injectivity_margin(blur);
  rep.k_injective = peak > 0.0 && rep.injectivity_margin > 1e-12 * peak;
  rep.constants_visible = peak > 0.0 && std::abs(diag[0]) > 1e-12 * peak;
  rep.counts_all_positive = std::all_of(counts.pixels().begin(), counts.pixels().end(),
                                        [](double v) { return v > 0.0; });

  // Spatial kernel = K applied to the unit impulse.
  Image impulse(blur.height(), blur.width());
  impulse[0] = 1.0;
  const Image kernel = blur.apply(impulse);
  const double kmax = kernel.max();
  rep.k_nonneg_with_positive =
      kmax > 0.0 && std::all_of(kernel.pixels().begin(), kernel.pixels().end(),
                                [&](double v) { return v >= -1e-12 * kmax; });

  const bool strict = rep.k_injective && rep.counts_all_positive;
  switch (regularizer) {
    case Regularizer::tv:
      rep.existence = (rep.constants_visible || rep.k_injective || rep.k_nonneg_with_positive)
                          ? Verdict::yes
                          : Verdict::unknown;
      rep.uniqueness = strict ? Verdict::yes : Verdict::unknown;
      break;
    case Regularizer::fa:
      rep.existence = Verdict::yes;
      rep.uniqueness = strict ? Verdict::yes : Verdict::unknown;
      break;
    case Regularizer::fs:
      // K W needs injectivity, which a redundant frame rules out in general.
      rep.existence = Verdict::yes;
      rep.uniqueness = Verdict::unknown;
      break;
  }
  return rep;
}

void write_report_csv(std::ostream& out, const RunReport& report, bool include_timing) {
  out << "iter,objective,isnr,mae,primal_residual,rel_change";
  if (include_timing) out << ",elapsed_seconds";
  out << '\n';
  for (const auto& r : report.rows) {
    out << r.iter << ',' << format_real(r.objective) << ',' << format_real(r.isnr) << ','
        << format_real(r.mae) << ',' << format_real(r.primal_residual) << ','
        << format_real(r.rel_change);
    if (include_timing) out << ',' << format_real(r.elapsed_seconds);
    out << '\n';
  }
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace, bool include_timing) {
  out << "iter,primal_residual,dual_residual,rel_change";
  if (include_timing) out << ",elapsed_seconds";
  out << '\n';
  for (const auto& r : trace) {
    out << r.iter << ',' << format_real(r.primal_residual) << ','
        << format_real(r.dual_residual) << ',' << format_real(r.rel_change);
    if (include_timing) out << ',' << format_real(r.elapsed_seconds);
    out << '\n';
  }
}

}  // namespace pidal
