// pidal: simulate Poisson observations, restore them, and rerun the studies.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pidal/admm.hpp"
#include "pidal/io.hpp"
#include "pidal/pidal.hpp"
#include "scenarios.hpp"

namespace {

using namespace pidal;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitDivergence = 3;

struct PsfArgs {
  std::string kind = "gaussian";
  std::size_t size = 9;
  double sigma = 1.0;
};

void add_psf_options(CLI::App* cmd, PsfArgs& psf) {
  cmd->add_option("--psf", psf.kind, "gaussian, uniform, identity, or a kernel file (.pgm/.csv)")
      ->capture_default_str();
  cmd->add_option("--psf-size", psf.size, "Stencil side (odd)")->capture_default_str();
  cmd->add_option("--psf-sigma", psf.sigma, "Gaussian standard deviation")->capture_default_str();
}

CirculantOperator make_blur(const PsfArgs& args, std::size_t h, std::size_t w) {
  if (args.kind == "identity") return CirculantOperator::identity(h, w);
  if (args.kind == "gaussian") return CirculantOperator::from_psf(make_gaussian_psf(args.size, args.sigma), h, w);
  if (args.kind == "uniform") return CirculantOperator::from_psf(make_uniform_psf(args.size), h, w);
  return CirculantOperator::from_psf(make_custom_psf(read_image(args.kind)), h, w);
}

// "row,col,height,width"
Image apply_crop(const Image& img, const std::string& spec) {
  std::vector<std::size_t> v;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const unsigned long long n = std::stoull(item, &used);
    if (used != item.size()) throw std::invalid_argument("--crop: expected row,col,height,width");
    v.push_back(static_cast<std::size_t>(n));
  }
  if (v.size() != 4) throw std::invalid_argument("--crop: expected row,col,height,width");
  return crop(img, v[0], v[1], v[2], v[3]);
}

Image load_input(const std::string& input, const std::optional<std::string>& crop_spec) {
  Image img = scenarios::load_named_image(input);
  if (crop_spec) {
    if (!crop_spec->empty()) img = apply_crop(img, *crop_spec);
  } else if (input == "cameraman") {
    img = crop(img, scenarios::kCropRow, scenarios::kCropCol, scenarios::kCropSize,
               scenarios::kCropSize);
  }
  return img;
}

std::string fixed4(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

void close_output(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path);
}

// ---- config files ----------------------------------------------------------

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<ConfigEntry> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::vector<ConfigEntry> entries;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(number) + ": expected key = value");
    }
    ConfigEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), number};
    if (e.key.empty()) {
      throw std::invalid_argument(path + ":" + std::to_string(number) + ": empty key");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

// Config keys become flags placed ahead of the real ones; with TakeLast the
// command line wins, and anything unset falls back to the built-in default.
std::vector<std::string> splice_config(const std::vector<std::string>& args, CLI::App& app) {
  if (args.empty()) return args;
  CLI::App* cmd = app.get_subcommand_no_throw(args.front());
  if (cmd == nullptr) return args;

  std::optional<std::string> path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;

  std::vector<std::string> out{args.front()};
  for (const auto& e : read_config(*path)) {
    const CLI::Option* opt = e.key == "config" ? nullptr : cmd->get_option_no_throw("--" + e.key);
    if (opt == nullptr) {
      throw std::invalid_argument(*path + ":" + std::to_string(e.line) + ": unknown key '" +
                                  e.key + "' for " + args.front());
    }
    out.push_back("--" + e.key + "=" + e.value);
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string input;
  std::optional<std::string> crop;
  double peak = 0.0;
  std::uint64_t seed = 0;
  PsfArgs psf;
  std::string output;
};

void run_simulate(const SimulateArgs& a) {
  const Image x = load_input(a.input, a.crop);
  const auto blur = make_blur(a.psf, x.height(), x.width());
  const auto obs = scenarios::simulate(x, a.peak, blur, a.seed);
  write_csv_matrix(a.output + "_truth.csv", obs.truth);
  write_csv_matrix(a.output + "_lambda.csv", obs.lambda);
  write_csv_matrix(a.output + "_observed.csv", obs.counts);
  write_pgm(a.output + "_observed.pgm", obs.counts);
  std::cout << "max_intensity " << format_real(obs.truth.max()) << " lambda_max "
            << format_real(obs.lambda.max()) << " counts_max " << format_real(obs.counts.max())
            << " seed " << a.seed << '\n';
}

// ---- restore ----------------------------------------------------------------

struct RestoreArgs {
  std::string input;
  std::optional<std::string> truth;
  PsfArgs psf;
  std::string method;
  double tau = 0.0;
  std::optional<double> mu;
  std::optional<double> tol;
  std::optional<double> peak;
  std::size_t max_iters = 1000;
  int inner_iters = 5;
  int levels = 4;
  bool cold_start = false;
  bool exclude_approximation = false;
  bool no_timing = false;
  std::string output;
};

void run_restore(const RestoreArgs& a) {
  const Regularizer method = parse_regularizer(a.method);
  const Image counts = read_image(a.input);
  counts.require_counts("observation");
  std::optional<Image> truth;
  if (a.truth) {
    truth = read_image(*a.truth);
    require_same_shape(*truth, counts, "truth");
  }
  const auto blur = make_blur(a.psf, counts.height(), counts.width());

  PidalConfig cfg;
  cfg.tau = a.tau;
  cfg.mu = a.mu;
  cfg.peak = a.peak;
  cfg.max_iters = a.max_iters;
  cfg.tol = a.tol ? *a.tol : default_tol(a.peak ? *a.peak : counts.max());
  cfg.inner_tv_iters = a.inner_iters;
  cfg.warm_start = !a.cold_start;
  cfg.levels = a.levels;
  cfg.exclude_approximation = a.exclude_approximation;

  const Image* t = truth ? &*truth : nullptr;
  RunReport report;
  if (method == Regularizer::tv) {
    report = pidal_tv(counts, blur, t, cfg);
  } else {
    const HaarFrame frame(counts.height(), counts.width(), cfg.levels);
    report = method == Regularizer::fa ? pidal_fa(counts, blur, frame, t, cfg)
                                       : pidal_fs(counts, blur, frame, t, cfg);
  }

  write_pgm(a.output + "_restored.pgm", report.estimate);
  write_csv_matrix(a.output + "_restored.csv", report.estimate);
  const std::string report_path = a.output + "_report.csv";
  auto out = open_output(report_path);
  write_report_csv(out, report, !a.no_timing);
  close_output(out, report_path);

  std::cout << "method " << to_string(method) << " tau " << format_real(report.tau) << " mu "
            << format_real(report.mu) << " iterations " << report.iterations << " termination "
            << (report.termination == Termination::converged ? "converged" : "max_iterations");
  if (truth) {
    std::cout << " isnr " << fixed4(isnr(counts, *truth, report.estimate)) << " mae "
              << fixed4(mae(*truth, report.estimate));
  }
  if (!a.no_timing) std::cout << " seconds " << fixed4(report.seconds);
  std::cout << '\n';
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string truth;
  std::string input;
  std::string observed;
};

void run_evaluate(const EvaluateArgs& a) {
  const Image x = read_image(a.truth);
  const Image xhat = read_image(a.input);
  const Image y = read_image(a.observed);
  require_same_shape(x, xhat, "evaluate estimate");
  require_same_shape(x, y, "evaluate observation");
  std::cout << "isnr " << fixed4(isnr(y, x, xhat)) << '\n';
  std::cout << "mae " << fixed4(mae(x, xhat)) << '\n';
}

// ---- warmstart-study --------------------------------------------------------

struct WarmStartArgs {
  std::string input = "cameraman";
  std::optional<std::string> crop;
  double peak = 3000.0;
  std::uint64_t seed = 0;
  PsfArgs psf;
  double tau = 0.008;
  std::optional<double> mu;
  std::size_t max_iters = 200;
  std::string inner_iters = "5,20";
  int reference_iters = 4000;
  std::size_t fit_from = 20;
  std::string output;
};

void run_warmstart(const WarmStartArgs& a) {
  const Image x = load_input(a.input, a.crop);
  const auto blur = make_blur(a.psf, x.height(), x.width());
  const auto obs = scenarios::simulate(x, a.peak, blur, a.seed);
  const double mu = a.mu ? *a.mu : a.tau / 50.0;
  if (a.fit_from < 1 || a.fit_from >= a.max_iters) {
    throw std::invalid_argument("--fit-from must lie in [1, max-iters)");
  }

  std::vector<int> steps;
  std::stringstream list(a.inner_iters);
  for (std::string item; std::getline(list, item, ',');) {
    std::size_t used = 0;
    const int t = std::stoi(item, &used);
    if (used != item.size() || t < 1) throw std::invalid_argument("--inner-iters: expected e.g. 5,20");
    steps.push_back(t);
  }

  std::vector<scenarios::WarmStartRun> runs;
  for (int t : steps) {
    for (bool warm : {true, false}) {
      runs.push_back(scenarios::warmstart_run(obs.counts, blur, a.tau, mu, t, warm, a.max_iters,
                                              a.reference_iters));
    }
  }

  const std::string seq_path = a.output + "_sequences.csv";
  auto seq = open_output(seq_path);
  seq << "k";
  for (const auto& r : runs) seq << ',' << (r.warm ? "warm" : "cold") << "_t" << r.inner_iters;
  seq << '\n';
  for (std::size_t k = 1; k <= a.max_iters; ++k) {
    seq << k;
    for (const auto& r : runs) seq << ',' << format_real(r.rho[k - 1]);
    seq << '\n';
  }
  close_output(seq, seq_path);

  const std::string fit_path = a.output + "_fit.csv";
  auto fit = open_output(fit_path);
  fit << "inner_iters,start,fit_from,fit_to,amplitude,omega,nonincreasing_tail\n";
  for (const auto& r : runs) {
    const auto pf = scenarios::fit_power_law(r.rho, a.fit_from, a.max_iters);
    const bool mono = scenarios::nonincreasing(r.rho, a.fit_from, a.max_iters);
    fit << r.inner_iters << ',' << (r.warm ? "warm" : "cold") << ',' << a.fit_from << ','
        << a.max_iters << ',' << format_real(pf.amplitude) << ',' << format_real(pf.exponent)
        << ',' << (mono ? "true" : "false") << '\n';
    std::cout << "t " << r.inner_iters << ' ' << (r.warm ? "warm" : "cold") << " A "
              << fixed4(pf.amplitude) << " omega " << fixed4(pf.exponent) << " nonincreasing_tail "
              << (mono ? "true" : "false") << '\n';
  }
  close_output(fit, fit_path);
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  std::string scenario;
  std::size_t runs = 10;
  std::uint64_t seed = 1;
  std::optional<double> peak;
  std::optional<double> tau;
  bool no_timing = false;
  std::optional<std::string> output;
};

void run_bench(const BenchArgs& a) {
  const Image cam = scenarios::load_named_image("cameraman");
  std::vector<scenarios::Scenario> list;
  if (a.scenario == "steidl") {
    list.push_back(scenarios::steidl(cam));
  } else if (a.scenario == "foi") {
    list.push_back(scenarios::foi(cam));
  } else if (a.scenario == "dfs-table") {
    if (a.peak) {
      list.push_back(scenarios::dfs_table(cam, *a.peak));
    } else {
      list.push_back(scenarios::dfs_table(cam, 100.0));
      list.push_back(scenarios::dfs_table(cam, 255.0));
    }
  } else {
    throw std::invalid_argument("unknown scenario '" + a.scenario +
                                "' (expected steidl, foi or dfs-table)");
  }
  if (a.peak && a.scenario != "dfs-table") list.front().peak = *a.peak;

  std::ostringstream summary;
  std::ostringstream detail;
  summary << "scenario,peak,method,tau,runs,mean_mae,mean_isnr,mean_iterations";
  detail << "scenario,peak,method,seed,mae,isnr,iterations";
  if (!a.no_timing) {
    summary << ",mean_seconds";
    detail << ",seconds";
  }
  summary << '\n';
  detail << '\n';
  for (auto& s : list) {
    if (a.tau) scenarios::override_tau(s, *a.tau);
    std::vector<scenarios::RunSummary> per_run;
    const auto agg = scenarios::bench(s, a.seed, a.runs, &per_run);
    for (const auto& g : agg) {
      summary << s.name << ',' << format_real(s.peak) << ',' << to_string(g.method) << ','
              << format_real(g.tau) << ',' << g.runs << ',' << format_real(g.mean_mae) << ','
              << format_real(g.mean_isnr) << ',' << format_real(g.mean_iterations);
      if (!a.no_timing) summary << ',' << format_real(g.mean_seconds);
      summary << '\n';
    }
    for (const auto& r : per_run) {
      detail << s.name << ',' << format_real(s.peak) << ',' << to_string(r.method) << ','
             << r.seed << ',' << format_real(r.mae) << ',' << format_real(r.isnr) << ','
             << r.iterations;
      if (!a.no_timing) detail << ',' << format_real(r.seconds);
      detail << '\n';
    }
  }

  if (a.output) {
    for (const auto& [suffix, body] :
         {std::pair{"_summary.csv", summary.str()}, std::pair{"_runs.csv", detail.str()}}) {
      const std::string path = *a.output + suffix;
      auto out = open_output(path);
      out << body;
      close_output(out, path);
    }
  }
  std::cout << summary.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson image deconvolution by alternating-direction splitting"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "File of 'key = value' lines (# starts a comment)");
  };

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Blur a clean image and draw Poisson counts");
  simulate->add_option("--input", sim.input, "Image file, or 'cameraman'")->required();
  simulate->add_option("--crop", sim.crop, "row,col,height,width ('' for none)");
  simulate->add_option("--max-intensity", sim.peak, "Peak of the scaled clean image")->required();
  simulate->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
  add_psf_options(simulate, sim.psf);
  simulate->add_option("--output", sim.output, "Output prefix")->required();
  add_config(simulate);

  RestoreArgs res;
  auto* restore = app.add_subcommand("restore", "Deconvolve a Poisson observation");
  restore->add_option("--input", res.input, "Observed counts (.pgm or .csv)")->required();
  restore->add_option("--truth", res.truth, "Clean image, enables ISNR/MAE");
  add_psf_options(restore, res.psf);
  restore->add_option("--method", res.method, "tv, fa or fs")->required();
  restore->add_option("--tau", res.tau, "Regularization weight")->required();
  restore->add_option("--mu", res.mu, "ADMM penalty (default 60 tau / M)");
  restore->add_option("--tol", res.tol, "Relative-change stop (0 disables)");
  restore->add_option("--max-intensity", res.peak, "M for the mu and tol rules (default max y)");
  restore->add_option("--max-iters", res.max_iters)->capture_default_str();
  restore->add_option("--inner-iters", res.inner_iters, "Chambolle steps per TV prox")
      ->capture_default_str();
  restore->add_option("--levels", res.levels, "Haar levels (fa/fs)")->capture_default_str();
  restore->add_flag("--cold-start", res.cold_start, "Reset the TV dual field every iteration");
  restore->add_flag("--exclude-approx", res.exclude_approximation,
                    "Do not penalize the coarsest approximation subband");
  restore->add_flag("--no-timing", res.no_timing, "Omit elapsed-time columns");
  restore->add_option("--output", res.output, "Output prefix")->required();
  add_config(restore);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Print ISNR and MAE of an estimate");
  evaluate->add_option("--truth", ev.truth)->required();
  evaluate->add_option("--input", ev.input, "Estimate")->required();
  evaluate->add_option("--observed", ev.observed, "Observation the ISNR is relative to")
      ->required();
  add_config(evaluate);

  WarmStartArgs ws;
  auto* warmstart =
      app.add_subcommand("warmstart-study", "Inner TV error sequences, warm versus cold start");
  warmstart->add_option("--input", ws.input, "Image file, or 'cameraman'")->capture_default_str();
  warmstart->add_option("--crop", ws.crop, "row,col,height,width ('' for none)");
  warmstart->add_option("--max-intensity", ws.peak)->capture_default_str();
  warmstart->add_option("--seed", ws.seed)->capture_default_str();
  add_psf_options(warmstart, ws.psf);
  warmstart->add_option("--tau", ws.tau)->capture_default_str();
  warmstart->add_option("--mu", ws.mu, "Default tau / 50");
  warmstart->add_option("--max-iters", ws.max_iters, "Outer iterations")->capture_default_str();
  warmstart->add_option("--inner-iters", ws.inner_iters, "Chambolle steps, one run pair each")
      ->capture_default_str();
  warmstart->add_option("--reference-iters", ws.reference_iters)->capture_default_str();
  warmstart->add_option("--fit-from", ws.fit_from, "First k of the power-law fit")
      ->capture_default_str();
  warmstart->add_option("--output", ws.output, "Output prefix")->required();
  add_config(warmstart);

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench", "Seeded reruns of a reference scenario");
  bench->add_option("--scenario", bn.scenario, "steidl, foi or dfs-table")->required();
  bench->add_option("--runs", bn.runs, "Number of seeds")->capture_default_str();
  bench->add_option("--seed", bn.seed, "First seed")->capture_default_str();
  bench->add_option("--max-intensity", bn.peak, "Override the scenario peak");
  bench->add_option("--tau", bn.tau, "Override tau for every method");
  bench->add_flag("--no-timing", bn.no_timing, "Omit elapsed-time columns");
  bench->add_option("--output", bn.output, "Prefix for summary and per-run CSVs");
  add_config(bench);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = splice_config(args, app);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) run_simulate(sim);
    if (restore->parsed()) run_restore(res);
    if (evaluate->parsed()) run_evaluate(ev);
    if (warmstart->parsed()) run_warmstart(ws);
    if (bench->parsed()) run_bench(bn);
  } catch (const DivergenceError& e) {
    std::cerr << "error: solver diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}
