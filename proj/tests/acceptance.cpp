// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--only N]...
// Needs PIDAL_DATA_DIR (Cameraman) and the CLI and unit-test binaries, whose
// paths are compiled in.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "pidal/io.hpp"
#include "scenarios.hpp"

namespace fs = std::filesystem;
using namespace pidal;

namespace {

// Criterion 1: 84x84 Gaussian-blur scenario, mean over seeds.
constexpr double kSteidlTargetTv = 4.8;
constexpr double kSteidlTargetFa = 5.3;
constexpr double kSteidlTargetFs = 4.3;
constexpr double kSteidlTolerance = 0.5;
constexpr std::size_t kSteidlIterations = 430;

// Criterion 2: warm-start power-law exponent.
constexpr double kMinOmega = 1.1;
constexpr std::size_t kStudyOuter = 200;
constexpr int kStudyReference = 4000;
constexpr std::size_t kStudyFitFrom = 20;

// Criterion 3: published MAE rows, within 10 %; iterations within a factor 2.
constexpr double kMaeRelTolerance = 0.10;
constexpr double kIterationFactor = 2.0;
struct TableRow {
  double peak;
  double mae_tv;
  double iters_tv;
  double mae_fa;
  double iters_fa;
};
constexpr std::array<TableRow, 2> kTable{{{255.0, 8.99, 32.0, 8.45, 37.0},
                                          {100.0, 3.99, 33.0, 3.63, 36.0}}};

// Criterion 4: full-image uniform-blur scenario.
constexpr double kFoiCompetitor = 6.61;
constexpr double kFoiTarget = 7.0;
constexpr double kFoiTolerance = 0.5;
constexpr std::size_t kFoiIterations = 160;
constexpr std::size_t kFoiLongRun = 400;
constexpr double kFoiPlateau = 0.2;  // dB still to gain after 160 iterations

// Criterion 5.
constexpr double kUnitBudgetSeconds = 30.0;

constexpr std::size_t kSeeds = 10;
constexpr std::uint64_t kBaseSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

Outcome criterion_steidl(const Image& cam) {
  const auto scenario = scenarios::steidl(cam);
  const auto agg = scenarios::bench(scenario, kBaseSeed, kSeeds);
  const double targets[] = {kSteidlTargetTv, kSteidlTargetFa, kSteidlTargetFs};
  Outcome out{true, ""};
  for (std::size_t j = 0; j < agg.size(); ++j) {
    const bool ok = within(agg[j].mean_isnr, targets[j], kSteidlTolerance) &&
                    agg[j].mean_iterations <= kSteidlIterations;
    out.pass = out.pass && ok;
    out.detail += std::string(j ? ", " : "") + to_string(agg[j].method) + " " +
                  fmt(agg[j].mean_isnr) + " dB (target " + fmt(targets[j], 1) + " +/- " +
                  fmt(kSteidlTolerance, 1) + ")";
  }
  out.detail += "; mean of " + std::to_string(kSeeds) + " seeds, " +
                std::to_string(kSteidlIterations) + " iterations";
  return out;
}

Outcome criterion_warmstart(const Image& cam) {
  const Image x = crop(cam, scenarios::kCropRow, scenarios::kCropCol, scenarios::kCropSize,
                       scenarios::kCropSize);
  const auto blur = CirculantOperator::from_psf(make_gaussian_psf(9, 1.0), x.height(), x.width());
  const auto obs = scenarios::simulate(x, 3000.0, blur, kBaseSeed);
  const double tau = 0.008;
  const double mu = tau / 50.0;
  Outcome out{true, ""};
  for (int t : {5, 20}) {
    const auto warm =
        scenarios::warmstart_run(obs.counts, blur, tau, mu, t, true, kStudyOuter, kStudyReference);
    const auto cold =
        scenarios::warmstart_run(obs.counts, blur, tau, mu, t, false, kStudyOuter, kStudyReference);
    const auto fit = scenarios::fit_power_law(warm.rho, kStudyFitFrom, kStudyOuter);
    const bool cold_monotone = scenarios::nonincreasing(cold.rho, kStudyFitFrom, kStudyOuter);
    const bool ok = fit.exponent >= kMinOmega && !cold_monotone;
    out.pass = out.pass && ok;
    out.detail += std::string(t == 5 ? "" : ", ") + "t=" + std::to_string(t) + " omega " +
                  fmt(fit.exponent) + " (>= " + fmt(kMinOmega, 1) + "), cold tail " +
                  (cold_monotone ? "monotone" : "not monotone");
  }
  return out;
}

Outcome criterion_table(const Image& cam) {
  Outcome out{true, ""};
  for (const auto& row : kTable) {
    const auto agg = scenarios::bench(scenarios::dfs_table(cam, row.peak), kBaseSeed, kSeeds);
    const double mae_target[] = {row.mae_tv, row.mae_fa};
    const double iter_target[] = {row.iters_tv, row.iters_fa};
    for (std::size_t j = 0; j < agg.size(); ++j) {
      const bool mae_ok =
          std::abs(agg[j].mean_mae - mae_target[j]) <= kMaeRelTolerance * mae_target[j];
      const bool it_ok = agg[j].mean_iterations <= kIterationFactor * iter_target[j] &&
                         agg[j].mean_iterations >= iter_target[j] / kIterationFactor;
      out.pass = out.pass && mae_ok && it_ok;
      out.detail += std::string(out.detail.empty() ? "" : ", ") + "M=" + fmt(row.peak, 0) + " " +
                    to_string(agg[j].method) + " MAE " + fmt(agg[j].mean_mae) + " (" +
                    fmt(mae_target[j], 2) + ") iters " + fmt(agg[j].mean_iterations, 1) + " (" +
                    fmt(iter_target[j], 0) + ")";
    }
  }
  return out;
}

Outcome criterion_foi(const Image& cam) {
  auto scenario = scenarios::foi(cam);
  scenario.methods.resize(1);  // PIDAL-TV
  const auto agg = scenarios::bench(scenario, kBaseSeed, kSeeds);
  const double isnr = agg[0].mean_isnr;

  scenario.methods[0].config.max_iters = kFoiLongRun;
  const auto long_run = scenarios::run_seed(scenario, kBaseSeed)[0];
  const double at_160 = long_run.isnr_trace[kFoiIterations - 1];
  const double at_end = long_run.isnr_trace.back();

  const bool ok = isnr >= kFoiCompetitor && within(isnr, kFoiTarget, kFoiTolerance) &&
                  at_end - at_160 <= kFoiPlateau;
  return {ok, "tv " + fmt(isnr) + " dB after " + std::to_string(kFoiIterations) +
                  " iterations (>= " + fmt(kFoiCompetitor, 2) + ", target " + fmt(kFoiTarget, 1) +
                  " +/- " + fmt(kFoiTolerance, 1) + "); seed " + std::to_string(kBaseSeed) +
                  " gains " + fmt(at_end - at_160) + " dB from " + std::to_string(kFoiIterations) +
                  " to " + std::to_string(kFoiLongRun) + " (<= " + fmt(kFoiPlateau, 1) + ")"};
}

struct Command {
  int status = -1;
  std::string output;
};

Command run(const std::string& cmd) {
  Command c;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return c;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) c.output += buf;
  const int raw = pclose(pipe);
  c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return c;
}

Outcome criterion_oracles() {
  const auto start = std::chrono::steady_clock::now();
  const Command c = run(std::string("\"") + PIDAL_UNIT_TESTS_PATH + "\" --minimal");
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = c.status == 0 && seconds < kUnitBudgetSeconds;
  return {ok, std::string("unit suite ") + (c.status == 0 ? "passed" : "FAILED") + " in " +
                  fmt(seconds, 1) + " s (budget " + fmt(kUnitBudgetSeconds, 0) + " s)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion_determinism() {
  const fs::path root =
      fs::temp_directory_path() / ("pidal_acceptance_" + std::to_string(::getpid()));
  const std::string cli = std::string("\"") + PIDAL_CLI_PATH + "\" ";
  auto commands = [&](const fs::path& dir) {
    const std::string d = dir.string() + "/";
    return std::vector<std::string>{
        "simulate --input cameraman --max-intensity 3000 --seed 7 --output " + d + "sim",
        "restore --input " + d + "sim_observed.pgm --truth " + d +
            "sim_truth.csv --method tv --tau 0.008 --mu 0.00016 --max-iters 40 --tol 0 "
            "--no-timing --output " + d + "tv",
        "restore --input " + d + "sim_observed.csv --truth " + d +
            "sim_truth.csv --method fa --tau 0.004 --max-intensity 3000 --no-timing --output " +
            d + "fa",
        "restore --input " + d + "sim_observed.pgm --method fs --tau 0.004 --mu 0.00008 "
            "--max-iters 40 --no-timing --output " + d + "fs",
        "evaluate --truth " + d + "sim_truth.csv --input " + d + "tv_restored.csv --observed " +
            d + "sim_observed.csv",
        "bench --scenario steidl --runs 2 --seed 3 --no-timing --output " + d + "bench",
        "warmstart-study --max-iters 30 --reference-iters 300 --fit-from 5 --output " + d + "ws",
    };
  };

  std::vector<std::string> stdout_runs[2];
  int files = 0;
  bool ok = true;
  std::string detail;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = root / (rep == 0 ? "a" : "b");
    fs::create_directories(dir);
    for (const auto& cmd : commands(dir)) {
      // Paths differ between the two runs; strip them before comparing.
      Command c = run(cli + cmd);
      if (c.status != 0) {
        ok = false;
        detail = "command failed (" + std::to_string(c.status) + "): " + cmd + ": " + c.output;
      }
      stdout_runs[rep].push_back(c.output);
    }
  }
  if (ok) {
    for (const auto& entry : fs::directory_iterator(root / "a")) {
      const fs::path other = root / "b" / entry.path().filename();
      ++files;
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
        ok = false;
        detail += "differs: " + entry.path().filename().string() + "; ";
      }
    }
    for (std::size_t i = 0; i < stdout_runs[0].size(); ++i) {
      if (stdout_runs[0][i] != stdout_runs[1][i]) {
        ok = false;
        detail += "stdout of command " + std::to_string(i + 1) + " differs; ";
      }
    }
  }
  fs::remove_all(root);
  if (ok) {
    detail = std::to_string(files) + " output files and " +
             std::to_string(stdout_runs[0].size()) + " stdout streams byte-identical across reruns";
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--only" && i + 1 < argc) only.insert(std::atoi(argv[++i]));
  }
  auto selected = [&](int n) { return only.empty() || only.count(n) > 0; };

  Image cam;
  try {
    cam = scenarios::load_named_image("cameraman");
  } catch (const std::exception& e) {
    std::cerr << "cannot load the Cameraman image: " << e.what() << '\n';
  }
  const bool have_image = !cam.empty();

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
    bool needs_image;
  };
  const std::vector<Criterion> criteria{
      {1, "Gaussian-blur crop reproduction", [&] { return criterion_steidl(cam); }, true},
      {2, "warm-start study", [&] { return criterion_warmstart(cam); }, true},
      {3, "7x7 uniform blur MAE table", [&] { return criterion_table(cam); }, true},
      {4, "full-image 9x9 uniform blur check", [&] { return criterion_foi(cam); }, true},
      {5, "oracle/property suite", criterion_oracles, false},
      {6, "CLI determinism", criterion_determinism, true},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    if (c.needs_image && !have_image) {
      o = {false, "Cameraman image unavailable (set PIDAL_DATA_DIR)"};
    } else {
      try {
        o = c.check();
      } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
      }
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << c.id << " (" << c.name
              << "): " << o.detail << " [" << fmt(seconds, 1) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
