#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <sstream>
#include <algorithm>

#include "helpers.hpp"
#include "pidal/pidal.hpp"

using namespace pidal;

namespace {

// 8x8 piecewise-smooth scene, blurred and sampled with peak ~40.
struct Fixture {
  Image truth;
  Image counts;
  CirculantOperator blur;
  HaarFrame frame;

  explicit Fixture(bool all_positive = true, std::uint64_t seed = 3)
      : blur(CirculantOperator::from_psf(make_gaussian_psf(3, 0.6), 8, 8)), frame(8, 8, 2) {
    truth = Image(8, 8);
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t c = 0; c < 8; ++c) truth(r, c) = (c < 4 ? 10.0 : 40.0) + 2.0 * r;
    }
    counts = poisson_sample(blur.apply(truth), seed);
    if (all_positive) {
      for (double& v : counts.pixels()) v = std::max(v, 1.0);
    }
  }
};

PidalConfig config(double tau, std::size_t iters) {
  PidalConfig cfg;
  cfg.tau = tau;
  cfg.mu = 0.05;
  cfg.max_iters = iters;
  cfg.tol = 0.0;
  cfg.levels = 2;
  return cfg;
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST_CASE("parameter rules") {
  CHECK(default_mu(0.008, 3000.0) == doctest::Approx(1.6e-4).epsilon(1e-12));
  CHECK(default_mu(255.0 / 60.0, 255.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(default_mu(0.02, 100.0) == doctest::Approx(2.0 * default_mu(0.01, 100.0)).epsilon(1e-15));
  CHECK_THROWS_AS(default_mu(0.0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(default_mu(1.0, 0.0), std::invalid_argument);
  CHECK(default_tol(5.0) == 0.005);
  CHECK(default_tol(3.0) == 0.005);
  CHECK(default_tol(100.0) == 0.001);
  CHECK(default_tol(255.0) == 0.001);

  CHECK(parse_regularizer("tv") == Regularizer::tv);
  CHECK(parse_regularizer("fa") == Regularizer::fa);
  CHECK(parse_regularizer("fs") == Regularizer::fs);
  CHECK_THROWS_AS(parse_regularizer("l2"), std::invalid_argument);
  CHECK(std::string(to_string(Regularizer::fs)) == "fs");
}

TEST_CASE("mu falls back to the rule of thumb") {
  Fixture f;
  PidalConfig cfg;
  cfg.tau = 0.01;
  CHECK(assemble_tv(f.counts, f.blur, cfg).mu == doctest::Approx(default_mu(0.01, f.counts.max())));
  cfg.peak = 40.0;
  CHECK(assemble_tv(f.counts, f.blur, cfg).mu == doctest::Approx(default_mu(0.01, 40.0)));
  cfg.mu = 0.3;
  CHECK(assemble_fa(f.counts, f.blur, f.frame, cfg).mu == 0.3);
}

TEST_CASE("assembly: structure and initial state") {
  Fixture f;
  const auto cfg = config(0.05, 10);
  const Problem tv = assemble_tv(f.counts, f.blur, cfg);
  const Problem fa = assemble_fa(f.counts, f.blur, f.frame, cfg);
  const Problem fs = assemble_fs(f.counts, f.blur, f.frame, cfg);
  for (const Problem* p : {&tv, &fa, &fs}) {
    CHECK(p->terms.size() == 3);
    CHECK(has_identity_block(p->terms));
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(p->init.u[j].size() == p->terms[j].block_size);
      for (double v : p->init.d[j]) CHECK(v == 0.0);
    }
  }
  CHECK(tv.terms[1].is_identity);
  CHECK(tv.terms[2].is_identity);
  CHECK(fa.terms[2].is_identity);
  CHECK(fs.terms[1].is_identity);
  CHECK_FALSE(fs.terms[2].is_identity);

  CHECK(tv.init.u[1] == f.counts.data());
  CHECK(fa.init.u[1] == f.frame.analysis(f.counts));
  const Image kty = f.blur.adjoint(f.counts);
  CHECK(fs.init.u[1] == f.frame.analysis(kty));
  CHECK(fs.init.u[2] == kty.data());
  CHECK(fs.dimension == f.frame.redundancy());

  std::vector<TermSpec> no_identity = fs.terms;
  no_identity.erase(no_identity.begin() + 1);
  CHECK_FALSE(has_identity_block(no_identity));
}

TEST_CASE("input validation") {
  Fixture f;
  auto cfg = config(0.05, 10);
  Image frac = f.counts;
  frac[0] = 0.5;
  CHECK_THROWS_AS(assemble_tv(frac, f.blur, cfg), std::invalid_argument);
  CHECK_THROWS_AS(assemble_tv(Image(4, 4, 1.0), f.blur, cfg), std::invalid_argument);
  CHECK_THROWS_AS(assemble_fa(f.counts, f.blur, HaarFrame(16, 16, 1), cfg), std::invalid_argument);
  cfg.tau = 0.0;
  CHECK_THROWS_AS(assemble_fa(f.counts, f.blur, f.frame, cfg), std::invalid_argument);
  cfg.tau = 0.1;
  cfg.mu = -1.0;
  CHECK_THROWS_AS(assemble_fs(f.counts, f.blur, f.frame, cfg), std::invalid_argument);
  cfg.mu.reset();
  CHECK_THROWS_AS(assemble_tv(Image(8, 8, 0.0), f.blur, cfg), std::invalid_argument);
  Problem stripped = assemble_tv(f.counts, f.blur, config(0.1, 2));
  for (auto& t : stripped.terms) t.is_identity = false;
  CHECK_THROWS_AS(run_problem(stripped, f.counts, nullptr, config(0.1, 2)), std::invalid_argument);
  const Image wrong(4, 4, 1.0);
  CHECK_THROWS_AS(pidal_tv(f.counts, f.blur, &wrong, config(0.1, 2)), std::invalid_argument);
}

TEST_CASE("objectives") {
  Fixture f;
  Image neg = f.truth;
  neg[3] = -1e-3;
  CHECK(objective_tv(neg, f.counts, f.blur, 0.1).is_infinite());
  CHECK(objective_fa(neg, f.counts, f.blur, f.frame, 0.1).is_infinite());

  const auto id = CirculantOperator::identity(8, 8);
  CHECK(objective_tv(f.counts, f.counts, id, 0.0) == neg_log_likelihood(f.counts, f.counts));
  CHECK(objective_tv(f.truth, f.counts, f.blur, 0.2).value() ==
        doctest::Approx(neg_log_likelihood(f.blur.apply(f.truth), f.counts).value() +
                        0.2 * tv_value(f.truth)));

  const auto px = f.frame.analysis(f.truth);
  double l1 = 0.0, l1_detail = 0.0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    l1 += std::abs(px[i]);
    if (i < f.frame.approximation_offset()) l1_detail += std::abs(px[i]);
  }
  const double nll = neg_log_likelihood(f.blur.apply(f.truth), f.counts).value();
  CHECK(objective_fa(f.truth, f.counts, f.blur, f.frame, 0.3).value() ==
        doctest::Approx(nll + 0.3 * l1));
  CHECK(objective_fa(f.truth, f.counts, f.blur, f.frame, 0.3, true).value() ==
        doctest::Approx(nll + 0.3 * l1_detail));
  CHECK(objective_fs(px, f.counts, f.blur, f.frame, 0.3).value() ==
        doctest::Approx(nll + 0.3 * l1));
  auto bad = px;
  for (double& v : bad) v = -std::abs(v) - 1.0;
  CHECK(objective_fs(bad, f.counts, f.blur, f.frame, 0.3).is_infinite());
}

TEST_CASE("zero counts with identity blur drive the estimate to zero") {
  const Image zeros(8, 8, 0.0);
  const auto id = CirculantOperator::identity(8, 8);
  PidalConfig cfg = config(1e-4, 300);
  cfg.mu = 1.0;
  const auto rep = pidal_tv(zeros, id, nullptr, cfg);
  CHECK(rep.estimate.max() <= 1e-6);
}

TEST_CASE("one iteration with tol = 0 records exactly one row") {
  Fixture f;
  auto cfg = config(0.05, 1);
  for (auto method : {Regularizer::tv, Regularizer::fa, Regularizer::fs}) {
    RunReport rep;
    if (method == Regularizer::tv) rep = pidal_tv(f.counts, f.blur, &f.truth, cfg);
    if (method == Regularizer::fa) rep = pidal_fa(f.counts, f.blur, f.frame, &f.truth, cfg);
    if (method == Regularizer::fs) rep = pidal_fs(f.counts, f.blur, f.frame, &f.truth, cfg);
    CHECK(rep.rows.size() == 1);
    CHECK(rep.iterations == 1);
    CHECK(rep.estimate.min() >= 0.0);
    CHECK(rep.infeasibility >= 0.0);
    CHECK(std::isfinite(rep.rows[0].isnr));
  }
}

TEST_CASE("report and trace CSV layout") {
  Fixture f;
  const auto rep = pidal_tv(f.counts, f.blur, nullptr, config(0.05, 3));
  std::ostringstream with, without;
  write_report_csv(with, rep, true);
  write_report_csv(without, rep, false);
  CHECK(with.str().rfind("iter,objective,isnr,mae,primal_residual,rel_change,elapsed_seconds\n", 0) == 0);
  CHECK(without.str().rfind("iter,objective,isnr,mae,primal_residual,rel_change\n1,", 0) == 0);
  const std::string body = without.str();
  CHECK(std::count(body.begin(), body.end(), '\n') == 4);
  CHECK(body.find("nan") != std::string::npos);

  std::vector<TraceRow> trace(2);
  trace[1].iter = 2;
  trace[1].rel_change = 0.5;
  std::ostringstream t;
  write_trace_csv(t, trace, false);
  CHECK(t.str() == "iter,primal_residual,dual_residual,rel_change\n0,0,0,inf\n2,0,0,0.5\n");
}

TEST_CASE("TV probe sees every outer iteration") {
  Fixture f;
  std::vector<std::size_t> seen;
  pidal_tv(f.counts, f.blur, nullptr, config(0.05, 7),
           [&](std::size_t k, const Image& nu, const Image& u) {
             seen.push_back(k);
             CHECK(nu.size() == 64);
             CHECK(u.size() == 64);
           });
  CHECK(seen == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("objective decreases from start to end of a PIDAL-TV run") {
  Fixture f;
  const auto rep = pidal_tv(f.counts, f.blur, &f.truth, config(0.05, 300));
  CHECK(rep.rows.back().objective <= rep.rows.front().objective);
}

TEST_CASE("converged self-consistency: 200 versus 20000 iterations") {
  Fixture f;
  const double tau = 0.05;
  SUBCASE("tv") {
    const double a = pidal_tv(f.counts, f.blur, nullptr, config(tau, 200)).rows.back().objective;
    const double b = pidal_tv(f.counts, f.blur, nullptr, config(tau, 20000)).rows.back().objective;
    CHECK(relative_gap(a, b) <= 1e-6);
  }
  SUBCASE("fa") {
    const double a = pidal_fa(f.counts, f.blur, f.frame, nullptr, config(tau, 200)).rows.back().objective;
    const double b = pidal_fa(f.counts, f.blur, f.frame, nullptr, config(tau, 20000)).rows.back().objective;
    CHECK(relative_gap(a, b) <= 1e-6);
  }
  SUBCASE("fs") {
    // The synthesis formulation contracts about ten times more slowly.
    auto short_run = config(tau, 2000);
    auto long_run = config(tau, 20000);
    short_run.mu = long_run.mu = 0.002;
    const double a = pidal_fs(f.counts, f.blur, f.frame, nullptr, short_run).rows.back().objective;
    const double b = pidal_fs(f.counts, f.blur, f.frame, nullptr, long_run).rows.back().objective;
    CHECK(relative_gap(a, b) <= 1e-6);
  }
}

TEST_CASE("uniqueness probe: PIDAL-FA from two initializations") {
  Fixture f(true);
  REQUIRE(f.counts.min() > 0.0);
  REQUIRE(injectivity_margin(f.blur) > 0.0);
  const auto cfg = config(0.05, 3000);
  const Problem base = assemble_fa(f.counts, f.blur, f.frame, cfg);
  Problem other = assemble_fa(f.counts, f.blur, f.frame, cfg);
  std::mt19937_64 rng(9);
  for (auto& block : other.init.u) {
    for (double& v : block) v = 100.0 * std::abs(testing::random_vector(1, rng)[0]);
  }
  for (auto& block : other.init.d) block = testing::random_vector(block.size(), rng);
  const double a = run_problem(base, f.counts, nullptr, cfg).rows.back().objective;
  const double b = run_problem(other, f.counts, nullptr, cfg).rows.back().objective;
  CHECK(relative_gap(a, b) <= 1e-6);
}

TEST_CASE("local-minimality probe") {
  Fixture f;
  const auto cfg = config(0.05, 20000);
  std::mt19937_64 rng(10);
  auto probe = [&](const Image& x, auto objective) {
    const double base = objective(x);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      auto dir = testing::random_vector(x.size(), rng);
      // Keep the step feasible at active pixels.
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 1e-3) dir[i] = std::abs(dir[i]);
      }
      const double scale = 1e-3 / testing::norm(dir);
      Image y = x;
      for (std::size_t i = 0; i < x.size(); ++i) y[i] += scale * dir[i];
      worst = std::max(worst, base - objective(y));
    }
    return worst;
  };
  SUBCASE("tv") {
    const Image x = pidal_tv(f.counts, f.blur, nullptr, cfg).estimate;
    CHECK(probe(x, [&](const Image& y) { return objective_tv(y, f.counts, f.blur, 0.05).value(); }) <= 1e-6);
  }
  SUBCASE("fa") {
    const Image x = pidal_fa(f.counts, f.blur, f.frame, nullptr, cfg).estimate;
    CHECK(probe(x, [&](const Image& y) {
            return objective_fa(y, f.counts, f.blur, f.frame, 0.05).value();
          }) <= 1e-6);
  }
}

TEST_CASE("heavy l1 penalty flattens a PIDAL-FA estimate") {
  const Image truth(8, 8, 30.0);
  const Image counts = poisson_sample(truth, 4);
  const auto id = CirculantOperator::identity(8, 8);
  const HaarFrame frame(8, 8, 2);
  auto cfg = config(50.0, 2000);
  cfg.mu = 0.5;
  cfg.exclude_approximation = true;
  const auto rep = pidal_fa(counts, id, frame, nullptr, cfg);
  const auto c = frame.analysis(rep.estimate);
  for (std::size_t i = 0; i < frame.approximation_offset(); ++i) CHECK(std::abs(c[i]) <= 1e-6);
  CHECK(rep.estimate.max() - rep.estimate.min() <= 1e-5);
  // The unpenalized approximation band keeps the mean of the data.
  CHECK(rep.estimate.sum() == doctest::Approx(counts.sum()).epsilon(1e-6));

  cfg.exclude_approximation = false;
  const auto shrunk = pidal_fa(counts, id, frame, nullptr, cfg);
  CHECK(shrunk.estimate.sum() < counts.sum() - 1.0);
}

TEST_CASE("PIDAL-FS with identity blur recovers a frame-sparse scene") {
  const HaarFrame frame(16, 16, 2);
  std::vector<double> s(frame.redundancy(), 0.0);
  for (std::size_t i = frame.approximation_offset(); i < s.size(); ++i) s[i] = 2000.0;
  s[5] = 400.0;
  s[300] = -300.0;
  s[600] = 250.0;
  const Image truth = frame.synthesis(s);
  REQUIRE(truth.min() > 0.0);
  const Image counts = poisson_sample(truth, 12);
  const auto id = CirculantOperator::identity(16, 16);
  auto cfg = config(1e-4, 500);
  cfg.mu = 1e-3;
  const auto rep = pidal_fs(counts, id, frame, &truth, cfg);
  double err = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) err += std::pow(rep.estimate[i] - truth[i], 2);
  const double rms = std::sqrt(err / truth.size());
  // Poisson noise standard deviation is about sqrt(2000) = 45.
  CHECK(rms <= 2.0 * std::sqrt(truth.sum() / truth.size()));
}

TEST_CASE("existence and uniqueness conditions") {
  const Image positive(6, 6, 3.0);
  Image with_zero = positive;
  with_zero[7] = 0.0;
  const auto id = CirculantOperator::identity(6, 6);
  auto rep = check_existence_conditions(id, positive, Regularizer::tv);
  CHECK(rep.k_injective);
  CHECK(rep.counts_all_positive);
  CHECK(rep.constants_visible);
  CHECK(rep.k_nonneg_with_positive);
  CHECK(rep.existence == Verdict::yes);
  CHECK(rep.uniqueness == Verdict::yes);
  CHECK(rep.injectivity_margin == doctest::Approx(1.0));

  CHECK(check_existence_conditions(id, with_zero, Regularizer::tv).uniqueness == Verdict::unknown);

  const Psf box2 = make_custom_psf(Image(3, 3, std::vector<double>{0, 0, 0, 0, 1, 1, 0, 1, 1}));
  const auto singular = CirculantOperator::from_psf(box2, 6, 6);
  rep = check_existence_conditions(singular, positive, Regularizer::tv);
  CHECK_FALSE(rep.k_injective);
  CHECK(rep.existence == Verdict::yes);
  CHECK(rep.uniqueness == Verdict::unknown);

  for (const auto& op : {singular, CirculantOperator::from_psf(make_uniform_psf(5), 6, 6)}) {
    CHECK(check_existence_conditions(op, with_zero, Regularizer::fa).existence == Verdict::yes);
    const auto fs = check_existence_conditions(op, positive, Regularizer::fs);
    CHECK(fs.existence == Verdict::yes);
    CHECK(fs.uniqueness == Verdict::unknown);
  }
  CHECK(std::string(to_string(Verdict::unknown)) == "unknown");
}
