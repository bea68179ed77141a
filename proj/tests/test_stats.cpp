#include "catch_amalgamated.hpp"

#include <atomic>
#include <cmath>
#include <random>

#include "hl/stats.hpp"

using namespace hl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// N x K complex samples whose real and imaginary parts are independent
// normals with variance var[m] * scale.
Eigen::MatrixXcd gaussian_samples(std::mt19937_64& gen, std::size_t N,
                                  const std::vector<double>& var, double scale = 1.0) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd out(Eigen::Index(N), Eigen::Index(var.size()));
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index m = 0; m < out.cols(); ++m) {
      const double sd = std::sqrt(var[std::size_t(m)] * scale);
      out(i, m) = Complex(sd * g(gen), sd * g(gen));
    }
  return out;
}

std::vector<double> theory_column(double alpha, std::size_t modes) {
  std::vector<double> v;
  for (std::size_t m = 0; m < modes; ++m) v.push_back(theory_variance(alpha, m));
  return v;
}

std::vector<SeedTrace> synthetic_traces(std::size_t count, double alpha,
                                        const std::vector<std::size_t>& ns, double factor) {
  std::vector<SeedTrace> out;
  for (std::size_t s = 0; s < count; ++s) {
    SeedTrace t;
    t.alpha = alpha;
    t.seed = s;
    for (std::size_t n : ns) {
      TracePoint p;
      p.n = n;
      p.bound = std::log(double(n)) / std::sqrt(double(n));
      p.sup_error = factor * (1.0 + 0.01 * double(s)) / std::sqrt(double(n));
      t.points.push_back(p);
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace

TEST_CASE("limiting variances", "[stats]") {
  const double expected[] = {2.0, 2.0 / 3, 0.4, 2.0 / 7, 2.0 / 9, 2.0 / 11};
  for (std::size_t m = 0; m < 6; ++m) CHECK_THAT(theory_variance(1.0, m), WithinRel(expected[m], 1e-15));
  CHECK_THAT(theory_variance(0.25, 0), WithinRel(32.0 / 7.0, 1e-15));
  for (double a : {0.25, 0.5, 0.9})
    CHECK_THAT(theory_variance(a, 0), WithinRel(theory_variance(2 - a, 0), 1e-14));
  CHECK_THROWS_AS(theory_variance(0.0, 0), std::domain_error);
  CHECK_THROWS_AS(theory_variance(2.0, 0), std::domain_error);
  const std::vector<double> grid{0.25, 0.5, 1, 1.5, 1.75};
  CHECK(theory_diverges_at_ends(grid));
  CHECK(theory_variance(0.01, 0) > 100);
  CHECK(theory_variance(1.99, 0) > 100);
}

TEST_CASE("variance z-scores are calibrated on Gaussian data", "[stats]") {
  std::mt19937_64 gen(101);
  // Columns span variances from about 0.1 (alpha = 1, m = 9) to 10 (alpha = 0.1, m = 0).
  for (double alpha : {0.1, 1.0}) {
    const auto var = theory_column(alpha, 10);
    double sum = 0, sum2 = 0, count = 0, outside = 0;
    for (int rep = 0; rep < 200; ++rep) {
      const auto rpt = variance_report(gaussian_samples(gen, 400, var), alpha);
      for (const auto& m : rpt.modes)
        for (double z : {m.z_re, m.z_im}) {
          sum += z;
          sum2 += z * z;
          count += 1;
          if (std::abs(z) > 3) outside += 1;
        }
    }
    const double mean = sum / count, sd = std::sqrt(sum2 / count - mean * mean);
    INFO("alpha " << alpha << ": mean z " << mean << ", sd " << sd << ", outside " << outside / count);
    CHECK(std::abs(mean) < 0.1);
    CHECK(sd > 0.9);
    CHECK(sd < 1.1);
    CHECK(outside / count < 0.01);
  }
}

TEST_CASE("inflated variance is detected", "[stats]") {
  std::mt19937_64 gen(7);
  const auto rpt = variance_report(gaussian_samples(gen, 400, theory_column(1.0, 6), 1.5), 1.0);
  CHECK_FALSE(rpt.within());
  const auto ok = variance_report(gaussian_samples(gen, 400, theory_column(1.0, 6)), 1.0);
  CHECK(ok.N == 400);
  CHECK_THAT(ok.modes[0].se, WithinRel(2.0 * std::sqrt(2.0 / 399.0), 1e-14));
  std::mt19937_64 small_gen(1);
  CHECK_THROWS_AS(variance_report(gaussian_samples(small_gen, 49, {1.0}), 1.0), std::invalid_argument);
}

TEST_CASE("covariance report", "[stats]") {
  std::mt19937_64 gen(11);
  const auto x = gaussian_samples(gen, 400, theory_column(1.0, 4));
  const auto cov = covariance_report(x);
  const auto var = variance_report(x, 1.0);
  REQUIRE(cov.covariance.rows() == 8);
  for (std::size_t m = 0; m < 4; ++m) {
    CHECK_THAT(cov.covariance(Eigen::Index(m), Eigen::Index(m)), WithinRel(var.modes[m].var_re, 1e-12));
    CHECK_THAT(cov.covariance(Eigen::Index(m + 4), Eigen::Index(m + 4)), WithinRel(var.modes[m].var_im, 1e-12));
  }
  CHECK_THAT(cov.band, WithinRel(0.15, 1e-15));
  CHECK(cov.within());
  CHECK(cov.split_half_max_diff <= cov.split_half_band);
  for (Eigen::Index i = 0; i < 8; ++i) CHECK_THAT(cov.correlation(i, i), WithinAbs(1, 1e-12));

  auto y = x;
  y.col(1) = y.col(1) + Complex(0.5, 0) * y.col(0).real().cast<Complex>();
  CHECK_FALSE(covariance_report(y).within());
}

TEST_CASE("normality checks are calibrated", "[stats]") {
  std::mt19937_64 gen(5);
  std::size_t flagged = 0, total = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto r = normality_report(gaussian_samples(gen, 400, theory_column(1.0, 6)));
    flagged += r.flagged();
    total += r.entries.size();
    for (const auto& e : r.entries) CHECK(e.ks < 2 * r.ks_band);
  }
  INFO("flagged " << flagged << " of " << total);
  CHECK(double(flagged) / double(total) < 0.02);

  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::MatrixXcd flat(400, 1);
  for (Eigen::Index i = 0; i < 400; ++i) flat(i, 0) = Complex(u(gen), u(gen));
  const auto r = normality_report(flat);
  CHECK(r.flagged() == 2);
  CHECK_THAT(r.entries[0].excess_kurtosis, WithinAbs(-1.2, 0.3));
}

TEST_CASE("quadratic variation equals the exact finite-n variance", "[stats]") {
  for (double alpha : {0.5, 1.0, 1.5}) {
    const ClusterRealization real({alpha, 0.01, 1500}, ParticleFamily::Slit, 3);
    for (std::size_t m : {0u, 3u}) {
      const auto [re, im] = quadratic_variation(real, 1500, m);
      CHECK_THAT(re + im, WithinRel(2 * finite_n_mode_variance(real.schedule(), 1500, m), 1e-10));
    }
  }
}

TEST_CASE("Lindeberg envelope dominates the largest increment", "[stats]") {
  for (double alpha : {0.5, 1.0, 1.5}) {
    const ClusterRealization real({alpha, 0.02, 2000}, ParticleFamily::Slit, 8);
    for (std::size_t n : {100u, 2000u})
      for (std::size_t m : {0u, 2u}) {
        const double d = lindeberg_diagnostic(real, n, m);
        const double env = lindeberg_envelope(alpha, 0.02, n, m);
        INFO("alpha " << alpha << " n " << n << " m " << m);
        CHECK(d <= env * (1 + 1e-12));
        CHECK(d > 0);
      }
  }
  CHECK(lindeberg_envelope(1.0, 0.01, 1000000, 0) < lindeberg_envelope(1.0, 0.01, 1000, 0));
  CHECK_THROWS_AS(lindeberg_envelope(0.0, 0.01, 10, 0), std::invalid_argument);
}

TEST_CASE("rate fit preconditions and synthetic rates", "[stats]") {
  const std::vector<std::size_t> ns{250, 500, 1000, 2000};
  CHECK_THROWS_AS(rate_fit(synthetic_traces(19, 1.0, ns, 1.0)), std::invalid_argument);
  const std::vector<std::size_t> three{250, 500, 1000};
  CHECK_THROWS_AS(rate_fit(synthetic_traces(20, 1.0, three, 1.0)), std::invalid_argument);

  auto traces = synthetic_traces(25, 1.0, ns, 1.0);
  const auto zeros = synthetic_traces(3, 0.0, ns, 10.0);
  traces.insert(traces.end(), zeros.begin(), zeros.end());
  const auto rep = rate_fit(traces);
  CHECK(rep.seeds_used == 25);
  CHECK(rep.excluded_alpha0 == 3);
  CHECK_FALSE(rep.note.empty());
  CHECK(rep.fraction_within == 1.0);
  CHECK_THAT(rep.slope, WithinAbs(-0.5, 1e-10));
  CHECK(rep.medians_strictly_decreasing);
  CHECK(rep.checkpoints == ns);

  const auto slow = rate_fit(synthetic_traces(20, 1.0, ns, 10.0));
  CHECK(slow.fraction_within == 0.0);

  auto ragged = synthetic_traces(20, 1.0, ns, 1.0);
  ragged[4].points.pop_back();
  CHECK_THROWS_AS(rate_fit(ragged), std::invalid_argument);
}

TEST_CASE("parallel_for covers every index and rethrows", "[stats]") {
  std::vector<std::atomic<int>> hits(257);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  parallel_for(0, 2, [](std::size_t) { FAIL("called on empty range"); });
}

TEST_CASE("ensembles do not depend on the thread count", "[stats]") {
  EnsembleConfig cfg;
  cfg.params = {1.0, 0.01, 0};
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.grid = 64;
  cfg.m_max = 4;
  cfg.checkpoints = {200, 50, 200};
  cfg.jobs = 1;
  const auto a = run_ensemble(cfg);
  cfg.jobs = 3;
  const auto b = run_ensemble(cfg);
  REQUIRE(a.checkpoints == std::vector<std::size_t>{50, 200});
  CHECK(a.failures() == 0);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.dft_samples(i) == b.dft_samples(i));
    CHECK(a.mode_samples(i) == b.mode_samples(i));
  }
  CHECK(a.dft_samples(1).rows() == 5);
  CHECK(a.dft_samples(1).cols() == 5);
}

TEST_CASE("ensemble configuration is validated", "[stats]") {
  EnsembleConfig cfg;
  cfg.params = {1.0, 0.01, 0};
  cfg.seeds = {1, 2};
  cfg.checkpoints = {10};
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.grid = 32;
  CHECK_THROWS_AS(bad.validate(), GridTooSmallError);
  bad = cfg;
  bad.grid = 100;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.seeds = {1, 1};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.checkpoints = {};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.r = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  const std::vector<double> zero{0.0};
  CHECK_THROWS_AS(alpha_sweep(zero, cfg), std::invalid_argument);
}

TEST_CASE("reports serialise", "[stats]") {
  std::mt19937_64 gen(2);
  const auto x = gaussian_samples(gen, 120, theory_column(1.0, 3));
  const auto j = to_json(variance_report(x, 1.0));
  CHECK(j["modes"].size() == 3);
  CHECK(j.contains("note"));
  CHECK(to_json(covariance_report(x))["correlation"].size() == 6);
  CHECK(to_json(normality_report(x))["entries"].size() == 6);
  CHECK(format_table(variance_report(x, 1.0)).find("theory") != std::string::npos);
}
