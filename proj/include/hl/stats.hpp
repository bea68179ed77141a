#pragma once

// Ensemble orchestration and the statistical checks run on its output.
//
// Sample matrices are N x (m_max + 1) complex: row = seed, column = mode m,
// entry = A_m + i B_m.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "hl/cluster.hpp"
#include "hl/spectral.hpp"

namespace hl {

/// 2 / (alpha (2m + 2 - alpha)). Throws std::domain_error unless 0 < alpha < 2.
double theory_variance(double alpha, std::size_t m);

/// Runs fn(0..count-1) on up to `jobs` threads (0 = hardware concurrency).
/// Exceptions escaping fn are rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

struct EnsembleConfig {
  ScheduleParams params;  // n_max is ignored; the largest checkpoint is used
  ParticleFamily family = ParticleFamily::Slit;
  std::vector<std::uint64_t> seeds;
  double r = 1.25;
  std::size_t grid = 512;
  std::size_t m_max = 16;
  std::vector<std::size_t> checkpoints;
  unsigned jobs = 0;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
  /// Checkpoints sorted and deduplicated.
  std::vector<std::size_t> sorted_checkpoints() const;
};

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<LaurentSpectrum> spectra;  // per checkpoint
  std::vector<ModeSums> modes;           // per checkpoint
};

struct EnsembleResult {
  EnsembleConfig config;
  std::vector<std::size_t> checkpoints;
  std::vector<SeedResult> seeds;  // in config.seeds order

  std::size_t failures() const;
  /// Rows for successful seeds only, in seed-list order.
  Eigen::MatrixXcd dft_samples(std::size_t checkpoint_index) const;
  Eigen::MatrixXcd mode_samples(std::size_t checkpoint_index) const;
};

/// Per seed: simulate to the largest checkpoint, then extract the spectrum of
/// sqrt(n) M_n and the mode sums at every checkpoint. Results do not depend
/// on the number of jobs. A seed that throws is recorded with ok = false.
EnsembleResult run_ensemble(const EnsembleConfig& config);

struct ModeVariance {
  std::size_t m = 0;
  double mean_re = 0, mean_im = 0;
  double var_re = 0, var_im = 0;
  double theory = 0;
  double se = 0;  // theory * sqrt(2/(N-1)), the null standard error
  double empirical_se_re = 0, empirical_se_im = 0;
  double z_re = 0, z_im = 0;
  double z_re_vs_im = 0;  // (var_re - var_im) / (sqrt 2 * se)
};

struct VarianceReport {
  double alpha = 0;
  std::size_t N = 0;
  std::vector<ModeVariance> modes;

  bool within(double z_limit = 3.0) const;
};

/// Requires N >= 50 rows.
VarianceReport variance_report(const Eigen::MatrixXcd& samples, double alpha);

struct CovarianceReport {
  std::size_t N = 0;
  std::size_t modes = 0;
  Eigen::MatrixXd covariance;   // order A_0..A_m, B_0..B_m
  Eigen::MatrixXd correlation;
  double band = 0;              // 3 / sqrt(N)
  double max_abs_offdiag = 0;
  double split_half_max_diff = 0;  // correlations of two shuffled halves
  double split_half_band = 0;      // 2 * 3 / sqrt(N/2)

  bool within() const { return max_abs_offdiag <= band; }
};

/// Requires N >= 50 rows. The split-half shuffle uses a fixed seed.
CovarianceReport covariance_report(const Eigen::MatrixXcd& samples);

struct NormalityEntry {
  std::size_t m = 0;
  bool imaginary = false;
  double skewness = 0;
  double excess_kurtosis = 0;
  double ks = 0;  // sup |F_emp - Phi| against the fitted normal
};

struct NormalityReport {
  std::size_t N = 0;
  double skew_band = 0;  // 3 sqrt(6/N)
  double kurt_band = 0;  // 3 sqrt(24/N)
  double ks_band = 0;    // 1.031 / sqrt(N), 1% level with fitted parameters
  std::vector<NormalityEntry> entries;

  /// Entries with skewness or kurtosis outside the bands.
  std::size_t flagged() const;
};

/// Requires N >= 100 rows.
NormalityReport normality_report(const Eigen::MatrixXcd& samples);

/// max_k |a_{k,n}(m)|.
double lindeberg_diagnostic(const ClusterRealization& real, std::size_t n, std::size_t m);
/// 2c(1+alpha c) sqrt(n) / (1 + alpha c n)^{min(1, (m+1)/alpha)}: bounds max_k |a_{k,n}(m)|.
double lindeberg_envelope(double alpha, double c, std::size_t n, std::size_t m);

/// Per-seed sum_k (Re a_{k,n}(m))^2 and sum_k (Im a_{k,n}(m))^2.
std::pair<double, double> quadratic_variation(const ClusterRealization& real, std::size_t n,
                                              std::size_t m);

struct SeedTrace {
  double alpha = 0;
  std::uint64_t seed = 0;
  std::vector<TracePoint> points;
};

struct RateFitReport {
  std::size_t seeds_used = 0;
  std::size_t points_used = 0;
  std::size_t excluded_alpha0 = 0;
  double fraction_within = 0;  // sup_error <= log n / sqrt n
  double slope = 0;            // least squares of log sup against log n
  std::vector<std::size_t> checkpoints;
  std::vector<double> medians;
  bool medians_strictly_decreasing = false;
  std::string note;
};

/// alpha = 0 traces are dropped (noted in the report). Requires at least 20
/// remaining traces sharing the same >= 4 checkpoints.
RateFitReport rate_fit(std::span<const SeedTrace> traces);

/// One trace per seed, computed in parallel.
std::vector<SeedTrace> run_traces(const ScheduleParams& params, ParticleFamily family,
                                  std::span<const std::uint64_t> seeds, double r, std::size_t M,
                                  std::span<const std::size_t> checkpoints, unsigned jobs = 0);

struct SweepEntry {
  double alpha = 0;
  std::size_t N = 0;
  double var_a0 = 0, var_b0 = 0;
  double theory = 0;
  double finite_n_target = 0;
  double se = 0;  // null standard error
  double z_a0 = 0, z_b0 = 0;
  double ci_low = 0, ci_high = 0;  // var_a0 -+ 3 empirical SE
};

struct AlphaSweepReport {
  std::vector<SweepEntry> entries;
  bool theory_diverges_at_ends = false;  // decreasing up to alpha = 1, increasing after
  bool within(double z_limit = 3.0) const;
};

/// Runs `base` once per alpha, using the m = 0 coefficient at the last checkpoint.
AlphaSweepReport alpha_sweep(std::span<const double> alphas, const EnsembleConfig& base);

/// Strictly decreasing theory_variance(., 0) for alpha <= 1 and strictly
/// increasing for alpha >= 1 on the given grid.
bool theory_diverges_at_ends(std::span<const double> alphas);

nlohmann::json to_json(const VarianceReport& report);
nlohmann::json to_json(const CovarianceReport& report);
nlohmann::json to_json(const NormalityReport& report);
nlohmann::json to_json(const RateFitReport& report);
nlohmann::json to_json(const AlphaSweepReport& report);

std::string format_table(const VarianceReport& report);
std::string format_table(const NormalityReport& report);
std::string format_table(const AlphaSweepReport& report);

}  // namespace hl
