#include "hl/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <thread>

namespace hl {

double theory_variance(double alpha, std::size_t m) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw std::domain_error("theory variance is defined for 0 < alpha < 2 (got " +
                            std::to_string(alpha) + ")");
  return 2.0 / (alpha * (2.0 * double(m) + 2.0 - alpha));
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = unsigned(std::min<std::size_t>(jobs, std::max<std::size_t>(count, 1)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

void EnsembleConfig::validate() const {
  ScheduleParams p = params;
  p.validate();
  if (!(r > 1.0)) throw std::invalid_argument("r must exceed 1 (got " + std::to_string(r) + ")");
  if (!is_power_of_two(grid))
    throw std::invalid_argument("grid size must be a power of two (got " + std::to_string(grid) +
                                ")");
  if (grid < 4 * m_max)
    throw GridTooSmallError("grid size " + std::to_string(grid) + " is below 4 * modes = " +
                            std::to_string(4 * m_max));
  if (checkpoints.empty()) throw std::invalid_argument("at least one checkpoint is required");
  for (std::size_t n : checkpoints)
    if (n == 0) throw std::invalid_argument("checkpoints must be >= 1");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw std::invalid_argument("seed list has duplicates");
}

std::vector<std::size_t> EnsembleConfig::sorted_checkpoints() const {
  std::vector<std::size_t> out = checkpoints;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t EnsembleResult::failures() const {
  return std::size_t(std::count_if(seeds.begin(), seeds.end(), [](const auto& s) { return !s.ok; }));
}

namespace {

template <typename Get>
Eigen::MatrixXcd gather(const EnsembleResult& res, std::size_t idx, Get get) {
  const std::size_t ok = res.seeds.size() - res.failures();
  Eigen::MatrixXcd out(Eigen::Index(ok), Eigen::Index(res.config.m_max + 1));
  Eigen::Index row = 0;
  for (const auto& s : res.seeds) {
    if (!s.ok) continue;
    out.row(row++) = get(s, idx).transpose();
  }
  return out;
}

}  // namespace

Eigen::MatrixXcd EnsembleResult::dft_samples(std::size_t idx) const {
  return gather(*this, idx, [](const SeedResult& s, std::size_t i) { return s.spectra.at(i).coeffs; });
}

Eigen::MatrixXcd EnsembleResult::mode_samples(std::size_t idx) const {
  return gather(*this, idx, [](const SeedResult& s, std::size_t i) { return s.modes.at(i).sums; });
}

EnsembleResult run_ensemble(const EnsembleConfig& config) {
  config.validate();
  EnsembleResult res;
  res.config = config;
  res.checkpoints = config.sorted_checkpoints();
  res.seeds.resize(config.seeds.size());
  ScheduleParams p = config.params;
  p.n_max = res.checkpoints.back();
  auto schedule = std::make_shared<const CapacitySchedule>(p);
  parallel_for(config.seeds.size(), config.jobs, [&](std::size_t i) {
    SeedResult& out = res.seeds[i];
    out.seed = config.seeds[i];
    try {
      const ClusterRealization real(schedule, config.family, out.seed);
      for (std::size_t n : res.checkpoints) {
        out.spectra.push_back(
            extract_spectrum(fluctuation_field(real, config.r, config.grid, n), config.m_max));
        out.modes.push_back(mode_sums(real, n, config.m_max));
      }
      out.ok = true;
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
      out.spectra.clear();
      out.modes.clear();
    }
  });
  return res;
}

namespace {

struct Moments {
  double mean = 0;
  double var = 0;  // unbiased
  double m2 = 0, m3 = 0, m4 = 0;  // central, biased
};

Moments moments(const Eigen::VectorXd& x) {
  Moments out;
  const double N = double(x.size());
  out.mean = x.mean();
  const Eigen::ArrayXd d = x.array() - out.mean;
  out.m2 = d.square().mean();
  out.m3 = d.cube().mean();
  out.m4 = d.square().square().mean();
  out.var = out.m2 * N / (N - 1.0);
  return out;
}

void require_rows(const Eigen::MatrixXcd& samples, std::size_t min_rows, const char* what) {
  if (std::size_t(samples.rows()) < min_rows)
    throw std::invalid_argument(std::string(what) + " needs at least " + std::to_string(min_rows) +
                                " seeds (got " + std::to_string(samples.rows()) + ")");
}

Eigen::MatrixXd split_re_im(const Eigen::MatrixXcd& samples) {
  const Eigen::Index N = samples.rows(), K = samples.cols();
  Eigen::MatrixXd x(N, 2 * K);
  x.leftCols(K) = samples.real();
  x.rightCols(K) = samples.imag();
  return x;
}

Eigen::MatrixXd correlation_of(const Eigen::MatrixXd& x, Eigen::MatrixXd* cov_out = nullptr) {
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / double(x.rows() - 1);
  const Eigen::VectorXd inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
  if (cov_out) *cov_out = cov;
  return inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
}

double max_offdiag(const Eigen::MatrixXd& m) {
  double best = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j) best = std::max(best, std::abs(m(i, j)));
  return best;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

bool VarianceReport::within(double z_limit) const {
  for (const auto& m : modes)
    if (std::abs(m.z_re) > z_limit || std::abs(m.z_im) > z_limit) return false;
  return true;
}

VarianceReport variance_report(const Eigen::MatrixXcd& samples, double alpha) {
  require_rows(samples, 50, "variance_report");
  VarianceReport rep;
  rep.alpha = alpha;
  rep.N = std::size_t(samples.rows());
  const double N = double(rep.N);
  const double rel_se = std::sqrt(2.0 / (N - 1.0));
  for (Eigen::Index m = 0; m < samples.cols(); ++m) {
    const Moments re = moments(samples.col(m).real());
    const Moments im = moments(samples.col(m).imag());
    ModeVariance mv;
    mv.m = std::size_t(m);
    mv.mean_re = re.mean;
    mv.mean_im = im.mean;
    mv.var_re = re.var;
    mv.var_im = im.var;
    mv.theory = theory_variance(alpha, mv.m);
    mv.se = mv.theory * rel_se;
    mv.empirical_se_re = re.var * rel_se;
    mv.empirical_se_im = im.var * rel_se;
    mv.z_re = (re.var - mv.theory) / mv.se;
    mv.z_im = (im.var - mv.theory) / mv.se;
    mv.z_re_vs_im = (re.var - im.var) / (std::sqrt(2.0) * mv.se);
    rep.modes.push_back(mv);
  }
  return rep;
}

CovarianceReport covariance_report(const Eigen::MatrixXcd& samples) {
  require_rows(samples, 50, "covariance_report");
  CovarianceReport rep;
  rep.N = std::size_t(samples.rows());
  rep.modes = std::size_t(samples.cols());
  const Eigen::MatrixXd x = split_re_im(samples);
  rep.correlation = correlation_of(x, &rep.covariance);
  rep.band = 3.0 / std::sqrt(double(rep.N));
  rep.max_abs_offdiag = max_offdiag(rep.correlation);

  std::vector<Eigen::Index> order(std::size_t(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::mt19937_64 gen(0x5eedULL);
  std::shuffle(order.begin(), order.end(), gen);
  const Eigen::Index half = x.rows() / 2;
  Eigen::MatrixXd a(half, x.cols()), b(half, x.cols());
  for (Eigen::Index i = 0; i < half; ++i) {
    a.row(i) = x.row(order[std::size_t(i)]);
    b.row(i) = x.row(order[std::size_t(half + i)]);
  }
  rep.split_half_max_diff = max_offdiag(correlation_of(a) - correlation_of(b));
  rep.split_half_band = 2.0 * 3.0 / std::sqrt(double(half));
  return rep;
}

std::size_t NormalityReport::flagged() const {
  return std::size_t(std::count_if(entries.begin(), entries.end(), [&](const NormalityEntry& e) {
    return std::abs(e.skewness) > skew_band || std::abs(e.excess_kurtosis) > kurt_band;
  }));
}

NormalityReport normality_report(const Eigen::MatrixXcd& samples) {
  require_rows(samples, 100, "normality_report");
  NormalityReport rep;
  rep.N = std::size_t(samples.rows());
  const double N = double(rep.N);
  rep.skew_band = 3.0 * std::sqrt(6.0 / N);
  rep.kurt_band = 3.0 * std::sqrt(24.0 / N);
  rep.ks_band = 1.031 / std::sqrt(N);
  for (Eigen::Index m = 0; m < samples.cols(); ++m) {
    for (bool imag : {false, true}) {
      const Eigen::VectorXd x = imag ? samples.col(m).imag().eval() : samples.col(m).real().eval();
      const Moments mo = moments(x);
      NormalityEntry e;
      e.m = std::size_t(m);
      e.imaginary = imag;
      e.skewness = mo.m3 / std::pow(mo.m2, 1.5);
      e.excess_kurtosis = mo.m4 / (mo.m2 * mo.m2) - 3.0;
      std::vector<double> z(x.data(), x.data() + x.size());
      std::sort(z.begin(), z.end());
      const double sd = std::sqrt(mo.var);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double F = normal_cdf((z[i] - mo.mean) / sd);
        e.ks = std::max({e.ks, double(i + 1) / N - F, F - double(i) / N});
      }
      rep.entries.push_back(e);
    }
  }
  return rep;
}

double lindeberg_diagnostic(const ClusterRealization& real, std::size_t n, std::size_t m) {
  double best = 0;
  for (std::size_t k = 1; k <= n; ++k) best = std::max(best, std::abs(mode_increment(real, k, n, m)));
  return best;
}

double lindeberg_envelope(double alpha, double c, std::size_t n, std::size_t m) {
  if (!(alpha > 0.0)) throw std::invalid_argument("lindeberg_envelope requires alpha > 0");
  const double exponent = std::min(1.0, double(m + 1) / alpha);
  return 2.0 * c * (1.0 + alpha * c) * std::sqrt(double(n)) /
         std::pow(1.0 + alpha * c * double(n), exponent);
}

std::pair<double, double> quadratic_variation(const ClusterRealization& real, std::size_t n,
                                              std::size_t m) {
  double re = 0, im = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    const Complex a = mode_increment(real, k, n, m);
    re += a.real() * a.real();
    im += a.imag() * a.imag();
  }
  return {re, im};
}

RateFitReport rate_fit(std::span<const SeedTrace> traces) {
  RateFitReport rep;
  std::vector<const SeedTrace*> used;
  for (const auto& t : traces) {
    if (t.alpha == 0.0)
      ++rep.excluded_alpha0;
    else
      used.push_back(&t);
  }
  if (rep.excluded_alpha0)
    rep.note = std::to_string(rep.excluded_alpha0) +
               " alpha = 0 trace(s) excluded: the rate statement does not apply there";
  if (used.size() < 20)
    throw std::invalid_argument("rate_fit needs traces from at least 20 seeds (got " +
                                std::to_string(used.size()) + ")");
  for (const auto& p : used.front()->points) rep.checkpoints.push_back(p.n);
  if (rep.checkpoints.size() < 4)
    throw std::invalid_argument("rate_fit needs at least 4 checkpoints");
  for (const auto* t : used) {
    if (t->points.size() != rep.checkpoints.size())
      throw std::invalid_argument("rate_fit: traces have different checkpoints");
    for (std::size_t i = 0; i < t->points.size(); ++i)
      if (t->points[i].n != rep.checkpoints[i])
        throw std::invalid_argument("rate_fit: traces have different checkpoints");
  }
  rep.seeds_used = used.size();
  std::size_t within = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto* t : used)
    for (const auto& p : t->points) {
      ++rep.points_used;
      if (p.sup_error <= p.bound) ++within;
      const double x = std::log(double(p.n)), y = std::log(p.sup_error);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
  const double P = double(rep.points_used);
  rep.fraction_within = double(within) / P;
  rep.slope = (P * sxy - sx * sy) / (P * sxx - sx * sx);
  for (std::size_t i = 0; i < rep.checkpoints.size(); ++i) {
    std::vector<double> col;
    for (const auto* t : used) col.push_back(t->points[i].sup_error);
    rep.medians.push_back(median(std::move(col)));
  }
  rep.medians_strictly_decreasing = true;
  for (std::size_t i = 1; i < rep.medians.size(); ++i)
    if (!(rep.medians[i] < rep.medians[i - 1])) rep.medians_strictly_decreasing = false;
  return rep;
}

std::vector<SeedTrace> run_traces(const ScheduleParams& params, ParticleFamily family,
                                  std::span<const std::uint64_t> seeds, double r, std::size_t M,
                                  std::span<const std::size_t> checkpoints, unsigned jobs) {
  if (checkpoints.empty()) throw std::invalid_argument("run_traces: no checkpoints");
  ScheduleParams p = params;
  p.n_max = *std::max_element(checkpoints.begin(), checkpoints.end());
  auto schedule = std::make_shared<const CapacitySchedule>(p);
  std::vector<SeedTrace> out(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    const ClusterRealization real(schedule, family, seeds[i]);
    out[i].alpha = p.alpha;
    out[i].seed = seeds[i];
    out[i].points = sup_error_trace(real, r, M, checkpoints);
  });
  return out;
}

bool AlphaSweepReport::within(double z_limit) const {
  for (const auto& e : entries)
    if (std::abs(e.z_a0) > z_limit) return false;
  return true;
}

bool theory_diverges_at_ends(std::span<const double> alphas) {
  std::vector<double> a(alphas.begin(), alphas.end());
  std::sort(a.begin(), a.end());
  for (std::size_t i = 1; i < a.size(); ++i) {
    const double lo = theory_variance(a[i - 1], 0), hi = theory_variance(a[i], 0);
    if (a[i] <= 1.0 && !(hi < lo)) return false;
    if (a[i - 1] >= 1.0 && !(hi > lo)) return false;
  }
  return true;
}

AlphaSweepReport alpha_sweep(std::span<const double> alphas, const EnsembleConfig& base) {
  AlphaSweepReport rep;
  for (double alpha : alphas) {
    if (!(alpha > 0.0 && alpha < 2.0))
      throw std::invalid_argument("alpha_sweep: alpha must lie in (0, 2)");
    EnsembleConfig cfg = base;
    cfg.params.alpha = alpha;
    const EnsembleResult res = run_ensemble(cfg);
    const Eigen::MatrixXcd s = res.dft_samples(res.checkpoints.size() - 1);
    if (s.rows() < 2) throw std::runtime_error("alpha_sweep: too few successful seeds");
    SweepEntry e;
    e.alpha = alpha;
    e.N = std::size_t(s.rows());
    const double rel_se = std::sqrt(2.0 / (double(e.N) - 1.0));
    e.var_a0 = moments(s.col(0).real()).var;
    e.var_b0 = moments(s.col(0).imag()).var;
    e.theory = theory_variance(alpha, 0);
    ScheduleParams p = cfg.params;
    p.n_max = res.checkpoints.back();
    e.finite_n_target = finite_n_mode_variance(CapacitySchedule(p), p.n_max, 0);
    e.se = e.theory * rel_se;
    e.z_a0 = (e.var_a0 - e.theory) / e.se;
    e.z_b0 = (e.var_b0 - e.theory) / e.se;
    e.ci_low = e.var_a0 * (1.0 - 3.0 * rel_se);
    e.ci_high = e.var_a0 * (1.0 + 3.0 * rel_se);
    rep.entries.push_back(e);
  }
  rep.theory_diverges_at_ends = theory_diverges_at_ends(alphas);
  return rep;
}

nlohmann::json to_json(const VarianceReport& r) {
  nlohmann::json j;
  j["alpha"] = r.alpha;
  j["N"] = r.N;
  j["within_3se"] = r.within();
  j["note"] = "mode 0 is compared against the same formula as m >= 1; the convergence argument "
              "for the mode sums is stated for m >= 1";
  for (const auto& m : r.modes)
    j["modes"].push_back({{"m", m.m},
                          {"mean_re", m.mean_re},
                          {"mean_im", m.mean_im},
                          {"var_re", m.var_re},
                          {"var_im", m.var_im},
                          {"theory", m.theory},
                          {"se", m.se},
                          {"empirical_se_re", m.empirical_se_re},
                          {"empirical_se_im", m.empirical_se_im},
                          {"z_re", m.z_re},
                          {"z_im", m.z_im},
                          {"z_re_vs_im", m.z_re_vs_im}});
  return j;
}

nlohmann::json to_json(const CovarianceReport& r) {
  nlohmann::json j;
  j["N"] = r.N;
  j["modes"] = r.modes;
  j["band"] = r.band;
  j["max_abs_offdiag"] = r.max_abs_offdiag;
  j["within_band"] = r.within();
  j["split_half_max_diff"] = r.split_half_max_diff;
  j["split_half_band"] = r.split_half_band;
  j["order"] = "A_0..A_m, B_0..B_m";
  for (Eigen::Index i = 0; i < r.correlation.rows(); ++i) {
    std::vector<double> row(r.correlation.cols());
    for (Eigen::Index k = 0; k < r.correlation.cols(); ++k) row[std::size_t(k)] = r.correlation(i, k);
    j["correlation"].push_back(row);
  }
  return j;
}

nlohmann::json to_json(const NormalityReport& r) {
  nlohmann::json j;
  j["N"] = r.N;
  j["skew_band"] = r.skew_band;
  j["kurt_band"] = r.kurt_band;
  j["ks_band"] = r.ks_band;
  j["flagged"] = r.flagged();
  for (const auto& e : r.entries)
    j["entries"].push_back({{"m", e.m},
                            {"part", e.imaginary ? "im" : "re"},
                            {"skewness", e.skewness},
                            {"excess_kurtosis", e.excess_kurtosis},
                            {"ks", e.ks}});
  return j;
}

nlohmann::json to_json(const RateFitReport& r) {
  return {{"seeds_used", r.seeds_used},
          {"points_used", r.points_used},
          {"excluded_alpha0", r.excluded_alpha0},
          {"fraction_within", r.fraction_within},
          {"slope", r.slope},
          {"checkpoints", r.checkpoints},
          {"medians", r.medians},
          {"medians_strictly_decreasing", r.medians_strictly_decreasing},
          {"note", r.note}};
}

nlohmann::json to_json(const AlphaSweepReport& r) {
  nlohmann::json j;
  j["theory_diverges_at_ends"] = r.theory_diverges_at_ends;
  j["within_3se"] = r.within();
  for (const auto& e : r.entries)
    j["entries"].push_back({{"alpha", e.alpha},
                            {"N", e.N},
                            {"var_a0", e.var_a0},
                            {"var_b0", e.var_b0},
                            {"theory", e.theory},
                            {"finite_n_target", e.finite_n_target},
                            {"se", e.se},
                            {"z_a0", e.z_a0},
                            {"z_b0", e.z_b0},
                            {"ci_low", e.ci_low},
                            {"ci_high", e.ci_high}});
  return j;
}

std::string format_table(const VarianceReport& r) {
  std::string out = "alpha = " + fmt("%g", r.alpha) + ", N = " + std::to_string(r.N) + "\n";
  out += "   m     var(A_m)     var(B_m)       theory    z(A)    z(B)\n";
  for (const auto& m : r.modes) {
    char line[128];
    std::snprintf(line, sizeof line, "%4zu %12.6f %12.6f %12.6f %7.2f %7.2f\n", m.m, m.var_re,
                  m.var_im, m.theory, m.z_re, m.z_im);
    out += line;
  }
  return out;
}

std::string format_table(const NormalityReport& r) {
  std::string out = "N = " + std::to_string(r.N) + ", skew band " + fmt("%.3f", r.skew_band) +
                    ", kurtosis band " + fmt("%.3f", r.kurt_band) + "\n";
  out += "   m part  skewness  ex.kurt       ks\n";
  for (const auto& e : r.entries) {
    char line[128];
    std::snprintf(line, sizeof line, "%4zu %4s %9.4f %8.4f %8.4f\n", e.m, e.imaginary ? "im" : "re",
                  e.skewness, e.excess_kurtosis, e.ks);
    out += line;
  }
  return out;
}

std::string format_table(const AlphaSweepReport& r) {
  std::string out = " alpha     N    var(A_0)      theory  finite-n      z\n";
  for (const auto& e : r.entries) {
    char line[128];
    std::snprintf(line, sizeof line, "%6.3f %5zu %11.5f %11.5f %9.5f %6.2f\n", e.alpha, e.N,
                  e.var_a0, e.theory, e.finite_n_target, e.z_a0);
    out += line;
  }
  return out;
}

}  // namespace hl
