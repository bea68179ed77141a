#include "hl/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "hl/io.hpp"

namespace hl {

void ScheduleParams::validate() const {
  if (!(alpha >= 0.0) || !(alpha < 2.0))
    throw std::invalid_argument("alpha must lie in [0, 2); results break down for alpha >= 2 (got " +
                                std::to_string(alpha) + ")");
  if (!(c > 0.0) || !std::isfinite(c))
    throw std::invalid_argument("c must be positive (got " + std::to_string(c) + ")");
}

double c_star(const ScheduleParams& params, std::size_t k) {
  if (k == 0) throw std::out_of_range("c_star: index starts at 1");
  return params.c / (1.0 + params.alpha * params.c * double(k - 1));
}

CapacitySchedule::CapacitySchedule(ScheduleParams params) : params_(params) {
  params_.validate();
  prefix_.assign(params_.n_max + 1, 0.0L);
  long double sum = 0.0L;
  long double comp = 0.0L;
  const long double a = params_.alpha;
  const long double c = params_.c;
  for (std::size_t k = 1; k <= params_.n_max; ++k) {
    const long double term = c / (1.0L + a * c * (long double)(k - 1));
    const long double t = sum + term;
    if (std::fabs(sum) >= std::fabs(term))
      comp += (sum - t) + term;
    else
      comp += (term - t) + sum;
    sum = t;
    prefix_[k] = sum + comp;
  }
}

double CapacitySchedule::c(std::size_t k) const {
  if (k == 0 || k > params_.n_max) throw std::out_of_range("schedule index out of range");
  return c_star(params_, k);
}

long double CapacitySchedule::C_exact(std::size_t k, std::size_t n) const {
  if (k == 0 || n > params_.n_max || k > n + 1)
    throw std::out_of_range("C*(" + std::to_string(k) + ", " + std::to_string(n) +
                            ") outside 1 <= k <= n + 1, n <= " + std::to_string(params_.n_max));
  return prefix_[n] - prefix_[k - 1];
}

double CapacitySchedule::C(std::size_t k, std::size_t n) const { return double(C_exact(k, n)); }

InftySchedule::InftySchedule(ScheduleParams params) : params_(params) {
  params_.validate();
  tilde_.assign(params_.n_max + 1, 0.0L);
  tilde_prefix_.assign(params_.n_max + 1, 0.0L);
  const long double a = params_.alpha;
  const long double c = params_.c;
  for (std::size_t k = 1; k <= params_.n_max; ++k) {
    tilde_[k] = c * std::exp(-a * tilde_prefix_[k - 1]);
    tilde_prefix_[k] = tilde_prefix_[k - 1] + tilde_[k];
  }
}

InftySchedule tilde_schedule(const ScheduleParams& params) { return InftySchedule(params); }

double epsilon_kn(const CapacitySchedule& schedule, std::size_t k, std::size_t n) {
  const auto& p = schedule.params();
  if (!(p.alpha > 0.0)) throw std::invalid_argument("epsilon_kn requires alpha > 0");
  if (k == 0 || k > n) throw std::invalid_argument("epsilon_kn requires 1 <= k <= n");
  const long double a = p.alpha;
  const long double c = p.c;
  // log1p form keeps the k close to n case accurate.
  const long double log_ratio =
      std::log1p(a * c * (long double)(n - k + 1) / (1.0L + a * c * (long double)(k - 1)));
  if (!(log_ratio > 0.0L)) throw std::domain_error("epsilon_kn: degenerate log denominator");
  return double(schedule.C_exact(k, n) / (log_ratio / a) - 1.0L);
}

double epsilon_bound(const ScheduleParams& params, std::size_t n) {
  return params.alpha * params.c / std::log1p(params.alpha * params.c * double(n));
}

double kappa_defect(const CapacitySchedule& schedule, std::size_t n) {
  if (n < 2) throw std::invalid_argument("kappa_defect requires n >= 2");
  const auto& p = schedule.params();
  const long double a = p.alpha;
  return double((long double)schedule.c(n) - (long double)p.c * std::exp(-a * schedule.prefix(n - 1)));
}

double kappa_bound(const ScheduleParams& params, std::size_t n) {
  return 2.0 * params.alpha * params.c * params.c / (1.0 + params.alpha * params.c * double(n - 1));
}

double schedule_gap(const CapacitySchedule& schedule, const InftySchedule& infty, std::size_t n) {
  return double(schedule.prefix(n) - infty.prefix(n));
}

double MeshParams::grid_error_bound(std::size_t M) const {
  if (M == 0) throw std::invalid_argument("grid_error_bound: M must be positive");
  const double spacing = 2.0 * std::numbers::pi / double(M);
  const double nn = double(n);
  return gamma / (4.0 * std::numbers::pi) * spacing * nn * std::log(nn);
}

MeshParams mesh_params(double alpha, double c, double r, std::size_t n) {
  if (!(r > 1.0)) throw std::invalid_argument("mesh_params requires r > 1");
  if (!(c > 0.0)) throw std::invalid_argument("mesh_params requires c > 0");
  MeshParams m;
  m.alpha = alpha;
  m.c = c;
  m.r = r;
  m.n = n;
  m.gamma = 4.0 * std::numbers::pi * r / c * (std::exp(c) + 1.0) * (1.0 + alpha * c) *
            (1.0 + alpha * std::exp(alpha * c)) * (std::log(r / (r - 1.0)) + 1.0) *
            (std::log1p(alpha * c) + 1.0);
  m.L = m.gamma * std::pow(double(n), 1.5);
  return m;
}

bool ScheduleCheckReport::passed(double slack) const {
  const double one = 1.0 + slack;
  // The gap is a difference of two sums of size C*_{1,n}; rounding in those
  // sums sets the scale of the lower slack.
  bool ok = min_gap >= -slack * std::max(gap_limit, total_capacity) && max_gap <= gap_limit * one;
  ok = ok && min_kappa_ratio >= -slack && max_kappa_ratio <= one;
  ok = ok && max_tilde_ratio <= tilde_ratio_limit * one;
  if (alpha > 0) ok = ok && min_eps > 0 && max_eps_ratio <= one && max_power_ratio <= one;
  return ok;
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n_max) {
  std::vector<std::size_t> ns;
  for (std::size_t n = 1; n <= std::min<std::size_t>(n_max, 64); ++n) ns.push_back(n);
  for (int i = 0; i <= 256; ++i)
    ns.push_back(std::size_t(std::llround(std::pow(double(n_max), double(i) / 256.0))));
  ns.push_back(n_max);
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t n : ns) {
    if (n == 0 || n > n_max) continue;
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k <= std::min<std::size_t>(n, 16); ++k) ks.push_back(k);
    for (std::size_t k = n > 16 ? n - 15 : 1; k <= n; ++k) ks.push_back(k);
    for (int i = 0; i <= 32; ++i)
      ks.push_back(std::clamp<std::size_t>(
          std::size_t(std::llround(std::pow(double(n), double(i) / 32.0))), 1, n));
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (std::size_t k : ks) pairs.emplace_back(k, n);
  }
  std::mt19937_64 gen(20240101);
  for (int i = 0; i < 4096 && n_max > 0; ++i) {
    const std::size_t n = 1 + std::size_t(gen() % n_max);
    const std::size_t k = 1 + std::size_t(gen() % n);
    pairs.emplace_back(k, n);
  }
  return pairs;
}

}  // namespace

ScheduleCheckReport check_schedule(const ScheduleParams& params, std::size_t n_max) {
  ScheduleParams p = params;
  p.n_max = n_max;
  const CapacitySchedule sched(p);
  const InftySchedule infty(p);
  ScheduleCheckReport rep;
  rep.alpha = p.alpha;
  rep.c = p.c;
  rep.n_max = n_max;
  rep.gap_limit = 6.0 * p.c;
  rep.total_capacity = n_max ? double(sched.prefix(n_max)) : 0.0;
  rep.tilde_ratio_limit = std::exp(p.alpha * (p.alpha + 6.0) * p.c);
  constexpr double inf = std::numeric_limits<double>::infinity();
  rep.min_gap = rep.min_kappa_ratio = rep.min_tilde_ratio = rep.min_eps = inf;
  rep.max_gap = rep.max_kappa_ratio = rep.max_tilde_ratio = rep.max_eps_ratio = -inf;
  rep.max_power_ratio = -inf;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double gap = schedule_gap(sched, infty, n);
    rep.min_gap = std::min(rep.min_gap, gap);
    rep.max_gap = std::max(rep.max_gap, gap);
    const double ratio = infty.c(n) / sched.c(n);
    rep.min_tilde_ratio = std::min(rep.min_tilde_ratio, ratio);
    rep.max_tilde_ratio = std::max(rep.max_tilde_ratio, ratio);
    if (n >= 2) {
      const double kappa = kappa_defect(sched, n);
      const double bound = kappa_bound(p, n);
      const double kr = bound > 0 ? kappa / bound : (kappa == 0 ? 0.0 : inf);
      rep.min_kappa_ratio = std::min(rep.min_kappa_ratio, kr);
      rep.max_kappa_ratio = std::max(rep.max_kappa_ratio, kr);
    }
  }
  if (p.alpha > 0) {
    const double log_rhs = std::log1p(p.alpha * p.c * std::exp(p.alpha * p.c));
    for (auto [k, n] : sample_pairs(n_max)) {
      const double eps = epsilon_kn(sched, k, n);
      rep.min_eps = std::min(rep.min_eps, eps);
      rep.max_eps_ratio = std::max(rep.max_eps_ratio, eps / epsilon_bound(p, n));
      const double lhs = eps * std::log1p(p.alpha * p.c * double(k));
      rep.max_power_ratio = std::max(rep.max_power_ratio, lhs / log_rhs);
      ++rep.pairs_checked;
    }
  }
  if (n_max < 2) rep.min_kappa_ratio = rep.max_kappa_ratio = 0;
  return rep;
}

void write_schedule_csv(std::ostream& out, const CapacitySchedule& schedule,
                        const InftySchedule& infty) {
  out << "k,c_star,C_star_1k,c_tilde,C_tilde_1k,gap\n";
  for (std::size_t k = 1; k <= schedule.n_max(); ++k) {
    out << k << ',' << format_real(schedule.c(k)) << ',' << format_real(double(schedule.prefix(k)))
        << ',' << format_real(infty.c(k)) << ',' << format_real(double(infty.prefix(k))) << ','
        << format_real(schedule_gap(schedule, infty, k)) << '\n';
  }
}

}  // namespace hl
