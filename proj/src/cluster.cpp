#include "hl/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace hl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Intermediates of phi_k(z) stay below e^{C*_{1,k}} |z| up to O(1) factors, so
// the overflow guard is taken relative to that envelope.
double guard_limit2(const CapacitySchedule& s, std::size_t k, double max_abs_z) {
  const double envelope = double(std::exp(s.prefix(k))) * std::max(1.0, max_abs_z);
  const double limit = kGuardModulus * envelope;
  return limit * limit;
}

void guard(const Complex& w, double limit2) {
  const double m2 = std::norm(w);
  if (!(m2 <= limit2))
    throw NumericGuardError("intermediate |w| exceeded 1e12 times the capacity envelope (or "
                            "became NaN) during composition");
  if (m2 < 1.0 - 1e-9)
    throw NumericGuardError("intermediate left the exterior disk (|w|^2 = " + std::to_string(m2) +
                            ")");
}

}  // namespace

std::vector<double> sample_angles(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 gen(seed);
  std::vector<double> out(n);
  const double top = std::nextafter(kTwoPi, 0.0);
  for (auto& theta : out) {
    const double u = double(gen() >> 11) * 0x1.0p-53;
    theta = std::min(u * kTwoPi, top);
  }
  return out;
}

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

ClusterRealization::ClusterRealization(ScheduleParams params, ParticleFamily family,
                                       std::uint64_t seed, double c_max)
    : schedule_(std::make_shared<const CapacitySchedule>(params)),
      family_(family),
      seed_(seed),
      angles_(sample_angles(seed, params.n_max)) {
  build(c_max);
}

ClusterRealization::ClusterRealization(ScheduleParams params, ParticleFamily family,
                                       std::vector<double> angles, double c_max)
    : family_(family), angles_(std::move(angles)) {
  params.n_max = angles_.size();
  schedule_ = std::make_shared<const CapacitySchedule>(params);
  for (double a : angles_)
    if (!std::isfinite(a)) throw std::invalid_argument("attachment angles must be finite");
  build(c_max);
}

ClusterRealization::ClusterRealization(std::shared_ptr<const CapacitySchedule> schedule,
                                       ParticleFamily family, std::uint64_t seed, double c_max)
    : schedule_(std::move(schedule)), family_(family), seed_(seed) {
  if (!schedule_) throw std::invalid_argument("null schedule");
  angles_ = sample_angles(seed, schedule_->n_max());
  build(c_max);
}

void ClusterRealization::build(double c_max) {
  const std::size_t n = angles_.size();
  maps_.reserve(n);
  rot_.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) {
    maps_.emplace_back(family_, schedule_->c(k), c_max);
    rot_.push_back(std::polar(1.0, angles_[k - 1]));
  }
}

void ClusterRealization::check_index(std::size_t k) const {
  if (k > size())
    throw std::out_of_range("particle index " + std::to_string(k) + " exceeds cluster size " +
                            std::to_string(size()));
}

Complex ClusterRealization::phi(Complex z, std::size_t k) const {
  detail::check_exterior(z);
  check_index(k);
  const double limit2 = guard_limit2(*schedule_, k, std::abs(z));
  for (std::size_t j = k; j >= 1; --j) {
    z = apply(j, z);
    guard(z, limit2);
  }
  return z;
}

void ClusterRealization::phi_inplace(std::span<Complex> points, std::size_t k) const {
  check_index(k);
  double max_abs = 0;
  for (const auto& z : points) {
    detail::check_exterior(z);
    max_abs = std::max(max_abs, std::abs(z));
  }
  const double limit2 = guard_limit2(*schedule_, k, max_abs);
  for (std::size_t j = k; j >= 1; --j) {
    const Complex r = rot_[j - 1];
    const Complex rc = std::conj(r);
    const ParticleMap<double>& f = maps_[j - 1];
    for (auto& w : points) {
      w = r * f.eval_unchecked(rc * w);
      guard(w, limit2);
    }
  }
}

double ClusterRealization::rescale(std::size_t n) const {
  return double(std::exp(-schedule_->prefix(n)));
}

void FieldSample::validate() const {
  if (!(r > 1.0)) throw std::invalid_argument("field radius r must exceed 1");
  if (!is_power_of_two(grid()))
    throw std::invalid_argument("grid size M must be a power of two (got " +
                                std::to_string(grid()) + ")");
}

FieldSample error_field(const ClusterRealization& real, double r, std::size_t M, std::size_t n) {
  FieldSample out;
  out.r = r;
  out.values = Eigen::VectorXcd::Zero(Eigen::Index(M));
  out.validate();
  if (n > real.size())
    throw std::out_of_range("n = " + std::to_string(n) + " exceeds cluster size " +
                            std::to_string(real.size()));
  const auto grid = circle_grid(r, M);
  std::vector<Complex> w = grid;
  real.phi_inplace(w, n);
  const double scale = real.rescale(n);
  for (std::size_t j = 0; j < M; ++j) out.values[Eigen::Index(j)] = scale * w[j] - grid[j];
  return out;
}

std::vector<TracePoint> sup_error_trace(const ClusterRealization& real, double r, std::size_t M,
                                        std::span<const std::size_t> checkpoints) {
  std::vector<std::size_t> ns(checkpoints.begin(), checkpoints.end());
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  for (std::size_t n : ns)
    if (n == 0 || n > real.size())
      throw std::invalid_argument("checkpoint " + std::to_string(n) + " outside [1, " +
                                  std::to_string(real.size()) + "]");
  const auto& p = real.params();
  std::vector<TracePoint> out;
  out.reserve(ns.size());
  for (std::size_t n : ns) {
    const FieldSample field = error_field(real, r, M, n);
    TracePoint t;
    t.n = n;
    t.sup_error = field.values.cwiseAbs().maxCoeff();
    t.bound = std::log(double(n)) / std::sqrt(double(n));
    t.grid_error_bound = mesh_params(p.alpha, p.c, r, n).grid_error_bound(M);
    out.push_back(t);
  }
  return out;
}

Complex increment_X(const ClusterRealization& real, Complex z, std::size_t k, std::size_t n) {
  if (k == 0 || k > n) throw std::invalid_argument("increment_X requires 1 <= k <= n");
  if (n > real.size()) throw std::out_of_range("increment_X: n exceeds cluster size");
  const auto& s = real.schedule();
  const Complex outer = double(std::exp(s.C_exact(k + 1, n))) * z;
  const Complex inner = double(std::exp(s.C_exact(k, n))) * z;
  return real.rescale(n) * (real.phi(outer, k) - real.phi(inner, k - 1));
}

namespace {

// phi_{k-1}(e^{i t_j} f_{c_k}(e^{-i t_j} w)) for t_j = 2 pi j / Q, followed by
// phi_{k-1}(e^{c_k} w) in the last slot.
std::vector<Complex> rotated_images(const ClusterRealization& real, Complex w, std::size_t k,
                                    std::size_t Q) {
  const ParticleMap<double>& f = real.particle(k);
  std::vector<Complex> pts(Q + 1);
  for (std::size_t j = 0; j < Q; ++j) {
    const Complex rot = std::polar(1.0, kTwoPi * double(j) / double(Q));
    pts[j] = rot * f.eval_unchecked(std::conj(rot) * w);
  }
  pts[Q] = std::exp(f.capacity()) * w;
  real.phi_inplace(pts, k - 1);
  return pts;
}

}  // namespace

double conditional_mean_check(const ClusterRealization& real, Complex z, std::size_t k,
                              std::size_t Q) {
  if (!is_power_of_two(Q)) throw std::invalid_argument("Q must be a power of two");
  if (k == 0 || k > real.size()) throw std::invalid_argument("conditional_mean_check: bad k");
  detail::check_exterior(z);
  const auto pts = rotated_images(real, z, k, Q);
  Complex mean = 0;
  for (std::size_t j = 0; j < Q; ++j) mean += pts[j];
  mean /= double(Q);
  return std::abs(mean - pts[Q]);
}

double variation_estimate_T(const ClusterRealization& real, Complex z, std::size_t n,
                            std::size_t Q) {
  if (!is_power_of_two(Q)) throw std::invalid_argument("Q must be a power of two");
  if (n > real.size()) throw std::out_of_range("variation_estimate_T: n exceeds cluster size");
  detail::check_exterior(z);
  const auto& s = real.schedule();
  const double scale2 = std::pow(real.rescale(n), 2);
  double total = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    const Complex w = double(std::exp(s.C_exact(k + 1, n))) * z;
    const auto pts = rotated_images(real, w, k, Q);
    double acc = 0;
    for (std::size_t j = 0; j < Q; ++j) acc += std::norm(pts[j] - pts[Q]);
    total += scale2 * acc / double(Q);
  }
  return total;
}

EpsilonWitness epsilon_witness(double c, ParticleFamily family) {
  EpsilonWitness w;
  if (family == ParticleFamily::Slit) {
    const ParticleMap<double> f(family, c);
    const auto grid = near_attach_grid<double>();
    w.lambda_hat = class_bound_ratio<double>(f, grid);
  }
  w.epsilon = (2.0 * c - w.lambda_hat * std::pow(c, 1.5)) / (1.0 + std::exp(-c));
  return w;
}

Alpha0Trace alpha0_trace(double c, ParticleFamily family, std::uint64_t seed, double r,
                         std::size_t M, std::size_t n_max,
                         std::span<const std::size_t> checkpoints) {
  const ClusterRealization real({0.0, c, n_max}, family, seed);
  return {sup_error_trace(real, r, M, checkpoints), epsilon_witness(c, family)};
}

Alpha0Trace alpha0_trace(double c, ParticleFamily family, std::vector<double> angles, double r,
                         std::size_t M, std::span<const std::size_t> checkpoints) {
  const ClusterRealization real({0.0, c, 0}, family, std::move(angles));
  return {sup_error_trace(real, r, M, checkpoints), epsilon_witness(c, family)};
}

double window_max(std::span<const TracePoint> trace, std::size_t lo, std::size_t hi) {
  double best = 0;
  for (const auto& t : trace)
    if (t.n >= lo && t.n <= hi) best = std::max(best, t.sup_error);
  return best;
}

std::vector<Complex> boundary_trace(const ClusterRealization& real, std::size_t n, double offset,
                                    std::size_t M) {
  if (!(offset > 0)) throw std::invalid_argument("boundary offset must be positive");
  if (M == 0) throw std::invalid_argument("boundary grid must be non-empty");
  auto pts = circle_grid(1.0 + offset, M);
  real.phi_inplace(pts, n);
  return pts;
}

double rescaled_derivative_modulus(const ClusterRealization& real, Complex z, std::size_t n,
                                   double h) {
  const Complex fp = real.phi(z + h, n);
  const Complex fm = real.phi(z - h, n);
  return real.rescale(n) * std::abs(fp - fm) / (2.0 * h);
}

}  // namespace hl
