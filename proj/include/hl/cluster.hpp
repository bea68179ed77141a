#pragma once

// HL(alpha) realizations: i.i.d. uniform attachment angles, the composed map
//
//     phi_n = f_1 o f_2 o ... o f_n,   f_k(z) = e^{i theta_k} f_{c*_k}(e^{-i theta_k} z),
//
// and the capacity-rescaled error field M_n(z) = e^{-C*_{1,n}} phi_n(z) - z.

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "hl/conformal.hpp"
#include "hl/schedule.hpp"

namespace hl {

using Complex = std::complex<double>;

/// Angles are drawn from std::mt19937_64 seeded with the run seed; each
/// angle uses one 64-bit draw, top 53 bits scaled to [0, 1) then by 2 pi.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+u53";

std::vector<double> sample_angles(std::uint64_t seed, std::size_t n);

/// An intermediate of the composition exceeded kGuardModulus times the
/// capacity envelope e^{C*_{1,k}} max(1, |z|), became NaN, or fell inside
/// the unit disk. Neither happens for admissible parameters; the CLI maps it
/// to exit code 2.
class NumericGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kGuardModulus = 1e12;

class ClusterRealization {
 public:
  ClusterRealization(ScheduleParams params, ParticleFamily family, std::uint64_t seed,
                     double c_max = kDefaultCapacityCap);
  /// Fixed angles; n_max is taken from angles.size().
  ClusterRealization(ScheduleParams params, ParticleFamily family, std::vector<double> angles,
                     double c_max = kDefaultCapacityCap);
  /// Shares an existing schedule (ensembles build it once).
  ClusterRealization(std::shared_ptr<const CapacitySchedule> schedule, ParticleFamily family,
                     std::uint64_t seed, double c_max = kDefaultCapacityCap);

  const ScheduleParams& params() const { return schedule_->params(); }
  const CapacitySchedule& schedule() const { return *schedule_; }
  ParticleFamily family() const { return family_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  std::size_t size() const { return angles_.size(); }
  const std::vector<double>& angles() const { return angles_; }

  const ParticleMap<double>& particle(std::size_t k) const { return maps_.at(k - 1); }
  Complex rotation(std::size_t k) const { return rot_.at(k - 1); }

  /// f_k(w) without domain checks.
  Complex apply(std::size_t k, Complex w) const {
    const Complex r = rot_[k - 1];
    return r * maps_[k - 1].eval_unchecked(std::conj(r) * w);
  }

  /// phi_k(z) = f_1(...f_k(z)); k = 0 is the identity.
  Complex phi(Complex z, std::size_t k) const;
  /// In-place phi_k over many points. Loops particles outermost so each
  /// particle's constants stay hot.
  void phi_inplace(std::span<Complex> points, std::size_t k) const;

  /// e^{-C*_{1,n}} as a double.
  double rescale(std::size_t n) const;

 private:
  void build(double c_max);
  void check_index(std::size_t k) const;

  std::shared_ptr<const CapacitySchedule> schedule_;
  ParticleFamily family_;
  std::optional<std::uint64_t> seed_;
  std::vector<double> angles_;
  std::vector<ParticleMap<double>> maps_;
  std::vector<Complex> rot_;
};

/// Samples of a field on the circle {r e^{2 pi i j / M}}, j = 0..M-1.
struct FieldSample {
  double r = 0;
  Eigen::VectorXcd values;

  std::size_t grid() const { return std::size_t(values.size()); }
  /// Throws std::invalid_argument unless r > 1 and M is a power of two.
  void validate() const;
};

bool is_power_of_two(std::size_t v);

/// M_n on the circle of radius r.
FieldSample error_field(const ClusterRealization& real, double r, std::size_t M, std::size_t n);

struct TracePoint {
  std::size_t n = 0;
  double sup_error = 0;
  double bound = 0;             // log n / sqrt n
  double grid_error_bound = 0;  // Lipschitz slack between grid points
};

/// sup over the grid of |M_n| at every checkpoint (sorted, deduplicated).
std::vector<TracePoint> sup_error_trace(const ClusterRealization& real, double r, std::size_t M,
                                        std::span<const std::size_t> checkpoints);

/// X_{k,n}(z) = e^{-C*_{1,n}} (phi_k(e^{C*_{k+1,n}} z) - phi_{k-1}(e^{C*_{k,n}} z)).
Complex increment_X(const ClusterRealization& real, Complex z, std::size_t k, std::size_t n);

/// |(1/Q) sum_j phi_{k-1}(e^{i t_j} f_{c*_k}(e^{-i t_j} z)) - phi_{k-1}(e^{c*_k} z)|,
/// t_j = 2 pi j / Q.
double conditional_mean_check(const ClusterRealization& real, Complex z, std::size_t k,
                              std::size_t Q);

/// T_n(z) = sum_k E(|X_{k,n}(z)|^2 | F_{k-1}) with each expectation taken by a
/// Q-node trapezoid rule over the k-th angle.
double variation_estimate_T(const ClusterRealization& real, Complex z, std::size_t n,
                            std::size_t Q);

/// (2c - lambda c^{3/2}) / (1 + e^{-c}), lambda = 0 for idealized particles and
/// the near-attach class_bound_ratio estimate for slits.
struct EpsilonWitness {
  double epsilon = 0;
  double lambda_hat = 0;
};
EpsilonWitness epsilon_witness(double c, ParticleFamily family);

struct Alpha0Trace {
  std::vector<TracePoint> trace;
  EpsilonWitness witness;
};

/// Constant-capacity (alpha = 0) trace of sup |e^{-cn} Psi_n(z) - z|.
Alpha0Trace alpha0_trace(double c, ParticleFamily family, std::uint64_t seed, double r,
                         std::size_t M, std::size_t n_max, std::span<const std::size_t> checkpoints);
Alpha0Trace alpha0_trace(double c, ParticleFamily family, std::vector<double> angles, double r,
                         std::size_t M, std::span<const std::size_t> checkpoints);

/// Largest sup_error over checkpoints in [lo, hi]; 0 if none fall inside.
double window_max(std::span<const TracePoint> trace, std::size_t lo, std::size_t hi);

/// phi_n((1 + offset) e^{2 pi i j / M}), j = 0..M-1.
std::vector<Complex> boundary_trace(const ClusterRealization& real, std::size_t n,
                                    double offset = 1e-4, std::size_t M = 2048);

/// Central-difference |F'(z)| for F = e^{-C*_{1,n}} phi_n.
double rescaled_derivative_modulus(const ClusterRealization& real, Complex z, std::size_t n,
                                   double h = 1e-5);

}  // namespace hl
