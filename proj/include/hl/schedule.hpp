#pragma once

// Deterministic capacity sequences for the regularised HL(alpha) model.
//
//   c*_k      = c / (1 + alpha c (k - 1))            closed-form schedule
//   C*_{k,n}  = sum_{i=k}^n c*_i                      (empty sum = 0)
//   c~_k      = c exp(-alpha C~_{1,k-1})              regularisation at infinity
//
// alpha = 0 is the constant-capacity model: c*_k = c, C*_{k,n} = (n-k+1) c.

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace hl {

struct ScheduleParams {
  double alpha = 1.0;
  double c = 0.01;
  std::size_t n_max = 0;

  /// Throws std::invalid_argument unless alpha in [0, 2) and c > 0.
  void validate() const;
};

double c_star(const ScheduleParams& params, std::size_t k);

/// c*_k with O(1) partial sums C*_{k,n} after O(n_max) set-up.
///
/// Prefix sums are accumulated in long double with Neumaier compensation;
/// the exact inequalities checked against them hold to ~1e-15 relative even
/// at n_max = 1e6.
class CapacitySchedule {
 public:
  explicit CapacitySchedule(ScheduleParams params);

  const ScheduleParams& params() const { return params_; }
  std::size_t n_max() const { return params_.n_max; }

  double c(std::size_t k) const;

  /// C*_{k,n}; k = n + 1 gives the empty sum. Throws std::out_of_range for
  /// k = 0, n > n_max or k > n + 1.
  double C(std::size_t k, std::size_t n) const;
  long double C_exact(std::size_t k, std::size_t n) const;

  /// C*_{1,k}, k = 0..n_max.
  long double prefix(std::size_t k) const { return prefix_.at(k); }

 private:
  ScheduleParams params_;
  std::vector<long double> prefix_;
};

/// The comparator schedule c~_k = c exp(-alpha C~_{1,k-1}).
class InftySchedule {
 public:
  explicit InftySchedule(ScheduleParams params);

  const ScheduleParams& params() const { return params_; }
  double c(std::size_t k) const { return double(tilde_.at(k)); }
  long double prefix(std::size_t k) const { return tilde_prefix_.at(k); }

 private:
  ScheduleParams params_;
  std::vector<long double> tilde_;         // index 0 unused
  std::vector<long double> tilde_prefix_;  // C~_{1,k}
};

InftySchedule tilde_schedule(const ScheduleParams& params);

/// Relative error of the log approximation to C*_{k,n}:
/// C*_{k,n} = (1/alpha) log((1 + alpha c n)/(1 + alpha c (k-1))) (1 + eps).
/// Requires alpha > 0 and 1 <= k <= n.
double epsilon_kn(const CapacitySchedule& schedule, std::size_t k, std::size_t n);

/// Upper bound alpha c / log(1 + alpha c n) for epsilon_kn, uniform in k.
double epsilon_bound(const ScheduleParams& params, std::size_t n);

/// kappa_n = c*_n - c exp(-alpha C*_{1,n-1}), n >= 2.
double kappa_defect(const CapacitySchedule& schedule, std::size_t n);
double kappa_bound(const ScheduleParams& params, std::size_t n);

/// C*_{1,n} - C~_{1,n}.
double schedule_gap(const CapacitySchedule& schedule, const InftySchedule& infty, std::size_t n);

/// Mesh constant of the uniform-convergence argument and the grid error it
/// implies for a fixed M-point circle grid.
struct MeshParams {
  double gamma = 0;
  double L = 0;  // gamma n^{3/2}; astronomically larger than practical grids
  double alpha = 0;
  double c = 0;
  double r = 0;
  std::size_t n = 0;

  /// (gamma / 4 pi) (2 pi / M) n log n: the Lipschitz bound on |M_n(z) - M_n(w)|
  /// between neighbouring grid points.
  double grid_error_bound(std::size_t M) const;
};

MeshParams mesh_params(double alpha, double c, double r, std::size_t n);

/// Worst cases of the schedule inequalities over n <= n_max. Ratios are
/// value / bound, so every *_ratio must stay <= 1 (up to rounding slack).
struct ScheduleCheckReport {
  double alpha = 0;
  double c = 0;
  std::size_t n_max = 0;
  std::size_t pairs_checked = 0;  // sampled (k, n) for eps and the (1+ack)^{1+eps} bound

  double min_gap = 0, max_gap = 0;  // C*_{1,n} - C~_{1,n}
  double gap_limit = 0;             // 6c
  double total_capacity = 0;        // C*_{1,n_max}, the scale of gap rounding
  double min_eps = 0, max_eps_ratio = 0;
  double min_kappa_ratio = 0, max_kappa_ratio = 0;
  double min_tilde_ratio = 0, max_tilde_ratio = 0;  // c~_n / c*_n
  double tilde_ratio_limit = 0;                     // e^{alpha(alpha+6)c}
  double max_power_ratio = 0;  // eps log(1+ack) / log(1 + ac e^{ac})

  /// True when every inequality holds with relative slack `slack`.
  bool passed(double slack = 1e-12) const;
};

/// Gap, kappa and c~/c* are checked at every n; eps and the power bound on
/// a deterministic sample of (k, n) pairs (both ends of every k range plus
/// log-spaced interior points and fixed-seed random pairs).
ScheduleCheckReport check_schedule(const ScheduleParams& params, std::size_t n_max);

/// CSV dump: k, c_star, C_star_1k, c_tilde, C_tilde_1k, gap (k = 1..n_max).
void write_schedule_csv(std::ostream& out, const CapacitySchedule& schedule,
                        const InftySchedule& infty);

}  // namespace hl
