#pragma once

// Laurent coefficients of the rescaled fluctuation field sqrt(n) M_n and the
// per-particle mode sums that approximate them:
//
//   a_{k,n}(m) = 2 c*_k sqrt(n) e^{i theta_k (m+1)} e^{-(m+1) C*_{k+1,n}},
//   M(n, m)    = sum_k a_{k,n}(m).

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "hl/cluster.hpp"

namespace hl {

class GridTooSmallError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LaurentSpectrum {
  double r = 0;
  std::size_t m_max = 0;
  std::size_t grid = 0;
  Eigen::VectorXcd coeffs;      // a_0 .. a_{m_max}
  double aliasing_bound = 0;    // sup|F| r^{-(M - m_max)}
};

/// r^m (1/M) sum_j F(r w^j) w^{jm}, w = e^{2 pi i / M}: the z^{-m} coefficient
/// up to aliasing from modes m + M, m + 2M, ... No grid-size guard.
Complex laurent_projection(const FieldSample& field, std::size_t m);

/// Coefficients a_0..a_{m_max}. Throws GridTooSmallError if M < 4 m_max.
LaurentSpectrum extract_spectrum(const FieldSample& field, std::size_t m_max);

/// sqrt(n) M_n on the circle of radius r.
FieldSample fluctuation_field(const ClusterRealization& real, double r, std::size_t M,
                              std::size_t n);

struct ModeSums {
  std::size_t n = 0;
  std::size_t m_max = 0;
  Eigen::VectorXcd sums;  // M(n, 0) .. M(n, m_max)
};

/// Direct O(n m_max) evaluation from the angles and the schedule.
ModeSums mode_sums(const ClusterRealization& real, std::size_t n, std::size_t m_max);

/// a_{k,n}(m).
Complex mode_increment(const ClusterRealization& real, std::size_t k, std::size_t n,
                       std::size_t m);

/// sum_k 2 (c*_k)^2 n e^{-2(m+1) C*_{k+1,n}}: the exact variance of Re M(n, m)
/// (and of Im M(n, m)) at finite n. Tends to 2/(alpha(2m+2-alpha)).
double finite_n_mode_variance(const CapacitySchedule& schedule, std::size_t n, std::size_t m);

struct ResidualSup {
  double sup = 0;         // sup_grid |sqrt(n) M_n(z) - sum_{m <= m_max} M(n,m) z^{-m}|
  double tail_bound = 0;  // bound on the discarded modes m > m_max
};

ResidualSup residual_sup(const ClusterRealization& real, std::size_t n, double r, std::size_t M,
                         std::size_t m_max = 16);

/// Ensemble mean of sum_{m=T}^{m_max} |a_m|^2 r^{-m}.
double tail_mass(std::span<const LaurentSpectrum> spectra, std::size_t T, double r);

/// Radii 1 + 2^{-m}, m = 0..L-1.
std::vector<double> dh_level_radii(std::size_t L);

/// sqrt(n) M_n sampled on every level radius.
std::vector<FieldSample> fluctuation_levels(const ClusterRealization& real, std::size_t n,
                                            std::size_t L, std::size_t M);

struct DHDistance {
  double value = 0;
  double truncation_bound = 0;  // 2^{-L+1}
};

/// sum_m 2^{-m} min(1, sup_grid |f - g|) over matched levels. Throws
/// std::invalid_argument for mismatched level counts, radii or grids.
DHDistance dH_distance(std::span<const FieldSample> f, std::span<const FieldSample> g);

}  // namespace hl
