#include "hl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace hl {

namespace {

std::vector<Complex> twiddles(std::size_t M) {
  std::vector<Complex> w(M);
  for (std::size_t j = 0; j < M; ++j)
    w[j] = std::polar(1.0, 2.0 * std::numbers::pi * double(j) / double(M));
  return w;
}

Complex project(const FieldSample& field, std::size_t m, const std::vector<Complex>& w) {
  const std::size_t M = field.grid();
  Complex acc = 0;
  for (std::size_t j = 0; j < M; ++j) acc += field.values[Eigen::Index(j)] * w[(j * m) % M];
  return std::pow(field.r, double(m)) * acc / double(M);
}

}  // namespace

Complex laurent_projection(const FieldSample& field, std::size_t m) {
  field.validate();
  return project(field, m, twiddles(field.grid()));
}

LaurentSpectrum extract_spectrum(const FieldSample& field, std::size_t m_max) {
  field.validate();
  const std::size_t M = field.grid();
  if (M < 4 * m_max)
    throw GridTooSmallError("grid size M = " + std::to_string(M) + " is below 4 * m_max = " +
                            std::to_string(4 * m_max));
  LaurentSpectrum out;
  out.r = field.r;
  out.m_max = m_max;
  out.grid = M;
  out.coeffs.resize(Eigen::Index(m_max + 1));
  const auto w = twiddles(M);
  for (std::size_t m = 0; m <= m_max; ++m) out.coeffs[Eigen::Index(m)] = project(field, m, w);
  const double sup = field.values.cwiseAbs().maxCoeff();
  out.aliasing_bound = sup * std::pow(field.r, -double(M - m_max));
  return out;
}

FieldSample fluctuation_field(const ClusterRealization& real, double r, std::size_t M,
                              std::size_t n) {
  FieldSample f = error_field(real, r, M, n);
  f.values *= std::sqrt(double(n));
  return f;
}

ModeSums mode_sums(const ClusterRealization& real, std::size_t n, std::size_t m_max) {
  if (n > real.size()) throw std::out_of_range("mode_sums: n exceeds cluster size");
  const auto& s = real.schedule();
  ModeSums out;
  out.n = n;
  out.m_max = m_max;
  out.sums = Eigen::VectorXcd::Zero(Eigen::Index(m_max + 1));
  const double root_n = std::sqrt(double(n));
  for (std::size_t k = 1; k <= n; ++k) {
    const Complex ratio = real.rotation(k) * double(std::exp(-s.C_exact(k + 1, n)));
    Complex t = 2.0 * s.c(k) * root_n * ratio;
    for (std::size_t m = 0; m <= m_max; ++m) {
      out.sums[Eigen::Index(m)] += t;
      t *= ratio;
    }
  }
  return out;
}

Complex mode_increment(const ClusterRealization& real, std::size_t k, std::size_t n,
                       std::size_t m) {
  if (k == 0 || k > n || n > real.size())
    throw std::out_of_range("mode_increment requires 1 <= k <= n <= cluster size");
  const auto& s = real.schedule();
  const double decay = double(std::exp(-(long double)(m + 1) * s.C_exact(k + 1, n)));
  return 2.0 * s.c(k) * std::sqrt(double(n)) * std::polar(decay, double(m + 1) * real.angles()[k - 1]);
}

double finite_n_mode_variance(const CapacitySchedule& schedule, std::size_t n, std::size_t m) {
  long double total = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    const long double ck = schedule.c(k);
    total += 2.0L * ck * ck * (long double)n *
             std::exp(-2.0L * (long double)(m + 1) * schedule.C_exact(k + 1, n));
  }
  return double(total);
}

ResidualSup residual_sup(const ClusterRealization& real, std::size_t n, double r, std::size_t M,
                         std::size_t m_max) {
  ResidualSup out;
  if (n == 0) return out;
  const FieldSample field = fluctuation_field(real, r, M, n);
  const ModeSums sums = mode_sums(real, n, m_max);
  const auto grid = circle_grid(r, M);
  for (std::size_t j = 0; j < M; ++j) {
    const Complex zinv = 1.0 / grid[j];
    Complex approx = 0;
    Complex power = 1;
    for (std::size_t m = 0; m <= m_max; ++m) {
      approx += sums.sums[Eigen::Index(m)] * power;
      power *= zinv;
    }
    out.sup = std::max(out.sup, std::abs(field.values[Eigen::Index(j)] - approx));
  }
  const auto& s = real.schedule();
  const double root_n = std::sqrt(double(n));
  for (std::size_t k = 1; k <= n; ++k) {
    const double e = double(std::exp(-s.C_exact(k + 1, n)));
    const double q = e / r;
    out.tail_bound += 2.0 * s.c(k) * root_n * e * std::pow(q, double(m_max + 1)) / (1.0 - q);
  }
  return out;
}

double tail_mass(std::span<const LaurentSpectrum> spectra, std::size_t T, double r) {
  if (spectra.empty()) return 0;
  double total = 0;
  for (const auto& sp : spectra) {
    if (T > sp.m_max)
      throw std::invalid_argument("tail cutoff T = " + std::to_string(T) + " exceeds m_max = " +
                                  std::to_string(sp.m_max));
    for (std::size_t m = T; m <= sp.m_max; ++m)
      total += std::norm(sp.coeffs[Eigen::Index(m)]) * std::pow(r, -double(m));
  }
  return total / double(spectra.size());
}

std::vector<double> dh_level_radii(std::size_t L) {
  std::vector<double> radii(L);
  for (std::size_t m = 0; m < L; ++m) radii[m] = 1.0 + std::ldexp(1.0, -int(m));
  return radii;
}

std::vector<FieldSample> fluctuation_levels(const ClusterRealization& real, std::size_t n,
                                            std::size_t L, std::size_t M) {
  std::vector<FieldSample> out;
  for (double r : dh_level_radii(L)) out.push_back(fluctuation_field(real, r, M, n));
  return out;
}

DHDistance dH_distance(std::span<const FieldSample> f, std::span<const FieldSample> g) {
  if (f.size() != g.size())
    throw std::invalid_argument("dH_distance: level counts differ (" + std::to_string(f.size()) +
                                " vs " + std::to_string(g.size()) + ")");
  const auto radii = dh_level_radii(f.size());
  DHDistance out;
  for (std::size_t m = 0; m < f.size(); ++m) {
    if (f[m].grid() != g[m].grid() || f[m].grid() == 0)
      throw std::invalid_argument("dH_distance: grid sizes differ at level " + std::to_string(m));
    if (std::abs(f[m].r - radii[m]) > 1e-12 || std::abs(g[m].r - radii[m]) > 1e-12)
      throw std::invalid_argument("dH_distance: level " + std::to_string(m) +
                                  " is not sampled at radius 1 + 2^-" + std::to_string(m));
    const double sup = (f[m].values - g[m].values).cwiseAbs().maxCoeff();
    out.value += std::ldexp(std::min(1.0, sup), -int(m));
  }
  out.truncation_bound = std::ldexp(1.0, 1 - int(f.size()));
  return out;
}

}  // namespace hl
