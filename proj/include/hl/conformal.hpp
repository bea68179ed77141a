#pragma once

// Single-particle conformal maps of the exterior disk {|z| > 1}.
//
// Every map in the particle class has the form
//
//     f_c(z) = e^c z exp(2c/(z - 1) + delta_c(z)),
//
// with logarithmic capacity log f'(inf) = c. Two members are provided: the
// idealized map (delta == 0) and the slit map attaching the radial segment
// (1, tip] at z = 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hl {

enum class ParticleFamily { Slit, Idealized };

inline std::string_view to_string(ParticleFamily family) {
  return family == ParticleFamily::Slit ? "slit" : "idealized";
}

inline ParticleFamily parse_family(std::string_view name) {
  if (name == "slit") return ParticleFamily::Slit;
  if (name == "idealized") return ParticleFamily::Idealized;
  throw std::invalid_argument("unknown particle family '" + std::string(name) +
                              "' (expected slit|idealized)");
}

/// Raised for evaluation points outside the closed exterior disk, or at the
/// pole z = 1 of the idealized map.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when continuous-logarithm tracking cannot keep the branch.
class BranchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultCapacityCap = 0.5;

namespace detail {

template <std::floating_point Scalar>
void check_exterior(const std::complex<Scalar>& z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw DomainError("evaluation point is not finite");
  // The unit circle itself is admitted so boundary limits (z = -1, the
  // attach point) can be evaluated.
  if (std::norm(z) < Scalar(1) - 8 * std::numeric_limits<Scalar>::epsilon())
    throw DomainError("evaluation point lies inside the unit disk");
}

}  // namespace detail

/// Idealized particle: e^c z exp(2c/(z-1)).
template <std::floating_point Scalar>
std::complex<Scalar> eval_idealized(Scalar c, const std::complex<Scalar>& z) {
  detail::check_exterior(z);
  if (z == std::complex<Scalar>(1)) throw DomainError("idealized map has a pole at z = 1");
  return std::exp(c) * z * std::exp(Scalar(2) * c / (z - Scalar(1)));
}

/// Slit particle of capacity c.
///
/// Conjugating by w = (z-1)/(z+1) sends the exterior disk to the right half
/// plane, where w -> sqrt(w^2 + l^2)/sqrt(1 + l^2), l^2 = e^c - 1, cuts the
/// segment (0, l]. The composite simplifies to
///
///     f(z) = ((z+1) (s1 + s))^2 / (4z),  s = sqrt(w^2 + l^2),  s1 = e^{c/2},
///
/// which stays well conditioned both for large |z| and near z = -1.
template <std::floating_point Scalar>
std::complex<Scalar> eval_slit(Scalar c, const std::complex<Scalar>& z) {
  detail::check_exterior(z);
  if (z == std::complex<Scalar>(-1)) return z;
  const Scalar ell2 = std::expm1(c);
  const Scalar s1 = std::exp(c / 2);
  const std::complex<Scalar> a = z + Scalar(1);
  const std::complex<Scalar> w = (z - Scalar(1)) / a;
  const std::complex<Scalar> s = std::sqrt(w * w + ell2);
  const std::complex<Scalar> q = a * (s1 + s);
  return q * q / (Scalar(4) * z);
}

/// Tip of the slit attached by eval_slit: (sqrt(1 + l^2) + l)^2.
template <std::floating_point Scalar>
Scalar slit_tip(Scalar c) {
  const Scalar ell = std::sqrt(std::expm1(c));
  const Scalar s1 = std::exp(c / 2);
  return (s1 + ell) * (s1 + ell);
}

/// A member of the particle class with capacity c in (0, c_max].
///
/// Constants that only depend on c are cached so that repeated evaluation
/// inside a composed cluster map does no transcendental work besides the one
/// sqrt (slit) or exp (idealized) per call.
template <std::floating_point Scalar>
class ParticleMap {
 public:
  ParticleMap() = default;

  ParticleMap(ParticleFamily family, Scalar capacity, Scalar c_max = Scalar(kDefaultCapacityCap))
      : family_(family), capacity_(capacity) {
    if (!(capacity > 0) || !std::isfinite(capacity))
      throw std::invalid_argument("particle capacity must be positive");
    if (capacity > c_max)
      throw std::invalid_argument("particle capacity " + std::to_string(capacity) +
                                  " exceeds the cap c_max = " + std::to_string(c_max));
    if (family == ParticleFamily::Slit) {
      k0_ = std::expm1(capacity);    // l^2
      k1_ = std::exp(capacity / 2);  // sqrt(1 + l^2)
    } else {
      k0_ = std::exp(capacity);
      k1_ = 2 * capacity;
    }
  }

  ParticleFamily family() const { return family_; }
  Scalar capacity() const { return capacity_; }

  /// Slit parameter l = sqrt(e^c - 1); zero for the idealized family.
  Scalar slit_parameter() const {
    return family_ == ParticleFamily::Slit ? std::sqrt(k0_) : Scalar(0);
  }

  std::complex<Scalar> operator()(const std::complex<Scalar>& z) const {
    detail::check_exterior(z);
    if (family_ == ParticleFamily::Idealized && z == std::complex<Scalar>(1))
      throw DomainError("idealized map has a pole at z = 1");
    return eval_unchecked(z);
  }

  /// Hot path used by cluster composition: no domain checks.
  std::complex<Scalar> eval_unchecked(const std::complex<Scalar>& z) const {
    if (family_ == ParticleFamily::Slit) {
      if (z == std::complex<Scalar>(-1)) return z;
      const std::complex<Scalar> a = z + Scalar(1);
      const std::complex<Scalar> w = (z - Scalar(1)) / a;
      const std::complex<Scalar> s = std::sqrt(w * w + k0_);
      const std::complex<Scalar> q = a * (k1_ + s);
      return q * q / (Scalar(4) * z);
    }
    return k0_ * z * std::exp(k1_ / (z - Scalar(1)));
  }

 private:
  ParticleFamily family_ = ParticleFamily::Idealized;
  Scalar capacity_ = 0;
  Scalar k0_ = 0;
  Scalar k1_ = 0;
};

/// Particle attached at e^{i theta}: z -> e^{i theta} f(e^{-i theta} z).
template <std::floating_point Scalar>
struct RotatedParticleMap {
  ParticleMap<Scalar> base;
  Scalar angle = 0;

  std::complex<Scalar> rotation() const { return std::polar(Scalar(1), angle); }
};

template <std::floating_point Scalar>
std::complex<Scalar> eval_rotated(const RotatedParticleMap<Scalar>& map,
                                  const std::complex<Scalar>& z) {
  const std::complex<Scalar> rot = map.rotation();
  return rot * map.base(std::conj(rot) * z);
}

/// log f'(inf), extrapolated from log(f(R)/R) at R = 1e4, 1e5, 1e6.
///
/// log(f(R)/R) = c + b_1/R + b_2/R^2 + ..., so quadratic extrapolation in
/// h = 1/R to h = 0 removes the first two correction terms.
template <std::floating_point Scalar>
Scalar capacity_estimate(const ParticleMap<Scalar>& map) {
  constexpr Scalar radii[3] = {Scalar(1e4), Scalar(1e5), Scalar(1e6)};
  Scalar h[3];
  Scalar g[3];
  for (int i = 0; i < 3; ++i) {
    h[i] = Scalar(1) / radii[i];
    const std::complex<Scalar> z(radii[i], Scalar(0));
    g[i] = std::log(std::abs(map(z) / z));
  }
  Scalar estimate = 0;
  for (int i = 0; i < 3; ++i) {
    Scalar weight = 1;
    for (int j = 0; j < 3; ++j)
      if (j != i) weight *= h[j] / (h[j] - h[i]);
    estimate += weight * g[i];
  }
  return estimate;
}

/// Continuous logarithm of g(z) = f(z) / (e^c z), anchored at g(inf) = 1 and
/// carried along the ray from a far point down to z.
///
/// Each step adds the principal log of the ratio of successive values. A step
/// whose ratio turns by more than pi/4 is bisected; if bisection cannot
/// restore small steps the branch is reported as lost.
template <std::floating_point Scalar, typename Map>
std::complex<Scalar> continuous_log_ratio(const Map& f, Scalar capacity,
                                          const std::complex<Scalar>& z) {
  const Scalar ec = std::exp(capacity);
  auto ratio = [&](const std::complex<Scalar>& p) { return f(p) / (ec * p); };

  const Scalar modulus = std::abs(z);
  const std::complex<Scalar> direction = z / modulus;
  const Scalar far = std::max(Scalar(1e4), Scalar(100) * modulus);

  // Seed: principal log is exact at the anchor because |g - 1| is tiny there.
  std::complex<Scalar> prev_value = ratio(far * direction);
  std::complex<Scalar> acc = std::log(prev_value);

  constexpr int kBaseSteps = 96;
  constexpr int kMaxDepth = 20;
  const Scalar log_far = std::log(far);
  const Scalar log_near = std::log(modulus);
  auto point_at = [&](Scalar t) {
    return t == Scalar(1) ? z : std::exp(log_far + t * (log_near - log_far)) * direction;
  };

  struct Segment {
    Scalar from;
    Scalar to;
    int depth;
  };
  std::vector<Segment> stack;
  for (int i = kBaseSteps - 1; i >= 0; --i)
    stack.push_back({Scalar(i) / kBaseSteps, Scalar(i + 1) / kBaseSteps, 0});
  while (!stack.empty()) {
    const Segment seg = stack.back();
    stack.pop_back();
    const std::complex<Scalar> value = ratio(point_at(seg.to));
    const std::complex<Scalar> step = std::log(value / prev_value);
    if (std::abs(step.imag()) > std::numbers::pi_v<Scalar> / 4) {
      if (seg.depth >= kMaxDepth)
        throw BranchError("continuous logarithm lost its branch near z = (" +
                          std::to_string(double(z.real())) + ", " +
                          std::to_string(double(z.imag())) + ")");
      const Scalar mid = (seg.from + seg.to) / 2;
      stack.push_back({mid, seg.to, seg.depth + 1});
      stack.push_back({seg.from, mid, seg.depth + 1});
      continue;
    }
    acc += step;
    prev_value = value;
  }
  return acc;
}

/// delta_c(z) = log(f(z)/(e^c z)) - 2c/(z-1) on the continuous branch.
/// Identically zero for the idealized family.
template <std::floating_point Scalar>
std::complex<Scalar> delta_residual(const ParticleMap<Scalar>& map,
                                    const std::complex<Scalar>& z) {
  detail::check_exterior(z);
  if (map.family() == ParticleFamily::Idealized) {
    if (z == std::complex<Scalar>(1)) throw DomainError("idealized map has a pole at z = 1");
    return {};
  }
  if (z == std::complex<Scalar>(1))
    throw DomainError("delta residual is singular at the attach point z = 1");
  const std::complex<Scalar> log_ratio = continuous_log_ratio<Scalar>(
      [&map](const std::complex<Scalar>& p) { return map.eval_unchecked(p); }, map.capacity(), z);
  return log_ratio - Scalar(2) * map.capacity() / (z - Scalar(1));
}

/// |delta_c(z)| |z - 1| (|z| - 1) / |z|: the quantity the class bound
/// controls by lambda c^{3/2}.
template <std::floating_point Scalar>
Scalar weighted_residual(const ParticleMap<Scalar>& map, const std::complex<Scalar>& z) {
  const Scalar m = std::abs(z);
  return std::abs(delta_residual(map, z)) * std::abs(z - Scalar(1)) * (m - Scalar(1)) / m;
}

/// Empirical class constant: sup over the grid of weighted_residual / c^{3/2}.
template <std::floating_point Scalar>
Scalar class_bound_ratio(const ParticleMap<Scalar>& map,
                         std::span<const std::complex<Scalar>> grid) {
  if (map.family() == ParticleFamily::Idealized) return 0;
  Scalar sup = 0;
  for (const auto& z : grid) sup = std::max(sup, weighted_residual(map, z));
  return sup / std::pow(map.capacity(), Scalar(1.5));
}

/// M equally spaced points on |z| = r, starting at angle 0.
template <std::floating_point Scalar>
std::vector<std::complex<Scalar>> circle_grid(Scalar r, std::size_t M) {
  std::vector<std::complex<Scalar>> pts(M);
  for (std::size_t j = 0; j < M; ++j)
    pts[j] = std::polar(r, Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(j) / Scalar(M));
  return pts;
}

/// Exterior points clustered around the attach point z = 1: radii 1 + s and
/// angles +-phi with s, phi log-spaced over [1e-4, 1], plus a coarse ring
/// at r = 1.5. Resolves the sqrt(c) length scale of a slit for c in
/// [1e-4, 0.5].
template <std::floating_point Scalar>
std::vector<std::complex<Scalar>> near_attach_grid(std::size_t per_decade = 8) {
  std::vector<Scalar> scales;
  const std::size_t count = 4 * per_decade + 1;
  for (std::size_t i = 0; i < count; ++i)
    scales.push_back(std::pow(Scalar(10), Scalar(-4) + Scalar(4) * Scalar(i) / Scalar(count - 1)));
  std::vector<std::complex<Scalar>> pts;
  for (Scalar s : scales) {
    pts.push_back(std::complex<Scalar>(Scalar(1) + s, 0));
    for (Scalar phi : scales) {
      pts.push_back(std::polar(Scalar(1) + s, phi));
      pts.push_back(std::polar(Scalar(1) + s, -phi));
    }
  }
  for (const auto& z : circle_grid(Scalar(1.5), 64)) pts.push_back(z);
  return pts;
}

}  // namespace hl
