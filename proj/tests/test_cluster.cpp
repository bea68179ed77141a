#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "hl/cluster.hpp"

using namespace hl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

std::vector<Complex> random_points(std::size_t count, std::uint64_t seed, double rmin, double rmax) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> rad(rmin, rmax), ang(0, kTwoPi);
  std::vector<Complex> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(std::polar(rad(gen), ang(gen)));
  return out;
}

}  // namespace

TEST_CASE("angle sampling is deterministic and prefix stable", "[cluster]") {
  const auto a = sample_angles(42, 1000);
  CHECK(a == sample_angles(42, 1000));
  const auto b = sample_angles(42, 1001);
  CHECK(std::equal(a.begin(), a.end(), b.begin()));
  CHECK(a != sample_angles(43, 1000));
  CHECK(sample_angles(1, 0).empty());
}

TEST_CASE("angles are uniform on [0, 2 pi)", "[cluster]") {
  const std::size_t n = 1000000;
  const auto a = sample_angles(2024, n);
  double sum = 0;
  for (double t : a) {
    REQUIRE(t >= 0.0);
    REQUIRE(t < kTwoPi);
    sum += t;
  }
  const double tol = 4 * kTwoPi / std::sqrt(12.0 * double(n));
  CHECK_THAT(sum / double(n), WithinAbs(std::numbers::pi, tol));
}

TEST_CASE("composition order and single maps", "[cluster]") {
  const ClusterRealization one({1.0, 0.1, 1}, ParticleFamily::Idealized, std::vector<double>{0.0});
  CHECK_THAT(std::abs(one.phi(2.0, 1) - 2.0 * std::exp(0.3)), WithinAbs(0, 1e-14));
  CHECK(one.phi(Complex(1.5, 0.5), 0) == Complex(1.5, 0.5));

  const ClusterRealization two({1.0, 0.05, 2}, ParticleFamily::Slit, std::vector<double>{0.4, 2.5});
  const ParticleMap<double> f1(ParticleFamily::Slit, c_star({1.0, 0.05}, 1));
  const ParticleMap<double> f2(ParticleFamily::Slit, c_star({1.0, 0.05}, 2));
  const RotatedParticleMap<double> g1{f1, 0.4}, g2{f2, 2.5};
  for (const Complex& z : random_points(20, 1, 1.01, 3.0)) {
    const Complex expected = eval_rotated(g1, eval_rotated(g2, z));
    CHECK_THAT(std::abs(two.phi(z, 2) - expected), WithinAbs(0, 1e-13));
    CHECK_THAT(std::abs(two.phi(z, 1) - eval_rotated(g1, z)), WithinAbs(0, 1e-13));
  }
  CHECK_THROWS_AS(two.phi(Complex(0.5, 0), 1), DomainError);
  CHECK_THROWS_AS(two.phi(Complex(2, 0), 3), std::out_of_range);
}

TEST_CASE("batch and pointwise composition agree bitwise", "[cluster]") {
  const ClusterRealization real({1.0, 0.02, 300}, ParticleFamily::Slit, 9);
  auto pts = random_points(64, 2, 1.05, 2.0);
  auto batch = pts;
  real.phi_inplace(batch, 300);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(batch[i] == real.phi(pts[i], 300));
}

TEST_CASE("error field closed forms", "[cluster]") {
  const ClusterRealization empty({1.0, 0.01, 0}, ParticleFamily::Slit, 1);
  CHECK(error_field(empty, 1.5, 64, 0).values.cwiseAbs().maxCoeff() == 0.0);

  const ClusterRealization one({0.0, 0.1, 1}, ParticleFamily::Idealized, std::vector<double>{0.0});
  const FieldSample f = error_field(one, 2.0, 64, 1);
  CHECK_THAT(f.values[0].real(), WithinAbs(2 * (std::exp(0.2) - 1), 1e-14));
  CHECK_THAT(f.values[0].real(), WithinAbs(0.442806, 1e-6));
  CHECK_THROWS_AS(error_field(one, 2.0, 48, 1), std::invalid_argument);
  CHECK_THROWS_AS(error_field(one, 1.0, 64, 1), std::invalid_argument);
}

TEST_CASE("trace reproduces the error field and is deterministic", "[cluster]") {
  const ClusterRealization real({1.0, 0.01, 400}, ParticleFamily::Slit, 5);
  const std::vector<std::size_t> cps{400};
  const auto trace = sup_error_trace(real, 1.5, 256, cps);
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].sup_error == error_field(real, 1.5, 256, 400).values.cwiseAbs().maxCoeff());
  CHECK_THAT(trace[0].bound, WithinRel(std::log(400.0) / 20.0, 1e-15));
  CHECK(trace[0].grid_error_bound == mesh_params(1.0, 0.01, 1.5, 400).grid_error_bound(256));

  const ClusterRealization again({1.0, 0.01, 400}, ParticleFamily::Slit, 5);
  const std::vector<std::size_t> many{10, 100, 50, 400, 100};
  const auto t1 = sup_error_trace(real, 1.5, 128, many);
  const auto t2 = sup_error_trace(again, 1.5, 128, many);
  REQUIRE(t1.size() == 4);
  for (std::size_t i = 0; i < t1.size(); ++i) CHECK(t1[i].sup_error == t2[i].sup_error);
  const std::vector<std::size_t> bad{0};
  CHECK_THROWS_AS(sup_error_trace(real, 1.5, 128, bad), std::invalid_argument);
}

TEST_CASE("increments telescope to the error field", "[cluster]") {
  std::mt19937_64 gen(3);
  for (auto family : {ParticleFamily::Slit, ParticleFamily::Idealized}) {
    const ClusterRealization real({1.0, 0.02, 200}, family, 77);
    for (const Complex& z : random_points(10, 4, 1.1, 3.0)) {
      const std::size_t n = 1 + gen() % 200;
      Complex sum = 0;
      for (std::size_t k = 1; k <= n; ++k) sum += increment_X(real, z, k, n);
      const Complex M = real.rescale(n) * real.phi(z, n) - z;
      CHECK_THAT(std::abs(sum - M), WithinAbs(0, 1e-10));
    }
    const Complex z(1.3, -0.4);
    const std::size_t n = 50;
    const Complex last = real.rescale(n) *
                         (real.phi(z, n) - real.phi(std::exp(real.schedule().c(n)) * z, n - 1));
    CHECK_THAT(std::abs(increment_X(real, z, n, n) - last), WithinAbs(0, 1e-14));
  }
}

TEST_CASE("increment size follows c_k / (e^{C_{k+1,n}} r - 1)", "[cluster]") {
  const ClusterRealization real({1.0, 0.01, 400}, ParticleFamily::Slit, 8);
  std::mt19937_64 gen(12);
  auto ratio = [&](std::uint64_t seed) {
    double worst = 0;
    for (const Complex& z : random_points(40, seed, 1.05, 3.0)) {
      const std::size_t n = 1 + gen() % 400, k = 1 + gen() % n;
      const double r = std::abs(z);
      const double scale =
          real.schedule().c(k) / (std::exp(real.schedule().C(k + 1, n)) * r - 1.0);
      worst = std::max(worst, std::abs(increment_X(real, z, k, n)) / scale);
    }
    return worst;
  };
  const double fitted = ratio(100);
  INFO("fitted constant " << fitted);
  CHECK(fitted < 50.0);
  CHECK(ratio(200) <= 1.5 * fitted);
}

TEST_CASE("conditional mean of the increment vanishes", "[cluster]") {
  const ClusterRealization real({1.0, 0.01, 60}, ParticleFamily::Slit, 21);
  CHECK(conditional_mean_check(real, Complex(2, 1), 1, 4096) <= 1e-10);
  std::mt19937_64 gen(5);
  for (int i = 0; i < 20; ++i) {
    const std::size_t k = 1 + gen() % 50;
    CHECK(conditional_mean_check(real, Complex(2, 1), k, 4096) <= 1e-8);
  }
  // Near the circle the trapezoid error is still visible and decays
  // geometrically in Q (at z = 2 + i it is already at rounding level).
  const Complex near = std::polar(1.005, 0.3);
  for (std::size_t k : {1u, 7u, 33u}) {
    const double r1 = conditional_mean_check(real, near, k, 1024);
    const double r2 = conditional_mean_check(real, near, k, 2048);
    INFO("k " << k << ": " << r1 << " -> " << r2);
    CHECK(r2 * 10 <= r1);
  }
  CHECK_THROWS_AS(conditional_mean_check(real, Complex(2, 1), 1, 1000), std::invalid_argument);
}

TEST_CASE("conditional variance sum matches explicit angle substitution", "[cluster]") {
  const std::size_t n = 12, Q = 16;
  const ScheduleParams p{1.0, 0.05, n};
  const auto base = sample_angles(3, n);
  const ClusterRealization real(p, ParticleFamily::Slit, base);
  const Complex z(1.4, 0.3);
  double oracle = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0;
    for (std::size_t j = 0; j < Q; ++j) {
      auto angles = base;
      angles[k - 1] = kTwoPi * double(j) / double(Q);
      const ClusterRealization swapped(p, ParticleFamily::Slit, angles);
      acc += std::norm(increment_X(swapped, z, k, n));
    }
    oracle += acc / double(Q);
  }
  CHECK_THAT(variation_estimate_T(real, z, n, Q), WithinRel(oracle, 1e-10));
}

TEST_CASE("variation estimate decays like 1/n", "[cluster]") {
  const ClusterRealization real({1.0, 0.01, 400}, ParticleFamily::Slit, 4);
  std::vector<double> T;
  for (std::size_t n : {100u, 200u, 400u}) T.push_back(variation_estimate_T(real, 1.5, n, 32));
  CHECK(T[0] > 0);
  CHECK(T[1] < T[0]);
  CHECK(T[2] < T[1]);
  const double nT0 = 100 * T[0], nT2 = 400 * T[2];
  CHECK(std::max(nT0, nT2) / std::min(nT0, nT2) <= 5.0);
  CHECK_THAT(variation_estimate_T(real, 1.5, 400, 64), WithinRel(T[2], 1e-6));
}

TEST_CASE("alpha = 0 witness", "[cluster]") {
  const auto w = epsilon_witness(0.05, ParticleFamily::Idealized);
  CHECK(w.lambda_hat == 0.0);
  CHECK_THAT(w.epsilon, WithinAbs(0.1 / (1 + std::exp(-0.05)), 1e-15));
  CHECK_THAT(w.epsilon, WithinAbs(0.051250, 1e-6));
  const auto ws = epsilon_witness(0.05, ParticleFamily::Slit);
  CHECK(ws.lambda_hat > 0.0);
  CHECK(ws.epsilon < w.epsilon);
  CHECK(ws.epsilon > 0.0);

  const std::vector<std::size_t> cps{50, 100, 150, 200};
  const auto t = alpha0_trace(0.05, ParticleFamily::Idealized, std::uint64_t(3), 1.5, 256, 200, cps);
  CHECK(t.trace.size() == 4);
  CHECK(window_max(t.trace, 100, 200) >= t.trace.back().sup_error);
  CHECK(window_max(t.trace, 201, 300) == 0.0);
  const auto fixed = alpha0_trace(0.05, ParticleFamily::Idealized, sample_angles(3, 200), 1.5, 256, cps);
  CHECK(fixed.trace.back().sup_error == t.trace.back().sup_error);
}

TEST_CASE("boundary trace", "[cluster]") {
  const ClusterRealization empty({1.0, 0.01, 0}, ParticleFamily::Slit, 1);
  for (const Complex& w : boundary_trace(empty, 0, 1e-4, 128))
    CHECK_THAT(std::abs(w), WithinAbs(1 + 1e-4, 1e-12));

  const ClusterRealization real({1.0, 0.01, 1000}, ParticleFamily::Slit, 6);
  const auto pts = boundary_trace(real, 1000, 1e-4, 1024);
  const double cap = std::exp(real.schedule().C(1, 1000)) * (1 + 1e-4);
  double top = 0;
  for (const Complex& w : pts) {
    CHECK(std::abs(w) >= 1.0);
    top = std::max(top, std::abs(w));
  }
  INFO("max modulus / capacity envelope = " << top / cap);
  CHECK(top <= 1.5 * cap);
}

TEST_CASE("rescaled derivative obeys the distortion envelope", "[cluster]") {
  const ClusterRealization real({1.0, 0.02, 300}, ParticleFamily::Slit, 10);
  std::mt19937_64 gen(1);
  for (const Complex& z : random_points(60, 31, 1.2, 3.0)) {
    const std::size_t n = 1 + gen() % 300;
    const double d = rescaled_derivative_modulus(real, z, n);
    const double m2 = std::norm(z);
    CHECK(d >= (m2 - 1) / m2 - 1e-4);
    CHECK(d <= m2 / (m2 - 1) + 1e-4);
  }
}

TEST_CASE("capacity of the composed map", "[cluster]") {
  const ClusterRealization real({1.0, 0.01, 500}, ParticleFamily::Slit, 12);
  const double R = 1e6;
  for (std::size_t n : {1u, 100u, 500u}) {
    const double ratio = std::abs(real.phi(Complex(R, 0), n)) / R;
    CHECK_THAT(ratio, WithinRel(std::exp(real.schedule().C(1, n)), 1e-4));
  }
}

TEST_CASE("overflow during composition raises the numeric guard", "[cluster]") {
  const ClusterRealization real({1.0, 0.01, 5}, ParticleFamily::Slit, 1);
  CHECK_THROWS_AS(real.phi(Complex(1e308, 1e308), 5), NumericGuardError);
}
