#pragma once

// Test-side oracles and generators. Nothing here calls into the library's
// curvature, integration or projective code; closed forms are evaluated
// directly and derivatives come from plain difference quotients or quadrature.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "cpd/projective.hpp"
#include "cpd/types.hpp"

namespace oracle {

using cpd::Coordinates;
using cpd::Tangent;
inline constexpr double kPi = std::numbers::pi;

inline Coordinates point(std::initializer_list<double> xs) {
  Coordinates c(static_cast<int>(xs.size()));
  int i = 0;
  for (double v : xs) c[i++] = v;
  return c;
}

// Standard photon of Einstein-de Sitter, λ(s) = (0, 0, 3 s^{1/5}, s^{3/5}) for s > 0.
inline Coordinates photon(double s) { return point({0.0, 0.0, 3.0 * std::pow(s, 0.2), std::pow(s, 0.6)}); }
inline Tangent photon_velocity(double s) {
  return point({0.0, 0.0, 0.6 * std::pow(s, -0.8), 0.6 * std::pow(s, -0.4)});
}

// The projective parameter of the standard photon normalized at s0 = 1.
inline double photon_parameter(double s) {
  const double w = std::pow(s, 1.4);
  return 5.0 * (w - 1.0) / (w + 6.0);
}

// Einstein-de Sitter Ricci tensor, diag((2/3) t^{-2/3}, ..., (2/3) t^{-2}).
inline cpd::Matrix eds_ricci(double t, int n = 4) {
  cpd::Matrix r = cpd::Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) r(i, i) = (2.0 / 3.0) * std::pow(t, -2.0 / 3.0);
  r(n - 1, n - 1) = (2.0 / 3.0) * std::pow(t, -2.0);
  return r;
}

inline double eds_scalar(double t) { return (4.0 / 3.0) / (t * t); }

// Five-point central difference of a scalar function.
inline double derivative(const std::function<double(double)>& f, double x, double h = 1e-3) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Poincaré distance on (-1, 1) by integrating the line element 2 du / (1 - u^2).
inline double poincare_by_quadrature(double u1, double u2) {
  return std::abs(simpson([](double u) { return 2.0 / (1.0 - u * u); }, u1, u2));
}

// Schwarzian by nested difference quotients at step h, Richardson-extrapolated
// from h and h/2.
inline double schwarzian(const std::function<double(double)>& f, double s, double h = 2e-2) {
  auto at = [&](double k) {
    const double d1 = (f(s + k) - f(s - k)) / (2 * k);
    const double d2 = (f(s + k) - 2 * f(s) + f(s - k)) / (k * k);
    const double d3 = (f(s + 2 * k) - 2 * f(s + k) + 2 * f(s - k) - f(s - 2 * k)) / (2 * k * k * k);
    return d3 / d1 - 1.5 * (d2 / d1) * (d2 / d1);
  };
  return (4.0 * at(h / 2) - at(h)) / 3.0;
}

// An arc of RP^1 between affine values alpha < beta (beta may be +inf),
// described by unwrapped angles atan(alpha) < atan(beta).
inline cpd::DevelopmentArc proper_arc(double alpha, double beta) {
  cpd::DevelopmentArc arc;
  arc.kind = cpd::ArcKind::ProperArc;
  arc.angle_lo = std::atan(alpha);
  arc.angle_hi = std::isinf(beta) ? kPi / 2 : std::atan(beta);
  arc.start = cpd::ProjectivePoint::affine(alpha);
  arc.end = std::isinf(beta) ? cpd::ProjectivePoint::infinity() : cpd::ProjectivePoint::affine(beta);
  return arc;
}

// |log of the cross ratio| for four affine values a < p < q < b.
inline double cross_ratio_distance(double a, double p, double q, double b) {
  return std::abs(std::log(((q - a) * (b - p)) / ((b - q) * (p - a))));
}

// Hand-rolled generators for the property suites.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  // Point with spatial coordinates in [-half, half] and log-uniform time.
  Coordinates spacetime_point(int n, double tmin, double tmax, double half = 2.0) {
    Coordinates x(n);
    for (int i = 0; i + 1 < n; ++i) x[i] = uniform(-half, half);
    x[n - 1] = log_uniform(tmin, tmax);
    return x;
  }

  cpd::Vector unit_vector(int m) {
    std::normal_distribution<double> g(0.0, 1.0);
    cpd::Vector e(m);
    do {
      for (int i = 0; i < m; ++i) e[i] = g(rng_);
    } while (e.norm() < 1e-3);
    return e / e.norm();
  }

  // Future null vector for a diagonal metric t^{2a} dx^2 - dt^2 at time t.
  Tangent frw_null(int n, double t, double a) {
    const cpd::Vector e = unit_vector(n - 1);
    Tangent v(n);
    v.head(n - 1) = e;
    v[n - 1] = std::pow(t, a);
    return v;
  }

  double in_interval() { return uniform(-0.95, 0.95); }

  // Moebius coefficients with entries in [-2, 2] and |det| >= 0.5.
  std::array<double, 4> moebius() {
    for (;;) {
      std::array<double, 4> m{uniform(-2, 2), uniform(-2, 2), uniform(-2, 2), uniform(-2, 2)};
      if (std::abs(m[0] * m[3] - m[1] * m[2]) >= 0.5) return m;
    }
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace oracle
