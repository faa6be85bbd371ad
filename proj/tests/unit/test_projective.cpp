#include "doctest.h"

#include <cmath>

#include "cpd/catalog.hpp"
#include "cpd/error.hpp"
#include "cpd/geodesic.hpp"
#include "cpd/projective.hpp"
#include "support/oracles.hpp"

using namespace cpd;
using oracle::kPi;
using oracle::point;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no cpd::Error raised");
  return Errc::InvalidArgument;
}

GeodesicTrajectory standard_photon(double budget = 50.0) {
  ShootSpec s;
  s.start = point({0, 0, 3, 1});
  s.direction = point({0, 0, 0.6, 0.6});
  s.affine_budget = budget;
  return shoot(einstein_de_sitter(4), s);
}

// Arc through the images of a proper arc's endpoints under an
// orientation-preserving map.
DevelopmentArc pushed(const DevelopmentArc& arc, const Moebius& m) {
  DevelopmentArc out = arc;
  out.start = m.apply(arc.start);
  out.end = m.apply(arc.end);
  out.angle_lo = out.start.angle();
  out.angle_hi = out.end.angle();
  while (out.angle_hi <= out.angle_lo) out.angle_hi += kPi;
  return out;
}

}  // namespace

TEST_SUITE("projective") {
  TEST_CASE("poincare distance examples") {
    for (double u : {-0.9, 0.0, 0.3, 0.999}) CHECK(poincare_distance(u, u) == 0.0);
    CHECK(poincare_distance(0.0, 0.5) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    CHECK(poincare_distance(0.0, 0.5) == doctest::Approx(oracle::poincare_by_quadrature(0.0, 0.5)).epsilon(1e-10));
    CHECK(poincare_distance(0.0, 0.01) == doctest::Approx(std::log(101.0 / 99.0)).epsilon(1e-14));
    CHECK(poincare_distance(0.0, 0.01) == doctest::Approx(oracle::poincare_by_quadrature(0.0, 0.01)).epsilon(1e-10));
    CHECK(poincare_distance(0.5, 0.0) == poincare_distance(0.0, 0.5));
    CHECK(code_of([] { poincare_distance(1.0, 0.0); }) == Errc::OutOfInterval);
    CHECK(code_of([] { poincare_distance(0.0, -1.5); }) == Errc::OutOfInterval);
    CHECK(code_of([] { poincare_distance(std::nan(""), 0.0); }) == Errc::OutOfInterval);
  }

  TEST_CASE("property: poincare distance is a metric") {
    oracle::Gen gen(31);
    for (int k = 0; k < 500; ++k) {
      const double a = gen.in_interval(), b = gen.in_interval(), c = gen.in_interval();
      const double ab = poincare_distance(a, b);
      CHECK(ab >= 0.0);
      CHECK(ab == doctest::Approx(poincare_distance(b, a)).epsilon(1e-14));
      CHECK(ab <= poincare_distance(a, c) + poincare_distance(c, b) + 1e-12);
      CHECK(ab == doctest::Approx(oracle::poincare_by_quadrature(a, b)).epsilon(1e-8));
    }
  }

  TEST_CASE("moebius examples") {
    const Moebius id = Moebius::identity();
    for (double t : {-3.0, 0.0, 0.25, 1e6}) CHECK(id.apply(t) == t);
    CHECK(id.apply(ProjectivePoint::infinity()).same_as(ProjectivePoint::infinity()));

    const Moebius cayley = Moebius::make(1, -1, 1, 1);
    CHECK(cayley.apply(1.0) == doctest::Approx(0.0));
    CHECK(std::abs(cayley.determinant()) == doctest::Approx(1.0));
    for (double t = 1e-3; t < 1e4; t *= 1.7) {
      const double u = cayley.apply(t);
      CHECK(u > -1.0);
      CHECK(u < 1.0);
      CHECK(u == doctest::Approx((t - 1) / (t + 1)).epsilon(1e-14));
    }
    CHECK(cayley.apply(ProjectivePoint::affine(0.0)).value() == doctest::Approx(-1.0));
    CHECK(cayley.apply(ProjectivePoint::infinity()).value() == doctest::Approx(1.0));

    const Moebius c = compose(Moebius::make(2, 1, 0, 1), Moebius::make(1, 0, 1, 1));
    CHECK(c.apply(1.0) == doctest::Approx(2.0));

    CHECK(code_of([] { Moebius::make(1, 2, 2, 4); }) == Errc::SingularTransform);
    CHECK(code_of([] { Moebius::make(0, 0, 0, 0); }) == Errc::SingularTransform);
  }

  TEST_CASE("property: compose and invert") {
    oracle::Gen gen(32);
    for (int k = 0; k < 200; ++k) {
      const auto m1 = gen.moebius(), m2 = gen.moebius();
      const Moebius a = Moebius::make(m1[0], m1[1], m1[2], m1[3]);
      const Moebius b = Moebius::make(m2[0], m2[1], m2[2], m2[3]);
      const ProjectivePoint p = ProjectivePoint::from_angle(gen.uniform(-kPi / 2, kPi / 2));
      CHECK(compose(a, b).apply(p).same_as(a.apply(b.apply(p)), 1e-10));
      CHECK(invert(a).apply(a.apply(p)).same_as(p, 1e-10));
      // homogeneous action against the raw coefficients
      const double x = gen.uniform(-3, 3);
      const double raw = (m1[0] * x + m1[1]) / (m1[2] * x + m1[3]);
      if (std::abs(m1[2] * x + m1[3]) > 1e-3) CHECK(a.apply(x) == doctest::Approx(raw).epsilon(1e-10));
    }
  }

  TEST_CASE("from_three sends -1, 0, 1 where asked") {
    const auto A = ProjectivePoint::affine(-5.0 / 6.0), C = ProjectivePoint::affine(0.0), B = ProjectivePoint::affine(5.0);
    const Moebius m = Moebius::from_three(A, C, B);
    CHECK(m.apply(ProjectivePoint::affine(-1)).same_as(A, 1e-12));
    CHECK(m.apply(ProjectivePoint::affine(0)).same_as(C, 1e-12));
    CHECK(m.apply(ProjectivePoint::affine(1)).same_as(B, 1e-12));
    CHECK(code_of([&] { Moebius::from_three(A, C, A); }) == Errc::SingularTransform);
  }

  TEST_CASE("schwarzian examples") {
    CHECK(std::abs(schwarzian([](double s) { return (2 * s + 1) / (s + 3); }, 0.7)) <= 1e-6);
    CHECK(schwarzian([](double s) { return std::tan(s); }, 0.3) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(oracle::schwarzian([](double s) { return std::tan(s); }, 0.3) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(schwarzian([](double s) { return std::pow(s, 1.4); }, 2.0) == doctest::Approx(-0.12).epsilon(1e-7));
    CHECK(oracle::schwarzian([](double s) { return std::pow(s, 1.4); }, 2.0) == doctest::Approx(-0.12).epsilon(1e-6));
    CHECK(code_of([] { schwarzian([](double s) { return s * s; }, 0.0); }) == Errc::CriticalPoint);
    CHECK(code_of([] { schwarzian([](double) { return 1.0; }, 0.0); }) == Errc::CriticalPoint);
  }

  TEST_CASE("property: schwarzian moebius invariance") {
    oracle::Gen gen(33);
    const auto f = [](double s) { return std::exp(s) + 0.3 * s; };
    for (int k = 0; k < 100; ++k) {
      const auto c = gen.moebius();
      const double s = gen.uniform(-1, 1);
      const double fs = f(s);
      // keep the pole of m at least 1 away from f(s) in value
      if (c[2] != 0.0 && std::abs(fs + c[3] / c[2]) < 1.0) continue;
      const Moebius m = Moebius::make(c[0], c[1], c[2], c[3]);
      const double lhs = schwarzian([&](double x) { return m.apply(f(x)); }, s);
      CHECK(lhs == doctest::Approx(schwarzian(f, s)).epsilon(2e-5).scale(1.0));
    }
  }

  TEST_CASE("einstein case is affine") {
    ShootSpec s;
    s.start = point({0, 0, 0, 0});
    s.direction = point({0, 0, 1, 1});
    const GeodesicTrajectory t = shoot(minkowski(4), s);
    for (ProjectiveMethod m : {ProjectiveMethod::Companion, ProjectiveMethod::Affine}) {
      const HomogeneousParameter p = projective_parameter(minkowski(4), t, 2.0, m);
      for (double x : {-45.0, -1.0, 2.0, 3.5, 49.0}) CHECK(p.value(x) == doctest::Approx(x - 2.0).epsilon(1e-10));
      const DevelopmentArc arc = development_arc(p);
      CHECK(arc.kind == ArcKind::FullLine);
      CHECK(arc.conditional_on_completeness);
      CHECK(arc_distance(arc, ProjectivePoint::affine(0), ProjectivePoint::affine(5)) == 0.0);
    }
    CHECK(code_of([&] { projective_parameter(minkowski(4), t, 60.0); }) == Errc::OutOfDomain);
  }

  TEST_CASE("einstein-de sitter photon parameter") {
    const MetricModel eds = einstein_de_sitter(4);
    const GeodesicTrajectory t = standard_photon();
    // trajectory parameter is s - 1, so base 0 is s0 = 1
    const HomogeneousParameter p = projective_parameter(eds, t, 0.0);
    for (double s : {0.5, 2.0, 4.0}) {
      CHECK(p.value(s - 1.0) == doctest::Approx(oracle::photon_parameter(s)).epsilon(1e-6));
      const double measured = schwarzian([&](double x) { return p.value(x - 1.0); }, s);
      CHECK(measured == doctest::Approx(-12.0 / 25.0 / (s * s)).epsilon(1e-5));
    }
    CHECK(p.wronskian_drift() <= 1e-9);
    const auto d = p.derivatives(0.0);
    CHECK(d[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(d[1]) <= 1e-10);

    const DevelopmentArc arc = development_arc(p);
    REQUIRE(arc.kind == ArcKind::ProperArc);
    CHECK(arc.start.value() == doctest::Approx(-5.0 / 6.0).epsilon(1e-6));
    CHECK(arc.end.value() == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(!arc.complete_lo);

    const double d12 = arc_distance(arc, ProjectivePoint::affine(0.0), ProjectivePoint::affine(oracle::photon_parameter(2.0)));
    CHECK(d12 == doctest::Approx(1.4 * std::log(2.0)).epsilon(1e-6));
    // oracle: in the s^{7/5} chart the arc is (0, inf) and the distance is a log ratio
    CHECK(d12 == doctest::Approx(std::abs(std::log(std::pow(1.0, 1.4) / std::pow(2.0, 1.4)))).epsilon(1e-6));
  }

  TEST_CASE("constant q fixtures") {
    const auto p = solve_companion([](double) { return 1.0; }, 0.5, {-0.5, EndFlag::DomainExit}, {3.5, EndFlag::DomainExit}, 4);
    for (double s : {-0.4, 0.0, 1.0, 1.9, 2.2, 3.4}) {
      if (std::abs(std::cos(s - 0.5)) < 1e-3) continue;
      CHECK(p.value(s) == doctest::Approx(std::tan(s - 0.5)).epsilon(1e-8));
      // the angle passes the pole at 0.5 + pi/2 continuously
      CHECK(p.angle(s) == doctest::Approx(s - 0.5).epsilon(1e-9));
    }
    CHECK(p.u2_zero_count() == 1);
    const DevelopmentArc wraps = development_arc(p);
    CHECK(wraps.kind == ArcKind::Wraps);
    CHECK(wraps.rotation() == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(arc_distance(wraps, ProjectivePoint::affine(0), ProjectivePoint::affine(1)) == 0.0);

    const auto short_one =
        solve_companion([](double) { return 1.0; }, 0.0, {-1.0, EndFlag::DomainExit}, {1.0, EndFlag::DomainExit}, 4);
    const DevelopmentArc arc = development_arc(short_one);
    CHECK(arc.kind == ArcKind::ProperArc);
    CHECK(arc.start.value() == doctest::Approx(std::tan(-1.0)).epsilon(1e-8));
    CHECK(arc.end.value() == doctest::Approx(std::tan(1.0)).epsilon(1e-8));
  }

  TEST_CASE("arc distance examples") {
    const DevelopmentArc unit = oracle::proper_arc(-1.0, 1.0);
    CHECK(arc_distance(unit, ProjectivePoint::affine(0.0), ProjectivePoint::affine(0.5)) ==
          doctest::Approx(poincare_distance(0.0, 0.5)).epsilon(1e-12));
    CHECK(arc_distance(unit, ProjectivePoint::affine(-0.3), ProjectivePoint::affine(0.8)) ==
          doctest::Approx(poincare_distance(-0.3, 0.8)).epsilon(1e-12));

    const DevelopmentArc half = oracle::proper_arc(0.0, INFINITY);
    const double d = arc_distance(half, ProjectivePoint::affine(1.0), ProjectivePoint::affine(std::exp(1.0)));
    CHECK(d == doctest::Approx(1.0).epsilon(1e-12));
    const Moebius cayley = Moebius::make(1, -1, 1, 1);
    CHECK(d == doctest::Approx(poincare_distance(cayley.apply(1.0), cayley.apply(std::exp(1.0)))).epsilon(1e-12));

    CHECK(arc_distance(half, ProjectivePoint::affine(2.0), ProjectivePoint::affine(2.0)) == 0.0);
    CHECK(code_of([&] { arc_distance(half, ProjectivePoint::affine(-1.0), ProjectivePoint::affine(1.0)); }) ==
          Errc::PointOffArc);
    CHECK(code_of([&] { arc_distance(unit, ProjectivePoint::affine(2.0), ProjectivePoint::affine(0.0)); }) ==
          Errc::PointOffArc);

    const DevelopmentArc eds = oracle::proper_arc(-5.0 / 6.0, 5.0);
    const double e = arc_distance(eds, ProjectivePoint::affine(0.0), ProjectivePoint::affine(oracle::photon_parameter(2.0)));
    CHECK(e == doctest::Approx(0.970406).epsilon(1e-6));
    CHECK(e == doctest::Approx(oracle::cross_ratio_distance(-5.0 / 6.0, 0.0, oracle::photon_parameter(2.0), 5.0)).epsilon(1e-12));

    // the embedding sends the arc onto (-1, 1) isometrically
    const Moebius emb = arc_embedding(eds);
    const double u1 = emb.apply(0.0), u2 = emb.apply(oracle::photon_parameter(2.0));
    CHECK(poincare_distance(u1, u2) == doctest::Approx(e).epsilon(1e-10));
    CHECK(emb.apply(-5.0 / 6.0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(emb.apply(5.0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("property: cross-ratio moebius invariance and symmetry") {
    oracle::Gen gen(34);
    for (int k = 0; k < 200; ++k) {
      double a = gen.uniform(-3, 3), b = gen.uniform(-3, 3);
      if (a > b) std::swap(a, b);
      if (b - a < 0.2) continue;
      const DevelopmentArc arc = oracle::proper_arc(a, b);
      const double p = gen.uniform(a + 0.01 * (b - a), b - 0.01 * (b - a));
      const double q = gen.uniform(a + 0.01 * (b - a), b - 0.01 * (b - a));
      const auto P = ProjectivePoint::affine(p), Q = ProjectivePoint::affine(q);
      const double d = arc_distance(arc, P, Q);
      CHECK(d == doctest::Approx(arc_distance(arc, Q, P)).epsilon(1e-12));
      if (p != q) CHECK(d == doctest::Approx(oracle::cross_ratio_distance(a, std::min(p, q), std::max(p, q), b)).epsilon(1e-9));

      auto c = gen.moebius();
      if (c[0] * c[3] - c[1] * c[2] < 0) c[0] = -c[0], c[1] = -c[1];
      const Moebius m = Moebius::make(c[0], c[1], c[2], c[3]);
      CHECK(arc_distance(pushed(arc, m), m.apply(P), m.apply(Q)) == doctest::Approx(d).epsilon(1e-10).scale(1.0));
    }
  }

  TEST_CASE("property: schwarzian round trip on computed parameters") {
    oracle::Gen gen(35);
    const MetricModel eds = einstein_de_sitter(4);
    for (int k = 0; k < 4; ++k) {
      const double t0 = gen.log_uniform(0.5, 3.0);
      ShootSpec s;
      s.start = gen.spacetime_point(4, t0, t0);
      s.direction = gen.frw_null(4, s.start[3], 2.0 / 3.0);
      s.affine_budget = 10.0;
      const GeodesicTrajectory t = shoot(eds, s);
      const HomogeneousParameter p = projective_parameter(eds, t, 0.0);
      const auto q = companion_coefficient(eds, t);
      const double lo = t.lo(), hi = t.hi();
      for (int i = 1; i <= 32; ++i) {
        // interior samples well clear of the singular end
        const double x = lo + (0.05 + 0.9 * i / 33.0) * (hi - lo);
        const double h = std::min(1e-2, 0.02 * (x - lo));
        const double ric = -(eds.dimension() - 2) * q(x);
        const double expected = -2.0 / (eds.dimension() - 2) * ric;
        CHECK(schwarzian([&](double y) { return p.value(y); }, x, h) == doctest::Approx(expected).epsilon(1e-5).scale(1.0));
      }
      CHECK(p.wronskian_drift() <= 1e-8);
    }
  }
}
