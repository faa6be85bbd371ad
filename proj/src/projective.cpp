#include "cpd/projective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "cpd/error.hpp"

namespace cpd {

namespace {

constexpr double kPi = std::numbers::pi;

// x reduced into [0, π), with values within 1e-9 of π folded back to ~0.
double forward_mod(double x) {
  double r = x - kPi * std::floor(x / kPi);
  if (r > kPi - 1e-9) r -= kPi;
  return r;
}

}  // namespace

ProjectivePoint ProjectivePoint::from_angle(double theta) { return {std::sin(theta), std::cos(theta)}; }

double ProjectivePoint::value() const {
  if (u2 == 0.0) return std::copysign(std::numeric_limits<double>::infinity(), u1);
  return u1 / u2;
}

double ProjectivePoint::angle() const {
  double a = std::atan2(u1, u2);
  if (a > kPi / 2) a -= kPi;
  if (a <= -kPi / 2) a += kPi;
  return a;
}

bool ProjectivePoint::same_as(const ProjectivePoint& o, double tol) const {
  return std::abs(bracket(*this, o)) <= tol * std::hypot(u1, u2) * std::hypot(o.u1, o.u2);
}

double bracket(const ProjectivePoint& x, const ProjectivePoint& y) { return x.u1 * y.u2 - x.u2 * y.u1; }

Moebius Moebius::make(double a, double b, double c, double d) {
  const double det = a * d - b * c;
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
  if (!std::isfinite(det) || !(scale > 0.0) || std::abs(det) <= 1e-14 * scale * scale)
    throw Error(Errc::SingularTransform, "ad - bc vanishes");
  const double k = 1.0 / std::sqrt(std::abs(det));
  return Moebius(a * k, b * k, c * k, d * k);
}

Moebius Moebius::from_three(const ProjectivePoint& A, const ProjectivePoint& C, const ProjectivePoint& B) {
  const double ab = bracket(A, B);
  if (ab == 0.0) throw Error(Errc::SingularTransform, "images of -1 and +1 coincide");
  // C = λ A + μ B
  const double lam = bracket(C, B) / ab;
  const double mu = bracket(A, C) / ab;
  return make(0.5 * (mu * B.u1 - lam * A.u1), 0.5 * (lam * A.u1 + mu * B.u1), 0.5 * (mu * B.u2 - lam * A.u2),
              0.5 * (lam * A.u2 + mu * B.u2));
}

ProjectivePoint Moebius::apply(const ProjectivePoint& p) const {
  ProjectivePoint out{a_ * p.u1 + b_ * p.u2, c_ * p.u1 + d_ * p.u2};
  const double m = std::max(std::abs(out.u1), std::abs(out.u2));
  if (m > 0.0 && (m > 1e100 || m < 1e-100)) {
    out.u1 /= m;
    out.u2 /= m;
  }
  return out;
}

Moebius compose(const Moebius& f, const Moebius& g) {
  return Moebius::make(f.a() * g.a() + f.b() * g.c(), f.a() * g.b() + f.b() * g.d(),
                       f.c() * g.a() + f.d() * g.c(), f.c() * g.b() + f.d() * g.d());
}

Moebius invert(const Moebius& m) { return Moebius::make(m.d(), -m.b(), -m.c(), m.a()); }

double poincare_distance(double u1, double u2) {
  auto inside = [](double u) { return std::isfinite(u) && u > -1.0 && u < 1.0; };
  if (!inside(u1) || !inside(u2)) throw Error(Errc::OutOfInterval, "arguments must lie in (-1, 1)");
  if (u1 == u2) return 0.0;
  return std::abs(std::log1p(u1) + std::log1p(-u2) - std::log1p(-u1) - std::log1p(u2));
}

double schwarzian(const std::function<double(double)>& f, double s, double h) {
  struct D {
    double d1, d2, d3;
  };
  const double f0 = f(s);
  auto diffs = [&](double k) {
    const double p1 = f(s + k), m1 = f(s - k), p2 = f(s + 2 * k), m2 = f(s - 2 * k);
    return D{(p1 - m1) / (2 * k), (p1 - 2 * f0 + m1) / (k * k), (p2 - 2 * p1 + 2 * m1 - m2) / (2 * k * k * k)};
  };
  const D coarse = diffs(h), fine = diffs(0.5 * h);
  const double d1 = (4 * fine.d1 - coarse.d1) / 3;
  const double d2 = (4 * fine.d2 - coarse.d2) / 3;
  const double d3 = (4 * fine.d3 - coarse.d3) / 3;
  if (!std::isfinite(d1) || std::abs(d1) < 1e-10)
    throw Error(Errc::CriticalPoint, "derivative vanishes at s = " + std::to_string(s));
  const double r = d2 / d1;
  return d3 / d1 - 1.5 * r * r;
}

// ---------------------------------------------------------------------------

OdeState HomogeneousParameter::state(double s) const {
  if (affine_) {
    if (s < lo_.s || s > hi_.s) throw Error(Errc::OutOfDomain, "parameter outside the integrated range");
    OdeState y(4);
    y << s - s0_, 1.0, 1.0, 0.0;
    return y;
  }
  return dense_.value(s);
}

ProjectivePoint HomogeneousParameter::point(double s) const {
  const OdeState y = state(s);
  return {y[0], y[2]};
}

double HomogeneousParameter::angle(double s) const {
  if (affine_) {
    state(s);
    return std::atan(s - s0_);
  }
  const OdeState y = dense_.value(s);
  auto it = std::upper_bound(node_s_.begin(), node_s_.end(), s);
  const std::size_t k = it == node_s_.begin() ? 0 : static_cast<std::size_t>(it - node_s_.begin()) - 1;
  const double ref = node_angle_[k];
  return ref + std::remainder(std::atan2(y[0], y[2]) - ref, kPi);
}

std::array<double, 3> HomogeneousParameter::derivatives(double s) const {
  const OdeState y = state(s);
  const double u1 = y[0], du1 = y[1], u2 = y[2], du2 = y[3];
  const double w = du1 * u2 - u1 * du2;
  const double qs = affine_ ? 0.0 : q_(s);
  const double u2sq = u2 * u2;
  return {w / u2sq, -2.0 * w * du2 / (u2sq * u2), 2.0 * w * (qs * u2sq + 3.0 * du2 * du2) / (u2sq * u2sq)};
}

double HomogeneousParameter::wronskian_drift() const {
  if (affine_) return 0.0;
  double worst = 0.0;
  for (const double s : node_s_) {
    const OdeState y = dense_.value(s);
    const double scale = std::max(1.0, std::abs(y[1] * y[2]) + std::abs(y[0] * y[3]));
    worst = std::max(worst, std::abs(y[1] * y[2] - y[0] * y[3] - 1.0) / scale);
  }
  return worst;
}

int HomogeneousParameter::u2_zero_count() const {
  if (affine_) return 0;
  int count = 0;
  double prev = dense_.value(node_s_.front())[2];
  for (std::size_t i = 1; i < node_s_.size(); ++i) {
    const double cur = dense_.value(node_s_[i])[2];
    if ((prev < 0.0 && cur >= 0.0) || (prev > 0.0 && cur <= 0.0)) ++count;
    if (cur != 0.0) prev = cur;
  }
  return count;
}

EndLimit HomogeneousParameter::limit_at(bool upper) const {
  const EndBound& end = upper ? hi_ : lo_;
  const double sigma = upper ? 1.0 : -1.0;
  const double se = end.s;
  const OdeState y = state(se);
  const Eigen::Vector2d u(y[0], y[2]);
  const Eigen::Vector2d du(y[1], y[3]);

  EndLimit lim;
  lim.complete = end.flag == EndFlag::BudgetReached;
  Eigen::Vector2d dir = u;
  lim.model = TailModel::NodeValue;

  const double span = std::abs(se - s0_);
  if (lim.complete && span > 0.0) {
    // Close the remaining tail analytically: fit q ~ c / τ^2 from two nodes
    // (τ the distance to a fitted pole behind the base point) and take the
    // dominant Euler solution.
    const double qe = affine_ ? 0.0 : q_(se);
    const double gap = 0.25 * span;
    const double qm = affine_ ? 0.0 : q_(se - sigma * gap);
    if (std::abs(qe) * span * span < 1e-14 && std::abs(qm) * span * span < 1e-14) {
      dir = du;
      lim.model = TailModel::Linear;
    } else if (qe != 0.0 && qm != 0.0 && (qe > 0) == (qm > 0)) {
      const double r = std::sqrt(qm / qe);
      if (r > 1.0 + 1e-6) {
        const double tau_m = gap / (r - 1.0);
        const double tau_e = r * tau_m;
        const double c = qe * tau_e * tau_e;
        if (c > 0.25) {
          lim.model = TailModel::Oscillatory;
        } else {
          const double rminus = 0.5 * (1.0 - std::sqrt(1.0 - 4.0 * c));
          dir = tau_e * sigma * du - rminus * u;
          lim.model = TailModel::Euler;
        }
      } else if (std::abs(r - 1.0) <= 1e-6) {
        if (qe > 0) {
          lim.model = TailModel::Oscillatory;
        } else {
          dir = sigma * du + std::sqrt(-qe) * u;
          lim.model = TailModel::Exponential;
        }
      }
    }
  }
  // A singular end the solve could not reach: treat q ~ c / τ^2 over the
  // remaining gap τ and keep the solution that dominates as τ -> 0.
  const double tau = std::abs((upper ? hi_target_ : lo_target_) - se);
  if (!lim.complete && !affine_ && tau > 0.0) {
    try {
      const double c = q_(se) * tau * tau;
      if (c > 0.25) {
        lim.model = TailModel::Oscillatory;
      } else {
        const double rplus = 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * c));
        dir = rplus * u + sigma * tau * du;
        lim.model = TailModel::Euler;
      }
    } catch (const Error&) {
    }
  }
  lim.point = {dir[0], dir[1]};
  const double a = lim.point.angle();
  const double theta_e = angle(se);
  lim.angle = upper ? theta_e + forward_mod(a - theta_e) : theta_e - forward_mod(theta_e - a);
  return lim;
}

void HomogeneousParameter::finish_ends() {
  if (!affine_) {
    node_s_ = dense_.nodes();
    node_angle_.assign(node_s_.size(), 0.0);
    auto base = std::lower_bound(node_s_.begin(), node_s_.end(), s0_);
    const std::size_t b = static_cast<std::size_t>(base - node_s_.begin());
    auto raw = [&](std::size_t i) {
      const OdeState y = dense_.value(node_s_[i]);
      return std::atan2(y[0], y[2]);
    };
    node_angle_[b] = raw(b);
    for (std::size_t i = b + 1; i < node_s_.size(); ++i)
      node_angle_[i] = node_angle_[i - 1] + std::remainder(raw(i) - node_angle_[i - 1], kPi);
    for (std::size_t i = b; i-- > 0;)
      node_angle_[i] = node_angle_[i + 1] + std::remainder(raw(i) - node_angle_[i + 1], kPi);
  }
  lower_limit_ = limit_at(false);
  upper_limit_ = limit_at(true);
}

HomogeneousParameter solve_companion(HomogeneousParameter::QFn q, double s0, EndBound lo, EndBound hi,
                                     int dimension, const OdeOptions& options) {
  if (!(lo.s <= s0 && s0 <= hi.s) || !(lo.s < hi.s))
    throw Error(Errc::InvalidArgument, "base point must lie in the parameter range");
  HomogeneousParameter p;
  p.dimension_ = dimension;
  p.s0_ = s0;
  p.q_ = q;
  OdeRhs rhs = [&q, lo, hi](double s, const OdeState& y, OdeState& dy) {
    double qs;
    try {
      qs = q(std::clamp(s, lo.s, hi.s));
    } catch (const Error&) {
      return false;
    }
    dy.resize(4);
    dy << y[1], -qs * y[0], y[3], -qs * y[2];
    return std::isfinite(qs);
  };
  OdeState y0(4);
  y0 << 0.0, 1.0, 1.0, 0.0;
  const OdeRun fwd = integrate_dopri5(rhs, s0, y0, hi.s, options);
  const OdeRun bwd = integrate_dopri5(rhs, s0, y0, lo.s, options);
  if (fwd.segments.empty() && bwd.segments.empty())
    throw Error(Errc::InvalidArgument, "companion equation could not be integrated");
  p.dense_ = DenseOutput::join(bwd.segments, fwd.segments);
  // Curvature may be unavailable right at a chart edge; keep what was covered.
  p.lo_ = {p.dense_.lo(), lo.flag};
  p.hi_ = {p.dense_.hi(), hi.flag};
  p.lo_target_ = lo.s;
  p.hi_target_ = hi.s;
  p.finish_ends();
  return p;
}

HomogeneousParameter affine_parameter(double s0, EndBound lo, EndBound hi, int dimension) {
  if (!(lo.s <= s0 && s0 <= hi.s) || !(lo.s < hi.s))
    throw Error(Errc::InvalidArgument, "base point must lie in the parameter range");
  HomogeneousParameter p;
  p.dimension_ = dimension;
  p.s0_ = s0;
  p.lo_ = lo;
  p.hi_ = hi;
  p.lo_target_ = lo.s;
  p.hi_target_ = hi.s;
  p.affine_ = true;
  p.q_ = [](double) { return 0.0; };
  p.finish_ends();
  return p;
}

HomogeneousParameter::QFn companion_coefficient(const MetricModel& model, const GeodesicTrajectory& trajectory) {
  auto traj = std::make_shared<const GeodesicTrajectory>(trajectory);
  const double scale = -1.0 / (model.dimension() - 2);
  return [model, traj, scale](double s) {
    const GeodesicPoint g = traj->at(std::clamp(s, traj->lo(), traj->hi()));
    const Matrix ric = ricci_at(model, g.x);
    return scale * g.v.dot(ric * g.v);
  };
}

HomogeneousParameter projective_parameter(const MetricModel& model, const GeodesicTrajectory& trajectory, double s0,
                                          ProjectiveMethod method, const OdeOptions& options) {
  if (model.dimension() < 3) throw Error(Errc::UnsupportedDimension, "projective parameters need n >= 3");
  if (!(trajectory.lo() <= s0 && s0 <= trajectory.hi()))
    throw Error(Errc::OutOfDomain, "base point outside the trajectory");
  const EndBound lo{trajectory.lo(), trajectory.past().flag};
  const EndBound hi{trajectory.hi(), trajectory.future().flag};
  if (method == ProjectiveMethod::Affine) return affine_parameter(s0, lo, hi, model.dimension());
  return solve_companion(companion_coefficient(model, trajectory), s0, lo, hi, model.dimension(), options);
}

// ---------------------------------------------------------------------------

const char* to_string(ArcKind kind) {
  switch (kind) {
    case ArcKind::ProperArc: return "ProperArc";
    case ArcKind::FullLine: return "FullLine";
    case ArcKind::Wraps: return "Wraps";
  }
  return "?";
}

DevelopmentArc development_arc(const HomogeneousParameter& param) {
  DevelopmentArc arc;
  const EndLimit& lo = param.lower_limit();
  const EndLimit& hi = param.upper_limit();
  arc.start = lo.point;
  arc.end = hi.point;
  arc.angle_lo = lo.angle;
  arc.angle_hi = hi.angle;
  arc.complete_lo = lo.complete;
  arc.complete_hi = hi.complete;
  arc.u2_zeros = param.u2_zero_count();
  const double rotation = arc.rotation();
  if (rotation > kPi + kArcAngleTolerance || lo.model == TailModel::Oscillatory ||
      hi.model == TailModel::Oscillatory) {
    arc.kind = ArcKind::Wraps;
  } else if (lo.complete && hi.complete && std::abs(rotation - kPi) <= kArcAngleTolerance) {
    arc.kind = ArcKind::FullLine;
    arc.conditional_on_completeness = true;
  } else {
    arc.kind = ArcKind::ProperArc;
  }
  return arc;
}

double arc_distance_angles(const DevelopmentArc& arc, double t1, double t2) {
  const double a = arc.angle_lo, b = arc.angle_hi;
  auto check = [&](double t) {
    if (!(t > a - kArcAngleTolerance && t < b + kArcAngleTolerance))
      throw Error(Errc::PointOffArc, "point does not lie on the development arc");
  };
  check(t1);
  check(t2);
  if (arc.kind != ArcKind::ProperArc || t1 == t2) return 0.0;
  const double n1 = std::sin(t2 - a) * std::sin(b - t1);
  const double n2 = std::sin(b - t2) * std::sin(t1 - a);
  if (!(n1 > 0.0) || !(n2 > 0.0)) throw Error(Errc::PointOffArc, "point coincides with an arc endpoint");
  return std::abs(std::log(n1 / n2));
}

double arc_distance(const DevelopmentArc& arc, const ProjectivePoint& p1, const ProjectivePoint& p2) {
  auto lift = [&](const ProjectivePoint& p) {
    const double base = p.angle();
    const double k = std::ceil((arc.angle_lo - kArcAngleTolerance - base) / kPi);
    const double t = base + k * kPi;
    if (arc.kind == ArcKind::ProperArc && !(t < arc.angle_hi + kArcAngleTolerance))
      throw Error(Errc::PointOffArc, "point does not lie on the development arc");
    return t;
  };
  if (arc.kind != ArcKind::ProperArc) return 0.0;
  return arc_distance_angles(arc, lift(p1), lift(p2));
}

Moebius arc_embedding(const DevelopmentArc& arc) {
  if (arc.kind != ArcKind::ProperArc) throw Error(Errc::InvalidArgument, "only proper arcs embed into (-1, 1)");
  const auto A = ProjectivePoint::from_angle(arc.angle_lo);
  const auto B = ProjectivePoint::from_angle(arc.angle_hi);
  const auto C = ProjectivePoint::from_angle(0.5 * (arc.angle_lo + arc.angle_hi));
  return invert(Moebius::from_three(A, C, B));
}

}  // namespace cpd
