#pragma once

#include <array>
#include <functional>
#include <vector>

#include "cpd/geodesic.hpp"
#include "cpd/ode.hpp"

namespace cpd {

// Point of RP^1 in homogeneous coordinates [u1 : u2].
struct ProjectivePoint {
  double u1 = 0.0;
  double u2 = 1.0;

  static ProjectivePoint affine(double p) { return {p, 1.0}; }
  static ProjectivePoint infinity() { return {1.0, 0.0}; }
  static ProjectivePoint from_angle(double theta);

  // u1/u2; ±inf at the point at infinity.
  double value() const;
  // Representative angle atan2(u1, u2) reduced into (-π/2, π/2].
  double angle() const;
  bool same_as(const ProjectivePoint& other, double tol = 1e-12) const;
};

// [x, y] = x1 y2 - x2 y1
double bracket(const ProjectivePoint& x, const ProjectivePoint& y);

// t -> (a t + b) / (c t + d), normalized so |ad - bc| = 1.
class Moebius {
 public:
  static Moebius make(double a, double b, double c, double d);
  static Moebius identity() { return make(1, 0, 0, 1); }
  // The map sending -1, 0, +1 to the given three distinct points.
  static Moebius from_three(const ProjectivePoint& minus_one, const ProjectivePoint& zero,
                            const ProjectivePoint& plus_one);

  ProjectivePoint apply(const ProjectivePoint& p) const;
  double apply(double t) const { return apply(ProjectivePoint::affine(t)).value(); }
  double determinant() const { return a_ * d_ - b_ * c_; }

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double d() const { return d_; }

 private:
  Moebius(double a, double b, double c, double d) : a_(a), b_(b), c_(c), d_(d) {}
  double a_, b_, c_, d_;
};

// first ∘ second
Moebius compose(const Moebius& first, const Moebius& second);
Moebius invert(const Moebius& m);

// Distance of the Poincaré metric 4 du^2 / (1 - u^2)^2 on (-1, 1).
double poincare_distance(double u1, double u2);

// Schwarzian f'''/f' - (3/2)(f''/f')^2 by central differences with one
// Richardson step (error O(h^4)).
double schwarzian(const std::function<double(double)>& f, double s, double h = 1e-2);

struct EndBound {
  double s = 0.0;
  EndFlag flag = EndFlag::BudgetReached;
};

// How the limit of [u1:u2] at an end of the affine domain was obtained.
enum class TailModel { NodeValue, Linear, Euler, Exponential, Oscillatory };

struct EndLimit {
  ProjectivePoint point;
  double angle = 0.0;  // unwrapped, continuous with the interior angle
  TailModel model = TailModel::NodeValue;
  bool complete = false;
};

// A projective parameter p = u1/u2 where u'' + q(s) u = 0,
// (u1, u1', u2, u2')(s0) = (0, 1, 1, 0).
class HomogeneousParameter {
 public:
  using QFn = std::function<double(double)>;

  int dimension() const { return dimension_; }
  double base() const { return s0_; }
  double lo() const { return lo_.s; }
  double hi() const { return hi_.s; }
  bool affine_shortcut() const { return affine_; }

  // (u1, u1', u2, u2') at s.
  OdeState state(double s) const;
  ProjectivePoint point(double s) const;
  double value(double s) const { return point(s).value(); }
  // Unwrapped angle of [u1:u2], increasing, zero at the base point.
  double angle(double s) const;
  // p', p'', p''' from the state and the companion equation.
  std::array<double, 3> derivatives(double s) const;
  double q(double s) const { return q_(s); }
  double wronskian() const { return 1.0; }
  // max deviation of u1'u2 - u1u2' from 1 over the integration nodes, relative
  // to the size of the two products.
  double wronskian_drift() const;
  int u2_zero_count() const;

  const EndLimit& lower_limit() const { return lower_limit_; }
  const EndLimit& upper_limit() const { return upper_limit_; }

  friend HomogeneousParameter solve_companion(QFn q, double s0, EndBound lo, EndBound hi, int dimension,
                                              const OdeOptions& options);
  friend HomogeneousParameter affine_parameter(double s0, EndBound lo, EndBound hi, int dimension);

 private:
  void finish_ends();
  EndLimit limit_at(bool upper) const;

  int dimension_ = 0;
  double s0_ = 0.0;
  EndBound lo_, hi_;
  double lo_target_ = 0.0, hi_target_ = 0.0;  // requested ends; the solve may stop short of them
  bool affine_ = false;
  QFn q_;
  DenseOutput dense_;
  std::vector<double> node_s_;
  std::vector<double> node_angle_;
  EndLimit lower_limit_, upper_limit_;
};

inline OdeOptions companion_defaults() {
  OdeOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-14;
  o.min_step = 1e-14;
  return o;
}

HomogeneousParameter solve_companion(HomogeneousParameter::QFn q, double s0, EndBound lo, EndBound hi,
                                     int dimension, const OdeOptions& options = companion_defaults());

// p = s - s0, valid when Ric(γ', γ') vanishes along the geodesic.
HomogeneousParameter affine_parameter(double s0, EndBound lo, EndBound hi, int dimension);

enum class ProjectiveMethod { Companion, Affine };

// q(s) = -Ric(γ', γ') / (n - 2) along the trajectory.
HomogeneousParameter::QFn companion_coefficient(const MetricModel& model, const GeodesicTrajectory& trajectory);

HomogeneousParameter projective_parameter(const MetricModel& model, const GeodesicTrajectory& trajectory, double s0,
                                          ProjectiveMethod method = ProjectiveMethod::Companion,
                                          const OdeOptions& options = companion_defaults());

enum class ArcKind { ProperArc, FullLine, Wraps };
const char* to_string(ArcKind kind);

inline constexpr double kArcAngleTolerance = 1e-8;

struct DevelopmentArc {
  ArcKind kind = ArcKind::ProperArc;
  ProjectivePoint start;  // limit at the lower end of the affine domain
  ProjectivePoint end;    // limit at the upper end
  double angle_lo = 0.0;  // unwrapped angles; the arc is [angle_lo, angle_hi]
  double angle_hi = 0.0;
  bool complete_lo = false;  // budget-complete ends
  bool complete_hi = false;
  int u2_zeros = 0;
  // FullLine is only ever declared for budget-complete domains.
  bool conditional_on_completeness = false;

  double rotation() const { return angle_hi - angle_lo; }
};

DevelopmentArc development_arc(const HomogeneousParameter& param);

// |log CR(α, p1, p2, β)| for a proper arc, 0 for FullLine and Wraps.
double arc_distance(const DevelopmentArc& arc, const ProjectivePoint& p1, const ProjectivePoint& p2);
// Same, for points given by their unwrapped angles on the arc.
double arc_distance_angles(const DevelopmentArc& arc, double theta1, double theta2);

// Möbius map taking a proper arc onto (-1, 1) (α -> -1, β -> +1).
Moebius arc_embedding(const DevelopmentArc& arc);

}  // namespace cpd
