#include "cpd/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpd/error.hpp"

namespace cpd {

const char* to_string(EndFlag flag) {
  switch (flag) {
    case EndFlag::DomainExit: return "DomainExit";
    case EndFlag::StepCollapse: return "StepCollapse";
    case EndFlag::BudgetReached: return "BudgetReached";
  }
  return "Unknown";
}

GeodesicTrajectory::GeodesicTrajectory(int dimension, std::string model_id, ShootSpec spec, DenseOutput dense,
                                       TrajectoryEnd past, TrajectoryEnd future, double null_drift)
    : dimension_(dimension),
      model_id_(std::move(model_id)),
      spec_(std::move(spec)),
      dense_(std::move(dense)),
      past_(past),
      future_(future),
      null_drift_(null_drift) {}

GeodesicPoint GeodesicTrajectory::at(double s) const {
  const OdeState y = dense_.value(s);
  return {y.head(dimension_), y.tail(dimension_)};
}

Vector GeodesicTrajectory::acceleration(double s) const { return dense_.derivative(s).tail(dimension_); }

namespace {

double relative_drift(const MetricModel& model, const Coordinates& x, const Tangent& v) {
  const Matrix g = model.raw_metric(x);
  return std::abs(metric_norm(g, v)) / std::max(1.0, v.squaredNorm());
}

OdeRhs geodesic_rhs(const MetricModel& model) {
  const int n = model.dimension();
  return [model, n](double, const OdeState& y, OdeState& dy) {
    const Coordinates x = y.head(n);
    if (!model.in_domain(x)) return false;
    const Tangent v = y.tail(n);
    dy.resize(2 * n);
    dy.head(n) = v;
    // A difference stencil reaching outside the chart counts as leaving it.
    try {
      dy.tail(n) = geodesic_acceleration(model, x, v);
    } catch (const Error&) {
      return false;
    }
    return true;
  };
}

struct HalfRun {
  OdeRun run;
  double max_drift = 0.0;
};

HalfRun run_half(const MetricModel& model, const OdeState& y0, double s_end, const IntegrationOptions& opt) {
  const int n = model.dimension();
  HalfRun half;
  OdeOptions o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  o.min_step = opt.min_step;
  auto hook = [&](double, OdeState& y) {
    if (!opt.reproject_null) return false;
    const Coordinates x = y.head(n);
    const Tangent v = y.tail(n);
    const double drift = relative_drift(model, x, v);
    half.max_drift = std::max(half.max_drift, drift);
    if (drift <= 0.5 * opt.drift_bound) return false;
    y.tail(n) = null_project(model, x, v);
    return true;
  };
  half.run = integrate_dopri5(geodesic_rhs(model), 0.0, y0, s_end, o, hook);
  return half;
}

TrajectoryEnd end_from(const OdeRun& run) {
  TrajectoryEnd e;
  e.covered = run.s_last;
  switch (run.stop) {
    case OdeStop::Reached:
      e.flag = EndFlag::BudgetReached;
      e.extent = run.s_last;
      break;
    case OdeStop::DomainExit:
      e.flag = EndFlag::DomainExit;
      e.extent = 0.5 * (run.exit_inside + run.exit_outside);
      e.bracket = std::abs(run.exit_outside - run.exit_inside);
      break;
    case OdeStop::StepCollapse:
      e.flag = EndFlag::StepCollapse;
      e.extent = run.s_last;
      break;
  }
  return e;
}

}  // namespace

GeodesicTrajectory integrate_geodesic(const MetricModel& model, const Coordinates& start, const Tangent& velocity,
                                      double budget_back, double budget_forward, const IntegrationOptions& opt) {
  const int n = model.dimension();
  if (start.size() != n || velocity.size() != n)
    throw Error(Errc::InvalidArgument, "start/direction length does not match model dimension");
  if (!model.in_domain(start)) throw Error(Errc::ImmediateExit, "start point is not inside the domain");
  OdeState y0(2 * n);
  y0.head(n) = start;
  y0.tail(n) = velocity;

  HalfRun fwd = run_half(model, y0, budget_forward, opt);
  HalfRun bwd = run_half(model, y0, -budget_back, opt);
  if (fwd.run.segments.empty() && bwd.run.segments.empty())
    throw Error(Errc::ImmediateExit, "no step possible in either direction from the start point");

  const double drift0 = opt.reproject_null ? relative_drift(model, start, velocity) : 0.0;
  ShootSpec spec;
  spec.start = start;
  spec.direction = velocity;
  spec.rtol = opt.rtol;
  spec.atol = opt.atol;
  spec.min_step = opt.min_step;
  spec.affine_budget = std::max(budget_back, budget_forward);

  GeodesicTrajectory traj(n, model.id(), spec, DenseOutput::join(bwd.run.segments, fwd.run.segments),
                          end_from(bwd.run), end_from(fwd.run),
                          std::max({drift0, fwd.max_drift, bwd.max_drift}));
  return traj;
}

GeodesicTrajectory shoot(const MetricModel& model, const ShootSpec& spec) {
  const int n = model.dimension();
  if (spec.start.size() != n || spec.direction.size() != n)
    throw Error(Errc::InvalidArgument, "start/direction length does not match model dimension");
  if (!(spec.affine_budget > 0.0) || !(spec.min_step > 0.0))
    throw Error(Errc::InvalidArgument, "affine budget and minimum step must be positive");
  if (!model.in_domain(spec.start)) throw Error(Errc::ImmediateExit, "start point is not inside the domain");
  const Matrix g = model.raw_metric(spec.start);
  const double norm = metric_norm(g, spec.direction);
  if (std::abs(norm) > spec.null_tolerance * std::max(1.0, spec.direction.squaredNorm()))
    throw Error(Errc::NotNull, "initial direction is not null: g(v,v) = " + std::to_string(norm));

  IntegrationOptions opt;
  opt.rtol = spec.rtol;
  opt.atol = spec.atol;
  opt.min_step = spec.min_step;
  GeodesicTrajectory t =
      integrate_geodesic(model, spec.start, spec.direction, spec.affine_budget, spec.affine_budget, opt);
  return GeodesicTrajectory(n, model.id(), spec, t.dense(), t.past(), t.future(), t.null_drift());
}

GeodesicPoint propagate(const MetricModel& model, const Coordinates& start, const Tangent& velocity, double s,
                        const IntegrationOptions& opt) {
  const int n = model.dimension();
  if (s == 0.0) return {start, velocity};
  OdeState y0(2 * n);
  y0.head(n) = start;
  y0.tail(n) = velocity;
  HalfRun h = run_half(model, y0, s, opt);
  if (h.run.stop != OdeStop::Reached)
    throw Error(Errc::OutOfDomain, "geodesic terminates before the requested affine parameter");
  return {h.run.y_last.head(n), h.run.y_last.tail(n)};
}

double geodesic_residual(const MetricModel& model, const GeodesicTrajectory& trajectory, int sample_count) {
  if (trajectory.dense().empty()) throw Error(Errc::InvalidArgument, "empty trajectory");
  double worst = 0.0;
  const double lo = trajectory.lo(), hi = trajectory.hi();
  for (int i = 0; i < sample_count; ++i) {
    const double s = lo + (i + 0.5) / sample_count * (hi - lo);
    const GeodesicPoint p = trajectory.at(s);
    const Vector acc = trajectory.acceleration(s);
    const Vector res = acc + christoffel_at(model, p.x).contract(p.v, p.v);
    worst = std::max(worst, res.norm());
  }
  return worst;
}

double geodesic_residual(const MetricModel& model, const CurveFn& curve, double lo, double hi, int sample_count) {
  double worst = 0.0;
  for (int i = 0; i < sample_count; ++i) {
    const double s = sample_count == 1 ? 0.5 * (lo + hi) : lo + static_cast<double>(i) / (sample_count - 1) * (hi - lo);
    const double h = 1e-5 * std::max(1.0, std::abs(s));
    const GeodesicPoint p = curve(s);
    const Vector acc = (curve(s + h).v - curve(s - h).v) / (2.0 * h);
    const Vector res = acc + christoffel_at(model, p.x).contract(p.v, p.v);
    worst = std::max(worst, res.norm());
  }
  return worst;
}

double null_drift_sampled(const MetricModel& model, const GeodesicTrajectory& trajectory, int sample_count) {
  double worst = 0.0;
  const double lo = trajectory.lo(), hi = trajectory.hi();
  for (int i = 0; i < sample_count; ++i) {
    const double s = lo + static_cast<double>(i) / std::max(1, sample_count - 1) * (hi - lo);
    const GeodesicPoint p = trajectory.at(s);
    worst = std::max(worst, relative_drift(model, p.x, p.v));
  }
  return worst;
}

AffineDomain maximal_affine_domain(const GeodesicTrajectory& trajectory) {
  AffineDomain d;
  d.s_minus = trajectory.past().extent;
  d.s_plus = trajectory.future().extent;
  d.past_complete = trajectory.past().flag == EndFlag::BudgetReached;
  d.future_complete = trajectory.future().flag == EndFlag::BudgetReached;
  d.note = "completeness is asserted only up to the affine budget " +
           std::to_string(trajectory.spec().affine_budget);
  return d;
}

std::vector<double> ngc_sample_points(const GeodesicTrajectory& trajectory, int count) {
  const double lo = trajectory.lo(), hi = trajectory.hi();
  const double span = hi - lo;
  const bool cluster_lo = trajectory.past().flag != EndFlag::BudgetReached;
  const bool cluster_hi = trajectory.future().flag != EndFlag::BudgetReached;
  const int clustered = (cluster_lo || cluster_hi) ? count / 2 : 0;
  const int uniform = count - clustered;

  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < uniform; ++i) s.push_back(lo + (i + 0.5) / uniform * span);
  const int ends = (cluster_lo ? 1 : 0) + (cluster_hi ? 1 : 0);
  for (int e = 0; e < ends; ++e) {
    const bool at_lo = cluster_lo && e == 0;
    const int m = clustered / ends;
    for (int k = 1; k <= m; ++k) {
      // distances span/2, span/4, ... down to roughly the covered edge
      const double dist = span * std::pow(0.5, 1.0 + 40.0 * (k - 1) / std::max(1, m - 1));
      s.push_back(at_lo ? lo + dist : hi - dist);
    }
  }
  std::sort(s.begin(), s.end());
  return s;
}

NgcResult ngc_along(const MetricModel& model, const GeodesicTrajectory& trajectory, double tol) {
  NgcResult r;
  if (trajectory.dense().empty()) throw Error(Errc::InvalidArgument, "empty trajectory");
  double best = 0.0;
  for (double s : ngc_sample_points(trajectory)) {
    const GeodesicPoint p = trajectory.at(s);
    double value = 0.0;
    try {
      value = p.v.dot(ricci_at(model, p.x) * p.v);
    } catch (const Error&) {
      continue;  // finite-difference stencil crosses the domain edge
    }
    ++r.samples;
    if (std::abs(value) > tol && std::abs(value) > std::abs(best)) {
      best = value;
      r.holds = true;
      r.witness = s;
      r.witness_value = value;
    }
  }
  return r;
}

std::pair<double, double> end_scalar_curvature(const MetricModel& model, const GeodesicTrajectory& trajectory) {
  auto at = [&](double s) {
    try {
      return scalar_curvature_at(model, trajectory.at(s).x);
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  return {at(trajectory.lo()), at(trajectory.hi())};
}

}  // namespace cpd
