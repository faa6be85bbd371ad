#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "cpd/manifold.hpp"
#include "cpd/ode.hpp"

namespace cpd {

enum class EndFlag { DomainExit, StepCollapse, BudgetReached };

const char* to_string(EndFlag flag);

struct ShootSpec {
  Coordinates start;
  Tangent direction;
  double rtol = 1e-11;
  double atol = 1e-12;
  double affine_budget = 50.0;
  double min_step = 1e-12;
  double null_tolerance = kNullTolerance;
};

// Termination record for one end of the affine domain.
struct TrajectoryEnd {
  EndFlag flag = EndFlag::BudgetReached;
  double covered = 0.0;  // last accepted node
  double extent = 0.0;   // best estimate of the end of the maximal domain
  double bracket = 0.0;  // width of the DomainExit bracket, 0 otherwise
};

struct GeodesicPoint {
  Coordinates x;
  Tangent v;
};

class GeodesicTrajectory {
 public:
  GeodesicTrajectory() = default;
  GeodesicTrajectory(int dimension, std::string model_id, ShootSpec spec, DenseOutput dense, TrajectoryEnd past,
                     TrajectoryEnd future, double null_drift);

  int dimension() const { return dimension_; }
  const std::string& model_id() const { return model_id_; }
  const ShootSpec& spec() const { return spec_; }
  const DenseOutput& dense() const { return dense_; }
  const TrajectoryEnd& past() const { return past_; }
  const TrajectoryEnd& future() const { return future_; }
  double null_drift() const { return null_drift_; }

  // Covered parameter range of the dense output.
  double lo() const { return dense_.lo(); }
  double hi() const { return dense_.hi(); }
  bool contains(double s) const { return s >= lo() && s <= hi(); }

  GeodesicPoint at(double s) const;
  Vector acceleration(double s) const;  // derivative of the dense velocity

 private:
  int dimension_ = 0;
  std::string model_id_;
  ShootSpec spec_;
  DenseOutput dense_;
  TrajectoryEnd past_, future_;
  double null_drift_ = 0.0;
};

struct IntegrationOptions {
  double rtol = 1e-11;
  double atol = 1e-12;
  double min_step = 1e-12;
  bool reproject_null = true;
  double drift_bound = 1e-8;  // relative to max(1, |v|^2)
};

// Integrates x'' = -Γ(x', x') from (start, velocity) over [-budget_back, budget_forward].
// No null check; shoot() is the validated entry point.
GeodesicTrajectory integrate_geodesic(const MetricModel& model, const Coordinates& start, const Tangent& velocity,
                                      double budget_back, double budget_forward, const IntegrationOptions& options);

GeodesicTrajectory shoot(const MetricModel& model, const ShootSpec& spec);

// Position of the geodesic from (start, velocity) at affine parameter s only.
GeodesicPoint propagate(const MetricModel& model, const Coordinates& start, const Tangent& velocity, double s,
                        const IntegrationOptions& options);

using CurveFn = std::function<GeodesicPoint(double)>;

// max_i |x'' + Γ(x', x')| over sample_count interior points.
double geodesic_residual(const MetricModel& model, const GeodesicTrajectory& trajectory, int sample_count);
double geodesic_residual(const MetricModel& model, const CurveFn& curve, double lo, double hi, int sample_count);

// max |g(x', x')| / max(1, |x'|^2) over samples of the dense output.
double null_drift_sampled(const MetricModel& model, const GeodesicTrajectory& trajectory, int sample_count);

struct AffineDomain {
  double s_minus = 0.0;
  double s_plus = 0.0;
  bool past_complete = false;    // complete up to the affine budget only
  bool future_complete = false;  // complete up to the affine budget only
  std::string note;
};

AffineDomain maximal_affine_domain(const GeodesicTrajectory& trajectory);

struct NgcResult {
  bool holds = false;
  std::optional<double> witness;
  double witness_value = 0.0;
  std::size_t samples = 0;
};

inline constexpr int kNgcSamples = 512;

// Parameter samples covering the trajectory, clustered geometrically toward
// ends that are not BudgetReached.
std::vector<double> ngc_sample_points(const GeodesicTrajectory& trajectory, int count = kNgcSamples);

NgcResult ngc_along(const MetricModel& model, const GeodesicTrajectory& trajectory, double tol);

// Scalar curvature at the last node of each incomplete end, as singularity evidence.
std::pair<double, double> end_scalar_curvature(const MetricModel& model, const GeodesicTrajectory& trajectory);

}  // namespace cpd
