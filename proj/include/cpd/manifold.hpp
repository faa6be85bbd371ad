#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpd/types.hpp"

namespace cpd {

// Exact connection and Ricci evaluators, available for the builtin catalog.
struct AnalyticCurvature {
  std::function<Christoffel(const Coordinates&)> christoffel;
  std::function<Matrix(const Coordinates&)> ricci;
};

// A chart-based Lorentzian metric g_ab(x) with signature (+,...,+,-) on an
// explicit open domain. Cheap to copy; the evaluators are shared immutably.
class MetricModel {
 public:
  using MetricFn = std::function<Matrix(const Coordinates&)>;
  using DomainFn = std::function<bool(const Coordinates&)>;

  MetricModel(int dimension, std::string id, MetricFn metric, DomainFn domain,
              std::optional<AnalyticCurvature> analytic = std::nullopt, bool diagonal = false);

  int dimension() const { return impl_->dimension; }
  const std::string& id() const { return impl_->id; }
  bool diagonal() const { return impl_->diagonal; }

  bool in_domain(const Coordinates& x) const;

  // Metric without domain or signature validation; hot path for integrators.
  Matrix raw_metric(const Coordinates& x) const { return impl_->metric(x); }

  const AnalyticCurvature* analytic() const {
    return impl_->analytic ? &*impl_->analytic : nullptr;
  }

 private:
  struct Impl {
    int dimension;
    std::string id;
    MetricFn metric;
    DomainFn domain;
    std::optional<AnalyticCurvature> analytic;
    bool diagonal;
  };
  std::shared_ptr<const Impl> impl_;
};

// Ω(x)^2 g for a positive conformal factor Ω.
struct ConformalModel {
  MetricModel base;
  std::function<double(const Coordinates&)> factor;
  std::string label;

  MetricModel model() const;
};

enum class CurvaturePath { Auto, Analytic, FiniteDifference };

struct CurvatureSample {
  Christoffel christoffel;
  Matrix ricci;
  double scalar = 0.0;
};

// Central-difference step for coordinate i: max(floor, rel * |x_i|).
struct StepRule {
  double rel = 1e-5;
  double floor = 1e-5;
  double at(double xi) const;
};

inline constexpr StepRule kFirstDerivativeStep{1e-5, 1e-5};
inline constexpr StepRule kSecondDerivativeStep{1e-4, 1e-4};
inline constexpr double kMaxConditionNumber = 1e12;

Matrix metric_at(const MetricModel& model, const Coordinates& x);

// Inverse metric; raises DegenerateMetric when the condition number exceeds
// kMaxConditionNumber.
Matrix inverse_metric(const MetricModel& model, const Matrix& g);

Christoffel christoffel_at(const MetricModel& model, const Coordinates& x,
                           CurvaturePath path = CurvaturePath::Auto,
                           StepRule step = kFirstDerivativeStep);
Matrix ricci_at(const MetricModel& model, const Coordinates& x, CurvaturePath path = CurvaturePath::Auto);
double scalar_curvature_at(const MetricModel& model, const Coordinates& x,
                           CurvaturePath path = CurvaturePath::Auto);
CurvatureSample curvature_at(const MetricModel& model, const Coordinates& x,
                             CurvaturePath path = CurvaturePath::Auto);

// -Γ^a_bc v^b v^c, without domain checks (callers integrate inside the domain).
Vector geodesic_acceleration(const MetricModel& model, const Coordinates& x, const Tangent& v);

double metric_norm(const Matrix& g, const Tangent& v);

// Rescales the time component of v so that g(v, v) = 0, keeping the spatial
// part and the sign of the time component (zero counts as future).
Tangent null_project(const MetricModel& model, const Coordinates& x, const Tangent& v);

// max_ab |Ric_ab - (R/n) g_ab|
double einstein_residual_at(const MetricModel& model, const Coordinates& x,
                            CurvaturePath path = CurvaturePath::Auto);

inline constexpr double kNullTolerance = 1e-9;

// Ric(X, X) for a null X; NotNull when |g(X,X)| > tol * max(1, |X|^2).
double ncc_at(const MetricModel& model, const Coordinates& x, const Tangent& X,
              double null_tol = kNullTolerance);

// Sample points in an axis-aligned coordinate box (time coordinate optionally
// log-uniform) with null directions uniform on the celestial sphere.
struct SampleSpec {
  Coordinates lower;
  Coordinates upper;
  bool log_time = false;
  int points = 1000;
  int directions = 1;
  std::uint64_t seed = 1;
};

struct NullSample {
  Coordinates x;
  Tangent direction;
};

struct ConditionReport {
  bool pass = false;
  double min_value = 0.0;
  double tolerance = 0.0;
  std::size_t samples = 0;
  std::optional<NullSample> witness;
  double witness_value = 0.0;
};

// Deterministic sample i of a spec; std::nullopt when the drawn point is out of domain.
std::optional<NullSample> draw_null_sample(const MetricModel& model, const SampleSpec& spec, std::size_t i);

// Unit spatial direction on S^{n-2} from n-2 hyperspherical angles.
Vector sphere_direction(std::span<const double> angles, int spatial_dim);

// Future-directed null vector at x whose spatial part points along the unit
// vector e (normalized by sqrt(g_ii) on the diagonal).
Tangent null_direction(const MetricModel& model, const Coordinates& x, const Vector& spatial_unit);

ConditionReport check_ncc(const MetricModel& model, const SampleSpec& spec, double tolerance = 1e-12);
ConditionReport check_ncc_serial(const MetricModel& model, const SampleSpec& spec, double tolerance = 1e-12);

// Signature sign count of a symmetric matrix: (positive, negative, zero).
struct SignatureCount {
  int positive = 0;
  int negative = 0;
  int zero = 0;
};
SignatureCount signature_of(const Matrix& g);

}  // namespace cpd
