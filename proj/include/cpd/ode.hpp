#pragma once

#include <array>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace cpd {

using OdeState = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 16, 1>;

// One accepted Dormand-Prince step with its fourth-order continuous extension.
struct DenseSegment {
  double s0 = 0.0;
  double h = 0.0;
  std::array<OdeState, 5> r;

  double lo() const { return h >= 0 ? s0 : s0 + h; }
  double hi() const { return h >= 0 ? s0 + h : s0; }
  OdeState value(double s) const;
  OdeState derivative(double s) const;
};

// Piecewise dense output over [lo, hi], segments kept sorted by parameter.
class DenseOutput {
 public:
  DenseOutput() = default;
  explicit DenseOutput(std::vector<DenseSegment> segments);

  // Concatenates a backward run (segments in integration order, h < 0) with a
  // forward run (h > 0) that starts at the same parameter.
  static DenseOutput join(const std::vector<DenseSegment>& backward, const std::vector<DenseSegment>& forward);

  bool empty() const { return segments_.empty(); }
  double lo() const { return segments_.front().lo(); }
  double hi() const { return segments_.back().hi(); }
  const std::vector<DenseSegment>& segments() const { return segments_; }

  OdeState value(double s) const;
  OdeState derivative(double s) const;

  // Node parameters (segment boundaries), ascending.
  std::vector<double> nodes() const;

 private:
  const DenseSegment& locate(double s) const;
  std::vector<DenseSegment> segments_;
};

struct OdeOptions {
  double rtol = 1e-11;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0: automatic
  double min_step = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 400000;
  double exit_bracket = 1e-10;
};

enum class OdeStop { Reached, DomainExit, StepCollapse };

struct OdeRun {
  std::vector<DenseSegment> segments;  // integration order
  OdeStop stop = OdeStop::Reached;
  double s_last = 0.0;
  OdeState y_last;
  // DomainExit: the boundary crossing lies between exit_inside and exit_outside.
  double exit_inside = 0.0;
  double exit_outside = 0.0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

// Right-hand side; returns false when the state lies outside the domain (or
// is not finite), which the stepper treats as a domain rejection.
using OdeRhs = std::function<bool(double s, const OdeState& y, OdeState& dy)>;
// Called after every accepted step; may adjust the state (returns true if so).
using OdeStepHook = std::function<bool(double s, OdeState& y)>;

OdeRun integrate_dopri5(const OdeRhs& rhs, double s0, const OdeState& y0, double s_end, const OdeOptions& options,
                        const OdeStepHook& hook = {});

}  // namespace cpd
