#include "cpd/ode.hpp"

#include <algorithm>
#include <cmath>

#include "cpd/error.hpp"

namespace cpd {

namespace {

// Dormand & Prince RK5(4)7M, continuous extension from Hairer, Norsett & Wanner.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Trial {
  bool ok = false;
  OdeState y_new;
  OdeState k7;
  OdeState err;
  std::array<OdeState, 7> k;
};

bool finite(const OdeState& y) { return y.allFinite(); }

// One Dormand-Prince step from (s, y) with slope k1; ok=false if any stage
// leaves the domain.
Trial attempt(const OdeRhs& rhs, double s, const OdeState& y, const OdeState& k1, double h) {
  Trial t;
  auto& k = t.k;
  k[0] = k1;
  OdeState tmp;
  auto stage = [&](double cs, const OdeState& arg, OdeState& out) {
    return finite(arg) && rhs(s + cs * h, arg, out) && finite(out);
  };
  tmp = y + h * (a21 * k[0]);
  if (!stage(c2, tmp, k[1])) return t;
  tmp = y + h * (a31 * k[0] + a32 * k[1]);
  if (!stage(c3, tmp, k[2])) return t;
  tmp = y + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]);
  if (!stage(c4, tmp, k[3])) return t;
  tmp = y + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]);
  if (!stage(c5, tmp, k[4])) return t;
  tmp = y + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]);
  if (!stage(1.0, tmp, k[5])) return t;
  t.y_new = y + h * (a71 * k[0] + a73 * k[2] + a74 * k[3] + a75 * k[4] + a76 * k[5]);
  if (!stage(1.0, t.y_new, k[6])) return t;
  t.k7 = k[6];
  t.err = h * (e1 * k[0] + e3 * k[2] + e4 * k[3] + e5 * k[4] + e6 * k[5] + e7 * k[6]);
  t.ok = true;
  return t;
}

double error_norm(const OdeState& err, const OdeState& y0, const OdeState& y1, const OdeOptions& o) {
  double acc = 0.0;
  for (int i = 0; i < err.size(); ++i) {
    const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

double scaled_norm(const OdeState& v, const OdeState& y, const OdeOptions& o) {
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double r = v[i] / (o.atol + o.rtol * std::abs(y[i]));
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double initial_step(const OdeRhs& rhs, double s, const OdeState& y, const OdeState& f0, double dir,
                    const OdeOptions& o) {
  const double d0 = scaled_norm(y, y, o);
  const double d1n = scaled_norm(f0, y, o);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  OdeState f1;
  const OdeState y1 = y + dir * h0 * f0;
  double h1;
  if (!rhs(s + dir * h0, y1, f1) || !finite(f1)) {
    h1 = h0;
  } else {
    const double d2 = scaled_norm(f1 - f0, y, o) / h0;
    const double m = std::max(d1n, d2);
    h1 = (m <= 1e-15) ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
  }
  return std::min(100.0 * h0, h1);
}

DenseSegment make_segment(double s, double h, const OdeState& y, const Trial& t) {
  DenseSegment seg;
  seg.s0 = s;
  seg.h = h;
  const auto& k = t.k;
  seg.r[0] = y;
  seg.r[1] = t.y_new - y;
  seg.r[2] = h * k[0] - seg.r[1];
  seg.r[3] = seg.r[1] - h * k[6] - seg.r[2];
  seg.r[4] = h * (d1 * k[0] + d3 * k[2] + d4 * k[3] + d5 * k[4] + d6 * k[5] + d7 * k[6]);
  return seg;
}

}  // namespace

OdeState DenseSegment::value(double s) const {
  const double th = (s - s0) / h;
  const double th1 = 1.0 - th;
  return r[0] + th * (r[1] + th1 * (r[2] + th * (r[3] + th1 * r[4])));
}

OdeState DenseSegment::derivative(double s) const {
  const double th = (s - s0) / h;
  // d/dθ of r0 + θ r1 + θ(1-θ) r2 + θ²(1-θ) r3 + θ²(1-θ)² r4
  const OdeState d = r[1] + (1.0 - 2.0 * th) * r[2] + th * (2.0 - 3.0 * th) * r[3] +
                     2.0 * th * (1.0 - th) * (1.0 - 2.0 * th) * r[4];
  return d / h;
}

DenseOutput::DenseOutput(std::vector<DenseSegment> segments) : segments_(std::move(segments)) {
  std::sort(segments_.begin(), segments_.end(), [](const auto& a, const auto& b) { return a.lo() < b.lo(); });
}

DenseOutput DenseOutput::join(const std::vector<DenseSegment>& backward, const std::vector<DenseSegment>& forward) {
  std::vector<DenseSegment> all;
  all.reserve(backward.size() + forward.size());
  all.insert(all.end(), backward.rbegin(), backward.rend());
  all.insert(all.end(), forward.begin(), forward.end());
  DenseOutput out;
  out.segments_ = std::move(all);
  return out;
}

const DenseSegment& DenseOutput::locate(double s) const {
  if (segments_.empty()) throw Error(Errc::InvalidArgument, "empty dense output");
  if (s < lo() || s > hi()) throw Error(Errc::OutOfDomain, "parameter outside the integrated range");
  auto it = std::upper_bound(segments_.begin(), segments_.end(), s,
                             [](double v, const DenseSegment& seg) { return v < seg.lo(); });
  if (it == segments_.begin()) return *it;
  return *std::prev(it);
}

OdeState DenseOutput::value(double s) const { return locate(s).value(s); }
OdeState DenseOutput::derivative(double s) const { return locate(s).derivative(s); }

std::vector<double> DenseOutput::nodes() const {
  std::vector<double> out;
  out.reserve(segments_.size() + 1);
  for (const auto& seg : segments_) out.push_back(seg.lo());
  if (!segments_.empty()) out.push_back(hi());
  return out;
}

OdeRun integrate_dopri5(const OdeRhs& rhs, double s0, const OdeState& y0, double s_end, const OdeOptions& o,
                        const OdeStepHook& hook) {
  OdeRun run;
  run.s_last = s0;
  run.y_last = y0;
  if (s_end == s0) return run;
  const double dir = s_end > s0 ? 1.0 : -1.0;

  OdeState y = y0;
  OdeState k1;
  if (!rhs(s0, y, k1) || !finite(k1)) throw Error(Errc::OutOfDomain, "initial state outside the domain");

  double s = s0;
  double h = o.initial_step > 0 ? o.initial_step : initial_step(rhs, s, y, k1, dir, o);
  h = std::min({h, o.max_step, std::abs(s_end - s0)});
  bool just_rejected = false;
  double smallest_domain_fail = std::numeric_limits<double>::infinity();
  const double eps = std::numeric_limits<double>::epsilon();

  auto feasible = [&](double hh) { return attempt(rhs, s, y, k1, dir * hh).ok; };

  while (true) {
    const double remaining = std::abs(s_end - s);
    if (remaining <= 4.0 * eps * std::max(1.0, std::abs(s_end))) {
      run.stop = OdeStop::Reached;
      break;
    }
    const double h_floor = std::max(o.min_step, 16.0 * eps * std::max(1.0, std::abs(s)));
    if (run.accepted + run.rejected >= o.max_steps) {
      run.stop = OdeStop::StepCollapse;
      break;
    }
    if (h < h_floor) {
      // Look a short distance ahead for a domain boundary.
      double lo = 0.0, hi = 0.0;
      double probe = h_floor;
      for (int k = 0; k < 24; ++k, probe *= 2.0) {
        if (!feasible(probe)) {
          hi = probe;
          break;
        }
        lo = probe;
      }
      if (hi > 0.0) {
        const double width = std::max(o.exit_bracket, 4.0 * eps * std::max(1.0, std::abs(s)));
        while (hi - lo > width) {
          const double mid = 0.5 * (lo + hi);
          if (feasible(mid)) lo = mid;
          else hi = mid;
        }
        run.stop = OdeStop::DomainExit;
        run.exit_inside = s + dir * lo;
        run.exit_outside = s + dir * hi;
      } else {
        run.stop = OdeStop::StepCollapse;
      }
      break;
    }

    const bool final_step = h >= remaining;
    const double step = final_step ? remaining : h;
    Trial t = attempt(rhs, s, y, k1, dir * step);
    if (!t.ok) {
      ++run.rejected;
      smallest_domain_fail = std::min(smallest_domain_fail, step);
      h = 0.5 * step;
      just_rejected = true;
      continue;
    }
    const double err = error_norm(t.err, y, t.y_new, o);
    if (!(err <= 1.0)) {
      ++run.rejected;
      const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h = step * fac;
      just_rejected = true;
      continue;
    }

    run.segments.push_back(make_segment(s, dir * step, y, t));
    ++run.accepted;
    s = final_step ? s_end : s + dir * step;
    y = t.y_new;
    k1 = t.k7;
    if (hook && hook(s, y)) {
      if (!rhs(s, y, k1) || !finite(k1)) throw Error(Errc::OutOfDomain, "step hook moved the state out of domain");
    }

    double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    fac = std::clamp(fac, 0.2, 5.0);
    if (just_rejected) fac = std::min(fac, 1.0);
    h = std::min(step * fac, o.max_step);
    if (std::isfinite(smallest_domain_fail)) {
      // A failed step size stays an upper bound while approaching the boundary.
      smallest_domain_fail = std::max(0.0, smallest_domain_fail - step);
      if (smallest_domain_fail > 0.0) h = std::min(h, smallest_domain_fail);
      else smallest_domain_fail = std::numeric_limits<double>::infinity();
    }
    just_rejected = false;
  }
  run.s_last = s;
  run.y_last = y;
  return run;
}

}  // namespace cpd
