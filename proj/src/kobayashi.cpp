#include "cpd/kobayashi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cpd/error.hpp"
#include "cpd/random.hpp"

namespace cpd {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFailedScore = 1e6;

IntegrationOptions integration(const LinkOptions& o) {
  IntegrationOptions io;
  io.rtol = o.rtol;
  io.atol = o.atol;
  return io;
}

// Largest Einstein residual on a few points spread over the trajectory.
double einstein_along(const MetricModel& model, const GeodesicTrajectory& traj) {
  double worst = 0.0;
  const double lo = traj.lo(), hi = traj.hi();
  for (int i = 0; i <= 8; ++i) {
    const double s = lo + (hi - lo) * (0.02 + 0.96 * i / 8.0);
    worst = std::max(worst, einstein_residual_at(model, traj.at(s).x));
  }
  return worst;
}

std::vector<double> angles_of(const Vector& e) {
  const int m = static_cast<int>(e.size());
  std::vector<double> a(static_cast<std::size_t>(std::max(m - 1, 0)));
  for (int i = 0; i + 2 < m; ++i) a[static_cast<std::size_t>(i)] = std::atan2(e.tail(m - i - 1).norm(), e[i]);
  if (m >= 2) a[static_cast<std::size_t>(m - 2)] = std::atan2(e[m - 1], e[m - 2]);
  return a;
}

Tangent with_time_sign(const MetricModel& model, const Coordinates& x, const Vector& spatial, double sign) {
  const int n = model.dimension();
  Tangent v(n);
  v.head(n - 1) = spatial;
  v[n - 1] = sign;
  return null_project(model, x, v);
}

// Coordinate gap between two points.
double gap(const Coordinates& a, const Coordinates& b) { return (a - b).norm(); }

}  // namespace

double ChainLink::embed(double s) const {
  return moebius.apply(ProjectivePoint::from_angle(param->angle(s))).value();
}

ChainLink make_link(const MetricModel& model, const LinkGeometry& geometry, const LinkOptions& options) {
  ChainLink link;
  link.geometry = geometry;
  link.s_start = 0.0;
  link.s_end = geometry.span;

  IntegrationOptions io = integration(options);
  // Only null data is kept on the null cone; anything else is integrated as given.
  const Matrix g0 = metric_at(model, geometry.start);
  io.reproject_null = std::abs(metric_norm(g0, geometry.velocity)) <=
                      kNullTolerance * std::max(1.0, geometry.velocity.squaredNorm());
  const double budget = std::max(options.affine_budget, 1.5 * std::abs(geometry.span));
  auto traj = std::make_shared<const GeodesicTrajectory>(
      integrate_geodesic(model, geometry.start, geometry.velocity, budget, budget, io));
  if (!traj->contains(geometry.span))
    throw Error(Errc::OutOfDomain, "link leaves the domain before reaching its span");

  bool affine = options.method == LinkMethod::Affine;
  if (options.method == LinkMethod::Auto) {
    try {
      affine = einstein_along(model, *traj) <= options.einstein_tolerance;
    } catch (const Error&) {
      affine = false;
    }
  }
  OdeOptions co = companion_defaults();
  co.rtol = std::clamp(0.1 * options.rtol, 1e-13, 1e-9);
  co.atol = 0.01 * co.rtol;
  auto param = std::make_shared<const HomogeneousParameter>(projective_parameter(
      model, *traj, 0.0, affine ? ProjectiveMethod::Affine : ProjectiveMethod::Companion, co));
  link.einstein = affine;
  link.trajectory = traj;
  link.param = param;
  link.arc = development_arc(*param);

  const double t0 = param->angle(0.0), t1 = param->angle(geometry.span);
  if (link.arc.kind == ArcKind::ProperArc) {
    const double mid = 0.5 * (link.arc.angle_lo + link.arc.angle_hi);
    const double half = 0.5 * link.arc.rotation();
    link.moebius = arc_embedding(link.arc);
    const double th = std::tan(half);
    link.a = std::tan(t0 - mid) / th;
    link.b = std::tan(t1 - mid) / th;
    if (!(std::abs(link.a) < 1.0 && std::abs(link.b) < 1.0))
      throw Error(Errc::PointOffArc, "link endpoint at the edge of its development");
    link.cost = poincare_distance(link.a, link.b);
  } else if (geometry.span == 0.0) {
    link.moebius = Moebius::identity();
  } else {
    // Shrinking interval (-1/i, 1/i) inside a π-window of the development; the
    // cost 2ρ_I(0, 1/i) tends to 0 with i.
    const double lo = link.arc.angle_lo, hi = link.arc.angle_hi;
    const double w = std::clamp(0.5 * (t0 + t1), lo + kPi / 2, std::max(lo + kPi / 2, hi - kPi / 2));
    const double p0 = std::tan(t0 - w), p1 = std::tan(t1 - w);
    const double c = 0.5 * (p0 + p1), h = 0.5 * (p1 - p0);
    const double i = options.lemma_index;
    const Moebius rotate = Moebius::make(std::cos(w), -std::sin(w), std::sin(w), std::cos(w));
    link.moebius = compose(Moebius::make(1.0, -c, 0.0, i * h), rotate);
    link.a = -1.0 / i;
    link.b = 1.0 / i;
    link.cost = poincare_distance(link.a, link.b);
  }
  return link;
}

ChainLink reversed(const ChainLink& link) {
  ChainLink r = link;
  std::swap(r.s_start, r.s_end);
  std::swap(r.a, r.b);
  return r;
}

KobayashiChain make_chain(const MetricModel& model, const std::vector<LinkGeometry>& geometry,
                          const LinkOptions& options) {
  KobayashiChain chain;
  for (const auto& g : geometry) chain.links.push_back(make_link(model, g, options));
  if (!chain.links.empty()) {
    chain.joints.push_back(chain.links.front().from());
    for (const auto& l : chain.links) chain.joints.push_back(l.to());
  }
  return chain;
}

KobayashiChain reversed(const KobayashiChain& chain) {
  KobayashiChain r;
  for (auto it = chain.links.rbegin(); it != chain.links.rend(); ++it) r.links.push_back(reversed(*it));
  r.joints.assign(chain.joints.rbegin(), chain.joints.rend());
  return r;
}

KobayashiChain concatenate(const KobayashiChain& first, const KobayashiChain& second) {
  KobayashiChain c = first;
  c.links.insert(c.links.end(), second.links.begin(), second.links.end());
  if (!second.joints.empty()) c.joints.insert(c.joints.end(), second.joints.begin() + 1, second.joints.end());
  return c;
}

double worst_joint_gap(const KobayashiChain& chain) {
  if (chain.joints.size() != chain.links.size() + 1) return kInf;
  double worst = 0.0;
  for (std::size_t i = 0; i < chain.links.size(); ++i) {
    worst = std::max(worst, gap(chain.links[i].from(), chain.joints[i]));
    worst = std::max(worst, gap(chain.links[i].to(), chain.joints[i + 1]));
  }
  return worst;
}

double chain_length(const KobayashiChain& chain, double eps_join) {
  if (chain.links.empty()) throw Error(Errc::InvalidChain, "a chain needs at least one link");
  const double g = worst_joint_gap(chain);
  if (!(g <= eps_join)) throw Error(Errc::InvalidChain, "joint gap " + std::to_string(g) + " exceeds tolerance");
  double total = 0.0;
  for (const auto& l : chain.links) total += poincare_distance(l.a, l.b);
  return total;
}

ChainValidation validate_chain(const MetricModel& model, const KobayashiChain& chain, const ValidationTolerances& tol) {
  ChainValidation report;
  const int n = model.dimension();
  for (std::size_t li = 0; li < chain.links.size(); ++li) {
    const ChainLink& link = chain.links[li];
    const GeodesicTrajectory& traj = *link.trajectory;
    const double lo = std::min(link.s_start, link.s_end), hi = std::max(link.s_start, link.s_end);
    for (int i = 0; i < tol.samples; ++i) {
      const double s = tol.samples == 1 ? lo : lo + (hi - lo) * i / (tol.samples - 1);
      const GeodesicPoint p = traj.at(s);
      const Vector res = traj.acceleration(s) + christoffel_at(model, p.x).contract(p.v, p.v);
      report.geodesic_residual = std::max(report.geodesic_residual, res.norm());
      const double drift = std::abs(metric_norm(metric_at(model, p.x), p.v)) / std::max(1.0, p.v.squaredNorm());
      report.null_drift = std::max(report.null_drift, drift);
    }
    // The projective parameter obeys {u, s} = -(2/(n-2)) Ric(γ', γ'), checked
    // on a Möbius-normalized copy of the embedded parameter.
    if (hi > lo) {
      const double h = 1e-2;
      const double centre = 0.5 * (link.param->angle(lo) + link.param->angle(hi));
      auto f = [&](double s) { return std::tan(link.param->angle(s) - centre); };
      for (int i = 0; i < 5; ++i) {
        double s = lo + (hi - lo) * (i + 0.5) / 5.0;
        s = std::clamp(s, traj.lo() + 2.5 * h, traj.hi() - 2.5 * h);
        if (!(s - 2 * h >= link.param->lo() && s + 2 * h <= link.param->hi())) continue;
        try {
          const GeodesicPoint p = traj.at(s);
          const double expected = -2.0 / (n - 2) * p.v.dot(ricci_at(model, p.x) * p.v);
          const double measured = schwarzian(f, s, h);
          report.schwarzian_residual = std::max(report.schwarzian_residual,
                                                std::abs(measured - expected) / std::max(1.0, std::abs(expected)));
        } catch (const Error&) {
        }
      }
    }
  }
  report.joint_gap = worst_joint_gap(chain);
  if (chain.links.empty()) report.failures.push_back("chain has no links");
  if (!(report.geodesic_residual <= tol.geodesic_residual)) report.failures.push_back("geodesic residual");
  if (!(report.null_drift <= tol.null_drift)) report.failures.push_back("null drift");
  if (!(report.schwarzian_residual <= tol.schwarzian)) report.failures.push_back("schwarzian residual");
  if (!(report.joint_gap <= tol.eps_join)) report.failures.push_back("joint continuity");
  report.pass = report.failures.empty();
  return report;
}

double segment_cost(const MetricModel& model, const GeodesicTrajectory& trajectory, double s1, double s2,
                    ProjectiveMethod method) {
  if (!trajectory.contains(s1) || !trajectory.contains(s2))
    throw Error(Errc::OutOfDomain, "segment parameters outside the trajectory");
  if (s1 == s2) return 0.0;
  const double base = trajectory.contains(0.0) ? 0.0 : s1;
  const HomogeneousParameter p = projective_parameter(model, trajectory, base, method);
  const DevelopmentArc arc = development_arc(p);
  return arc_distance_angles(arc, p.angle(s1), p.angle(s2));
}

LinkOptions link_options(const SearchConfig& config, bool search) {
  LinkOptions o;
  o.rtol = search ? config.search_rtol : config.rtol;
  o.atol = 0.1 * o.rtol;
  o.affine_budget = config.affine_budget;
  return o;
}

// ---------------------------------------------------------------------------

namespace {

// Damped Newton / Gauss-Newton with a forward-difference Jacobian. F may
// throw cpd::Error, which counts as an infinite residual.
template <class F>
std::pair<Vector, double> solve_nonlinear(F&& fn, Vector z, int equations, double tol, int max_iter = 30) {
  auto eval = [&](const Vector& arg, Vector& out) {
    try {
      out = fn(arg);
      return out.allFinite() ? out.norm() : kInf;
    } catch (const Error&) {
      return kInf;
    }
  };
  Vector r(equations);
  double norm = eval(z, r);
  const int m = static_cast<int>(z.size());
  for (int it = 0; it < max_iter && std::isfinite(norm) && norm > tol; ++it) {
    Eigen::MatrixXd J(equations, m);
    bool ok = true;
    for (int j = 0; j < m && ok; ++j) {
      Vector zp = z;
      const double h = 1e-7 * std::max(1e-3, std::abs(z[j]));
      zp[j] += h;
      Vector rp(equations);
      ok = std::isfinite(eval(zp, rp));
      if (ok) J.col(j) = (rp - r) / h;
    }
    if (!ok) break;
    const Eigen::VectorXd step = J.colPivHouseholderQr().solve(-Eigen::VectorXd(r));
    if (!step.allFinite()) break;
    double lambda = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 12; ++ls, lambda *= 0.5) {
      Vector trial = z + lambda * Vector(step);
      Vector rt(equations);
      const double nt = eval(trial, rt);
      if (nt < norm) {
        z = trial;
        r = rt;
        norm = nt;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return {z, norm};
}

}  // namespace

std::optional<NullConnection> connect_null(const MetricModel& model, const Coordinates& x, const Coordinates& y,
                                           double rtol, double tol) {
  const int n = model.dimension();
  const Vector delta = y - x;
  if (delta.head(n - 1).norm() == 0.0) return std::nullopt;
  const double sign = delta[n - 1] >= 0.0 ? 1.0 : -1.0;
  IntegrationOptions io;
  io.rtol = rtol;
  io.atol = 0.1 * rtol;
  auto residual = [&](const Vector& w) -> Vector {
    const Tangent v = with_time_sign(model, x, w, sign);
    return propagate(model, x, v, 1.0, io).x - y;
  };
  // The straight-line seed misses badly when the metric scale changes a lot
  // between x and y; retry with rescaled seeds before giving up.
  const Vector seed = delta.head(n - 1);
  Vector best;
  double best_miss = kInf;
  for (const double f : {1.0, 0.5, 2.0, 0.25, 4.0, 0.1, 10.0}) {
    auto [w, miss] = solve_nonlinear(residual, Vector(f * seed), n, 1e-13 * std::max(1.0, y.norm()), 40);
    if (miss < best_miss) {
      best_miss = miss;
      best = w;
    }
    if (best_miss <= tol) break;
  }
  if (!(best_miss <= tol)) return std::nullopt;
  return NullConnection{{x, with_time_sign(model, x, best, sign), 1.0}, best_miss};
}

std::optional<ZeroCertificate> certify_zero(const MetricModel& model, const Coordinates& x, const Coordinates& y,
                                            const SearchConfig& config) {
  if (!model.in_domain(x) || !model.in_domain(y)) throw Error(Errc::OutOfDomain, "endpoint outside the domain");
  const double etol = link_options(config, false).einstein_tolerance;
  // Every link passes through x and y, so a non-Einstein endpoint rules the
  // construction out at once.
  try {
    if (einstein_residual_at(model, x) > etol || einstein_residual_at(model, y) > etol) return std::nullopt;
  } catch (const Error&) {
    return std::nullopt;
  }
  LinkOptions lo = link_options(config, false);
  lo.method = LinkMethod::Auto;
  lo.lemma_index = kLemmaIndices.back();
  const double join = 1e-3 * config.eps_join;

  auto accept = [&](const std::vector<LinkGeometry>& geoms) -> std::optional<ZeroCertificate> {
    KobayashiChain chain;
    try {
      chain = make_chain(model, geoms, lo);
    } catch (const Error&) {
      return std::nullopt;
    }
    chain.joints.front() = x;
    chain.joints.back() = y;
    ZeroCertificate cert;
    for (const auto& l : chain.links) {
      if (!l.einstein || l.arc.kind != ArcKind::FullLine) return std::nullopt;
      cert.einstein_residual = std::max(cert.einstein_residual, einstein_along(model, *l.trajectory));
    }
    if (!(worst_joint_gap(chain) <= config.eps_join)) return std::nullopt;
    for (const double i : kLemmaIndices) {
      double total = 0.0;
      for (std::size_t k = 0; k < chain.links.size(); ++k) total += poincare_distance(-1.0 / i, 1.0 / i);
      cert.sequence.emplace_back(i, total);
    }
    cert.chain = std::move(chain);
    return cert;
  };

  if (auto c = connect_null(model, x, y, config.rtol, join)) {
    if (auto cert = accept({c->geometry})) return cert;
  }

  // Two links: move along a null ray from x until the frozen-metric interval
  // to y changes sign, bisect, then connect the turning point to y.
  const int n = model.dimension();
  const Vector delta = y - x;
  std::vector<Vector> dirs;
  const Vector ds = delta.head(n - 1);
  if (ds.norm() > 0) {
    dirs.push_back(ds / ds.norm());
    dirs.push_back(-ds / ds.norm());
  }
  for (int i = 0; i < n - 1; ++i) {
    Vector e = Vector::Zero(n - 1);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  IntegrationOptions io;
  io.rtol = config.rtol;
  io.atol = 0.1 * config.rtol;
  const double scale = std::max(delta.norm(), 1e-6);
  for (const Vector& e : dirs) {
    for (const double sign : {1.0, -1.0}) {
      Tangent v;
      try {
        v = with_time_sign(model, x, e, sign);
      } catch (const Error&) {
        continue;
      }
      auto interval = [&](double s) {
        const Coordinates z = propagate(model, x, v, s, io).x;
        const Vector d = y - z;
        return metric_norm(metric_at(model, z), d);
      };
      try {
        const double f0 = metric_norm(metric_at(model, x), delta);
        double lo_s = 0.0, hi_s = -1.0;
        for (int j = -8; j <= 8; ++j) {
          const double s = scale * std::ldexp(1.0, j);
          if ((interval(s) > 0) != (f0 > 0)) {
            hi_s = s;
            break;
          }
          lo_s = s;
        }
        if (hi_s < 0) continue;
        for (int it = 0; it < 80 && hi_s - lo_s > 1e-15 * hi_s; ++it) {
          const double mid = 0.5 * (lo_s + hi_s);
          if ((interval(mid) > 0) == (f0 > 0)) lo_s = mid;
          else hi_s = mid;
        }
        const double s_turn = 0.5 * (lo_s + hi_s);
        const Coordinates z = propagate(model, x, v, s_turn, io).x;
        auto c2 = connect_null(model, z, y, config.rtol, join);
        if (!c2) continue;
        if (auto cert = accept({LinkGeometry{x, v, s_turn}, c2->geometry})) return cert;
      } catch (const Error&) {
        continue;
      }
    }
  }
  return std::nullopt;
}

const char* to_string(EstimateStatus status) {
  switch (status) {
    case EstimateStatus::ZeroCertificate: return "ZeroCertificate";
    case EstimateStatus::UpperBound: return "UpperBound";
    case EstimateStatus::Failed: return "Failed";
  }
  return "?";
}

// ---------------------------------------------------------------------------

namespace {

struct Candidate {
  double value = kInf;
  double miss = kInf;
  double score = kInf;
  int links = 0;
  std::vector<double> params;
  std::optional<KobayashiChain> chain;
  std::size_t evaluations = 0;
};

// Valid chains first, then value, link count and parameters.
bool better(const Candidate& a, const Candidate& b, double eps_join) {
  const bool va = a.miss <= eps_join, vb = b.miss <= eps_join;
  if (va != vb) return va;
  const double ka = va ? a.value : a.score, kb = vb ? b.value : b.score;
  if (ka != kb) return ka < kb;
  if (a.links != b.links) return a.links < b.links;
  return a.params < b.params;
}

// Span along the ray (p, v) at which y first sits on the light cone of the
// ray point, with the interval measured in the metric at the midpoint. Used
// only to start the closure solve; falls back to the flat-cone value.
double closure_guess(const MetricModel& model, const Coordinates& p, const Tangent& v, const Coordinates& y,
                     const IntegrationOptions& io, double budget, double fallback) {
  std::optional<GeodesicTrajectory> traj;
  try {
    traj.emplace(integrate_geodesic(model, p, v, budget, budget, io));
  } catch (const Error&) {
    return fallback;
  }
  auto interval = [&](double s) {
    const Coordinates q = traj->at(s).x;
    const Coordinates mid = 0.5 * (q + y);
    const Matrix g = model.in_domain(mid) ? model.raw_metric(mid) : model.raw_metric(q);
    return metric_norm(g, y - q);
  };
  const double lo = traj->lo(), hi = traj->hi();
  constexpr int kGrid = 80;
  double best = kInf;
  for (int dir = -1; dir <= 1; dir += 2) {
    const double end = dir > 0 ? hi : lo;
    double s_prev = 0.0, f_prev = interval(0.0);
    for (int k = 1; k <= kGrid; ++k) {
      const double r = static_cast<double>(k) / kGrid;
      const double s = end * r * r;
      const double f = interval(s);
      if (std::isfinite(f) && std::isfinite(f_prev) && (f_prev < 0.0) != (f < 0.0)) {
        double a = s_prev, b = s, fa = f_prev;
        for (int it = 0; it < 60; ++it) {
          const double m = 0.5 * (a + b);
          const double fm = interval(m);
          if ((fm < 0.0) == (fa < 0.0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        const double root = 0.5 * (a + b);
        if (std::abs(root) < std::abs(best)) best = root;
        break;
      }
      s_prev = s;
      f_prev = f;
    }
  }
  return std::isfinite(best) ? best : fallback;
}

class ChainSearch {
 public:
  ChainSearch(const MetricModel& model, const Coordinates& x, const Coordinates& y, const SearchConfig& config)
      : model_(model), x_(x), y_(y), config_(config), n_(model.dimension()) {
    const Matrix g = metric_at(model, x);
    const Vector d = (y - x).head(n_ - 1);
    double len = 0.0;
    for (int i = 0; i < n_ - 1; ++i) len += g(i, i) * d[i] * d[i];
    scale_ = std::max({std::sqrt(len), std::abs(y[n_ - 1] - x[n_ - 1]), 1e-3});
  }

  int parameter_count(int k) const { return (k - 1) * (n_ - 2) + (k - 2); }

  // Chain from the free parameters; the span of link k-1 and the whole last
  // link are solved so that the chain ends at y.
  Candidate evaluate(const std::vector<double>& params, int k, bool final) const {
    Candidate c;
    c.links = k;
    c.params = params;
    const LinkOptions lo = link_options(config_, !final);
    IntegrationOptions io;
    io.rtol = lo.rtol;
    io.atol = lo.atol;
    const int na = n_ - 2;
    try {
      std::vector<LinkGeometry> geoms;
      Coordinates p = x_;
      std::size_t idx = 0;
      auto direction = [&](const Coordinates& at) {
        std::vector<double> a(params.begin() + static_cast<long>(idx), params.begin() + static_cast<long>(idx + na));
        idx += static_cast<std::size_t>(na);
        return null_direction(model_, at, sphere_direction(a, n_ - 1));
      };
      for (int j = 0; j + 2 < k; ++j) {
        const Tangent v = direction(p);
        const double span = params[idx++];
        geoms.push_back({p, v, span});
        p = propagate(model_, p, v, span, io).x;
      }
      const Tangent v = direction(p);
      // Frozen-metric guess: p + σ v on the flat cone of y.
      const Matrix g = metric_at(model_, p);
      const Vector d = y_ - p;
      const double dv = d.dot(g * v);
      const double flat = std::abs(dv) > 1e-14 ? 0.5 * metric_norm(g, d) / dv : 0.0;
      const double sigma0 = closure_guess(model_, p, v, y_, io, config_.affine_budget, flat);
      const Coordinates q0 = sigma0 == flat ? Coordinates(p + sigma0 * v) : propagate(model_, p, v, sigma0, io).x;
      const double sign = y_[n_ - 1] - q0[n_ - 1] >= 0.0 ? 1.0 : -1.0;
      Vector z0(n_);
      z0[0] = sigma0;
      z0.tail(n_ - 1) = (y_ - q0).head(n_ - 1);
      auto closure = [&](const Vector& z) -> Vector {
        const Coordinates q = propagate(model_, p, v, z[0], io).x;
        const Tangent u = with_time_sign(model_, q, z.tail(n_ - 1), sign);
        return propagate(model_, q, u, 1.0, io).x - y_;
      };
      // Past-directed rays speed up toward the singular end; a linear velocity
      // guess can overshoot out of the chart, so it is shortened first.
      for (int shrink = 0; shrink < 20; ++shrink) {
        bool finite = false;
        try {
          finite = closure(z0).allFinite();
        } catch (const Error&) {
        }
        if (finite) break;
        z0.tail(n_ - 1) *= 0.5;
      }
      auto [z, miss] = solve_nonlinear(closure, z0, n_, 1e-13 * std::max(1.0, y_.norm()));
      if (!std::isfinite(miss)) {
        c.score = kFailedScore;
        return c;
      }
      const Coordinates q = propagate(model_, p, v, z[0], io).x;
      geoms.push_back({p, v, z[0]});
      geoms.push_back({q, with_time_sign(model_, q, z.tail(n_ - 1), sign), 1.0});
      KobayashiChain chain = make_chain(model_, geoms, lo);
      double value = 0.0;
      for (const auto& l : chain.links) value += l.cost;
      c.miss = gap(chain.links.back().to(), y_);
      chain.joints.back() = y_;
      c.value = value;
      c.score = value + config_.penalty * c.miss;
      if (final) c.chain = std::move(chain);
    } catch (const Error&) {
      c.score = kFailedScore;
    }
    return c;
  }

  Candidate run_start(std::size_t index) const {
    const int k = 2 + static_cast<int>(index % static_cast<std::size_t>(std::max(config_.k_max - 1, 1)));
    auto rng = stream_for(config_.seed, index, 0x6b);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(-1.5, 1.5);
    std::vector<double> start;
    for (int j = 0; j + 1 < k; ++j) {
      Vector e(n_ - 1);
      for (int i = 0; i < n_ - 1; ++i) e[i] = normal(rng);
      if (e.norm() == 0.0) e[0] = 1.0;
      const auto a = angles_of(e / e.norm());
      start.insert(start.end(), a.begin(), a.end());
      if (j + 2 < k) start.push_back(unit(rng) * scale_);
    }
    std::size_t evaluations = 0;
    auto f = [&](const std::vector<double>& p) {
      ++evaluations;
      return evaluate(p, k, false).score;
    };
    const std::vector<double> best = nelder_mead(f, start, k);
    Candidate c = evaluate(best, k, true);
    c.evaluations = evaluations + 1;
    return c;
  }

 private:
  template <class F>
  std::vector<double> nelder_mead(F&& f, const std::vector<double>& start, int k) const {
    const std::size_t m = start.size();
    std::vector<std::vector<double>> pts(m + 1, start);
    std::vector<double> vals(m + 1);
    // Angles move by 0.3 rad, spans by 0.3 of the separation scale.
    std::size_t idx = 0;
    for (int j = 0; j + 1 < k; ++j) {
      for (int i = 0; i < n_ - 2; ++i, ++idx) pts[idx + 1][idx] += 0.3;
      if (j + 2 < k) {
        pts[idx + 1][idx] += 0.3 * scale_;
        ++idx;
      }
    }
    for (std::size_t i = 0; i <= m; ++i) vals[i] = f(pts[i]);
    std::vector<std::size_t> order(m + 1);
    for (int it = 0; it < config_.iterations; ++it) {
      for (std::size_t i = 0; i <= m; ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
      const std::size_t best = order.front(), worst = order.back(), second = order[m - 1];
      if (std::abs(vals[worst] - vals[best]) <= 1e-12 * (1.0 + std::abs(vals[best]))) {
        double diam = 0.0;
        for (std::size_t i = 0; i <= m; ++i)
          for (std::size_t j = 0; j < m; ++j) diam = std::max(diam, std::abs(pts[i][j] - pts[best][j]));
        if (diam <= 1e-9) break;
      }
      std::vector<double> centroid(m, 0.0);
      for (std::size_t i = 0; i <= m; ++i)
        if (i != worst)
          for (std::size_t j = 0; j < m; ++j) centroid[j] += pts[i][j] / static_cast<double>(m);
      auto along = [&](double t) {
        std::vector<double> p(m);
        for (std::size_t j = 0; j < m; ++j) p[j] = centroid[j] + t * (pts[worst][j] - centroid[j]);
        return p;
      };
      const auto xr = along(-1.0);
      const double fr = f(xr);
      if (fr < vals[best]) {
        const auto xe = along(-2.0);
        const double fe = f(xe);
        if (fe < fr) {
          pts[worst] = xe;
          vals[worst] = fe;
        } else {
          pts[worst] = xr;
          vals[worst] = fr;
        }
      } else if (fr < vals[second]) {
        pts[worst] = xr;
        vals[worst] = fr;
      } else {
        const bool outside = fr < vals[worst];
        const auto xc = along(outside ? -0.5 : 0.5);
        const double fc = f(xc);
        if (fc < (outside ? fr : vals[worst])) {
          pts[worst] = xc;
          vals[worst] = fc;
        } else {
          for (std::size_t i = 0; i <= m; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < m; ++j) pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
            vals[i] = f(pts[i]);
          }
        }
      }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= m; ++i)
      if (vals[i] < vals[best] || (vals[i] == vals[best] && pts[i] < pts[best])) best = i;
    return pts[best];
  }

  const MetricModel& model_;
  Coordinates x_, y_;
  SearchConfig config_;
  int n_;
  double scale_ = 1.0;
};

bool lexicographically_less(const Coordinates& a, const Coordinates& b) {
  for (int i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

DistanceEstimate reversed(DistanceEstimate e) {
  std::swap(e.x, e.y);
  e.chain = reversed(e.chain);
  if (e.certificate) e.certificate->chain = reversed(e.certificate->chain);
  return e;
}

}  // namespace

DistanceEstimate estimate_distance(const MetricModel& model, const Coordinates& x, const Coordinates& y,
                                   const SearchConfig& config) {
  const int n = model.dimension();
  if (x.size() != n || y.size() != n) throw Error(Errc::InvalidArgument, "point length does not match dimension");
  if (!model.in_domain(x) || !model.in_domain(y)) throw Error(Errc::OutOfDomain, "endpoint outside the domain");
  // The search always runs from the lexicographically smaller endpoint, so
  // d(x, y) and d(y, x) come from the same computation.
  if (lexicographically_less(y, x)) return reversed(estimate_distance(model, y, x, config));

  DistanceEstimate est;
  est.x = x;
  est.y = y;
  if (x == y) {
    Vector e = Vector::Zero(n - 1);
    e[0] = 1.0;
    est.chain = make_chain(model, {LinkGeometry{x, null_direction(model, x, e), 0.0}}, link_options(config, false));
    est.value = 0.0;
    est.status = EstimateStatus::ZeroCertificate;
    return est;
  }

  if (auto cert = certify_zero(model, x, y, config)) {
    est.chain = cert->chain;
    est.mismatch = worst_joint_gap(est.chain);
    est.value = 0.0;
    est.status = EstimateStatus::ZeroCertificate;
    est.certificate = std::move(cert);
    return est;
  }

  Candidate best;
  std::size_t evaluations = 0;
  if (auto c = connect_null(model, x, y, config.rtol, config.eps_join)) {
    try {
      KobayashiChain chain = make_chain(model, {c->geometry}, link_options(config, false));
      Candidate k1;
      k1.links = 1;
      k1.miss = gap(chain.links.back().to(), y);
      chain.joints.back() = y;
      k1.value = chain.links.front().cost;
      k1.score = k1.value + config.penalty * k1.miss;
      const Vector w = c->geometry.velocity.head(n - 1);
      k1.params.assign(w.data(), w.data() + w.size());
      k1.chain = std::move(chain);
      best = std::move(k1);
    } catch (const Error&) {
    }
    ++evaluations;
  }

  if (config.k_max >= 2 && config.starts > 0) {
    const ChainSearch search(model, x, y, config);
    std::vector<Candidate> results(static_cast<std::size_t>(config.starts));
    for_each_index(results.size(), config.execution,
                   [&](std::size_t i) { results[i] = search.run_start(i); });
    for (auto& r : results) {
      evaluations += r.evaluations;
      if (r.chain && better(r, best, config.eps_join)) best = std::move(r);
    }
  }

  est.budget_used = evaluations;
  if (best.chain) {
    est.chain = std::move(*best.chain);
    est.mismatch = best.miss;
  } else {
    est.mismatch = kInf;
  }
  if (best.miss <= config.eps_join) {
    est.value = best.value;
    est.status = EstimateStatus::UpperBound;
  } else {
    est.value = kInf;
    est.status = EstimateStatus::Failed;
  }
  return est;
}

EstimateTable estimate_table(const MetricModel& model, const std::vector<Coordinates>& points,
                             const SearchConfig& config) {
  EstimateTable t;
  t.points = points;
  const std::size_t m = points.size();
  t.entries.resize(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      t.at(i, j) = estimate_distance(model, points[i], points[j], config);
      if (j != i) t.at(j, i) = reversed(t.at(i, j));
    }
  }
  return t;
}

EstimateTable estimate_refine_triangle(const MetricModel& model, EstimateTable t) {
  (void)model;
  const std::size_t m = t.size();
  auto usable = [](const DistanceEstimate& e) { return e.status != EstimateStatus::Failed; };
  for (std::size_t z = 0; z < m; ++z) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j || i == z || j == z) continue;
        const DistanceEstimate& a = t.at(i, z);
        const DistanceEstimate& b = t.at(z, j);
        if (!usable(a) || !usable(b)) continue;
        DistanceEstimate& e = t.at(i, j);
        const double through = a.value + b.value;
        if (usable(e) && !(through < e.value)) continue;
        DistanceEstimate r;
        r.x = e.x;
        r.y = e.y;
        r.value = through;
        r.chain = concatenate(a.chain, b.chain);
        r.mismatch = std::max(a.mismatch, b.mismatch);
        r.budget_used = e.budget_used;
        r.status = a.status == EstimateStatus::ZeroCertificate && b.status == EstimateStatus::ZeroCertificate
                       ? EstimateStatus::ZeroCertificate
                       : EstimateStatus::UpperBound;
        e = std::move(r);
      }
    }
  }
  return t;
}

}  // namespace cpd
