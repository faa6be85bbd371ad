#include "cpd/manifold.hpp"

#include <cmath>
#include <limits>

#include "cpd/error.hpp"
#include "cpd/parallel.hpp"
#include "cpd/random.hpp"

namespace cpd {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::OutOfDomain: return "OutOfDomain";
    case Errc::SignatureError: return "SignatureError";
    case Errc::DegenerateMetric: return "DegenerateMetric";
    case Errc::ZeroSpatialPart: return "ZeroSpatialPart";
    case Errc::NotNull: return "NotNull";
    case Errc::EmptySample: return "EmptySample";
    case Errc::ImmediateExit: return "ImmediateExit";
    case Errc::OutOfInterval: return "OutOfInterval";
    case Errc::SingularTransform: return "SingularTransform";
    case Errc::CriticalPoint: return "CriticalPoint";
    case Errc::PointOffArc: return "PointOffArc";
    case Errc::InvalidChain: return "InvalidChain";
    case Errc::ParseError: return "ParseError";
    case Errc::UnsupportedDimension: return "UnsupportedDimension";
    case Errc::UnknownScenario: return "UnknownScenario";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

MetricModel::MetricModel(int dimension, std::string id, MetricFn metric, DomainFn domain,
                         std::optional<AnalyticCurvature> analytic, bool diagonal) {
  if (dimension < 3) {
    throw Error(Errc::UnsupportedDimension,
                "dimension " + std::to_string(dimension) + " < 3 (projective parameter equation divides by n - 2)");
  }
  if (dimension > kMaxDim) {
    throw Error(Errc::UnsupportedDimension, "dimension " + std::to_string(dimension) + " exceeds " +
                                                std::to_string(kMaxDim));
  }
  impl_ = std::make_shared<const Impl>(
      Impl{dimension, std::move(id), std::move(metric), std::move(domain), std::move(analytic), diagonal});
}

bool MetricModel::in_domain(const Coordinates& x) const {
  if (x.size() != dimension()) return false;
  for (int i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) return false;
  return impl_->domain(x);
}

MetricModel ConformalModel::model() const {
  auto base_model = base;
  auto omega = factor;
  auto metric = [base_model, omega](const Coordinates& x) -> Matrix {
    const double w = omega(x);
    if (!(w > 0.0)) throw Error(Errc::OutOfDomain, "conformal factor must be positive");
    return (w * w) * base_model.raw_metric(x);
  };
  auto domain = [base_model, omega](const Coordinates& x) {
    if (!base_model.in_domain(x)) return false;
    const double w = omega(x);
    return std::isfinite(w) && w > 0.0;
  };
  return MetricModel(base.dimension(), "conformal(" + base.id() + "," + label + ")", std::move(metric),
                     std::move(domain), std::nullopt, base.diagonal());
}

double StepRule::at(double xi) const { return std::max(floor, rel * std::abs(xi)); }

SignatureCount signature_of(const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  SignatureCount c;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i]) <= 1e-14 * scale) ++c.zero;
    else if (ev[i] > 0) ++c.positive;
    else ++c.negative;
  }
  return c;
}

namespace {

void require_domain(const MetricModel& model, const Coordinates& x) {
  if (x.size() != model.dimension())
    throw Error(Errc::InvalidArgument, "coordinate length does not match model dimension");
  if (!model.in_domain(x)) throw Error(Errc::OutOfDomain, "point outside the domain of model " + model.id());
}

Matrix checked_raw_metric(const MetricModel& model, const Coordinates& x) {
  require_domain(model, x);
  Matrix g = model.raw_metric(x);
  for (int i = 0; i < g.size(); ++i)
    if (!std::isfinite(g.data()[i])) throw Error(Errc::OutOfDomain, "metric is not finite at this point");
  return g;
}

// First and second coordinate derivatives of the metric by central differences.
struct MetricJet {
  Matrix g;
  std::array<Matrix, kMaxDim> dg;                    // dg[c](a,b) = ∂_c g_ab
  std::array<std::array<Matrix, kMaxDim>, kMaxDim> ddg;  // ddg[e][f](a,b) = ∂_e ∂_f g_ab
};

// With shrink set, the first-derivative step is halved until the stencil fits in the chart.
MetricJet metric_jet(const MetricModel& model, const Coordinates& x, StepRule first, bool second,
                     bool shrink = false) {
  const int n = model.dimension();
  MetricJet jet;
  jet.g = checked_raw_metric(model, x);
  auto eval = [&](const Coordinates& y) { return checked_raw_metric(model, y); };

  for (int c = 0; c < n; ++c) {
    double h = first.at(x[c]);
    Coordinates xp = x, xm = x;
    if (shrink) {
      for (int k = 0; k < 40; ++k) {
        xp[c] = x[c] + h;
        xm[c] = x[c] - h;
        if (model.in_domain(xp) && model.in_domain(xm)) break;
        h *= 0.5;
      }
      xp[c] = x[c];
      xm[c] = x[c];
    }
    auto central = [&](double step) {
      Coordinates p = x, m = x;
      p[c] += step;
      m[c] -= step;
      return Matrix((eval(p) - eval(m)) / (2.0 * step));
    };
    jet.dg[c] = central(h);
    // Near a chart boundary the floor step is no longer small against the
    // coordinate; halve until two estimates agree, then one Richardson step.
    if (shrink && h > 1e-3 * std::abs(x[c])) {
      Matrix coarse = jet.dg[c];
      for (int k = 0; k < 30; ++k) {
        const Matrix fine = central(0.5 * h);
        h *= 0.5;
        const double change = (fine - coarse).cwiseAbs().maxCoeff();
        const bool settled = change <= 1e-7 * fine.cwiseAbs().maxCoeff();
        jet.dg[c] = (4.0 * fine - coarse) / 3.0;
        if (settled || h < 1e-4 * std::abs(x[c])) break;
        coarse = fine;
      }
    }
  }
  if (!second) return jet;

  for (int e = 0; e < n; ++e) {
    const double he = kSecondDerivativeStep.at(x[e]);
    Coordinates xp = x, xm = x;
    xp[e] += he;
    xm[e] -= he;
    jet.ddg[e][e] = (eval(xp) - 2.0 * jet.g + eval(xm)) / (he * he);
    for (int f = e + 1; f < n; ++f) {
      const double hf = kSecondDerivativeStep.at(x[f]);
      Coordinates pp = x, pm = x, mp = x, mm = x;
      pp[e] += he; pp[f] += hf;
      pm[e] += he; pm[f] -= hf;
      mp[e] -= he; mp[f] += hf;
      mm[e] -= he; mm[f] -= hf;
      jet.ddg[e][f] = (eval(pp) - eval(pm) - eval(mp) + eval(mm)) / (4.0 * he * hf);
      jet.ddg[f][e] = jet.ddg[e][f];
    }
  }
  return jet;
}

Christoffel christoffel_from_jet(const MetricJet& jet, const Matrix& ginv, int n) {
  Christoffel gamma(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        double acc = 0.0;
        for (int d = 0; d < n; ++d) {
          if (ginv(a, d) == 0.0) continue;
          acc += ginv(a, d) * (jet.dg[b](d, c) + jet.dg[c](d, b) - jet.dg[d](b, c));
        }
        gamma(a, b, c) = 0.5 * acc;
        gamma(a, c, b) = 0.5 * acc;
      }
  return gamma;
}

bool use_analytic(const MetricModel& model, CurvaturePath path) {
  if (path == CurvaturePath::Analytic && !model.analytic())
    throw Error(Errc::InvalidArgument, "model " + model.id() + " has no analytic curvature");
  return path != CurvaturePath::FiniteDifference && model.analytic() != nullptr;
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix ricci_finite_difference(const MetricModel& model, const Coordinates& x) {
  const int n = model.dimension();
  const MetricJet jet = metric_jet(model, x, kFirstDerivativeStep, true);
  const Matrix ginv = inverse_metric(model, jet.g);
  const Christoffel gamma = christoffel_from_jet(jet, ginv, n);

  // ∂_e g^{ad} = -g^{af} ∂_e g_fh g^{hd}
  std::array<Matrix, kMaxDim> dginv;
  for (int e = 0; e < n; ++e) dginv[e] = -ginv * jet.dg[e] * ginv;

  // dGamma(e, a, b, c) = ∂_e Γ^a_bc
  auto d_gamma = [&](int e, int a, int b, int c) {
    double acc = 0.0;
    for (int d = 0; d < n; ++d) {
      const double s = jet.dg[b](d, c) + jet.dg[c](d, b) - jet.dg[d](b, c);
      const double ds = jet.ddg[e][b](d, c) + jet.ddg[e][c](d, b) - jet.ddg[e][d](b, c);
      acc += dginv[e](a, d) * s + ginv(a, d) * ds;
    }
    return 0.5 * acc;
  };

  Matrix ric = Matrix::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int d = b; d < n; ++d) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a) {
        acc += d_gamma(a, a, b, d) - d_gamma(d, a, a, b);
        for (int e = 0; e < n; ++e)
          acc += gamma(a, a, e) * gamma(e, b, d) - gamma(a, d, e) * gamma(e, a, b);
      }
      ric(b, d) = acc;
      ric(d, b) = acc;
    }
  return ric;
}

}  // namespace

Matrix metric_at(const MetricModel& model, const Coordinates& x) {
  Matrix g = symmetrized(checked_raw_metric(model, x));
  const SignatureCount sig = signature_of(g);
  if (sig.negative != 1 || sig.positive != model.dimension() - 1)
    throw Error(Errc::SignatureError, "metric of " + model.id() + " is not Lorentzian (+,...,+,-) here");
  return g;
}

Matrix inverse_metric(const MetricModel& model, const Matrix& g) {
  const int n = static_cast<int>(g.rows());
  if (model.diagonal()) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    Matrix inv = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      const double d = std::abs(g(i, i));
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      inv(i, i) = 1.0 / g(i, i);
    }
    if (!(lo > 0.0) || hi / lo > kMaxConditionNumber)
      throw Error(Errc::DegenerateMetric, "metric condition number exceeds threshold");
    return inv;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(g));
  const auto& ev = es.eigenvalues();
  const double hi = ev.cwiseAbs().maxCoeff();
  const double lo = ev.cwiseAbs().minCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxConditionNumber)
    throw Error(Errc::DegenerateMetric, "metric condition number exceeds threshold");
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

Christoffel christoffel_at(const MetricModel& model, const Coordinates& x, CurvaturePath path, StepRule step) {
  require_domain(model, x);
  if (use_analytic(model, path)) return model.analytic()->christoffel(x);
  const MetricJet jet = metric_jet(model, x, step, false);
  return christoffel_from_jet(jet, inverse_metric(model, jet.g), model.dimension());
}

Matrix ricci_at(const MetricModel& model, const Coordinates& x, CurvaturePath path) {
  require_domain(model, x);
  if (use_analytic(model, path)) return symmetrized(model.analytic()->ricci(x));
  return ricci_finite_difference(model, x);
}

CurvatureSample curvature_at(const MetricModel& model, const Coordinates& x, CurvaturePath path) {
  CurvatureSample s;
  s.christoffel = christoffel_at(model, x, path);
  s.ricci = ricci_at(model, x, path);
  const Matrix ginv = inverse_metric(model, checked_raw_metric(model, x));
  s.scalar = (ginv.cwiseProduct(s.ricci)).sum();
  return s;
}

double scalar_curvature_at(const MetricModel& model, const Coordinates& x, CurvaturePath path) {
  const Matrix ric = ricci_at(model, x, path);
  const Matrix ginv = inverse_metric(model, checked_raw_metric(model, x));
  return (ginv.cwiseProduct(ric)).sum();
}

Vector geodesic_acceleration(const MetricModel& model, const Coordinates& x, const Tangent& v) {
  if (const auto* an = model.analytic()) return -an->christoffel(x).contract(v, v);
  const MetricJet jet = metric_jet(model, x, kFirstDerivativeStep, false, true);
  const Christoffel gamma = christoffel_from_jet(jet, inverse_metric(model, jet.g), model.dimension());
  return -gamma.contract(v, v);
}

double metric_norm(const Matrix& g, const Tangent& v) { return v.dot(g * v); }

Tangent null_project(const MetricModel& model, const Coordinates& x, const Tangent& v) {
  const int n = model.dimension();
  const int T = time_index(n);
  if (v.size() != n) throw Error(Errc::InvalidArgument, "tangent length does not match model dimension");
  if (v.head(n - 1).cwiseAbs().maxCoeff() == 0.0)
    throw Error(Errc::ZeroSpatialPart, "no null rescaling of a vector with vanishing spatial part");
  const Matrix g = checked_raw_metric(model, x);

  // g_tt (v^t)^2 + 2 g_ti v^i v^t + g_ij v^i v^j = 0
  const Vector spatial = v.head(n - 1);
  const double qa = g(T, T);
  const double qb = 2.0 * g.row(T).head(n - 1).dot(spatial);
  const double qc = spatial.dot(g.topLeftCorner(n - 1, n - 1) * spatial);
  const double disc = qb * qb - 4.0 * qa * qc;
  if (!(qa < 0.0) || !(disc >= 0.0)) throw Error(Errc::SignatureError, "time coordinate is not timelike here");
  const double root = std::sqrt(disc);
  // Stable quadratic roots; they have opposite signs because qa * qc < 0.
  const double q = -0.5 * (qb + std::copysign(root, qb == 0.0 ? 1.0 : qb));
  double r1 = q / qa;
  double r2 = (q != 0.0) ? qc / q : -r1;
  if (r1 < r2) std::swap(r1, r2);  // r1 future, r2 past
  Tangent out = v;
  out[T] = (v[T] >= 0.0) ? r1 : r2;
  return out;
}

double einstein_residual_at(const MetricModel& model, const Coordinates& x, CurvaturePath path) {
  const Matrix g = checked_raw_metric(model, x);
  const Matrix ric = ricci_at(model, x, path);
  const double R = (inverse_metric(model, g).cwiseProduct(ric)).sum();
  return (ric - (R / model.dimension()) * g).cwiseAbs().maxCoeff();
}

double ncc_at(const MetricModel& model, const Coordinates& x, const Tangent& X, double null_tol) {
  const Matrix g = checked_raw_metric(model, x);
  const double norm = metric_norm(g, X);
  if (std::abs(norm) > null_tol * std::max(1.0, X.squaredNorm()))
    throw Error(Errc::NotNull, "vector is not null: g(X,X) = " + std::to_string(norm));
  const Matrix ric = ricci_at(model, x);
  return X.dot(ric * X);
}

Vector sphere_direction(std::span<const double> angles, int spatial_dim) {
  Vector e(spatial_dim);
  double sin_prod = 1.0;
  for (int i = 0; i < spatial_dim - 1; ++i) {
    e[i] = sin_prod * std::cos(angles[static_cast<std::size_t>(i)]);
    sin_prod *= std::sin(angles[static_cast<std::size_t>(i)]);
  }
  e[spatial_dim - 1] = sin_prod;
  return e;
}

Tangent null_direction(const MetricModel& model, const Coordinates& x, const Vector& spatial_unit) {
  const int n = model.dimension();
  const Matrix g = checked_raw_metric(model, x);
  Tangent v = Tangent::Zero(n);
  for (int i = 0; i < n - 1; ++i) {
    const double gii = g(i, i);
    v[i] = spatial_unit[i] / std::sqrt(gii > 0.0 ? gii : 1.0);
  }
  v[time_index(n)] = 1.0;
  return null_project(model, x, v);
}

std::optional<NullSample> draw_null_sample(const MetricModel& model, const SampleSpec& spec, std::size_t i) {
  const int n = model.dimension();
  const auto directions = static_cast<std::size_t>(std::max(spec.directions, 1));
  auto rng = stream_for(spec.seed, i / directions, 0x5a);
  auto dir_rng = stream_for(spec.seed, i, 0xd1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Coordinates x(n);
  for (int c = 0; c < n; ++c) {
    const double u = unit(rng);
    if (c == time_index(n) && spec.log_time) {
      const double lo = std::log(spec.lower[c]), hi = std::log(spec.upper[c]);
      x[c] = std::exp(lo + u * (hi - lo));
    } else {
      x[c] = spec.lower[c] + u * (spec.upper[c] - spec.lower[c]);
    }
  }
  Vector e(n - 1);
  for (int c = 0; c < n - 1; ++c) e[c] = normal(dir_rng);
  if (e.norm() == 0.0) e[0] = 1.0;
  e.normalize();
  if (!model.in_domain(x)) return std::nullopt;
  return NullSample{x, null_direction(model, x, e)};
}

namespace {

struct NccEval {
  bool valid = false;
  double value = 0.0;
  NullSample sample;
};

NccEval evaluate_ncc_sample(const MetricModel& model, const SampleSpec& spec, std::size_t i) {
  NccEval out;
  auto s = draw_null_sample(model, spec, i);
  if (!s) return out;
  // Normalize the direction so the reported minimum is scale-free.
  const Tangent X = s->direction / s->direction.norm();
  out.valid = true;
  out.value = X.dot(ricci_at(model, s->x) * X);
  out.sample = NullSample{s->x, X};
  return out;
}

ConditionReport reduce_ncc(const std::vector<NccEval>& evals, double tolerance) {
  ConditionReport r;
  r.tolerance = tolerance;
  r.min_value = std::numeric_limits<double>::infinity();
  for (const auto& e : evals) {
    if (!e.valid) continue;
    ++r.samples;
    if (e.value < r.min_value) {
      r.min_value = e.value;
      if (e.value < -tolerance) {
        r.witness = e.sample;
        r.witness_value = e.value;
      }
    }
  }
  if (r.samples == 0) throw Error(Errc::EmptySample, "no in-domain sample points");
  r.pass = r.min_value >= -tolerance;
  if (r.pass) r.witness.reset();
  return r;
}

std::size_t sample_count(const SampleSpec& spec) {
  if (spec.points <= 0 || spec.directions <= 0) throw Error(Errc::EmptySample, "sample spec is empty");
  return static_cast<std::size_t>(spec.points) * static_cast<std::size_t>(spec.directions);
}

}  // namespace

ConditionReport check_ncc_serial(const MetricModel& model, const SampleSpec& spec, double tolerance) {
  const std::size_t count = sample_count(spec);
  std::vector<NccEval> evals(count);
  for_each_index(count, Execution::Serial, [&](std::size_t i) { evals[i] = evaluate_ncc_sample(model, spec, i); });
  return reduce_ncc(evals, tolerance);
}

ConditionReport check_ncc(const MetricModel& model, const SampleSpec& spec, double tolerance) {
  const std::size_t count = sample_count(spec);
  std::vector<NccEval> evals(count);
  for_each_index(count, Execution::Parallel,
                 [&](std::size_t i) { evals[i] = evaluate_ncc_sample(model, spec, i); });
  return reduce_ncc(evals, tolerance);
}

}  // namespace cpd
