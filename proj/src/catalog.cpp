#include "cpd/catalog.hpp"

#include <cmath>
#include <memory>

#include "cpd/error.hpp"
#include "cpd/expr.hpp"

namespace cpd {

namespace {

Matrix flat_metric(int n) {
  Matrix g = Matrix::Identity(n, n);
  g(n - 1, n - 1) = -1.0;
  return g;
}

AnalyticCurvature flat_curvature(int n) {
  return {[n](const Coordinates&) { return Christoffel(n); },
          [n](const Coordinates&) -> Matrix { return Matrix::Zero(n, n); }};
}

}  // namespace

MetricModel minkowski(int n) {
  return MetricModel(
      n, "minkowski", [n](const Coordinates&) { return flat_metric(n); }, [](const Coordinates&) { return true; },
      flat_curvature(n), true);
}

MetricModel minkowski_halfspace(int n) {
  return MetricModel(
      n, "minkowski_halfspace", [n](const Coordinates&) { return flat_metric(n); },
      [n](const Coordinates& x) { return x[n - 1] > 0.0; }, flat_curvature(n), true);
}

MetricModel frw_power(double a, int n) {
  const int T = n - 1;
  const double m = n - 1;  // spatial dimension
  auto metric = [=](const Coordinates& x) {
    Matrix g = Matrix::Zero(n, n);
    const double scale = std::pow(x[T], 2.0 * a);
    for (int i = 0; i < T; ++i) g(i, i) = scale;
    g(T, T) = -1.0;
    return g;
  };
  // Γ^t_ij = a t^{2a-1} δ_ij,  Γ^i_jt = Γ^i_tj = (a/t) δ^i_j
  auto christoffel = [=](const Coordinates& x) {
    Christoffel gamma(n);
    const double t = x[T];
    const double gt = a * std::pow(t, 2.0 * a - 1.0);
    const double gi = a / t;
    for (int i = 0; i < T; ++i) {
      gamma(T, i, i) = gt;
      gamma(i, i, T) = gi;
      gamma(i, T, i) = gi;
    }
    return gamma;
  };
  // R_tt = -m a(a-1) t^{-2},  R_ij = [a(a-1) + (m-1) a^2] t^{2a-2} δ_ij
  auto ricci = [=](const Coordinates& x) {
    Matrix r = Matrix::Zero(n, n);
    const double t = x[T];
    const double spatial = (a * (a - 1.0) + (m - 1.0) * a * a) * std::pow(t, 2.0 * a - 2.0);
    for (int i = 0; i < T; ++i) r(i, i) = spatial;
    r(T, T) = -m * a * (a - 1.0) / (t * t);
    return r;
  };
  std::string id = "frw_power(" + std::to_string(a) + ")";
  return MetricModel(
      n, std::move(id), metric, [T](const Coordinates& x) { return x[T] > 0.0; },
      AnalyticCurvature{christoffel, ricci}, true);
}

MetricModel einstein_de_sitter(int n) {
  MetricModel base = frw_power(2.0 / 3.0, n);
  const int T = n - 1;
  return MetricModel(
      n, "eds", [base](const Coordinates& x) { return base.raw_metric(x); },
      [T](const Coordinates& x) { return x[T] > 0.0; }, *base.analytic(), true);
}

MetricModel custom_diagonal(int n, const std::vector<std::string>& coefficients, const std::string& domain_expression) {
  if (n < 3) throw Error(Errc::UnsupportedDimension, "dimension must be at least 3");
  if (static_cast<int>(coefficients.size()) != n)
    throw Error(Errc::InvalidArgument, "custom model needs exactly " + std::to_string(n) + " diagonal coefficients");
  auto exprs = std::make_shared<std::vector<Expression>>();
  for (const auto& c : coefficients) exprs->push_back(Expression::parse(c, n));
  std::shared_ptr<Expression> domain;
  if (!domain_expression.empty()) domain = std::make_shared<Expression>(Expression::parse(domain_expression, n));

  auto metric = [exprs, n](const Coordinates& x) {
    Matrix g = Matrix::Zero(n, n);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g(i, i) = (*exprs)[static_cast<std::size_t>(i)].evaluate(xs);
    return g;
  };
  auto inside = [domain, n](const Coordinates& x) {
    if (!domain) return true;
    const double v = domain->evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(n)));
    return std::isfinite(v) && v > 0.0;
  };
  std::string id = "custom[";
  for (std::size_t i = 0; i < coefficients.size(); ++i) id += (i ? "," : "") + coefficients[i];
  id += "]";
  return MetricModel(n, std::move(id), metric, inside, std::nullopt, true);
}

ConformalModel eds_flat_pullback(int n) {
  const int T = n - 1;
  return ConformalModel{einstein_de_sitter(n), [T](const Coordinates& x) { return std::pow(x[T], -2.0 / 3.0); },
                        "t^(-2/3)"};
}

}  // namespace cpd
