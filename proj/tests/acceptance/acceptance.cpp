// One line per acceptance criterion. Exit status is 0 only when every
// reproducible criterion holds.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "cpd/catalog.hpp"
#include "cpd/error.hpp"
#include "cpd/geodesic.hpp"
#include "cpd/kobayashi.hpp"
#include "cpd/manifold.hpp"
#include "cpd/projective.hpp"
#include "cpd/workbench.hpp"
#include "support/oracles.hpp"

using namespace cpd;
using oracle::point;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail, double seconds) {
  std::printf("criterion %2d %-4s %-34s %s (%.1fs)\n", id, pass ? "PASS" : "FAIL", name, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double rel(double got, double want) { return std::abs(got - want) / std::max(1e-300, std::abs(want)); }

SearchConfig search(std::uint64_t seed, int k_max = 2) {
  SearchConfig c;
  c.starts = 2;
  c.iterations = 20;
  c.k_max = k_max;
  c.affine_budget = 20.0;
  c.seed = seed;
  return c;
}

ShootSpec spec_of(const Coordinates& x, const Tangent& v, double budget) {
  ShootSpec s;
  s.start = x;
  s.direction = v;
  s.affine_budget = budget;
  return s;
}

GeodesicTrajectory standard_photon() { return shoot(einstein_de_sitter(4), spec_of(point({0, 0, 3, 1}), point({0, 0, 0.6, 0.6}), 10.0)); }

// A random EdS null geodesic starting at t in [0.5, 3].
GeodesicTrajectory random_eds_geodesic(oracle::Gen& gen, double budget) {
  const Coordinates x = gen.spacetime_point(4, 0.5, 3.0, 1.0);
  return shoot(einstein_de_sitter(4), spec_of(x, gen.frw_null(4, x[3], 2.0 / 3.0), budget));
}

// Pairs of EdS points joined by a null geodesic segment, away from the big bang.
std::vector<std::pair<Coordinates, Coordinates>> eds_pairs(oracle::Gen& gen, int count) {
  std::vector<std::pair<Coordinates, Coordinates>> out;
  while (static_cast<int>(out.size()) < count) {
    const GeodesicTrajectory t = random_eds_geodesic(gen, 5.0);
    const double lo = std::max(t.lo() * 0.7, -1.0);
    out.emplace_back(t.at(gen.uniform(lo, 0.0)).x, t.at(gen.uniform(0.3, 2.0)).x);
  }
  return out;
}

template <class F>
void timed(int id, const char* name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    body(pass, detail);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, name, pass, detail, s);
}

}  // namespace

int main() {
  const MetricModel eds = einstein_de_sitter(4);
  const MetricModel flat = minkowski(4);
  const MetricModel half = minkowski_halfspace(4);

  timed(1, "eds ricci and scalar curvature", [&](bool& pass, std::string& d) {
    oracle::Gen gen(101);
    double worst_ric = 0.0, worst_r = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Coordinates x = gen.spacetime_point(4, 0.5, 10.0, 5.0);
      const Matrix ric = ricci_at(eds, x, CurvaturePath::FiniteDifference);
      const Matrix want = oracle::eds_ricci(x[3]);
      for (int i = 0; i < 4; ++i) worst_ric = std::max(worst_ric, rel(ric(i, i), want(i, i)));
      worst_ric = std::max(worst_ric, (ric - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff());
      worst_r = std::max(worst_r, rel(scalar_curvature_at(eds, x, CurvaturePath::FiniteDifference), oracle::eds_scalar(x[3])));
    }
    pass = worst_ric <= 1e-5 && worst_r <= 1e-5;
    d = fmt("ricci rel err %.3g, scalar rel err %.3g, tol 1e-5", worst_ric, worst_r);
  });

  timed(2, "standard photon", [&](bool& pass, std::string& d) {
    const GeodesicTrajectory t = standard_photon();
    double worst = 0.0;
    for (int i = 0; i <= 480; ++i) {
      const double s = 0.2 + 4.8 * i / 480.0;
      worst = std::max(worst, (t.at(s - 1.0).x - oracle::photon(s)).cwiseAbs().maxCoeff());
    }
    const double drift = null_drift_sampled(eds, t, 500);
    pass = worst <= 1e-6 && drift <= 1e-8;
    d = fmt("sup error %.3g (tol 1e-6), null drift %.3g (tol 1e-8)", worst, drift);
  });

  timed(3, "projective parameter closed form", [&](bool& pass, std::string& d) {
    const GeodesicTrajectory t = standard_photon();
    const HomogeneousParameter p = projective_parameter(eds, t, 0.0);
    double worst_p = 0.0, worst_s = 0.0;
    for (double s : {0.5, 2.0, 4.0}) {
      worst_p = std::max(worst_p, std::abs(p.value(s - 1.0) - oracle::photon_parameter(s)));
      const double measured = oracle::schwarzian([&](double x) { return p.value(x - 1.0); }, s);
      worst_s = std::max(worst_s, std::abs(measured + 12.0 / 25.0 / (s * s)));
    }
    pass = worst_p <= 1e-6 && worst_s <= 1e-5;
    d = fmt("parameter err %.3g (tol 1e-6), schwarzian err %.3g (tol 1e-5)", worst_p, worst_s);
  });

  timed(4, "einstein shortcut", [&](bool& pass, std::string& d) {
    oracle::Gen gen(104);
    double worst = 0.0;
    for (const MetricModel* m : {&flat, &half}) {
      for (int k = 0; k < 10; ++k) {
        const Coordinates x = gen.spacetime_point(4, 0.5, 3.0);
        const GeodesicTrajectory t = shoot(*m, spec_of(x, gen.frw_null(4, x[3], 0.0), 20.0));
        const double s0 = gen.uniform(std::max(t.lo(), -5.0) * 0.5, 5.0);
        const HomogeneousParameter p = projective_parameter(*m, t, s0, ProjectiveMethod::Companion);
        for (int i = 0; i <= 20; ++i) {
          const double s = std::max(t.lo(), -10.0) * 0.99 + (std::min(t.hi(), 10.0) - std::max(t.lo(), -10.0) * 0.99) * i / 20.0;
          worst = std::max(worst, std::abs(p.value(s) - (s - s0)));
        }
      }
    }
    pass = worst <= 1e-8;
    d = fmt("max |p - (s - s0)| %.3g, tol 1e-8", worst);
  });

  timed(5, "segment cost closed form", [&](bool& pass, std::string& d) {
    const GeodesicTrajectory t = standard_photon();
    const double c12 = segment_cost(eds, t, 0.0, 1.0), c14 = segment_cost(eds, t, 0.0, 3.0),
                 c24 = segment_cost(eds, t, 1.0, 3.0);
    const double e12 = std::abs(c12 - 1.4 * std::log(2.0)), e14 = std::abs(c14 - 1.4 * std::log(4.0));
    const double add = std::abs(c12 + c24 - c14);
    pass = e12 <= 1e-6 && e14 <= 1e-6 && add <= 1e-8;
    d = fmt("err(1,2) %.3g, err(1,4) %.3g (tol 1e-6), additivity %.3g (tol 1e-8)", e12, e14, add);
    d += fmt(", cost(1,2) = %.10f", c12);
  });

  timed(6, "minkowski zero certificates", [&](bool& pass, std::string& d) {
    oracle::Gen gen(106);
    int zero = 0;
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const Coordinates x = gen.spacetime_point(4, 0.1, 3.0, 3.0), y = gen.spacetime_point(4, 0.1, 3.0, 3.0);
      const DistanceEstimate e = estimate_distance(flat, x, y, search(k + 1));
      if (e.status != EstimateStatus::ZeroCertificate || !e.certificate) continue;
      ++zero;
      const double links = static_cast<double>(e.certificate->chain.size());
      for (const auto& [i, len] : e.certificate->sequence)
        worst = std::max(worst, std::abs(len - 2.0 * links * std::log((1 + 1 / i) / (1 - 1 / i))));
    }
    pass = zero == 10 && worst <= 1e-12;
    d = fmt("%.0f/10 ZeroCertificate, sequence deviation %.3g (tol 1e-12)", zero, worst);
  });

  timed(7, "single-link upper bound", [&](bool& pass, std::string& d) {
    oracle::Gen gen(107);
    int ok = 0, done = 0;
    double worst = -INFINITY;
    while (done < 50) {
      const GeodesicTrajectory t = random_eds_geodesic(gen, 5.0);
      const double lo = std::max(t.lo() * 0.7, -1.0);
      const double s1 = gen.uniform(lo, 0.0), s2 = gen.uniform(0.3, 2.0);
      const double bound = segment_cost(eds, t, s1, s2);
      const DistanceEstimate e = estimate_distance(eds, t.at(s1).x, t.at(s2).x, search(1000 + done, 1));
      ++done;
      worst = std::max(worst, e.value - bound);
      if (e.value <= bound + 1e-6) ++ok;
    }
    pass = ok == 50;
    d = fmt("%.0f/50 within bound + 1e-6, worst excess %.3g", ok, worst);
  });

  // Identical chains in EdS and in the flat pullback, and full estimates in both.
  timed(8, "conformal invariance", [&](bool& pass, std::string& d) {
    oracle::Gen gen(108);
    const ConformalModel pull = eds_flat_pullback(4);
    const MetricModel pulled = pull.model();
    const auto pairs = eds_pairs(gen, 10);
    double worst_chain = 0.0, worst_est = 0.0, ratio = 0.0, gap = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const SearchConfig c = search(2000 + k, 1);
      const DistanceEstimate a = estimate_distance(eds, pairs[k].first, pairs[k].second, c);
      const DistanceEstimate b = estimate_distance(pulled, pairs[k].first, pairs[k].second, c);
      worst_est = std::max(worst_est, std::abs(a.value - b.value));
      if (a.status != EstimateStatus::UpperBound) continue;
      const KobayashiChain moved = transport_chain(a.chain, pull, link_options(c, false));
      gap = std::max(gap, worst_joint_gap(moved));
      double len = 0.0;
      for (const auto& l : moved.links) len += poincare_distance(l.a, l.b);
      worst_chain = std::max(worst_chain, std::abs(len - a.value));
      if (len > 0) ratio = std::max(ratio, a.value / len);
    }
    pass = worst_chain <= 1e-6 && gap <= 1e-6 && worst_est <= 2e-4;
    d = fmt("chain diff %.3g (tol 1e-6, transport gap %.2g), estimate diff %.3g (tol 2e-4)", worst_chain, gap,
            worst_est);
    d += fmt(", eds/pullback length ratio %.3g", ratio);
    // Closed forms along the standard photon: its flat image is the null line
    // tau = 3 s^{1/5}, so the flat cost of s in [1, 2] is (1/5) log 2, while the
    // Ricci sign fixed by criterion 3 gives the s^{7/5} chart and (7/5) log 2.
    const GeodesicTrajectory t = standard_photon();
    const GeodesicTrajectory ft = shoot(pulled, spec_of(t.at(0.0).x, t.at(0.0).v / std::pow(pull.factor(t.at(0.0).x), 2), 10.0));
    const double tau1 = eds_conformal_map(t.at(0.0).x)[3], tau2 = eds_conformal_map(t.at(1.0).x)[3];
    double s2 = 0.0;  // flat affine parameter of the second point
    for (double lo = 0.0, hi = ft.hi(); hi - lo > 1e-13;) {
      s2 = 0.5 * (lo + hi);
      (ft.at(s2).x[3] < t.at(1.0).x[3] ? lo : hi) = s2;
    }
    d += fmt("; standard photon s in [1, 2]: eds %.6f, pullback %.6f, closed-form flat %.6f", segment_cost(eds, t, 0.0, 1.0),
             segment_cost(pulled, ft, 0.0, s2), std::abs(std::log(tau2 / tau1)));
  });

  timed(9, "null convergence and generic conditions", [&](bool& pass, std::string& d) {
    SampleSpec s;
    s.lower = point({-5, -5, -5, 0.1});
    s.upper = point({5, 5, 5, 10});
    s.log_time = true;
    s.points = 1000;
    s.seed = 109;
    const ConditionReport ncc = check_ncc(eds, s);
    oracle::Gen gen(109);
    int holds = 0;
    for (int k = 0; k < 20; ++k) holds += ngc_along(eds, random_eds_geodesic(gen, 20.0), 1e-10).holds ? 1 : 0;
    const GeodesicTrajectory line = shoot(flat, spec_of(point({0, 0, 0, 1}), point({0.6, 0, 0.8, 1}), 50.0));
    const NgcResult fl = ngc_along(flat, line, 1e-10);
    pass = ncc.pass && ncc.min_value > 0.0 && holds == 20 && !fl.holds && !fl.witness;
    d = fmt("ncc min Ric(X,X) %.3g, ngc on eds %.0f/20, ", ncc.min_value, holds);
    d += fl.witness ? "minkowski has an ngc witness" : "minkowski has no ngc witness at 1e-10";
  });

  timed(10, "incompleteness", [&](bool& pass, std::string& d) {
    oracle::Gen gen(110);
    int exits = 0, flat_exits = 0;
    double bracket = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Coordinates x = gen.spacetime_point(4, 0.1, 10.0, 5.0);
      const Tangent v = gen.frw_null(4, x[3], 0.0);
      const GeodesicTrajectory h = shoot(half, spec_of(x, v, 50.0));
      const bool exit = h.past().flag == EndFlag::DomainExit || h.future().flag == EndFlag::DomainExit;
      if (exit) {
        ++exits;
        bracket = std::max({bracket, h.past().bracket, h.future().bracket});
      }
      const GeodesicTrajectory f = shoot(flat, spec_of(x, v, 50.0));
      if (f.past().flag == EndFlag::DomainExit || f.future().flag == EndFlag::DomainExit) ++flat_exits;
    }
    pass = exits == 100 && bracket <= 1e-8 && flat_exits == 0;
    d = fmt("half-space exits %.0f/100 (bracket %.2g, tol 1e-8), minkowski exits %.0f/100", exits, bracket, flat_exits);
  });

  timed(11, "symmetry and triangle inequality", [&](bool& pass, std::string& d) {
    oracle::Gen gen(111);
    double sym = 0.0, tri = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto p = eds_pairs(gen, 1).front();
      const GeodesicTrajectory t = random_eds_geodesic(gen, 5.0);
      const Coordinates z = t.at(gen.uniform(0.0, 1.0)).x;
      EstimateTable table = estimate_table(eds, {p.first, p.second, z}, search(3000 + k, 1));
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
          const DistanceEstimate& e = table.at(i, j);
          if (i == j || e.status == EstimateStatus::Failed) continue;
          sym = std::max(sym, std::abs(e.value - table.at(j, i).value));
          if (!e.chain.links.empty())
            sym = std::max(sym, std::abs(chain_length(reversed(e.chain)) - chain_length(e.chain)));
        }
      table = estimate_refine_triangle(eds, table);
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
          for (std::size_t m = 0; m < 3; ++m)
            tri = std::max(tri, table.at(i, j).value - table.at(i, m).value - table.at(m, j).value);
    }
    pass = sym <= 1e-6 && tri <= 1e-5;
    d = fmt("symmetry %.3g (tol 1e-6), triangle excess %.3g (slack 1e-5)", sym, tri);
  });

  std::printf("criterion 12 N/A  %-34s %s\n", "nondegeneracy for eds",
              "not reproducible numerically: only upper bounds are computed; substituted by criterion 9 "
              "and the absence of zero certificates in scenario eds-theorem");
  return failures == 0 ? 0 : 1;
}
