// Command line front end: curvature, shoot, projparam, distance, conditions, scenario.
// Exit codes: 0 ok, 1 a check failed, 2 usage or input error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cpd/error.hpp"
#include "cpd/io.hpp"

namespace {

using namespace cpd;
using io::Json;

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

void emit(const Json& j, const std::string& out) {
  const std::string text = io::dump(j) + "\n";
  if (out.empty() || out == "-") std::cout << text;
  else io::write_file(out, text);
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(io::vector_json(m.row(i).transpose()));
  return rows;
}

struct CurvatureArgs {
  std::string model, point, out;
};

int run_curvature(const CurvatureArgs& a) {
  const ModelSpec spec = io::read_model(a.model);
  const MetricModel model = build_model(spec);
  const Coordinates x = io::parse_vector(a.point, model.dimension());
  const CurvatureSample c = curvature_at(model, x);
  Json gamma = Json::array();
  for (int i = 0; i < model.dimension(); ++i) {
    Json block = Json::array();
    for (int j = 0; j < model.dimension(); ++j) {
      Json row = Json::array();
      for (int k = 0; k < model.dimension(); ++k) row.push_back(io::number(c.christoffel(i, j, k)));
      block.push_back(row);
    }
    gamma.push_back(block);
  }
  Json j;
  j["model"] = io::model_to_json(spec);
  j["point"] = io::vector_json(x);
  j["path"] = model.analytic() ? "analytic" : "finite_difference";
  j["metric"] = matrix_json(metric_at(model, x));
  j["christoffel"] = gamma;
  j["ricci"] = matrix_json(c.ricci);
  j["scalar"] = io::number(c.scalar);
  j["einstein_residual"] = io::number(einstein_residual_at(model, x));
  emit(j, a.out);
  return kOk;
}

struct ShootArgs {
  std::string model, start, dir, out = "traj.csv";
  double budget = 50.0, rtol = 1e-11, atol = 1e-12;
  int samples = 0;
  bool complete_null = false;
};

int run_shoot(const ShootArgs& a) {
  const ModelSpec mspec = io::read_model(a.model);
  const MetricModel model = build_model(mspec);
  const int n = model.dimension();
  ShootSpec spec;
  spec.start = io::parse_vector(a.start, n);
  spec.direction = io::parse_vector(a.dir, n);
  if (a.complete_null) spec.direction = null_project(model, spec.start, spec.direction);
  spec.affine_budget = a.budget;
  spec.rtol = a.rtol;
  spec.atol = a.atol;
  const GeodesicTrajectory traj = shoot(model, spec);
  const io::TrajectoryTable table = io::trajectory_table(model, traj, io::trajectory_samples(traj, a.samples));
  std::ostringstream csv;
  io::write_csv(csv, table);
  io::write_file(a.out, csv.str());
  Json side = io::trajectory_sidecar(mspec, traj);
  side["samples"] = a.samples;
  io::write_file(io::sidecar_path(a.out), io::dump(side) + "\n");
  std::cout << "rows " << table.rows.size() << "  past " << to_string(traj.past().flag) << " at "
            << io::format_number(traj.past().extent) << "  future " << to_string(traj.future().flag) << " at "
            << io::format_number(traj.future().extent) << "  null drift " << io::format_number(traj.null_drift())
            << '\n';
  return kOk;
}

struct ProjArgs {
  std::string traj, out, method = "companion";
  double base = 0.0;
  double match_tolerance = 1e-8;
};

int run_projparam(const ProjArgs& a) {
  io::TrajectoryTable table = io::read_csv(a.traj);
  const Json side = io::parse_json(io::read_file(io::sidecar_path(a.traj)), io::sidecar_path(a.traj));
  const ModelSpec mspec = io::model_from_json(side.at("model"));
  const MetricModel model = build_model(mspec);
  const int n = model.dimension();
  if (table.dimension != n) throw ParseError(0, {"matching dimension"}, "CSV and sidecar disagree on dimension");
  auto vec = [&](const char* key) {
    Vector v(n);
    const Json& arr = side.at(key);
    if (!arr.is_array() || static_cast<int>(arr.size()) != n) throw ParseError(0, {"array"}, std::string("bad sidecar '") + key + "'");
    for (int i = 0; i < n; ++i) v[i] = arr[static_cast<std::size_t>(i)].get<double>();
    return v;
  };
  ShootSpec spec;
  spec.start = vec("start");
  spec.direction = vec("direction");
  spec.affine_budget = side.at("affine_budget").get<double>();
  spec.rtol = side.at("rtol").get<double>();
  spec.atol = side.at("atol").get<double>();
  spec.min_step = side.at("min_step").get<double>();
  const GeodesicTrajectory traj = shoot(model, spec);

  // The CSV is only a sampling; the parameter comes from the re-shot
  // trajectory, which must reproduce every row.
  double worst = 0.0;
  for (const auto& row : table.rows) {
    const double s = row[0];
    if (!traj.contains(s)) {
      worst = INFINITY;
      break;
    }
    const GeodesicPoint p = traj.at(s);
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(p.x[i] - row[static_cast<std::size_t>(1 + i)]) / std::max(1.0, std::abs(p.x[i])));
  }
  if (!(worst <= a.match_tolerance)) {
    std::cerr << "trajectory CSV does not match its sidecar (deviation " << io::format_number(worst) << ")\n";
    return kCheckFailed;
  }
  if (!traj.contains(a.base)) throw Error(Errc::OutOfDomain, "base parameter outside the trajectory");
  const ProjectiveMethod method = a.method == "affine" ? ProjectiveMethod::Affine : ProjectiveMethod::Companion;
  const HomogeneousParameter param = projective_parameter(model, traj, a.base, method);
  io::add_projective_columns(table, param);
  std::ostringstream csv;
  io::write_csv(csv, table);
  io::write_file(a.out.empty() ? a.traj : a.out, csv.str());

  const DevelopmentArc arc = development_arc(param);
  Json j;
  j["base"] = a.base;
  j["method"] = a.method;
  j["range"] = {io::number(param.lo()), io::number(param.hi())};
  j["wronskian_drift"] = io::number(param.wronskian_drift());
  j["arc"] = {{"kind", to_string(arc.kind)},
              {"angle_lo", io::number(arc.angle_lo)},
              {"angle_hi", io::number(arc.angle_hi)},
              {"complete_lo", arc.complete_lo},
              {"complete_hi", arc.complete_hi},
              {"conditional_on_completeness", arc.conditional_on_completeness}};
  j["csv_match"] = io::number(worst);
  emit(j, "");
  return kOk;
}

struct DistanceArgs {
  std::string model, from, to, config, out, points, matrix;
  std::optional<std::uint64_t> seed;
  bool refine = false;
};

std::vector<Coordinates> read_points(const std::string& path, int n) {
  std::istringstream in(io::read_file(path));
  std::vector<Coordinates> pts;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      pts.push_back(io::parse_vector(line, n));
    } catch (const ParseError&) {
      if (!first) throw;  // a header line is allowed
    }
    first = false;
  }
  if (pts.size() < 2) throw ParseError(0, {"at least two points"}, path + " holds fewer than two points");
  return pts;
}

int run_distance(const DistanceArgs& a) {
  const ModelSpec mspec = io::read_model(a.model);
  const MetricModel model = build_model(mspec);
  const int n = model.dimension();
  SearchConfig cfg;
  if (!a.config.empty()) cfg = io::search_from_json(io::parse_json(io::read_file(a.config), a.config));
  if (a.seed) cfg.seed = *a.seed;

  if (!a.points.empty()) {
    EstimateTable table = estimate_table(model, read_points(a.points, n), cfg);
    if (a.refine) table = estimate_refine_triangle(model, std::move(table));
    bool failed = false;
    Json entries = Json::array();
    for (std::size_t i = 0; i < table.size(); ++i)
      for (std::size_t j = 0; j < table.size(); ++j) {
        const DistanceEstimate& e = table.at(i, j);
        failed = failed || e.status == EstimateStatus::Failed;
        Json ej = io::distance_json(mspec, e, cfg);
        ej.erase("model");
        ej.erase("config");
        ej["i"] = i;
        ej["j"] = j;
        entries.push_back(std::move(ej));
      }
    std::ostringstream csv;
    io::write_matrix_csv(csv, table);
    if (!a.matrix.empty()) io::write_file(a.matrix, csv.str());
    else std::cout << csv.str();
    if (!a.out.empty()) {
      Json j;
      j["model"] = io::model_to_json(mspec);
      j["seed"] = cfg.seed;
      j["config"] = io::search_to_json(cfg);
      j["refined"] = a.refine;
      j["entries"] = entries;
      emit(j, a.out);
    }
    return failed ? kCheckFailed : kOk;
  }

  if (a.from.empty() || a.to.empty()) throw Error(Errc::InvalidArgument, "give --from and --to, or --points");
  const DistanceEstimate e = estimate_distance(model, io::parse_vector(a.from, n), io::parse_vector(a.to, n), cfg);
  const Json j = io::distance_json(mspec, e, cfg);
  if (!a.out.empty()) io::write_file(a.out, io::dump(j) + "\n");
  std::cout << to_string(e.status) << ' ' << io::format_number(e.value) << '\n';
  return e.status == EstimateStatus::Failed ? kCheckFailed : kOk;
}

struct ConditionArgs {
  std::string model, out;
  int samples = 1000, geodesics = 20;
  std::uint64_t seed = 1;
  double tmin = 0.1, tmax = 10.0, half = 5.0, ngc_tol = 1e-10, budget = 50.0;
};

int run_conditions(const ConditionArgs& a) {
  const ModelSpec mspec = io::read_model(a.model);
  const MetricModel model = build_model(mspec);
  const int n = model.dimension();
  if (!(a.tmin < a.tmax) || !(a.half > 0)) throw Error(Errc::InvalidArgument, "empty sampling box");
  SampleSpec box;
  box.lower = Coordinates::Constant(n, -a.half);
  box.upper = Coordinates::Constant(n, a.half);
  box.lower[n - 1] = a.tmin;
  box.upper[n - 1] = a.tmax;
  box.log_time = a.tmin > 0;
  box.points = a.samples;
  box.seed = a.seed;
  const ConditionReport ncc = check_ncc(model, box);

  SampleSpec gbox = box;
  gbox.points = a.geodesics;
  gbox.seed = a.seed + 1;
  std::vector<NgcResult> ngc(static_cast<std::size_t>(std::max(a.geodesics, 0)));
  std::vector<int> drawn(ngc.size(), 0);
  for_each_index(ngc.size(), Execution::Parallel, [&](std::size_t i) {
    const auto sample = draw_null_sample(model, gbox, i);
    if (!sample) return;
    IntegrationOptions opt;
    const GeodesicTrajectory traj = integrate_geodesic(model, sample->x, sample->direction, a.budget, a.budget, opt);
    ngc[i] = ngc_along(model, traj, a.ngc_tol);
    drawn[i] = 1;
  });
  int holds = 0, shot = 0;
  Json per = Json::array();
  for (std::size_t i = 0; i < ngc.size(); ++i) {
    if (!drawn[i]) continue;
    ++shot;
    holds += ngc[i].holds;
    per.push_back({{"holds", ngc[i].holds},
                   {"witness", ngc[i].witness ? io::number(*ngc[i].witness) : Json(nullptr)},
                   {"witness_value", io::number(ngc[i].witness_value)}});
  }
  Json j;
  j["model"] = io::model_to_json(mspec);
  j["ncc"] = {{"pass", ncc.pass},
              {"min_value", io::number(ncc.min_value)},
              {"tolerance", io::number(ncc.tolerance)},
              {"samples", ncc.samples}};
  if (ncc.witness) j["ncc"]["witness"] = {{"x", io::vector_json(ncc.witness->x)}, {"X", io::vector_json(ncc.witness->direction)}};
  j["ngc"] = {{"geodesics", shot}, {"holds", holds}, {"tolerance", a.ngc_tol}, {"per_geodesic", per}};
  const bool pass = ncc.pass && shot > 0 && holds == shot;
  j["pass"] = pass;
  emit(j, a.out);
  return pass ? kOk : kCheckFailed;
}

struct ScenarioArgs {
  std::string name, out;
  std::optional<std::uint64_t> seed;
  bool serial = false;
};

int run_scenario_cmd(const ScenarioArgs& a) {
  ScenarioConfig cfg;
  if (a.seed) cfg.seed = *a.seed;
  if (a.serial) cfg.execution = Execution::Serial;
  const ScenarioReport r = run_scenario(a.name, cfg);
  if (!a.out.empty()) io::write_file(a.out, io::dump(io::scenario_json(r)) + "\n");
  for (const auto& c : r.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << '\n';
  return r.pass() ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conformal pseudodistance toolkit"};
  app.require_subcommand(1);

  CurvatureArgs ca;
  auto* curv = app.add_subcommand("curvature", "metric, Christoffel symbols, Ricci and scalar curvature at a point");
  curv->add_option("--model", ca.model, "model JSON")->required();
  curv->add_option("--point", ca.point, "\"x1,...,t\"")->required();
  curv->add_option("--out", ca.out, "write JSON here instead of stdout");

  ShootArgs sa;
  auto* sh = app.add_subcommand("shoot", "integrate a null geodesic to both ends");
  sh->add_option("--model", sa.model)->required();
  sh->add_option("--start", sa.start)->required();
  sh->add_option("--dir", sa.dir, "initial null velocity")->required();
  sh->add_option("--budget", sa.budget, "affine budget per direction");
  sh->add_option("--out", sa.out, "trajectory CSV; a .json sidecar is written next to it");
  sh->add_option("--samples", sa.samples, "uniform rows (0 = integrator nodes)");
  sh->add_option("--rtol", sa.rtol);
  sh->add_option("--atol", sa.atol);
  sh->add_flag("--complete-null", sa.complete_null, "rescale the time component so the direction is null");

  ProjArgs pa;
  auto* pp = app.add_subcommand("projparam", "append u1, u2, p columns to a trajectory CSV");
  pp->add_option("--traj", pa.traj)->required();
  pp->add_option("--base", pa.base, "base point s0");
  pp->add_option("--out", pa.out, "output CSV (default: rewrite the input)");
  pp->add_option("--method", pa.method)->check(CLI::IsMember({"companion", "affine"}));
  pp->add_option("--match-tolerance", pa.match_tolerance);

  DistanceArgs da;
  auto* di = app.add_subcommand("distance", "upper bound for the pseudodistance by chain search");
  di->add_option("--model", da.model)->required();
  di->add_option("--from", da.from);
  di->add_option("--to", da.to);
  di->add_option("--seed", da.seed);
  di->add_option("--config", da.config, "JSON with SearchConfig fields");
  di->add_option("--out", da.out, "report JSON");
  di->add_option("--points", da.points, "CSV of points, one per line, for a batch matrix");
  di->add_option("--matrix", da.matrix, "matrix CSV output (default stdout)");
  di->add_flag("--refine", da.refine, "tighten the matrix through intermediate points");

  ConditionArgs co;
  auto* cd = app.add_subcommand("conditions", "sample the null convergence and null generic conditions");
  cd->add_option("--model", co.model)->required();
  cd->add_option("--samples", co.samples);
  cd->add_option("--geodesics", co.geodesics);
  cd->add_option("--seed", co.seed);
  cd->add_option("--tmin", co.tmin);
  cd->add_option("--tmax", co.tmax);
  cd->add_option("--half", co.half, "half width of the spatial box");
  cd->add_option("--ngc-tol", co.ngc_tol);
  cd->add_option("--out", co.out);

  ScenarioArgs sc;
  auto* scn = app.add_subcommand("scenario", "run a named check list");
  scn->add_option("name", sc.name)->required();
  scn->add_option("--out", sc.out);
  scn->add_option("--seed", sc.seed);
  scn->add_flag("--serial", sc.serial);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*curv) return run_curvature(ca);
    if (*sh) return run_shoot(sa);
    if (*pp) return run_projparam(pa);
    if (*di) return run_distance(da);
    if (*cd) return run_conditions(co);
    if (*scn) return run_scenario_cmd(sc);
  } catch (const cpd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
