#include "cpd/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cpd/error.hpp"

namespace cpd::io {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void write_json(std::string& out, const Json& j, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(key).dump();
        out += indent < 0 ? ":" : ": ";
        write_json(out, value, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Plain number arrays stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && (e.is_number() || e.is_null());
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        write_json(out, e, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_number(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, std::size_t position) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return INFINITY;
  if (t == "-inf") return -INFINITY;
  if (t == "nan") return NAN;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) throw ParseError(position, {"number"}, "cannot read '" + t + "' as a number");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

const Json* find(const Json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_number(const Json& j, const char* key, double fallback) {
  const Json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ParseError(0, {"number"}, std::string("field '") + key + "' must be a number");
  return v->get<double>();
}

}  // namespace

std::string dump(const Json& j, int indent) {
  std::string out;
  write_json(out, j, indent, 0);
  return out;
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed for " + path);
}

Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(e.byte > 0 ? e.byte - 1 : 0, {"JSON value"}, origin + ": " + e.what());
  }
}

Vector parse_vector(const std::string& text, int expected) {
  const auto parts = split(text, ',');
  if (expected > 0 && static_cast<int>(parts.size()) != expected)
    throw ParseError(0, {std::to_string(expected) + " comma separated numbers"},
                     "got " + std::to_string(parts.size()) + " entries in '" + text + "'");
  if (parts.empty()) throw ParseError(0, {"number"}, "empty coordinate list");
  Vector v(static_cast<int>(parts.size()));
  std::size_t pos = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    v[static_cast<int>(i)] = parse_double(parts[i], pos);
    if (!std::isfinite(v[static_cast<int>(i)])) throw ParseError(pos, {"finite number"}, "non-finite coordinate");
    pos += parts[i].size() + 1;
  }
  return v;
}

ModelSpec model_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError(0, {"object"}, "model file must hold a JSON object");
  const Json* kind = find(j, "model");
  if (!kind || !kind->is_string()) throw ParseError(0, {"\"model\""}, "missing string field 'model'");
  ModelSpec s;
  const std::string k = kind->get<std::string>();
  if (k == "eds") s.kind = ModelKind::Eds;
  else if (k == "minkowski") s.kind = ModelKind::Minkowski;
  else if (k == "minkowski_halfspace") s.kind = ModelKind::MinkowskiHalfspace;
  else if (k == "frw_power") s.kind = ModelKind::FrwPower;
  else if (k == "custom") s.kind = ModelKind::Custom;
  else throw ParseError(0, {"eds", "minkowski", "minkowski_halfspace", "frw_power", "custom"}, "unknown model '" + k + "'");

  const Json* dim = find(j, "dimension");
  if (dim) {
    if (!dim->is_number_integer()) throw ParseError(0, {"integer"}, "'dimension' must be an integer");
    s.dimension = dim->get<int>();
  }
  if (const Json* params = find(j, "params")) {
    if (!params->is_object()) throw ParseError(0, {"object"}, "'params' must be an object");
    s.exponent = get_number(*params, "a", s.exponent);
  }
  if (const Json* coeffs = find(j, "coefficients")) {
    if (!coeffs->is_array()) throw ParseError(0, {"array of strings"}, "'coefficients' must be an array");
    for (const auto& c : *coeffs) {
      if (!c.is_string()) throw ParseError(0, {"string"}, "coefficients must be expression strings");
      s.coefficients.push_back(c.get<std::string>());
    }
  }
  if (const Json* domain = find(j, "domain")) {
    if (!domain->is_string()) throw ParseError(0, {"string"}, "'domain' must be an expression string");
    s.domain = domain->get<std::string>();
  }
  if (s.kind == ModelKind::Custom) {
    if (!dim) s.dimension = static_cast<int>(s.coefficients.size());
    if (static_cast<int>(s.coefficients.size()) != s.dimension)
      throw ParseError(0, {std::to_string(s.dimension) + " coefficients"},
                       "custom model needs one coefficient per coordinate");
  }
  return s;
}

Json model_to_json(const ModelSpec& spec) {
  Json j;
  j["model"] = to_string(spec.kind);
  j["dimension"] = spec.dimension;
  if (spec.kind == ModelKind::FrwPower) j["params"] = {{"a", spec.exponent}};
  if (spec.kind == ModelKind::Custom) {
    j["coefficients"] = spec.coefficients;
    if (!spec.domain.empty()) j["domain"] = spec.domain;
  }
  return j;
}

ModelSpec read_model(const std::string& path) { return model_from_json(parse_json(read_file(path), path)); }

SearchConfig search_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError(0, {"object"}, "config must be a JSON object");
  static const std::vector<std::string> known = {"starts", "iterations", "k_max",       "affine_budget", "eps_join",
                                                 "penalty", "seed",      "rtol",        "search_rtol",   "execution"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ParseError(0, known, "unknown config field '" + key + "'");
  SearchConfig c;
  auto integer = [&](const char* key, int& out) {
    if (const Json* v = find(j, key)) {
      if (!v->is_number_integer()) throw ParseError(0, {"integer"}, std::string("'") + key + "' must be an integer");
      out = v->get<int>();
    }
  };
  integer("starts", c.starts);
  integer("iterations", c.iterations);
  integer("k_max", c.k_max);
  c.affine_budget = get_number(j, "affine_budget", c.affine_budget);
  c.eps_join = get_number(j, "eps_join", c.eps_join);
  c.penalty = get_number(j, "penalty", c.penalty);
  c.rtol = get_number(j, "rtol", c.rtol);
  c.search_rtol = get_number(j, "search_rtol", c.search_rtol);
  if (const Json* v = find(j, "seed")) {
    if (!v->is_number_unsigned()) throw ParseError(0, {"non-negative integer"}, "'seed' must be a non-negative integer");
    c.seed = v->get<std::uint64_t>();
  }
  if (const Json* v = find(j, "execution")) {
    const std::string e = v->is_string() ? v->get<std::string>() : "";
    if (e == "serial") c.execution = Execution::Serial;
    else if (e == "parallel") c.execution = Execution::Parallel;
    else throw ParseError(0, {"serial", "parallel"}, "bad 'execution' value");
  }
  if (c.starts < 0 || c.iterations < 0 || c.k_max < 1 || !(c.affine_budget > 0) || !(c.eps_join > 0))
    throw Error(Errc::InvalidArgument, "config values out of range");
  return c;
}

Json search_to_json(const SearchConfig& c) {
  Json j;
  j["starts"] = c.starts;
  j["iterations"] = c.iterations;
  j["k_max"] = c.k_max;
  j["affine_budget"] = c.affine_budget;
  j["eps_join"] = c.eps_join;
  j["penalty"] = c.penalty;
  j["seed"] = c.seed;
  j["rtol"] = c.rtol;
  j["search_rtol"] = c.search_rtol;
  j["execution"] = c.execution == Execution::Serial ? "serial" : "parallel";
  return j;
}

std::vector<double> trajectory_samples(const GeodesicTrajectory& trajectory, int samples) {
  if (samples <= 0) return trajectory.dense().nodes();
  std::vector<double> s;
  const double lo = trajectory.lo(), hi = trajectory.hi();
  for (int i = 0; i < samples; ++i) s.push_back(samples == 1 ? lo : lo + (hi - lo) * i / (samples - 1));
  return s;
}

TrajectoryTable trajectory_table(const MetricModel& model, const GeodesicTrajectory& trajectory,
                                 const std::vector<double>& s) {
  const int n = trajectory.dimension();
  TrajectoryTable t;
  t.dimension = n;
  t.header.push_back("s");
  for (int i = 1; i < n; ++i) t.header.push_back("x" + std::to_string(i));
  t.header.push_back("t");
  for (int i = 1; i < n; ++i) t.header.push_back("dx" + std::to_string(i));
  t.header.push_back("dt");
  t.header.push_back("null_residual");
  for (const double si : s) {
    const GeodesicPoint p = trajectory.at(si);
    std::vector<double> row{si};
    for (int i = 0; i < n; ++i) row.push_back(p.x[i]);
    for (int i = 0; i < n; ++i) row.push_back(p.v[i]);
    double res = NAN;
    if (model.in_domain(p.x)) res = std::abs(metric_norm(model.raw_metric(p.x), p.v)) / std::max(1.0, p.v.squaredNorm());
    row.push_back(res);
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(std::ostream& out, const TrajectoryTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

TrajectoryTable read_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  TrajectoryTable t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, {"header line"}, path + " is empty");
  for (auto& h : split(trim(line), ',')) t.header.push_back(trim(h));
  if (t.header.empty() || t.header.front() != "s" || t.header.size() < 4)
    throw ParseError(0, {"s,x1,...,t,dx1,...,dt,null_residual"}, path + ": unexpected header");
  const std::size_t base_cols = std::find(t.header.begin(), t.header.end(), "null_residual") - t.header.begin() + 1;
  if (base_cols > t.header.size() || (base_cols - 2) % 2 != 0)
    throw ParseError(0, {"null_residual column"}, path + ": header has no null_residual column");
  t.dimension = static_cast<int>((base_cols - 2) / 2);
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    const std::string tl = trim(line);
    if (tl.empty()) {
      offset += line.size() + 1;
      continue;
    }
    const auto cells = split(tl, ',');
    if (cells.size() != t.header.size())
      throw ParseError(offset, {std::to_string(t.header.size()) + " columns"}, path + ": ragged row");
    std::vector<double> row;
    std::size_t pos = offset;
    for (const auto& c : cells) {
      row.push_back(parse_double(c, pos));
      pos += c.size() + 1;
    }
    t.rows.push_back(std::move(row));
    offset += line.size() + 1;
  }
  return t;
}

Json trajectory_sidecar(const ModelSpec& model, const GeodesicTrajectory& trajectory) {
  const ShootSpec& s = trajectory.spec();
  auto end = [](const TrajectoryEnd& e) {
    Json j;
    j["flag"] = to_string(e.flag);
    j["covered"] = number(e.covered);
    j["extent"] = number(e.extent);
    j["bracket"] = number(e.bracket);
    return j;
  };
  Json j;
  j["model"] = model_to_json(model);
  j["start"] = vector_json(s.start);
  j["direction"] = vector_json(s.direction);
  j["affine_budget"] = s.affine_budget;
  j["rtol"] = s.rtol;
  j["atol"] = s.atol;
  j["min_step"] = s.min_step;
  j["past"] = end(trajectory.past());
  j["future"] = end(trajectory.future());
  j["null_drift"] = number(trajectory.null_drift());
  return j;
}

std::string sidecar_path(const std::string& csv_path) {
  const auto slash = csv_path.find_last_of('/');
  const auto dot = csv_path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return csv_path.substr(0, dot) + ".json";
  return csv_path + ".json";
}

void add_projective_columns(TrajectoryTable& table, const HomogeneousParameter& param) {
  // Columns from an earlier run are replaced.
  const std::size_t base = static_cast<std::size_t>(2 * table.dimension + 2);
  table.header.resize(base);
  for (auto& row : table.rows) row.resize(base);
  for (const char* h : {"u1", "u2", "p"}) table.header.push_back(h);
  for (auto& row : table.rows) {
    const double s = row.front();
    double u1 = NAN, u2 = NAN, p = NAN;
    if (s >= param.lo() && s <= param.hi()) {
      const OdeState st = param.state(s);
      u1 = st[0];
      u2 = st[2];
      p = param.value(s);
    } else {
      // Rows in the sliver the companion solve could not reach before a
      // singular end: u1, u2 diverge there but p has its end limit.
      const double slack = 1e-6 * (1.0 + std::abs(s));
      if (s < param.lo() && param.lo() - s <= slack) p = param.lower_limit().point.value();
      if (s > param.hi() && s - param.hi() <= slack) p = param.upper_limit().point.value();
    }
    row.push_back(u1);
    row.push_back(u2);
    row.push_back(p);
  }
}

Json chain_json(const KobayashiChain& chain) {
  Json links = Json::array();
  for (const auto& l : chain.links) {
    Json j;
    j["start"] = vector_json(l.from());
    j["end"] = vector_json(l.to());
    j["direction"] = vector_json(l.geometry.velocity);
    j["span"] = number(l.geometry.span);
    j["a"] = number(l.a);
    j["b"] = number(l.b);
    j["cost"] = number(l.cost);
    j["arc"] = to_string(l.arc.kind);
    links.push_back(std::move(j));
  }
  return links;
}

Json distance_json(const ModelSpec& model, const DistanceEstimate& e, const SearchConfig& config) {
  Json j;
  j["model"] = model_to_json(model);
  j["x"] = vector_json(e.x);
  j["y"] = vector_json(e.y);
  j["value"] = number(e.value);
  j["status"] = to_string(e.status);
  j["mismatch"] = number(e.mismatch);
  j["seed"] = config.seed;
  j["config"] = search_to_json(config);
  j["budget_used"] = e.budget_used;
  j["chain"] = chain_json(e.chain);
  if (e.certificate) {
    Json seq = Json::array();
    for (const auto& [i, len] : e.certificate->sequence) seq.push_back({{"i", number(i)}, {"length", number(len)}});
    j["certificate"] = {{"sequence", seq},
                        {"einstein_residual", number(e.certificate->einstein_residual)},
                        {"conditional_on_completeness", e.certificate->conditional_on_completeness}};
  }
  return j;
}

Json scenario_json(const ScenarioReport& report) {
  Json j;
  j["scenario"] = report.name;
  j["seed"] = report.seed;
  j["pass"] = report.pass();
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    Json cj;
    cj["name"] = c.name;
    cj["claim"] = c.claim;
    cj["pass"] = c.pass;
    Json values = Json::object(), tols = Json::object();
    for (const auto& [k, v] : c.values) values[k] = number(v);
    for (const auto& [k, v] : c.tolerances) tols[k] = number(v);
    cj["values"] = values;
    cj["tolerances"] = tols;
    cj["note"] = c.note;
    checks.push_back(std::move(cj));
  }
  j["checks"] = checks;
  return j;
}

void write_matrix_csv(std::ostream& out, const EstimateTable& table) {
  const std::size_t m = table.size();
  out << "point";
  for (std::size_t j = 0; j < m; ++j) out << ',' << j;
  out << '\n';
  for (std::size_t i = 0; i < m; ++i) {
    out << i;
    for (std::size_t j = 0; j < m; ++j) out << ',' << format_number(table.at(i, j).value);
    out << '\n';
  }
}

}  // namespace cpd::io
