#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpd/geodesic.hpp"
#include "cpd/kobayashi.hpp"
#include "cpd/projective.hpp"
#include "cpd/workbench.hpp"

namespace cpd::io {

using Json = nlohmann::ordered_json;

// %.17g for finite values; "inf", "-inf", "nan" otherwise (CSV only).
std::string format_number(double v);

// JSON text with every number written with 17 significant digits. Non-finite
// numbers become null.
std::string dump(const Json& j, int indent = 2);

Json number(double v);
Json vector_json(const Vector& v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);
Json parse_json(const std::string& text, const std::string& origin);

// "x1,x2,...,t" with exactly `expected` entries (any count when expected <= 0).
Vector parse_vector(const std::string& text, int expected = 0);

// {model, dimension, params: {a}, coefficients: [...], domain}
ModelSpec model_from_json(const Json& j);
Json model_to_json(const ModelSpec& spec);
ModelSpec read_model(const std::string& path);

// Keys mirror the SearchConfig fields; missing keys keep their defaults.
SearchConfig search_from_json(const Json& j);
Json search_to_json(const SearchConfig& config);

// Rows of s, x1..x(n-1), t, dx1..dx(n-1), dt, null_residual.
struct TrajectoryTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  int dimension = 0;
};

std::vector<double> trajectory_samples(const GeodesicTrajectory& trajectory, int samples);
TrajectoryTable trajectory_table(const MetricModel& model, const GeodesicTrajectory& trajectory,
                                 const std::vector<double>& s);
void write_csv(std::ostream& out, const TrajectoryTable& table);
TrajectoryTable read_csv(const std::string& path);

// Everything needed to shoot the same trajectory again.
Json trajectory_sidecar(const ModelSpec& model, const GeodesicTrajectory& trajectory);
std::string sidecar_path(const std::string& csv_path);

// Appends u1, u2, p evaluated at the s column.
void add_projective_columns(TrajectoryTable& table, const HomogeneousParameter& param);

Json chain_json(const KobayashiChain& chain);
Json distance_json(const ModelSpec& model, const DistanceEstimate& estimate, const SearchConfig& config);
Json scenario_json(const ScenarioReport& report);

// Value matrix with the point index on both axes; Failed entries are "inf".
void write_matrix_csv(std::ostream& out, const EstimateTable& table);

}  // namespace cpd::io
