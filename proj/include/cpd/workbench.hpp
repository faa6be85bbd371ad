#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cpd/catalog.hpp"
#include "cpd/kobayashi.hpp"

namespace cpd {

enum class ModelKind { Eds, Minkowski, MinkowskiHalfspace, FrwPower, Custom };

const char* to_string(ModelKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::Eds;
  int dimension = 4;
  double exponent = 2.0 / 3.0;            // frw_power only
  std::vector<std::string> coefficients;  // custom only: g_11 ... g_nn
  std::string domain;                     // custom only, optional
};

MetricModel build_model(const ModelSpec& spec);

// φ(x, t) = (x, 3 t^{1/3}) and its inverse (x, τ) -> (x, (τ/3)^3).
Coordinates eds_conformal_map(const Coordinates& x, bool inverse = false);

struct PullbackReport {
  double max_deviation = 0.0;
  std::size_t samples = 0;
  Coordinates worst;
};

// Compares J^T η J (flat metric pulled back through φ) with t^{-4/3} times the
// Einstein-de Sitter metric at every sample.
PullbackReport pullback_check(const std::vector<Coordinates>& samples);

// The same null curves in a conformally related model Ω^2 g: velocities are
// divided by Ω^2 and spans become ∫ Ω^2 ds along the original link.
KobayashiChain transport_chain(const KobayashiChain& chain, const ConformalModel& target,
                               const LinkOptions& options = {});

struct CheckResult {
  std::string name;
  std::string claim;
  bool pass = false;
  std::map<std::string, double> values;
  std::map<std::string, double> tolerances;
  std::string note;
};

struct ScenarioConfig {
  std::uint64_t seed = 20240601;
  int ncc_samples = 1000;
  int ngc_geodesics = 20;
  int incompleteness_shoots = 100;
  int minkowski_pairs = 5;
  int eds_pairs = 3;
  SearchConfig search = small_search();
  Execution execution = Execution::Parallel;

  static SearchConfig small_search() {
    SearchConfig s;
    s.starts = 2;
    s.iterations = 20;
    s.k_max = 2;
    return s;
  }
};

struct ScenarioReport {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool pass() const;
};

// "eds-theorem" or "minkowski-degenerate"; UnknownScenario otherwise.
ScenarioReport run_scenario(const std::string& name, const ScenarioConfig& config = {});

}  // namespace cpd
