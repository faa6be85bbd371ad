#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cpd/geodesic.hpp"
#include "cpd/parallel.hpp"
#include "cpd/projective.hpp"

namespace cpd {

inline constexpr double kJoinTolerance = 1e-6;

// Initial data of a link: the null geodesic through `start` with velocity
// `velocity`, traversed over affine parameters [0, span] (span may be negative).
struct LinkGeometry {
  Coordinates start;
  Tangent velocity;
  double span = 0.0;
};

enum class LinkMethod { Auto, Companion, Affine };

struct LinkOptions {
  double rtol = 1e-11;
  double atol = 1e-12;
  double affine_budget = 50.0;
  LinkMethod method = LinkMethod::Auto;
  double einstein_tolerance = 1e-6;
  // Index i of the shrinking interval (-1/i, 1/i) used for links whose
  // development is a full line or wraps.
  double lemma_index = 1e9;
};

struct ChainLink {
  LinkGeometry geometry;
  double s_start = 0.0;  // traversal runs from s_start to s_end
  double s_end = 0.0;
  std::shared_ptr<const GeodesicTrajectory> trajectory;
  std::shared_ptr<const HomogeneousParameter> param;
  DevelopmentArc arc;
  Moebius moebius = Moebius::identity();  // projective parameter -> interval (-1, 1)
  double a = 0.0;
  double b = 0.0;
  double cost = 0.0;
  bool einstein = false;  // projective parameter taken affine after a residual check

  Coordinates from() const { return trajectory->at(s_start).x; }
  Coordinates to() const { return trajectory->at(s_end).x; }
  // Embedded interval coordinate of the point at affine parameter s.
  double embed(double s) const;
};

ChainLink make_link(const MetricModel& model, const LinkGeometry& geometry, const LinkOptions& options = {});
ChainLink reversed(const ChainLink& link);

struct KobayashiChain {
  std::vector<ChainLink> links;
  std::vector<Coordinates> joints;  // x = joints.front(), y = joints.back()

  std::size_t size() const { return links.size(); }
};

KobayashiChain make_chain(const MetricModel& model, const std::vector<LinkGeometry>& geometry,
                          const LinkOptions& options = {});
KobayashiChain reversed(const KobayashiChain& chain);
// Links of `first` followed by links of `second`; the joint between them must match.
KobayashiChain concatenate(const KobayashiChain& first, const KobayashiChain& second);

// Largest coordinate gap between consecutive link ends and the joint list.
double worst_joint_gap(const KobayashiChain& chain);

// Σ ρ_I(a_i, b_i); InvalidChain when empty or a joint gap exceeds eps_join.
double chain_length(const KobayashiChain& chain, double eps_join = kJoinTolerance);

struct ValidationTolerances {
  double geodesic_residual = 1e-6;
  double null_drift = 1e-8;
  double schwarzian = 1e-5;
  double eps_join = kJoinTolerance;
  int samples = 16;
};

struct ChainValidation {
  bool pass = false;
  double geodesic_residual = 0.0;
  double null_drift = 0.0;
  double schwarzian_residual = 0.0;
  double joint_gap = 0.0;
  std::vector<std::string> failures;
};

ChainValidation validate_chain(const MetricModel& model, const KobayashiChain& chain,
                               const ValidationTolerances& tol = {});

// Cheapest single-link cost between γ(s1) and γ(s2).
double segment_cost(const MetricModel& model, const GeodesicTrajectory& trajectory, double s1, double s2,
                    ProjectiveMethod method = ProjectiveMethod::Companion);

struct SearchConfig {
  int starts = 32;
  int iterations = 200;
  int k_max = 4;
  double affine_budget = 50.0;
  double eps_join = kJoinTolerance;
  // A miss of one eps_join costs penalty * 1e-6 < 1e-5 length units.
  double penalty = 5.0;
  std::uint64_t seed = 1;
  double rtol = 1e-11;         // final evaluation of every candidate
  double search_rtol = 1e-9;   // inside the simplex search
  Execution execution = Execution::Parallel;
};

LinkOptions link_options(const SearchConfig& config, bool search);

struct ZeroCertificate {
  KobayashiChain chain;  // built with the last sequence index
  // (i, Σ_links ρ_I(-1/i, 1/i)) = (i, 2k ρ_I(0, 1/i))
  std::vector<std::pair<double, double>> sequence;
  double einstein_residual = 0.0;  // worst along the links
  bool conditional_on_completeness = true;
};

inline const std::vector<double> kLemmaIndices = {10.0, 100.0, 1000.0};

// Null geodesic from x reaching y at affine parameter 1 (Gauss-Newton on the
// spatial velocity); nullopt if the miss stays above tol.
struct NullConnection {
  LinkGeometry geometry;
  double miss = 0.0;
};
std::optional<NullConnection> connect_null(const MetricModel& model, const Coordinates& x, const Coordinates& y,
                                           double rtol = 1e-11, double tol = 1e-9);

std::optional<ZeroCertificate> certify_zero(const MetricModel& model, const Coordinates& x, const Coordinates& y,
                                            const SearchConfig& config = {});

enum class EstimateStatus { ZeroCertificate, UpperBound, Failed };
const char* to_string(EstimateStatus status);

struct DistanceEstimate {
  Coordinates x, y;
  double value = 0.0;  // +inf when Failed
  KobayashiChain chain;
  double mismatch = 0.0;
  EstimateStatus status = EstimateStatus::Failed;
  std::size_t budget_used = 0;  // chain evaluations
  std::optional<ZeroCertificate> certificate;
};

DistanceEstimate estimate_distance(const MetricModel& model, const Coordinates& x, const Coordinates& y,
                                   const SearchConfig& config = {});

// Estimates between every pair of a point set, entry (i, j) row-major.
struct EstimateTable {
  std::vector<Coordinates> points;
  std::vector<DistanceEstimate> entries;

  std::size_t size() const { return points.size(); }
  DistanceEstimate& at(std::size_t i, std::size_t j) { return entries[i * points.size() + j]; }
  const DistanceEstimate& at(std::size_t i, std::size_t j) const { return entries[i * points.size() + j]; }
};

EstimateTable estimate_table(const MetricModel& model, const std::vector<Coordinates>& points,
                             const SearchConfig& config = {});

// Tightens upper bounds through intermediate points by concatenating witness
// chains until d(x, y) <= d(x, z) + d(z, y) holds on the whole table.
EstimateTable estimate_refine_triangle(const MetricModel& model, EstimateTable table);

}  // namespace cpd
