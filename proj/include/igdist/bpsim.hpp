#pragma once

// Bipartite multitype branching process: vertex generations X(i) alternate
// with object generations Y(i). A type-k vertex has Bin(m_j, P(k,j)) type-j
// object children; a type-j object has Bin(n_k, P(k,j)) type-k vertex
// children.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "igdist/graphgen.hpp"
#include "igdist/model.hpp"

namespace igdist {

inline constexpr std::int64_t kDefaultPopulationCap = 100'000'000;
/// Counts are aggregated, so memory does not grow with the population and the
/// cap only has to keep binomial trial counts inside int64. W sampling needs
/// the upper tail of W and uses this larger default.
inline constexpr std::int64_t kWSampleCap = 1'000'000'000'000;

struct Trajectory {
  std::vector<std::vector<std::int64_t>> X;  // X[i] for i = 0..I, length K
  std::vector<std::vector<std::int64_t>> Y;  // Y[i - 1] holds Y(i) for i = 1..I, length J
  std::vector<int> start_types;

  int generations() const { return static_cast<int>(X.size()) - 1; }
  bool extinct_at(int i) const;
  /// "generation,side,type,count" with 1-based types.
  std::string to_csv() const;
};

/// Generation counts up to X(generations). Offspring of all individuals of a
/// type toward one class are drawn as a single binomial, which has the same
/// law as summing per-individual binomials. Throws Error(Capacity) when a
/// generation exceeds `population_cap`.
Trajectory simulate(const ModelParams& params, std::span<const int> start_types, int generations,
                    std::uint64_t seed, std::int64_t population_cap = kDefaultPopulationCap);

/// tau and nu of the vertex mean matrix; all the martingale needs.
struct GrowthScale {
  double tau = 0;
  Eigen::VectorXd nu;
};

GrowthScale growth_scale(const SpectralData& s);

struct WSample {
  double value = 0;  // tau^-I nu^T X(I)
  int horizon = 0;
  bool survived = false;
};

WSample w_sample(const ModelParams& params, const GrowthScale& scale, int start_type, int horizon,
                 std::uint64_t seed, std::int64_t population_cap = kWSampleCap);

/// Survival probabilities P_k[W > 0] = 1 - q_k, with q the minimal fixed
/// point of the one-vertex-generation extinction map, iterated from 0.
Eigen::VectorXd survival_prob(const ModelParams& params);

/// Positive W values from runs that survive to the horizon, in attempt order.
/// Throws when fewer than 1 in 10^4 attempts survive.
std::vector<double> conditioned_w_pool(const ModelParams& params, const GrowthScale& scale, int start_type,
                                       int horizon, std::int64_t pool_size, std::uint64_t seed,
                                       int workers = 1);

struct ExtinctionEstimate {
  double fraction = 0;  // extinct by the generation limit
  double std_error = 0;
  std::int64_t reps = 0;
};

/// Frequency of extinction by `generations` from one type-k vertex. A run
/// whose generation size reaches `escape_size` is counted as surviving: its
/// extinction probability is below q^escape_size.
ExtinctionEstimate extinction_frequency(const ModelParams& params, int start_type, int generations,
                                        std::int64_t reps, std::uint64_t seed, int workers = 1,
                                        std::int64_t escape_size = 1'000'000);

// ---------------------------------------------------------------------------
// Labeled coupling with the intersection graph.

enum class IndividualClass : std::uint8_t {
  One,         // a genuine graph vertex or object
  Ghost,       // index already used by a class-1 individual of an earlier generation
  GhostPrime,  // index first used by a class-1 individual of the same generation
};

struct Individual {
  int generation = 0;  // bipartite generation; even = vertex, odd = object
  int type = 0;
  std::int64_t parent = -1;  // position in LabeledForest::individuals
  std::int64_t index = 0;    // assigned index within the type
  IndividualClass cls = IndividualClass::One;
  int root = 0;  // 0 = descends from A, 1 = from B
};

struct ForestEdge {
  TypedIndex vertex;
  TypedIndex object;
  int generation = 0;  // generation of the child end
};

struct LabeledForest {
  /// Class-1 individuals and the ghosts they parent. Ghost descendants are
  /// all ghosts and are kept as counts only.
  std::vector<Individual> individuals;
  std::vector<ForestEdge> edges;
  std::vector<std::vector<std::int64_t>> ghostX;     // G^X_k(i), i = 0..depth
  std::vector<std::vector<std::int64_t>> ghostY;     // G^Y_j(i) at ghostY[i], i = 1..depth; ghostY[0] = 0
  std::vector<std::vector<std::int64_t>> originalX;  // H^X_k(i): ghosts born to class-1 parents
  std::vector<std::vector<std::int64_t>> originalY;
  TypedIndex a;
  TypedIndex b;
  int generations_grown = 0;   // bipartite generations 0..generations_grown exist
  bool class1_extinct = false;  // no class-1 individual in the last grown generation
  bool ghost_descendants_tracked = true;

  /// Intersection distance between A and B when the grown part determines it:
  /// found within 2 * generations_grown bipartite steps, or kInfiniteDistance
  /// once the class-1 process died out. Empty otherwise.
  std::optional<std::int64_t> resolved_distance() const;
};

struct GrowthOptions {
  bool track_ghost_descendants = true;
  std::int64_t population_cap = kDefaultPopulationCap;
};

/// Grows the labeled process from A = (k1, ·) and B = (k2, ·) for 2 * depth
/// bipartite generations, stopping early once nothing is left to grow.
LabeledForest labeled_growth(const ModelParams& params, int k1, int k2, int depth, std::uint64_t seed,
                             const GrowthOptions& options = {});

/// Distance law of (A, B) read off labeled forests grown to class-1
/// extinction. Same replicate seeding scheme as empirical_distance_law.
DistanceLaw coupled_distance_law(const ModelParams& params, int k1, int k2, std::int64_t reps,
                                 std::uint64_t seed, int workers = 1);

struct GhostRow {
  int i = 0;
  double ghostX_mean = 0;
  double ghostY_mean = 0;
  double ratioX = 0;  // ghostX_mean / (tau^(2i) e^4)
  double ratioY = 0;  // ghostY_mean / (sqrt(m/n) tau^(2(i-1)) e^4)
};

std::vector<GhostRow> ghost_scaling(const ModelParams& params, const SpectralData& spectral, int k1, int k2,
                                    int depth, std::int64_t reps, std::uint64_t seed, int workers = 1);

/// "i,ghostX_mean,ghostY_mean,ratioX,ratioY".
std::string ghost_table_csv(const std::vector<GhostRow>& rows);

/// Least-squares slope of log(ratio) against i over rows with i in [lo, hi]
/// and positive ratio.
double log_slope(const std::vector<GhostRow>& rows, int lo, int hi, bool object_side = false);

}  // namespace igdist
