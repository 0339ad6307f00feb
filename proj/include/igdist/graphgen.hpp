#pragma once

// Bipartite vertex/object graphs and intersection-graph distances.
//
// Two vertices are adjacent in the intersection graph when they share an
// object, so intersection distance is half the bipartite distance. The
// intersection graph itself is never built.

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "igdist/model.hpp"
#include "igdist/random.hpp"

namespace igdist {

inline constexpr std::int64_t kInfiniteDistance = std::numeric_limits<std::int64_t>::max();

/// A vertex or object named by (type, index within its type).
struct TypedIndex {
  int type = 0;
  std::int64_t index = 0;
  bool operator==(const TypedIndex&) const = default;
};

class BipartiteGraph {
 public:
  /// Each (vertex of type k, object of type j) pair is an edge independently
  /// with probability P(k, j). Deterministic given the seed.
  static BipartiteGraph sample(const ModelParams& params, std::uint64_t seed);

  /// Graph with the given (global vertex id, global object id) edges.
  static BipartiteGraph from_edges(const ModelParams& params,
                                   const std::vector<std::pair<std::int64_t, std::int64_t>>& edges);

  const ModelParams& params() const { return params_; }
  std::int64_t vertex_count() const { return static_cast<std::int64_t>(vertex_offsets_.size()) - 1; }
  std::int64_t object_count() const { return static_cast<std::int64_t>(object_offsets_.size()) - 1; }
  std::int64_t edge_count() const { return static_cast<std::int64_t>(vertex_targets_.size()); }

  std::int64_t vertex_id(int type, std::int64_t index) const;
  std::int64_t object_id(int type, std::int64_t index) const;
  TypedIndex vertex_label(std::int64_t id) const;
  TypedIndex object_label(std::int64_t id) const;

  /// Sorted object ids adjacent to vertex `v`.
  std::span<const std::int64_t> vertex_adj(std::int64_t v) const;
  /// Sorted vertex ids adjacent to object `u`.
  std::span<const std::int64_t> object_adj(std::int64_t u) const;

 private:
  void build(std::vector<std::vector<std::int64_t>>&& per_vertex);

  ModelParams params_;
  std::vector<std::int64_t> vertex_type_offset_;  // K + 1 entries
  std::vector<std::int64_t> object_type_offset_;  // J + 1 entries
  std::vector<std::int64_t> vertex_offsets_;
  std::vector<std::int64_t> vertex_targets_;
  std::vector<std::int64_t> object_offsets_;
  std::vector<std::int64_t> object_targets_;
};

/// Intersection-graph distance between vertices a and b (global ids):
/// half their bipartite BFS distance, 0 when a == b, kInfiniteDistance when
/// they lie in different components.
std::int64_t pair_distance(const BipartiteGraph& g, std::int64_t a, std::int64_t b);

/// Histogram of distances with a separate count at infinity.
struct DistanceLaw {
  std::map<std::int64_t, std::int64_t> counts;
  std::int64_t infinite_count = 0;
  std::int64_t total = 0;

  void add(std::int64_t distance);
  void merge(const DistanceLaw& other);
  /// Fraction of samples with distance > d (infinite included).
  double exceedance(std::int64_t d) const;
  double infinite_fraction() const;
  /// "distance,count" rows, then "inf,count". LF line endings.
  std::string to_csv() const;
};

/// Ordered pair of distinct vertices with types k1 and k2, uniform.
std::pair<std::int64_t, std::int64_t> sample_typed_pair(const BipartiteGraph& g, int k1, int k2, Engine& rng);

/// One fresh graph, one typed pair and one BFS per replicate. Replicate r
/// uses streams derived from (seed, r), so the result does not depend on the
/// worker count.
DistanceLaw empirical_distance_law(const ModelParams& params, int k1, int k2, std::int64_t reps,
                                   std::uint64_t seed, int workers = 1);

}  // namespace igdist
