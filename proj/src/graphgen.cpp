#include "igdist/graphgen.hpp"

#include <algorithm>
#include <sstream>

#include "igdist/error.hpp"
#include "igdist/parallel.hpp"
#include "igdist/random.hpp"

namespace igdist {

namespace {

std::vector<std::int64_t> prefix_offsets(const std::vector<std::int64_t>& sizes) {
  std::vector<std::int64_t> out(sizes.size() + 1, 0);
  for (std::size_t i = 0; i < sizes.size(); ++i) out[i + 1] = out[i] + sizes[i];
  return out;
}

TypedIndex label_in(const std::vector<std::int64_t>& offsets, std::int64_t id) {
  const auto it = std::upper_bound(offsets.begin(), offsets.end(), id);
  const auto type = static_cast<int>(it - offsets.begin()) - 1;
  return {type, id - offsets[static_cast<std::size_t>(type)]};
}

}  // namespace

BipartiteGraph BipartiteGraph::sample(const ModelParams& params, std::uint64_t seed) {
  require_valid(params);
  BipartiteGraph g;
  g.params_ = params;
  g.vertex_type_offset_ = prefix_offsets(params.n);
  g.object_type_offset_ = prefix_offsets(params.m);

  Engine rng(seed);
  std::vector<std::vector<std::int64_t>> per_vertex(static_cast<std::size_t>(params.total_n()));
  std::vector<std::int64_t> chosen;
  for (int k = 0; k < params.K(); ++k) {
    for (std::int64_t v = 0; v < params.n[static_cast<std::size_t>(k)]; ++v) {
      auto& adj = per_vertex[static_cast<std::size_t>(g.vertex_type_offset_[static_cast<std::size_t>(k)] + v)];
      for (int j = 0; j < params.J(); ++j) {
        const std::int64_t mj = params.m[static_cast<std::size_t>(j)];
        const std::int64_t degree = binomial(rng, mj, params.P(k, j));
        sample_distinct(rng, mj, degree, chosen);
        const std::int64_t base = g.object_type_offset_[static_cast<std::size_t>(j)];
        for (const auto u : chosen) adj.push_back(base + u);
      }
      std::sort(adj.begin(), adj.end());
    }
  }
  g.build(std::move(per_vertex));
  return g;
}

BipartiteGraph BipartiteGraph::from_edges(const ModelParams& params,
                                          const std::vector<std::pair<std::int64_t, std::int64_t>>& edges) {
  require_valid(params);
  BipartiteGraph g;
  g.params_ = params;
  g.vertex_type_offset_ = prefix_offsets(params.n);
  g.object_type_offset_ = prefix_offsets(params.m);
  std::vector<std::vector<std::int64_t>> per_vertex(static_cast<std::size_t>(params.total_n()));
  for (const auto& [v, u] : edges) {
    if (v < 0 || v >= params.total_n() || u < 0 || u >= params.total_m())
      throw invalid_input("from_edges: endpoint out of range");
    per_vertex[static_cast<std::size_t>(v)].push_back(u);
  }
  for (auto& adj : per_vertex) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
  g.build(std::move(per_vertex));
  return g;
}

void BipartiteGraph::build(std::vector<std::vector<std::int64_t>>&& per_vertex) {
  const auto nv = per_vertex.size();
  const auto nu = static_cast<std::size_t>(params_.total_m());
  vertex_offsets_.assign(nv + 1, 0);
  for (std::size_t v = 0; v < nv; ++v)
    vertex_offsets_[v + 1] = vertex_offsets_[v] + static_cast<std::int64_t>(per_vertex[v].size());
  vertex_targets_.clear();
  vertex_targets_.reserve(static_cast<std::size_t>(vertex_offsets_.back()));
  std::vector<std::int64_t> object_degree(nu, 0);
  for (const auto& adj : per_vertex) {
    for (const auto u : adj) {
      vertex_targets_.push_back(u);
      ++object_degree[static_cast<std::size_t>(u)];
    }
  }
  object_offsets_.assign(nu + 1, 0);
  for (std::size_t u = 0; u < nu; ++u) object_offsets_[u + 1] = object_offsets_[u] + object_degree[u];
  object_targets_.assign(vertex_targets_.size(), 0);
  std::vector<std::int64_t> cursor(object_offsets_.begin(), object_offsets_.end() - 1);
  // Vertices are visited in increasing id, so object lists come out sorted.
  for (std::size_t v = 0; v < nv; ++v) {
    for (const auto u : per_vertex[v])
      object_targets_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(u)]++)] = static_cast<std::int64_t>(v);
  }
}

std::int64_t BipartiteGraph::vertex_id(int type, std::int64_t index) const {
  if (type < 0 || type >= params_.K() || index < 0 || index >= params_.n[static_cast<std::size_t>(type)])
    throw invalid_input("vertex_id: no such vertex");
  return vertex_type_offset_[static_cast<std::size_t>(type)] + index;
}

std::int64_t BipartiteGraph::object_id(int type, std::int64_t index) const {
  if (type < 0 || type >= params_.J() || index < 0 || index >= params_.m[static_cast<std::size_t>(type)])
    throw invalid_input("object_id: no such object");
  return object_type_offset_[static_cast<std::size_t>(type)] + index;
}

TypedIndex BipartiteGraph::vertex_label(std::int64_t id) const { return label_in(vertex_type_offset_, id); }
TypedIndex BipartiteGraph::object_label(std::int64_t id) const { return label_in(object_type_offset_, id); }

std::span<const std::int64_t> BipartiteGraph::vertex_adj(std::int64_t v) const {
  const auto b = static_cast<std::size_t>(vertex_offsets_[static_cast<std::size_t>(v)]);
  const auto e = static_cast<std::size_t>(vertex_offsets_[static_cast<std::size_t>(v) + 1]);
  return {vertex_targets_.data() + b, e - b};
}

std::span<const std::int64_t> BipartiteGraph::object_adj(std::int64_t u) const {
  const auto b = static_cast<std::size_t>(object_offsets_[static_cast<std::size_t>(u)]);
  const auto e = static_cast<std::size_t>(object_offsets_[static_cast<std::size_t>(u) + 1]);
  return {object_targets_.data() + b, e - b};
}

std::int64_t pair_distance(const BipartiteGraph& g, std::int64_t a, std::int64_t b) {
  if (a < 0 || a >= g.vertex_count() || b < 0 || b >= g.vertex_count())
    throw invalid_input("pair_distance: invalid vertex id");
  if (a == b) return 0;

  std::vector<char> seen_vertex(static_cast<std::size_t>(g.vertex_count()), 0);
  std::vector<char> seen_object(static_cast<std::size_t>(g.object_count()), 0);
  std::vector<std::int64_t> vertices{a};
  std::vector<std::int64_t> objects;
  seen_vertex[static_cast<std::size_t>(a)] = 1;

  for (std::int64_t hops = 1; !vertices.empty(); ++hops) {
    objects.clear();
    for (const auto v : vertices) {
      for (const auto u : g.vertex_adj(v)) {
        if (!seen_object[static_cast<std::size_t>(u)]) {
          seen_object[static_cast<std::size_t>(u)] = 1;
          objects.push_back(u);
        }
      }
    }
    vertices.clear();
    for (const auto u : objects) {
      for (const auto v : g.object_adj(u)) {
        if (v == b) return hops;
        if (!seen_vertex[static_cast<std::size_t>(v)]) {
          seen_vertex[static_cast<std::size_t>(v)] = 1;
          vertices.push_back(v);
        }
      }
    }
  }
  return kInfiniteDistance;
}

void DistanceLaw::add(std::int64_t distance) {
  if (distance == kInfiniteDistance)
    ++infinite_count;
  else
    ++counts[distance];
  ++total;
}

void DistanceLaw::merge(const DistanceLaw& other) {
  for (const auto& [d, c] : other.counts) counts[d] += c;
  infinite_count += other.infinite_count;
  total += other.total;
}

double DistanceLaw::exceedance(std::int64_t d) const {
  if (total == 0) return 0.0;
  std::int64_t above = infinite_count;
  for (auto it = counts.upper_bound(d); it != counts.end(); ++it) above += it->second;
  return static_cast<double>(above) / static_cast<double>(total);
}

double DistanceLaw::infinite_fraction() const {
  return total == 0 ? 0.0 : static_cast<double>(infinite_count) / static_cast<double>(total);
}

std::string DistanceLaw::to_csv() const {
  std::ostringstream out;
  out << "distance,count\n";
  for (const auto& [d, c] : counts) out << d << ',' << c << '\n';
  out << "inf," << infinite_count << '\n';
  return out.str();
}

std::pair<std::int64_t, std::int64_t> sample_typed_pair(const BipartiteGraph& g, int k1, int k2, Engine& rng) {
  const auto& params = g.params();
  if (k1 < 0 || k1 >= params.K() || k2 < 0 || k2 >= params.K()) throw invalid_input("vertex type out of range");
  const auto n1 = params.n[static_cast<std::size_t>(k1)];
  const auto n2 = params.n[static_cast<std::size_t>(k2)];
  if (k1 == k2 && n1 < 2) throw invalid_input("insufficient vertices of requested type");
  const auto a = static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(n1)));
  std::int64_t b;
  if (k1 == k2) {
    b = static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(n2 - 1)));
    if (b >= a) ++b;
  } else {
    b = static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(n2)));
  }
  return {g.vertex_id(k1, a), g.vertex_id(k2, b)};
}

DistanceLaw empirical_distance_law(const ModelParams& params, int k1, int k2, std::int64_t reps,
                                   std::uint64_t seed, int workers) {
  require_valid(params);
  if (reps < 1) throw invalid_input("empirical_distance_law: reps must be positive");
  if (k1 < 0 || k1 >= params.K() || k2 < 0 || k2 >= params.K()) throw invalid_input("vertex type out of range");
  if (k1 == k2 && params.n[static_cast<std::size_t>(k1)] < 2)
    throw invalid_input("insufficient vertices of requested type");

  std::vector<std::int64_t> slots(static_cast<std::size_t>(reps));
  parallel_for(slots.size(), workers, [&](std::size_t r) {
    const auto g = BipartiteGraph::sample(params, derive_seed(seed, "graph", r));
    Engine pair_rng(derive_seed(seed, "pair", r));
    const auto [a, b] = sample_typed_pair(g, k1, k2, pair_rng);
    slots[r] = pair_distance(g, a, b);
  });
  DistanceLaw law;
  for (const auto d : slots) law.add(d);
  return law;
}

}  // namespace igdist
