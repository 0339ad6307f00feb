#include "igdist/bpsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "igdist/error.hpp"
#include "igdist/parallel.hpp"
#include "igdist/random.hpp"

namespace igdist {

namespace {

std::int64_t trials(std::int64_t count, std::int64_t size) {
  if (size > 0 && count > std::numeric_limits<std::int64_t>::max() / size)
    throw capacity_error("offspring trial count overflows int64");
  return count * size;
}

std::int64_t total(const std::vector<std::int64_t>& v) { return std::accumulate(v.begin(), v.end(), std::int64_t{0}); }

void check_type(const ModelParams& params, int k) {
  if (k < 0 || k >= params.K()) throw invalid_input("vertex type out of range");
}

// One full step X(i) -> Y(i+1) -> X(i+1), aggregated per (parent type, child type).
void step(const ModelParams& params, Engine& rng, const std::vector<std::int64_t>& x, std::vector<std::int64_t>& y,
          std::vector<std::int64_t>& next) {
  const int K = params.K(), J = params.J();
  y.assign(static_cast<std::size_t>(J), 0);
  for (int j = 0; j < J; ++j)
    for (int k = 0; k < K; ++k)
      if (x[static_cast<std::size_t>(k)] > 0)
        y[static_cast<std::size_t>(j)] +=
            binomial(rng, trials(x[static_cast<std::size_t>(k)], params.m[static_cast<std::size_t>(j)]), params.P(k, j));
  next.assign(static_cast<std::size_t>(K), 0);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < J; ++j)
      if (y[static_cast<std::size_t>(j)] > 0)
        next[static_cast<std::size_t>(k)] +=
            binomial(rng, trials(y[static_cast<std::size_t>(j)], params.n[static_cast<std::size_t>(k)]), params.P(k, j));
}

}  // namespace

bool Trajectory::extinct_at(int i) const { return total(X.at(static_cast<std::size_t>(i))) == 0; }

std::string Trajectory::to_csv() const {
  std::ostringstream out;
  out << "generation,side,type,count\n";
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (i > 0)
      for (std::size_t j = 0; j < Y[i - 1].size(); ++j) out << i << ",Y," << j + 1 << ',' << Y[i - 1][j] << '\n';
    for (std::size_t k = 0; k < X[i].size(); ++k) out << i << ",X," << k + 1 << ',' << X[i][k] << '\n';
  }
  return out.str();
}

Trajectory simulate(const ModelParams& params, std::span<const int> start_types, int generations, std::uint64_t seed,
                    std::int64_t population_cap) {
  require_valid(params);
  if (generations < 0) throw invalid_input("simulate: generations must be non-negative");
  Trajectory t;
  t.start_types.assign(start_types.begin(), start_types.end());
  std::vector<std::int64_t> x(static_cast<std::size_t>(params.K()), 0);
  for (const int k : start_types) {
    check_type(params, k);
    ++x[static_cast<std::size_t>(k)];
  }
  t.X.push_back(x);
  Engine rng(seed);
  std::vector<std::int64_t> y, next;
  for (int i = 1; i <= generations; ++i) {
    step(params, rng, t.X.back(), y, next);
    if (total(y) > population_cap)
      throw capacity_error("population cap exceeded at object generation " + std::to_string(i));
    if (total(next) > population_cap)
      throw capacity_error("population cap exceeded at vertex generation " + std::to_string(i));
    t.Y.push_back(y);
    t.X.push_back(next);
  }
  return t;
}

GrowthScale growth_scale(const SpectralData& s) { return {s.tau, s.nu}; }

WSample w_sample(const ModelParams& params, const GrowthScale& scale, int start_type, int horizon, std::uint64_t seed,
                 std::int64_t population_cap) {
  require_valid(params);
  check_type(params, start_type);
  if (horizon < 0) throw invalid_input("w_sample: horizon must be non-negative");
  if (scale.nu.size() != params.K()) throw invalid_input("w_sample: nu has wrong length");
  Engine rng(seed);
  std::vector<std::int64_t> x(static_cast<std::size_t>(params.K()), 0), y, next;
  x[static_cast<std::size_t>(start_type)] = 1;
  WSample w;
  w.horizon = horizon;
  for (int i = 1; i <= horizon; ++i) {
    step(params, rng, x, y, next);
    x.swap(next);
    const auto size = total(x);
    if (size == 0) return w;
    if (size > population_cap || total(y) > population_cap)
      throw capacity_error("population cap exceeded at generation " + std::to_string(i));
  }
  double v = 0;
  for (int k = 0; k < params.K(); ++k) v += scale.nu(k) * static_cast<double>(x[static_cast<std::size_t>(k)]);
  w.value = v * std::pow(scale.tau, -horizon);
  w.survived = v > 0;
  return w;
}

Eigen::VectorXd survival_prob(const ModelParams& params) {
  require_valid(params);
  const int K = params.K(), J = params.J();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(K);  // extinction probabilities
  Eigen::VectorXd g(J);
  for (int it = 0; it < 1'000'000; ++it) {
    for (int j = 0; j < J; ++j) {
      double lg = 0;
      for (int l = 0; l < K; ++l)
        lg += static_cast<double>(params.n[static_cast<std::size_t>(l)]) * std::log1p(-params.P(l, j) * (1.0 - s(l)));
      g(j) = std::exp(lg);
    }
    Eigen::VectorXd f(K);
    for (int k = 0; k < K; ++k) {
      double lf = 0;
      for (int j = 0; j < J; ++j)
        lf += static_cast<double>(params.m[static_cast<std::size_t>(j)]) * std::log1p(-params.P(k, j) * (1.0 - g(j)));
      f(k) = std::exp(lf);
    }
    const double change = (f - s).cwiseAbs().maxCoeff();
    s = f;
    if (change < 1e-12) break;
  }
  return (Eigen::VectorXd::Ones(K) - s).cwiseMax(0.0);
}

std::vector<double> conditioned_w_pool(const ModelParams& params, const GrowthScale& scale, int start_type,
                                       int horizon, std::int64_t pool_size, std::uint64_t seed, int workers) {
  require_valid(params);
  check_type(params, start_type);
  if (pool_size < 1) throw invalid_input("conditioned_w_pool: pool size must be positive");
  constexpr std::size_t kBatch = 4096;
  std::vector<double> pool;
  pool.reserve(static_cast<std::size_t>(pool_size));
  std::uint64_t attempts = 0;
  std::vector<WSample> slots(kBatch);
  while (static_cast<std::int64_t>(pool.size()) < pool_size) {
    const auto base = attempts;
    parallel_for(kBatch, workers, [&](std::size_t r) {
      slots[r] = w_sample(params, scale, start_type, horizon, derive_seed(seed, "pool", base + r));
    });
    for (const auto& w : slots) {
      ++attempts;
      if (w.survived) pool.push_back(w.value);
      if (static_cast<std::int64_t>(pool.size()) == pool_size) break;
    }
    if (attempts >= 10'000 && static_cast<double>(pool.size()) < 1e-4 * static_cast<double>(attempts))
      throw numerical_error("survival too rare: " + std::to_string(pool.size()) + " survivors in " +
                            std::to_string(attempts) + " attempts");
  }
  return pool;
}

ExtinctionEstimate extinction_frequency(const ModelParams& params, int start_type, int generations, std::int64_t reps,
                                        std::uint64_t seed, int workers, std::int64_t escape_size) {
  require_valid(params);
  check_type(params, start_type);
  if (reps < 1) throw invalid_input("extinction_frequency: reps must be positive");
  std::vector<char> extinct(static_cast<std::size_t>(reps), 0);
  parallel_for(extinct.size(), workers, [&](std::size_t r) {
    Engine rng(derive_seed(seed, "bp", r));
    std::vector<std::int64_t> x(static_cast<std::size_t>(params.K()), 0), y, next;
    x[static_cast<std::size_t>(start_type)] = 1;
    for (int i = 1; i <= generations; ++i) {
      step(params, rng, x, y, next);
      x.swap(next);
      const auto size = total(x);
      if (size == 0) {
        extinct[r] = 1;
        return;
      }
      if (size >= escape_size || total(y) >= escape_size) return;
    }
  });
  ExtinctionEstimate e;
  e.reps = reps;
  e.fraction = static_cast<double>(std::count(extinct.begin(), extinct.end(), 1)) / static_cast<double>(reps);
  e.std_error = std::sqrt(e.fraction * (1 - e.fraction) / static_cast<double>(reps));
  return e;
}

// ---------------------------------------------------------------------------

std::optional<std::int64_t> LabeledForest::resolved_distance() const {
  if (a == b) return 0;
  // Nodes keyed by (side, type, index); vertices side 0, objects side 1.
  auto key = [](int side, const TypedIndex& t) {
    return (static_cast<std::uint64_t>(side) << 63) ^ (static_cast<std::uint64_t>(t.type) << 48) ^
           static_cast<std::uint64_t>(t.index);
  };
  std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> adj;
  for (const auto& e : edges) {
    const auto v = key(0, e.vertex), u = key(1, e.object);
    adj[v].push_back(u);
    adj[u].push_back(v);
  }
  const auto src = key(0, a), dst = key(0, b);
  std::unordered_map<std::uint64_t, std::int64_t> dist{{src, 0}};
  std::queue<std::uint64_t> q;
  q.push(src);
  std::int64_t found = -1;
  while (!q.empty() && found < 0) {
    const auto x = q.front();
    q.pop();
    const auto it = adj.find(x);
    if (it == adj.end()) continue;
    for (const auto y : it->second) {
      if (dist.contains(y)) continue;
      dist[y] = dist[x] + 1;
      if (y == dst) {
        found = dist[y];
        break;
      }
      q.push(y);
    }
  }
  // A path of bipartite length L only uses generations up to L / 2, so any
  // path no longer than 2 * generations_grown is already present.
  if (found >= 0 && found <= 2 * static_cast<std::int64_t>(generations_grown)) return found / 2;
  if (class1_extinct) return kInfiniteDistance;
  return std::nullopt;
}

LabeledForest labeled_growth(const ModelParams& params, int k1, int k2, int depth, std::uint64_t seed,
                             const GrowthOptions& options) {
  require_valid(params);
  check_type(params, k1);
  check_type(params, k2);
  if (depth < 0) throw invalid_input("labeled_growth: depth must be non-negative");
  if (k1 == k2 && params.n[static_cast<std::size_t>(k1)] < 2)
    throw invalid_input("insufficient vertices of requested type");
  const int K = params.K(), J = params.J();
  const int last = 2 * depth;

  LabeledForest f;
  f.ghost_descendants_tracked = options.track_ghost_descendants;
  f.ghostX.assign(static_cast<std::size_t>(depth) + 1, std::vector<std::int64_t>(static_cast<std::size_t>(K), 0));
  f.ghostY.assign(static_cast<std::size_t>(depth) + 1, std::vector<std::int64_t>(static_cast<std::size_t>(J), 0));
  f.originalX = f.ghostX;
  f.originalY = f.ghostY;

  // first_gen[side][type][index]: generation of the first class-1 use, -1 if unused.
  std::vector<std::vector<int>> first_vertex(static_cast<std::size_t>(K)), first_object(static_cast<std::size_t>(J));
  for (int k = 0; k < K; ++k) first_vertex[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(params.n[static_cast<std::size_t>(k)]), -1);
  for (int j = 0; j < J; ++j) first_object[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(params.m[static_cast<std::size_t>(j)]), -1);

  Engine rng(seed);
  const auto n1 = params.n[static_cast<std::size_t>(k1)];
  f.a = {k1, static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(n1)))};
  if (k1 == k2) {
    auto bi = static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(n1 - 1)));
    if (bi >= f.a.index) ++bi;
    f.b = {k2, bi};
  } else {
    f.b = {k2, static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(params.n[static_cast<std::size_t>(k2)])))};
  }
  f.individuals.push_back({0, f.a.type, -1, f.a.index, IndividualClass::One, 0});
  f.individuals.push_back({0, f.b.type, -1, f.b.index, IndividualClass::One, 1});
  first_vertex[static_cast<std::size_t>(k1)][static_cast<std::size_t>(f.a.index)] = 0;
  first_vertex[static_cast<std::size_t>(k2)][static_cast<std::size_t>(f.b.index)] = 0;

  std::vector<std::int64_t> current{0, 1};  // class-1 individuals of the current generation, in processing order
  std::vector<std::int64_t> ghosts(static_cast<std::size_t>(K), 0);  // ghost counts of the current generation
  std::vector<std::int64_t> chosen;

  struct Child {
    int type;
    std::int64_t parent;
    std::int64_t index;
  };
  std::vector<Child> children;

  int g = 0;
  while (g < last) {
    const bool parent_vertex = (g % 2 == 0);
    const int child_types = parent_vertex ? J : K;
    const int child_gen = g + 1;
    children.clear();
    for (const auto pi : current) {
      const auto& p = f.individuals[static_cast<std::size_t>(pi)];
      for (int t = 0; t < child_types; ++t) {
        const std::int64_t range = parent_vertex ? params.m[static_cast<std::size_t>(t)] : params.n[static_cast<std::size_t>(t)];
        const double prob = parent_vertex ? params.P(p.type, t) : params.P(t, p.type);
        const auto c = binomial(rng, range, prob);
        sample_distinct(rng, range, c, chosen);
        for (const auto idx : chosen) children.push_back({t, pi, idx});
      }
    }
    std::stable_sort(children.begin(), children.end(), [](const Child& x, const Child& y) { return x.type < y.type; });

    std::vector<std::int64_t> next_ghosts(static_cast<std::size_t>(child_types), 0);
    std::vector<std::int64_t> original(static_cast<std::size_t>(child_types), 0);
    if (options.track_ghost_descendants) {
      for (int s = 0; s < static_cast<int>(ghosts.size()); ++s) {
        if (ghosts[static_cast<std::size_t>(s)] == 0) continue;
        for (int t = 0; t < child_types; ++t) {
          const std::int64_t range = parent_vertex ? params.m[static_cast<std::size_t>(t)] : params.n[static_cast<std::size_t>(t)];
          const double prob = parent_vertex ? params.P(s, t) : params.P(t, s);
          next_ghosts[static_cast<std::size_t>(t)] += binomial(rng, trials(ghosts[static_cast<std::size_t>(s)], range), prob);
        }
      }
    }

    std::vector<std::int64_t> next;
    for (const auto& c : children) {
      auto& slot = (parent_vertex ? first_object : first_vertex)[static_cast<std::size_t>(c.type)][static_cast<std::size_t>(c.index)];
      const auto& p = f.individuals[static_cast<std::size_t>(c.parent)];
      Individual ind{child_gen, c.type, c.parent, c.index, IndividualClass::One, p.root};
      if (slot < 0) {
        slot = child_gen;
      } else {
        ind.cls = slot == child_gen ? IndividualClass::GhostPrime : IndividualClass::Ghost;
        ++original[static_cast<std::size_t>(c.type)];
      }
      if (ind.cls != IndividualClass::Ghost) {
        const TypedIndex pt{p.type, p.index}, ct{c.type, c.index};
        f.edges.push_back(parent_vertex ? ForestEdge{pt, ct, child_gen} : ForestEdge{ct, pt, child_gen});
      }
      if (ind.cls == IndividualClass::One) next.push_back(static_cast<std::int64_t>(f.individuals.size()));
      f.individuals.push_back(ind);
    }
    for (int t = 0; t < child_types; ++t) next_ghosts[static_cast<std::size_t>(t)] += original[static_cast<std::size_t>(t)];

    if (static_cast<std::int64_t>(next.size()) + total(next_ghosts) > options.population_cap)
      throw capacity_error("population cap exceeded at generation " + std::to_string(child_gen));

    // Vertex generation 2i maps to X-index i; object generation 2i - 1 to Y-index i.
    const auto row = static_cast<std::size_t>((child_gen + 1) / 2);
    if (parent_vertex) {
      f.ghostY[row] = next_ghosts;
      f.originalY[row] = original;
    } else {
      f.ghostX[row] = next_ghosts;
      f.originalX[row] = original;
    }

    current.swap(next);
    ghosts.swap(next_ghosts);
    g = child_gen;
    if (current.empty()) {
      f.class1_extinct = true;
      if (!options.track_ghost_descendants || total(ghosts) == 0) break;
    }
  }
  f.generations_grown = g;
  if (current.empty()) f.class1_extinct = true;
  return f;
}

DistanceLaw coupled_distance_law(const ModelParams& params, int k1, int k2, std::int64_t reps, std::uint64_t seed,
                                 int workers) {
  require_valid(params);
  if (reps < 1) throw invalid_input("coupled_distance_law: reps must be positive");
  // Every component is finite, so class-1 growth always dies out within
  // total_n + total_m bipartite generations.
  const auto depth = static_cast<int>(std::min<std::int64_t>((params.total_n() + params.total_m()) / 2 + 1, 1 << 30));
  GrowthOptions opts;
  opts.track_ghost_descendants = false;
  std::vector<std::int64_t> slots(static_cast<std::size_t>(reps));
  parallel_for(slots.size(), workers, [&](std::size_t r) {
    const auto forest = labeled_growth(params, k1, k2, depth, derive_seed(seed, "coupling", r), opts);
    slots[r] = forest.resolved_distance().value();
  });
  DistanceLaw law;
  for (const auto d : slots) law.add(d);
  return law;
}

std::vector<GhostRow> ghost_scaling(const ModelParams& params, const SpectralData& spectral, int k1, int k2, int depth,
                                    std::int64_t reps, std::uint64_t seed, int workers) {
  if (depth < 1) throw invalid_input("ghost_scaling: depth must be at least 1");
  if (reps < 1) throw invalid_input("ghost_scaling: reps must be positive");
  const auto D = static_cast<std::size_t>(depth);
  std::vector<std::vector<double>> gx(static_cast<std::size_t>(reps)), gy(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), workers, [&](std::size_t r) {
    const auto f = labeled_growth(params, k1, k2, depth, derive_seed(seed, "ghosts", r));
    gx[r].assign(D + 1, 0.0);
    gy[r].assign(D + 1, 0.0);
    for (std::size_t i = 1; i <= D; ++i) {
      gx[r][i] = static_cast<double>(total(f.ghostX[i]));
      gy[r][i] = static_cast<double>(total(f.ghostY[i]));
    }
  });
  const double e4 = std::pow(spectral.e_mn, 4);
  const double scaleY = std::sqrt(static_cast<double>(spectral.m) / static_cast<double>(spectral.n));
  std::vector<GhostRow> rows;
  for (std::size_t i = 1; i <= D; ++i) {
    GhostRow row;
    row.i = static_cast<int>(i);
    for (std::size_t r = 0; r < gx.size(); ++r) {
      row.ghostX_mean += gx[r][i];
      row.ghostY_mean += gy[r][i];
    }
    row.ghostX_mean /= static_cast<double>(reps);
    row.ghostY_mean /= static_cast<double>(reps);
    const auto di = static_cast<double>(i);
    row.ratioX = row.ghostX_mean / (std::pow(spectral.tau, 2 * di) * e4);
    row.ratioY = row.ghostY_mean / (scaleY * std::pow(spectral.tau, 2 * (di - 1)) * e4);
    rows.push_back(row);
  }
  return rows;
}

std::string ghost_table_csv(const std::vector<GhostRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "i,ghostX_mean,ghostY_mean,ratioX,ratioY\n";
  for (const auto& r : rows)
    out << r.i << ',' << r.ghostX_mean << ',' << r.ghostY_mean << ',' << r.ratioX << ',' << r.ratioY << '\n';
  return out.str();
}

double log_slope(const std::vector<GhostRow>& rows, int lo, int hi, bool object_side) {
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    const double v = object_side ? r.ratioY : r.ratioX;
    if (r.i >= lo && r.i <= hi && v > 0) {
      xs.push_back(r.i);
      ys.push_back(std::log(v));
    }
  }
  if (xs.size() < 2) throw numerical_error("log_slope: fewer than two usable rows");
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace igdist
