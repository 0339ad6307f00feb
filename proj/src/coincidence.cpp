#include "igdist/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "igdist/error.hpp"
#include "igdist/parallel.hpp"
#include "igdist/random.hpp"

namespace igdist {

namespace {

using u128 = unsigned __int128;

constexpr double kEnumerationGuard = 1e7;

std::uint64_t choose(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  u128 r = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    r = r * static_cast<u128>(n - k + i) / static_cast<u128>(i);
    if (r > std::numeric_limits<std::uint64_t>::max()) throw numerical_error("binomial coefficient overflows 64 bits");
  }
  return static_cast<std::uint64_t>(r);
}

struct Accum {
  u128 num = 1;
  u128 den = 1;
  void times(u128 a, u128 b) {
    num *= a;
    den *= b;
    reduce();
    if (num > std::numeric_limits<std::uint64_t>::max() || den > std::numeric_limits<std::uint64_t>::max())
      throw numerical_error("exact probability does not fit in 64 bits");
  }
  void reduce() {
    u128 a = num, b = den;
    while (b != 0) {
      const u128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      num /= a;
      den /= a;
    }
  }
  Fraction get() const { return {static_cast<std::uint64_t>(num), static_cast<std::uint64_t>(den)}; }
};

// Distribution of the union of independent uniform subsets, as mask -> count.
std::unordered_map<std::uint64_t, std::uint64_t> union_counts(std::int64_t w, const std::vector<std::int64_t>& sizes) {
  std::unordered_map<std::uint64_t, std::uint64_t> current{{0, 1}};
  const std::uint64_t limit = std::uint64_t{1} << w;
  for (const auto z : sizes) {
    std::unordered_map<std::uint64_t, std::uint64_t> next;
    // Gosper's hack over all z-subsets of {0..w-1}.
    std::vector<std::uint64_t> subsets;
    if (z == 0) {
      subsets.push_back(0);
    } else {
      for (std::uint64_t sub = (std::uint64_t{1} << z) - 1; sub < limit;) {
        subsets.push_back(sub);
        const std::uint64_t c = sub & (~sub + 1);
        const std::uint64_t r = sub + c;
        sub = (((r ^ sub) >> 2) / c) | r;
      }
    }
    for (const auto& [mask, count] : current)
      for (const auto sub : subsets) next[mask | sub] += count;
    current.swap(next);
  }
  return current;
}

}  // namespace

std::int64_t SamplingScheme::z_total(int l) const {
  const auto& v = zA.at(static_cast<std::size_t>(l));
  return std::accumulate(v.begin(), v.end(), std::int64_t{0});
}

std::int64_t SamplingScheme::z_prime_total(int l) const {
  const auto& v = zB.at(static_cast<std::size_t>(l));
  return std::accumulate(v.begin(), v.end(), std::int64_t{0});
}

std::optional<std::string> validate_scheme(const SamplingScheme& s) {
  const auto L = s.w.size();
  if (L == 0) return "scheme needs at least one class";
  if (s.zA.size() != L || s.zB.size() != L || s.wstar.size() != L)
    return "scheme vectors must all have length L = " + std::to_string(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto tag = "class " + std::to_string(l + 1);
    if (s.w[l] < 2) return tag + ": w = " + std::to_string(s.w[l]) + " < 2";
    if (s.wstar[l] < 0 || s.wstar[l] > s.w[l]) return tag + ": w* out of [0, w]";
    for (const auto* side : {&s.zA[l], &s.zB[l]})
      for (const auto z : *side)
        if (z < 0 || z > s.w[l]) return tag + ": draw size " + std::to_string(z) + " out of [0, w]";
  }
  return std::nullopt;
}

void require_valid(const SamplingScheme& s) {
  if (auto msg = validate_scheme(s)) throw invalid_input(*msg);
}

SamplingScheme scheme_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw invalid_input("scheme must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "w" && key != "zA" && key != "zB" && key != "wstar") throw invalid_input("unknown scheme key: " + key);
  }
  for (const char* key : {"w", "zA", "zB"})
    if (!j.contains(key)) throw invalid_input(std::string("scheme is missing \"") + key + "\"");
  SamplingScheme s;
  try {
    s.w = j.at("w").get<std::vector<std::int64_t>>();
    s.zA = j.at("zA").get<std::vector<std::vector<std::int64_t>>>();
    s.zB = j.at("zB").get<std::vector<std::vector<std::int64_t>>>();
    s.wstar = j.contains("wstar") ? j.at("wstar").get<std::vector<std::int64_t>>()
                                  : std::vector<std::int64_t>(s.w.size(), 0);
  } catch (const nlohmann::json::exception& e) {
    throw invalid_input(std::string("malformed scheme: ") + e.what());
  }
  require_valid(s);
  return s;
}

nlohmann::json scheme_to_json(const SamplingScheme& s) {
  return {{"w", s.w}, {"zA", s.zA}, {"zB", s.zB}, {"wstar", s.wstar}};
}

double lambda_value(const SamplingScheme& s) {
  require_valid(s);
  double lambda = 0;
  for (int l = 0; l < s.L(); ++l)
    lambda += static_cast<double>(s.z_total(l)) * static_cast<double>(s.z_prime_total(l)) /
              static_cast<double>(s.w[static_cast<std::size_t>(l)]);
  return lambda;
}

PoissonBounds bounds(const SamplingScheme& s, const std::vector<double>& eps_A, const std::vector<double>& eps_B) {
  require_valid(s);
  const auto L = static_cast<std::size_t>(s.L());
  if ((!eps_A.empty() && eps_A.size() != L) || (!eps_B.empty() && eps_B.size() != L))
    throw invalid_input("perturbation vectors must have length L");
  auto eps = [](const std::vector<double>& e, std::size_t l) { return e.empty() ? 0.0 : e[l]; };
  PoissonBounds b;
  double l_z_epsB = 0, l_epsA_zB = 0, l_eps_eps = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const double w = static_cast<double>(s.w[l]);
    const double z = static_cast<double>(s.z_total(static_cast<int>(l)));
    const double zp = static_cast<double>(s.z_prime_total(static_cast<int>(l)));
    const double ea = eps(eps_A, l), eb = eps(eps_B, l);
    if (ea < 0 || eb < 0) throw invalid_input("perturbations must be nonnegative");
    b.B1 += 2 * (z + zp) / w;
    b.B1_star += z * zp * static_cast<double>(s.wstar[l]) / (w * w);
    l_z_epsB += z * eb / w;
    l_epsA_zB += ea * zp / w;
    l_eps_eps += ea * eb / w;
  }
  b.B2 = std::min(l_z_epsB, 1.0) + std::min(l_epsA_zB, 1.0) + std::min(l_eps_eps, 1.0);
  return b;
}

bool closed_form_applies(const SamplingScheme& s) {
  for (int l = 0; l < s.L(); ++l) {
    const auto i = static_cast<std::size_t>(l);
    if (s.wstar[i] != 0 || s.zA[i].size() > 1 || s.zB[i].size() > 1) return false;
  }
  return true;
}

Fraction closed_form_fraction(const SamplingScheme& s) {
  require_valid(s);
  if (!closed_form_applies(s)) throw invalid_input("closed form needs single draws and no exclusions");
  Accum acc;
  for (int l = 0; l < s.L(); ++l) {
    const auto w = s.w[static_cast<std::size_t>(l)];
    const auto z = s.z_total(l), zp = s.z_prime_total(l);
    acc.times(choose(w - z, zp), choose(w, zp));
  }
  return acc.get();
}

Fraction enumerate_fraction(const SamplingScheme& s) {
  require_valid(s);
  // Classes are independent, so the count factorises and the guard applies
  // to each class's configuration count separately.
  for (int l = 0; l < s.L(); ++l) {
    const auto i = static_cast<std::size_t>(l);
    if (s.w[i] > 62) throw capacity_error("instance too large for exact oracle");
    double cost = 1;
    for (const auto* side : {&s.zA[i], &s.zB[i]})
      for (const auto z : *side) cost *= static_cast<double>(choose(s.w[i], z));
    if (cost > kEnumerationGuard) throw capacity_error("instance too large for exact oracle");
  }

  Accum acc;
  for (int l = 0; l < s.L(); ++l) {
    const auto i = static_cast<std::size_t>(l);
    const auto a = union_counts(s.w[i], s.zA[i]);
    const auto b = union_counts(s.w[i], s.zB[i]);
    const std::uint64_t counted = ~((std::uint64_t{1} << s.wstar[i]) - 1);
    u128 favourable = 0, total_a = 0, total_b = 0;
    for (const auto& [ma, ca] : a) total_a += ca;
    for (const auto& [mb, cb] : b) total_b += cb;
    for (const auto& [ma, ca] : a)
      for (const auto& [mb, cb] : b)
        if ((ma & mb & counted) == 0) favourable += static_cast<u128>(ca) * cb;
    acc.times(favourable, total_a * total_b);
  }
  return acc.get();
}

double p_no_collision_exact(const SamplingScheme& s) {
  require_valid(s);
  if (closed_form_applies(s)) {
    double p = 1;
    for (int l = 0; l < s.L(); ++l) {
      const auto w = s.w[static_cast<std::size_t>(l)];
      const auto z = s.z_total(l), zp = s.z_prime_total(l);
      // C(w - z, z') / C(w, z') = prod_{i < z'} (w - z - i) / (w - i)
      for (std::int64_t i = 0; i < zp; ++i)
        p *= static_cast<double>(std::max<std::int64_t>(w - z - i, 0)) / static_cast<double>(w - i);
    }
    return p;
  }
  return enumerate_fraction(s).value();
}

MonteCarloEstimate p_no_collision_mc(const SamplingScheme& s, std::int64_t reps, std::uint64_t seed, int workers) {
  require_valid(s);
  if (reps < 1) throw invalid_input("p_no_collision_mc: reps must be positive");
  constexpr std::int64_t kChunk = 4096;
  const auto chunks = static_cast<std::size_t>((reps + kChunk - 1) / kChunk);
  std::vector<std::int64_t> hits(chunks, 0);
  parallel_for(chunks, workers, [&](std::size_t c) {
    Engine rng(derive_seed(seed, "coincidence", c));
    const auto begin = static_cast<std::int64_t>(c) * kChunk;
    const auto end = std::min(reps, begin + kChunk);
    std::vector<std::int64_t> draw;
    std::vector<std::int64_t> mark;  // round stamp per label, per class reused
    for (std::int64_t r = begin; r < end; ++r) {
      bool clear = true;
      for (int l = 0; l < s.L() && clear; ++l) {
        const auto i = static_cast<std::size_t>(l);
        const auto w = s.w[i];
        mark.assign(static_cast<std::size_t>(w), 0);
        for (const auto z : s.zA[i]) {
          sample_distinct(rng, w, z, draw);
          for (const auto x : draw) mark[static_cast<std::size_t>(x)] = 1;
        }
        for (const auto z : s.zB[i]) {
          sample_distinct(rng, w, z, draw);
          for (const auto x : draw)
            if (x >= s.wstar[i] && mark[static_cast<std::size_t>(x)]) clear = false;
        }
      }
      if (clear) ++hits[c];
    }
  });
  MonteCarloEstimate e;
  e.reps = reps;
  e.estimate = static_cast<double>(std::accumulate(hits.begin(), hits.end(), std::int64_t{0})) / static_cast<double>(reps);
  e.std_error = std::sqrt(e.estimate * (1 - e.estimate) / static_cast<double>(reps));
  return e;
}

PoissonReport poisson_check(const SamplingScheme& s, std::int64_t mc_reps, std::uint64_t seed, int workers) {
  require_valid(s);
  PoissonReport r;
  try {
    r.p_no_collision = p_no_collision_exact(s);
    r.exact = true;
  } catch (const Error& e) {
    if (e.kind() != Error::Kind::Capacity && e.kind() != Error::Kind::Numerical) throw;
    const auto mc = p_no_collision_mc(s, mc_reps, seed, workers);
    r.exact = false;
    r.p_no_collision = mc.estimate;
    r.std_error = mc.std_error;
  }
  const auto b = bounds(s);
  r.exp_minus_lambda = std::exp(-lambda_value(s));
  r.abs_diff = std::abs(r.p_no_collision - r.exp_minus_lambda);
  r.bound = b.B1 + b.B1_star;
  r.pass = r.abs_diff <= r.bound + 3 * r.std_error + 1e-12;
  return r;
}

std::string poisson_report_csv_header() { return "source,p_no_collision,std_error,exp_minus_lambda,abs_diff,bound,pass\n"; }

std::string poisson_report_csv_row(const PoissonReport& r) {
  std::ostringstream out;
  out.precision(12);
  out << (r.exact ? "exact" : "mc") << ',' << r.p_no_collision << ',' << r.std_error << ',' << r.exp_minus_lambda
      << ',' << r.abs_diff << ',' << r.bound << ',' << (r.pass ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace igdist
