#include "igdist/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace igdist {

double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_open01(Engine& rng) {
  for (;;) {
    const double u = uniform01(rng);
    if (u > 0.0) return u;
  }
}

std::uint64_t uniform_below(Engine& rng, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: zero bound");
  // Lemire's multiply-shift with rejection of the biased low zone.
  unsigned __int128 product = static_cast<unsigned __int128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<unsigned __int128>(rng()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

namespace {

// log(k!) - [(k + 1/2) log(k + 1) - (k + 1) + log(2 pi) / 2]
double stirling_tail(std::int64_t k) {
  static constexpr std::array<double, 10> table = {
      0.08106146679532726, 0.04134069595540929, 0.02767792568499834,
      0.02079067210376509, 0.01664469118982119, 0.01387612882307075,
      0.01189670994589177, 0.01041126526197209, 0.009255462182712733,
      0.008330563433362871};
  if (k < 10) return table[static_cast<std::size_t>(k)];
  const double ikp1 = 1.0 / static_cast<double>(k + 1);
  const double ikp1_sq = ikp1 * ikp1;
  return (1.0 / 12 - (1.0 / 360 - (1.0 / 1260) * ikp1_sq) * ikp1_sq) * ikp1;
}

std::int64_t binomial_inversion(Engine& rng, std::int64_t n, double p) {
  const double q = 1.0 - p;
  const double s = p / q;
  const double a = static_cast<double>(n + 1) * s;
  const double r0 = std::pow(q, static_cast<double>(n));
  for (;;) {
    double u = uniform01(rng);
    double r = r0;
    std::int64_t x = 0;
    while (u > r) {
      u -= r;
      ++x;
      if (x > n) break;  // rounding ran the tail out; redraw
      r *= a / static_cast<double>(x) - s;
    }
    if (x <= n) return x;
  }
}

std::int64_t binomial_btrd(Engine& rng, std::int64_t n, double p) {
  const double r = p / (1.0 - p);
  const double nr = static_cast<double>(n + 1) * r;
  const double npq = static_cast<double>(n) * p * (1.0 - p);
  const double sqrt_npq = std::sqrt(npq);
  const double b = 1.15 + 2.53 * sqrt_npq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = static_cast<double>(n) * p + 0.5;
  const double alpha = (2.83 + 5.1 / b) * sqrt_npq;
  const double v_r = 0.92 - 4.2 / b;
  const double u_rv_r = 0.86 * v_r;
  const auto m = static_cast<std::int64_t>(std::floor(static_cast<double>(n + 1) * p));

  for (;;) {
    double u;
    double v = uniform01(rng);
    if (v <= u_rv_r) {
      u = v / v_r - 0.43;
      return static_cast<std::int64_t>(
          std::floor((2 * a / (0.5 - std::abs(u)) + b) * u + c));
    }
    if (v >= v_r) {
      u = uniform01(rng) - 0.5;
    } else {
      u = v / v_r - 0.93;
      u = (u < 0 ? -0.5 : 0.5) - u;
      v = uniform01(rng) * v_r;
    }
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2 * a / us + b) * u + c);
    if (kf < 0 || kf > static_cast<double>(n)) continue;
    const auto k = static_cast<std::int64_t>(kf);
    v = v * alpha / (a / (us * us) + b);
    const auto km = static_cast<double>(k > m ? k - m : m - k);
    if (km <= 15) {
      double f = 1.0;
      if (m < k) {
        for (std::int64_t i = m + 1; i <= k; ++i) f *= nr / static_cast<double>(i) - r;
      } else if (m > k) {
        for (std::int64_t i = k + 1; i <= m; ++i) v *= nr / static_cast<double>(i) - r;
      }
      if (v <= f) return k;
      continue;
    }
    v = std::log(v);
    const double rho = (km / npq) * (((km / 3.0 + 0.625) * km + 1.0 / 6) / npq + 0.5);
    const double t = -km * km / (2 * npq);
    if (v < t - rho) return k;
    if (v > t + rho) continue;
    const auto nm = static_cast<double>(n - m + 1);
    const double h = (static_cast<double>(m) + 0.5) * std::log((static_cast<double>(m) + 1) / (r * nm)) +
                     stirling_tail(m) + stirling_tail(n - m);
    const auto nk = static_cast<double>(n - k + 1);
    const double bound = h + static_cast<double>(n + 1) * std::log(nm / nk) +
                         (static_cast<double>(k) + 0.5) * std::log(nk * r / (static_cast<double>(k) + 1)) -
                         stirling_tail(k) - stirling_tail(n - k);
    if (v <= bound) return k;
  }
}

}  // namespace

std::int64_t binomial(Engine& rng, std::int64_t trials, double prob) {
  if (trials < 0) throw std::invalid_argument("binomial: negative trial count");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("binomial: probability outside [0,1]");
  if (trials == 0 || prob == 0.0) return 0;
  if (prob == 1.0) return trials;
  const bool flip = prob > 0.5;
  const double p = flip ? 1.0 - prob : prob;
  const std::int64_t x = (static_cast<double>(trials + 1) * p < 11.0)
                             ? binomial_inversion(rng, trials, p)
                             : binomial_btrd(rng, trials, p);
  return flip ? trials - x : x;
}

void sample_distinct(Engine& rng, std::int64_t range, std::int64_t count,
                     std::vector<std::int64_t>& out) {
  out.clear();
  if (count < 0 || count > range) throw std::invalid_argument("sample_distinct: count outside [0, range]");
  out.reserve(static_cast<std::size_t>(count));

  // Positions displaced by earlier swaps; anything absent still holds its own value.
  if (count <= 48) {
    std::vector<std::pair<std::int64_t, std::int64_t>> moved;
    moved.reserve(static_cast<std::size_t>(count));
    auto value_at = [&](std::int64_t pos) {
      for (const auto& [p, v] : moved)
        if (p == pos) return v;
      return pos;
    };
    auto store = [&](std::int64_t pos, std::int64_t v) {
      for (auto& [p, old] : moved)
        if (p == pos) {
          old = v;
          return;
        }
      moved.emplace_back(pos, v);
    };
    for (std::int64_t i = 0; i < count; ++i) {
      const auto j = i + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(range - i)));
      const std::int64_t vj = value_at(j);
      if (j != i) store(j, value_at(i));
      out.push_back(vj);
    }
    return;
  }

  std::unordered_map<std::int64_t, std::int64_t> moved;
  moved.reserve(static_cast<std::size_t>(2 * count));
  auto value_at = [&](std::int64_t pos) {
    const auto it = moved.find(pos);
    return it == moved.end() ? pos : it->second;
  };
  for (std::int64_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(range - i)));
    const std::int64_t vj = value_at(j);
    if (j != i) moved[j] = value_at(i);
    out.push_back(vj);
  }
}

double standard_gumbel(Engine& rng) { return -std::log(-std::log(uniform_open01(rng))); }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::uint64_t splitmix_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t replicate) {
  std::uint64_t z = splitmix_finalize(master + 0x9e3779b97f4a7c15ULL);
  z = splitmix_finalize(z ^ fnv1a64(tag));
  z = splitmix_finalize(z + 0x9e3779b97f4a7c15ULL * (replicate + 1));
  return z;
}

}  // namespace igdist
