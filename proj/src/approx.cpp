#include "igdist/approx.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "igdist/bpsim.hpp"
#include "igdist/error.hpp"
#include "igdist/random.hpp"

namespace igdist {

namespace {

void require_pools(const WPools& pools) {
  if (pools.pool_A.empty() || pools.pool_B.empty()) throw invalid_input("empty W pool");
}

// Mean over all pairs of exp(-a b t); row sums first so the order is fixed.
double mean_pair_exp(const WPools& pools, double t) {
  double total = 0;
  for (const double a : pools.pool_A) {
    const double at = a * t;
    double row = 0;
    for (const double b : pools.pool_B) row += std::exp(-at * b);
    total += row;
  }
  return total / (static_cast<double>(pools.pool_A.size()) * static_cast<double>(pools.pool_B.size()));
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out.precision(10);
  out << v;
  return out.str();
}

}  // namespace

int default_horizon(const SpectralData& s) { return std::max(12, 2 * s.i0); }

WPools build_pools(const ModelParams& params, const SpectralData& s, int k1, int k2, int horizon,
                   std::int64_t pool_size, std::uint64_t seed, int workers) {
  const auto surv = survival_prob(params);
  if (k1 < 0 || k1 >= params.K() || k2 < 0 || k2 >= params.K()) throw invalid_input("vertex type out of range");
  WPools pools;
  pools.surv_A = surv(k1);
  pools.surv_B = surv(k2);
  pools.horizon = horizon;
  pools.i0 = s.i0;
  const auto scale = growth_scale(s);
  if (pools.surv_A > 0)
    pools.pool_A = conditioned_w_pool(params, scale, k1, horizon, pool_size, derive_seed(seed, "poolA", 0), workers);
  if (pools.surv_B > 0)
    pools.pool_B = conditioned_w_pool(params, scale, k2, horizon, pool_size, derive_seed(seed, "poolB", 0), workers);
  return pools;
}

double L_of_d(const SpectralData& s, std::int64_t d) {
  if (d < 1) throw invalid_input("L_of_d: d must be at least 1");
  return s.kappa * (std::pow(s.tau, static_cast<double>(d)) - 1) / static_cast<double>(s.n);
}

double exceed_prob(const SpectralData& s, const WPools& pools, double u, bool use_L_of_d) {
  const double surv = pools.surv_A * pools.surv_B;
  if (surv == 0) return 1.0;
  require_pools(pools);
  const double t = use_L_of_d ? s.kappa * (std::pow(s.tau, s.i0 + u) - 1) / static_cast<double>(s.n)
                              : s.kappa * std::pow(s.tau, u) * s.phi_n;
  return surv * mean_pair_exp(pools, t) + (1 - surv);
}

double cdf_U_prime_conditional(const SpectralData& s, const WPools& pools, double u) {
  require_pools(pools);
  return 1 - mean_pair_exp(pools, s.kappa * std::pow(s.tau, u));
}

double cdf_U_prime(const SpectralData& s, const WPools& pools, double u) {
  const double surv = pools.surv_A * pools.surv_B;
  if (surv == 0) return 0.0;
  return surv * cdf_U_prime_conditional(s, pools, u);
}

std::vector<double> sample_U_tilde(const SpectralData& s, const WPools& pools, std::int64_t count,
                                   std::uint64_t seed) {
  require_pools(pools);
  if (count < 0) throw invalid_input("sample_U_tilde: count must be nonnegative");
  Engine rng(seed);
  const double log_tau = std::log(s.tau), log_kappa = std::log(s.kappa);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    const double a = pools.pool_A[uniform_below(rng, pools.pool_A.size())];
    const double b = pools.pool_B[uniform_below(rng, pools.pool_B.size())];
    const double gumbel = standard_gumbel(rng);
    out.push_back(-(gumbel + std::log(a) + std::log(b) + log_kappa) / log_tau);
  }
  return out;
}

double theta_tilde(const SpectralData& s, int i) {
  return std::sqrt(static_cast<double>(i) + 1) * std::pow(s.gamma / (s.tau * s.tau), static_cast<double>(i) / 4);
}

double delta_error_scale(const SpectralData& s, double y, double c25) {
  const double n4 = std::pow(static_cast<double>(s.n), 0.25);
  const double e = s.e_mn;
  return c25 * ((std::pow(y, 1.5) + 1) * std::min(n4 * e * e, 1.0) + (y + 1) * n4 * e * theta_tilde(s, s.i0));
}

std::string ApproxLaw::to_csv() const {
  std::ostringstream out;
  out << "u,exceed_prob,cdf_U_prime\n";
  for (std::size_t i = 0; i < support.size(); ++i)
    out << support[i] << ',' << fmt(exceed[i]) << ',' << fmt(cdf_U_prime[i]) << '\n';
  out << "inf," << fmt(defect) << ",\n";
  return out.str();
}

ApproxLaw approx_law(const SpectralData& s, const WPools& pools, int u_lo, int u_hi) {
  if (u_lo > u_hi) throw invalid_input("approx_law: empty u window");
  ApproxLaw law;
  law.kappa = s.kappa;
  law.tau = s.tau;
  law.phi_n = s.phi_n;
  law.i0 = s.i0;
  law.defect = 1 - pools.surv_A * pools.surv_B;
  for (int u = u_lo; u <= u_hi; ++u) {
    law.support.push_back(u);
    law.exceed.push_back(exceed_prob(s, pools, u));
    law.cdf_U_prime.push_back(cdf_U_prime(s, pools, u));
  }
  return law;
}

std::string ComparisonTable::to_csv() const {
  std::ostringstream out;
  out << "u,empirical_exceed,approx_exceed,abs_diff,delta_scale\n";
  for (const auto& r : rows)
    out << (r.u ? std::to_string(*r.u) : std::string("inf")) << ',' << fmt(r.empirical) << ',' << fmt(r.approx)
        << ',' << fmt(r.abs_diff) << ',' << (r.u ? fmt(r.delta_scale) : std::string()) << '\n';
  return out.str();
}

ComparisonTable compare_defect_only(const DistanceLaw& empirical, double surv_A, double surv_B) {
  if (empirical.total == 0) throw invalid_input("compare: empty empirical law");
  ComparisonTable t;
  CompareRow d;
  d.empirical = empirical.infinite_fraction();
  d.approx = 1 - surv_A * surv_B;
  d.abs_diff = std::abs(d.empirical - d.approx);
  t.rows.push_back(d);
  t.defect_diff = d.abs_diff;
  return t;
}

ComparisonTable compare(const DistanceLaw& empirical, const SpectralData& s, const WPools& pools,
                        const CompareOptions& options) {
  if (pools.i0 != s.i0) throw invalid_input("mismatched i0 between pools and spectral data");
  if (options.u_lo > options.u_hi) throw invalid_input("compare: empty u window");
  if (pools.surv_A * pools.surv_B == 0) return compare_defect_only(empirical, pools.surv_A, pools.surv_B);
  ComparisonTable t;
  for (int u = options.u_lo; u <= options.u_hi; ++u) {
    CompareRow r;
    r.u = u;
    r.empirical = empirical.exceedance(s.i0 + u);
    r.approx = exceed_prob(s, pools, u, options.use_L_of_d);
    r.abs_diff = std::abs(r.empirical - r.approx);
    r.delta_scale = delta_error_scale(s, std::pow(s.tau, u), options.c25);
    t.max_abs_diff = std::max(t.max_abs_diff, r.abs_diff);
    t.rows.push_back(r);
  }
  const auto d = compare_defect_only(empirical, pools.surv_A, pools.surv_B);
  t.rows.push_back(d.rows.front());
  t.defect_diff = d.defect_diff;
  return t;
}

}  // namespace igdist
