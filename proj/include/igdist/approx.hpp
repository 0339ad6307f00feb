#pragma once

// Branching-process approximation to the distance law: the mixed
// exponential exceedance E exp(-W^A W^B kappa tau^u phi(n)), the defective
// Gumbel mixture U' and the structural error scale delta.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "igdist/graphgen.hpp"
#include "igdist/model.hpp"

namespace igdist {

/// Conditioned W samples for the two endpoint types plus their survival
/// probabilities.
struct WPools {
  std::vector<double> pool_A;
  std::vector<double> pool_B;
  double surv_A = 0;
  double surv_B = 0;
  int horizon = 0;
  int i0 = 0;  // i0 of the model the pools were built for
};

/// max(12, 2 i0).
int default_horizon(const SpectralData& s);

/// Pools of size `pool_size` from conditioned_w_pool, A and B on independent
/// streams. When survival is zero for either type, that pool stays empty and
/// only the defect is meaningful.
WPools build_pools(const ModelParams& params, const SpectralData& s, int k1, int k2, int horizon,
                   std::int64_t pool_size, std::uint64_t seed, int workers = 1);

/// kappa n^-1 (tau^d - 1).
double L_of_d(const SpectralData& s, std::int64_t d);

/// P[D - i0 > u] under the approximation: surv_A surv_B times the mean over
/// all pool pairs of exp(-a b kappa tau^u phi) plus the defect.
/// With `use_L_of_d`, kappa tau^u phi is replaced by L(i0 + u).
double exceed_prob(const SpectralData& s, const WPools& pools, double u, bool use_L_of_d = false);

/// P[U' <= u] = surv_A surv_B E[1 - exp(-x kappa tau^u)], x = a b.
double cdf_U_prime(const SpectralData& s, const WPools& pools, double u);

/// Same without the survival weight: the law of U' given that it is finite.
double cdf_U_prime_conditional(const SpectralData& s, const WPools& pools, double u);

/// -(Gamma + log a + log b + log kappa) / log tau with a, b drawn uniformly
/// from the pools and Gamma standard Gumbel.
std::vector<double> sample_U_tilde(const SpectralData& s, const WPools& pools, std::int64_t count,
                                   std::uint64_t seed);

/// (i + 1)^(1/2) (gamma / tau^2)^(i/4).
double theta_tilde(const SpectralData& s, int i);

/// c25 {(y^1.5 + 1) min(n^(1/4) e^2, 1) + (y + 1) n^(1/4) e theta~_i0}.
/// A scale only: c25 is an unspecified constant.
double delta_error_scale(const SpectralData& s, double y, double c25 = 1.0);

struct ApproxLaw {
  std::vector<int> support;
  std::vector<double> exceed;
  std::vector<double> cdf_U_prime;
  double defect = 0;
  double kappa = 0;
  double tau = 0;
  double phi_n = 0;
  int i0 = 0;

  /// "u,exceed_prob,cdf_U_prime" then "inf,<defect>,".
  std::string to_csv() const;
};

ApproxLaw approx_law(const SpectralData& s, const WPools& pools, int u_lo, int u_hi);

struct CompareRow {
  std::optional<int> u;  // empty for the defect row
  double empirical = 0;
  double approx = 0;
  double abs_diff = 0;
  double delta_scale = 0;
};

struct ComparisonTable {
  std::vector<CompareRow> rows;  // finite u rows, then the defect row
  double max_abs_diff = 0;       // over finite rows
  double defect_diff = 0;

  /// "u,empirical_exceed,approx_exceed,abs_diff,delta_scale"; defect row u = inf.
  std::string to_csv() const;
};

struct CompareOptions {
  int u_lo = -2;
  int u_hi = 3;
  double c25 = 1.0;
  bool use_L_of_d = false;
};

/// Empirical exceedance P^[D > i0 + u] against exceed_prob(u) per u, plus the
/// defect row. When surv_A surv_B = 0 only the defect row is produced.
ComparisonTable compare(const DistanceLaw& empirical, const SpectralData& s, const WPools& pools,
                        const CompareOptions& options = {});

/// Defect row only; usable without spectral data (e.g. for a model that is
/// not supercritical).
ComparisonTable compare_defect_only(const DistanceLaw& empirical, double surv_A, double surv_B);

}  // namespace igdist
