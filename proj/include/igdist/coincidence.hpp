#pragma once

// Coincidences between two independent families of uniform random subsets,
// and their Poisson approximation.
//
// Class l has a universe of w_l labels. Side A draws subsets of sizes
// zA[l][r], side B subsets of sizes zB[l][r'], all independent and uniform.
// S counts pairs (one element from each side) that carry the same label,
// ignoring labels in the excluded set W*_l = {0, ..., wstar_l - 1}.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace igdist {

struct SamplingScheme {
  std::vector<std::int64_t> w;
  std::vector<std::vector<std::int64_t>> zA;
  std::vector<std::vector<std::int64_t>> zB;
  std::vector<std::int64_t> wstar;

  int L() const { return static_cast<int>(w.size()); }
  std::int64_t z_total(int l) const;        // z_l
  std::int64_t z_prime_total(int l) const;  // z'_l
};

std::optional<std::string> validate_scheme(const SamplingScheme& s);
void require_valid(const SamplingScheme& s);

/// {"w": [...], "zA": [[...], ...], "zB": [[...], ...], "wstar": [...]};
/// wstar defaults to zeros.
SamplingScheme scheme_from_json(const nlohmann::json& j);
nlohmann::json scheme_to_json(const SamplingScheme& s);

double lambda_value(const SamplingScheme& s);

struct PoissonBounds {
  double B1 = 0;
  double B1_star = 0;
  double B2 = 0;
};

/// eps_A, eps_B are per-class errors in z_l and z'_l; empty means zero.
PoissonBounds bounds(const SamplingScheme& s, const std::vector<double>& eps_A = {},
                     const std::vector<double>& eps_B = {});

/// Exact probability as a reduced fraction of unsigned 64-bit integers.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Fraction&) const = default;
};

/// True when every class has exactly one draw on each side (or none on one
/// side) and nothing is excluded, so the product formula applies.
bool closed_form_applies(const SamplingScheme& s);

/// Product formula prod_l C(w_l - z_l, z'_l) / C(w_l, z'_l) as a fraction.
/// Requires closed_form_applies and a result that fits in 64 bits.
Fraction closed_form_fraction(const SamplingScheme& s);

/// Exhaustive count over all subset choices, class by class over union
/// bitmasks. Guarded per class: the product of C(w_l, z) over that class's
/// draws must not exceed 10^7, and w_l must be at most 62.
Fraction enumerate_fraction(const SamplingScheme& s);

/// Exact P[S = 0]: closed form when it applies, enumeration otherwise.
/// Throws "instance too large for exact oracle" past the guard.
double p_no_collision_exact(const SamplingScheme& s);

struct MonteCarloEstimate {
  double estimate = 0;
  double std_error = 0;
  std::int64_t reps = 0;
};

MonteCarloEstimate p_no_collision_mc(const SamplingScheme& s, std::int64_t reps, std::uint64_t seed,
                                     int workers = 1);

struct PoissonReport {
  bool exact = true;
  double p_no_collision = 0;
  double std_error = 0;  // 0 when exact
  double exp_minus_lambda = 0;
  double abs_diff = 0;
  double bound = 0;  // B1 + B1*
  bool pass = false;
};

/// Uses the exact oracle when it is within its guard, otherwise Monte Carlo
/// with `mc_reps` replicates, in which case 3 standard errors are added to
/// the allowed difference.
PoissonReport poisson_check(const SamplingScheme& s, std::int64_t mc_reps = 100'000, std::uint64_t seed = 0,
                            int workers = 1);

/// "source,p_no_collision,std_error,exp_minus_lambda,abs_diff,bound,pass".
std::string poisson_report_csv_header();
std::string poisson_report_csv_row(const PoissonReport& r);

}  // namespace igdist
