#pragma once

// Model parameters of the multitype random intersection graph and the
// spectral quantities derived from them.
//
// Vertex types are indexed k = 0..K-1 with n_k vertices each, object types
// j = 0..J-1 with m_j objects each. A type-k vertex links to each type-j
// object independently with probability P(k, j).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace igdist {

struct ModelParams {
  std::vector<std::int64_t> n;  // vertex counts per type
  std::vector<std::int64_t> m;  // object counts per type
  Eigen::MatrixXd P;            // K x J edge probabilities

  int K() const { return static_cast<int>(n.size()); }
  int J() const { return static_cast<int>(m.size()); }
  std::int64_t total_n() const;
  std::int64_t total_m() const;
};

struct Rank1Params {
  Eigen::VectorXd alpha;  // length K
  Eigen::VectorXd beta;   // length J
};

/// Empty on success, otherwise a description of the first violated constraint.
std::optional<std::string> validate_params(const ModelParams& params);

/// Throws Error(InvalidInput) carrying the validate_params message.
void require_valid(const ModelParams& params);

ModelParams model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const ModelParams& params);

struct MeanMatrices {
  Eigen::MatrixXd MX;  // P N_Y P^T N_X, K x K
  Eigen::MatrixXd MY;  // P^T N_X P N_Y, J x J
};

MeanMatrices mean_matrices(const ModelParams& params);

enum class SupportClass { Primitive, Reducible, Periodic };

/// Classifies the support digraph of a nonnegative square matrix.
SupportClass classify_support(const Eigen::MatrixXd& M);

struct PerronPair {
  double tau = 0;
  Eigen::VectorXd left;   // ||left||_1 = 1
  Eigen::VectorXd right;  // left^T right = 1
  int iterations = 0;
};

/// Perron root and eigenvectors of a primitive nonnegative matrix by power
/// iteration (relative tolerance 1e-12, at most 1e5 sweeps).
PerronPair perron(const Eigen::MatrixXd& M);

struct SecondModulus {
  double lambda2_mod = 0;
  double gamma = 0;
  std::optional<double> theta;  // only when tau > 1
};

/// Spectral radius of the deflated matrix M - tau nu mu^T.
double deflated_spectral_radius(const Eigen::MatrixXd& M, double tau, const Eigen::VectorXd& nu,
                                const Eigen::VectorXd& mu);

/// max over integer s >= 0 of (s + 1) (sqrt(gamma) / tau)^s.
double theta_value(double gamma, double tau);

SecondModulus second_modulus(const Eigen::MatrixXd& MX, double tau, const Eigen::VectorXd& nu,
                             const Eigen::VectorXd& mu);

struct SpectralData {
  int K = 0;
  int J = 0;
  std::int64_t n = 0;
  std::int64_t m = 0;
  Eigen::MatrixXd MX;
  Eigen::MatrixXd MY;
  double tau = 0;
  double lambda2_mod = 0;
  double gamma = 0;
  double theta = 0;
  Eigen::VectorXd mu;
  Eigen::VectorXd nu;
  Eigen::VectorXd mu_tilde;
  double zeta = 0;
  double zeta_star = 0;
  double Z_star = 0;
  double frakZ = 0;
  double kappa = 0;          // (tau / (tau - 1)) sum_k mu_k^2 / qX_k
  double kappa_printed = 0;  // same with n_k in place of qX_k
  Eigen::VectorXd qX;
  Eigen::VectorXd qY;
  double rhoX = 0;
  double rhoY = 0;
  int i0 = 0;
  double phi_n = 0;
  double e_mn = 0;
  double u_mn = 0;
};

/// Every derived spectral quantity. Requires a valid model with primitive
/// M_X and tau > 1.
SpectralData derived_scalars(const ModelParams& params);

nlohmann::json spectral_to_json(const SpectralData& s);

struct IdentityCheck {
  std::string name;
  double residual = 0;   // relative residual
  double tolerance = 0;
  bool pass = false;
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;
  bool all_pass() const;
  double max_residual() const;
};

IdentityReport identity_report(const SpectralData& s);

struct C0C1Estimate {
  double c0_hat = 0;
  double c1_hat = 0;
};

/// Finite-horizon lower estimates of the constants bounding normalized powers
/// of the mean matrices (c0) and of the deflated matrix (c1).
C0C1Estimate c0_c1_estimate(const SpectralData& s, int horizon);

struct Rank1Model {
  ModelParams params;
  double tau = 0;
  Eigen::VectorXd mu;
  Eigen::VectorXd nu;
};

/// P = alpha beta^T with tau, mu, nu in closed form.
Rank1Model rank1_build(const Rank1Params& r, const std::vector<std::int64_t>& n,
                       const std::vector<std::int64_t>& m);

struct DegreeBound {
  double bound = 0;  // s_B^2 / m
  double tau = 0;
  double slack = 0;  // tau - bound
};

/// Rayleigh lower bound tau >= s_B^2 / m from the mean vertex degrees.
DegreeBound degree_bound(const ModelParams& params);

}  // namespace igdist
