#include "igdist/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "igdist/error.hpp"

namespace igdist {

std::int64_t ModelParams::total_n() const { return std::accumulate(n.begin(), n.end(), std::int64_t{0}); }
std::int64_t ModelParams::total_m() const { return std::accumulate(m.begin(), m.end(), std::int64_t{0}); }

std::optional<std::string> validate_params(const ModelParams& params) {
  std::ostringstream msg;
  if (params.n.empty()) return "K = 0: at least one vertex type required";
  if (params.m.empty()) return "J = 0: at least one object type required";
  if (params.P.rows() != params.K() || params.P.cols() != params.J()) {
    msg << "P is " << params.P.rows() << "x" << params.P.cols() << ", expected " << params.K() << "x"
        << params.J();
    return msg.str();
  }
  for (int k = 0; k < params.K(); ++k) {
    if (params.n[k] < 2) {
      msg << "n_" << k + 1 << " = " << params.n[k] << " < 2";
      return msg.str();
    }
  }
  for (int j = 0; j < params.J(); ++j) {
    if (params.m[j] < 2) {
      msg << "m_" << j + 1 << " = " << params.m[j] << " < 2";
      return msg.str();
    }
  }
  for (int k = 0; k < params.K(); ++k) {
    for (int j = 0; j < params.J(); ++j) {
      const double p = params.P(k, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        msg << "p_" << k + 1 << j + 1 << " = " << p << ": p out of [0,1]";
        return msg.str();
      }
    }
  }
  return std::nullopt;
}

void require_valid(const ModelParams& params) {
  if (auto err = validate_params(params)) throw invalid_input(*err);
}

namespace {

std::vector<std::int64_t> count_vector(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_array()) throw invalid_input(std::string("model: \"") + key + "\" must be an array");
  std::vector<std::int64_t> out;
  for (const auto& v : doc.at(key)) {
    if (!v.is_number_integer()) throw invalid_input(std::string("model: \"") + key + "\" entries must be integers");
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

}  // namespace

ModelParams model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw invalid_input("model: expected a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "n" && key != "m" && key != "P") throw invalid_input("model: unknown key \"" + key + "\"");
  }
  ModelParams params;
  params.n = count_vector(doc, "n");
  params.m = count_vector(doc, "m");
  if (!doc.contains("P") || !doc.at("P").is_array()) throw invalid_input("model: \"P\" must be an array of rows");
  const auto& rows = doc.at("P");
  params.P.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(params.m.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (!rows[k].is_array() || rows[k].size() != params.m.size())
      throw invalid_input("model: row " + std::to_string(k + 1) + " of P must have J entries");
    for (std::size_t j = 0; j < params.m.size(); ++j) {
      if (!rows[k][j].is_number()) throw invalid_input("model: P entries must be numbers");
      params.P(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = rows[k][j].get<double>();
    }
  }
  require_valid(params);
  return params;
}

nlohmann::json model_to_json(const ModelParams& params) {
  nlohmann::json rows = nlohmann::json::array();
  for (int k = 0; k < params.K(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < params.J(); ++j) row.push_back(params.P(k, j));
    rows.push_back(row);
  }
  return {{"n", params.n}, {"m", params.m}, {"P", rows}};
}

MeanMatrices mean_matrices(const ModelParams& params) {
  Eigen::VectorXd nx(params.K());
  Eigen::VectorXd ny(params.J());
  for (int k = 0; k < params.K(); ++k) nx(k) = static_cast<double>(params.n[k]);
  for (int j = 0; j < params.J(); ++j) ny(j) = static_cast<double>(params.m[j]);
  MeanMatrices out;
  out.MX = params.P * ny.asDiagonal() * params.P.transpose() * nx.asDiagonal();
  out.MY = params.P.transpose() * nx.asDiagonal() * params.P * ny.asDiagonal();
  return out;
}

SupportClass classify_support(const Eigen::MatrixXd& M) {
  const auto size = static_cast<int>(M.rows());
  auto reach_all = [&](bool reverse) {
    std::vector<int> level(size, -1);
    std::queue<int> frontier;
    level[0] = 0;
    frontier.push(0);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int v = 0; v < size; ++v) {
        const double w = reverse ? M(v, u) : M(u, v);
        if (w > 0 && level[v] < 0) {
          level[v] = level[u] + 1;
          frontier.push(v);
        }
      }
    }
    return level;
  };
  if (size == 0 || (M.array() > 0).count() == 0) return SupportClass::Reducible;
  const auto level = reach_all(false);
  const auto back = reach_all(true);
  for (int v = 0; v < size; ++v) {
    if (level[v] < 0 || back[v] < 0) return SupportClass::Reducible;
  }
  // Period = gcd of level[u] + 1 - level[v] over all support edges u -> v.
  int period = 0;
  for (int u = 0; u < size; ++u) {
    for (int v = 0; v < size; ++v) {
      if (M(u, v) > 0) period = std::gcd(period, std::abs(level[u] + 1 - level[v]));
    }
  }
  return period == 1 ? SupportClass::Primitive : SupportClass::Periodic;
}

namespace {

constexpr double kPowerTol = 1e-12;
constexpr int kPowerCap = 100000;

// Normalized dominant vector of M (or M^T) by power iteration.
Eigen::VectorXd dominant_vector(const Eigen::MatrixXd& M, int& iterations) {
  const auto size = M.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size));
  for (int it = 1; it <= kPowerCap; ++it) {
    Eigen::VectorXd y = M * x;
    const double norm = y.lpNorm<1>();
    if (!(norm > 0)) throw numerical_error("perron: iterate collapsed to zero");
    y /= norm;
    const double change = (y - x).lpNorm<Eigen::Infinity>();
    x = std::move(y);
    if (change <= kPowerTol * x.lpNorm<Eigen::Infinity>()) {
      iterations = std::max(iterations, it);
      return x;
    }
  }
  throw numerical_error("perron: no convergence within iteration cap");
}

}  // namespace

PerronPair perron(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw invalid_input("perron: matrix must be square");
  if ((M.array() < 0).any()) throw invalid_input("perron: matrix must be nonnegative");
  switch (classify_support(M)) {
    case SupportClass::Reducible:
      throw numerical_error("perron: reducible matrix");
    case SupportClass::Periodic:
      throw numerical_error("perron: periodic matrix (aperiodicity check failed)");
    case SupportClass::Primitive:
      break;
  }
  PerronPair out;
  Eigen::VectorXd right = dominant_vector(M, out.iterations);
  Eigen::VectorXd left = dominant_vector(M.transpose(), out.iterations);
  left /= left.sum();
  right /= left.dot(right);
  out.tau = left.dot(M * right) / left.dot(right);
  out.left = std::move(left);
  out.right = std::move(right);
  return out;
}

double deflated_spectral_radius(const Eigen::MatrixXd& M, double tau, const Eigen::VectorXd& nu,
                                const Eigen::VectorXd& mu) {
  // Power iteration on the matrix itself by repeated squaring:
  // rho(B) = lim ||B^(2^j)||^(2^-j). Tracking the log scale keeps the
  // normalized powers finite, and complex or negative dominant pairs
  // converge just like a real positive one.
  Eigen::MatrixXd power = M - tau * nu * mu.transpose();
  double norm = power.lpNorm<Eigen::Infinity>();
  if (!(norm > 0)) return 0.0;
  power /= norm;
  double log_norm = std::log(norm);  // log ||B^(2^j)||
  double exponent = 1.0;              // 2^j
  double estimate = norm;
  for (int j = 0; j < 60; ++j) {
    power = (power * power).eval();
    const double step = power.lpNorm<Eigen::Infinity>();
    if (!(step > 0)) return 0.0;
    power /= step;
    log_norm = 2.0 * log_norm + std::log(step);
    exponent *= 2.0;
    const double next = std::exp(log_norm / exponent);
    if (std::abs(next - estimate) <= 1e-15 * std::max(next, 1e-300) && j > 8) return next;
    estimate = next;
  }
  return estimate;
}

double theta_value(double gamma, double tau) {
  const double ratio = std::sqrt(gamma) / tau;
  if (!(ratio < 1.0)) throw numerical_error("theta: requires gamma < tau^2");
  double best = 1.0;  // s = 0
  double term = 1.0;
  int since_best = 0;
  for (int s = 1; since_best < 10; ++s) {
    term *= ratio;
    const double value = (s + 1) * term;
    if (value > best) {
      best = value;
      since_best = 0;
    } else {
      ++since_best;
    }
  }
  return best;
}

SecondModulus second_modulus(const Eigen::MatrixXd& MX, double tau, const Eigen::VectorXd& nu,
                             const Eigen::VectorXd& mu) {
  SecondModulus out;
  out.lambda2_mod = deflated_spectral_radius(MX, tau, nu, mu);
  out.gamma = std::max(tau, out.lambda2_mod * out.lambda2_mod);
  if (tau > 1.0) out.theta = theta_value(out.gamma, tau);
  return out;
}

SpectralData derived_scalars(const ModelParams& params) {
  require_valid(params);
  SpectralData s;
  s.K = params.K();
  s.J = params.J();
  s.n = params.total_n();
  s.m = params.total_m();
  auto means = mean_matrices(params);
  s.MX = std::move(means.MX);
  s.MY = std::move(means.MY);

  const PerronPair pf = perron(s.MX);
  s.tau = pf.tau;
  if (!(s.tau > 1.0)) {
    std::ostringstream msg;
    msg << "tau = " << s.tau << " <= 1: supercritical regime required";
    throw numerical_error(msg.str());
  }
  s.mu = pf.left;
  s.nu = pf.right;
  const auto sm = second_modulus(s.MX, s.tau, s.nu, s.mu);
  s.lambda2_mod = sm.lambda2_mod;
  s.gamma = sm.gamma;
  s.theta = *sm.theta;

  const double n = static_cast<double>(s.n);
  const double m = static_cast<double>(s.m);
  Eigen::VectorXd nx(s.K);
  Eigen::VectorXd ny(s.J);
  for (int k = 0; k < s.K; ++k) nx(k) = static_cast<double>(params.n[k]);
  for (int j = 0; j < s.J; ++j) ny(j) = static_cast<double>(params.m[j]);
  s.qX = nx / n;
  s.qY = ny / m;

  const Eigen::VectorXd PtMu = params.P.transpose() * s.mu;  // J
  s.zeta = PtMu.dot(ny);
  s.mu_tilde = ny.cwiseProduct(PtMu) / s.zeta;

  // zeta_* = J max_j ||P N_Y e_j||_inf
  double col_max = 0;
  for (int j = 0; j < s.J; ++j) col_max = std::max(col_max, params.P.col(j).maxCoeff() * ny(j));
  s.zeta_star = s.J * col_max;
  s.Z_star = s.zeta_star * std::sqrt(n / m);

  const double sum_x = s.mu.cwiseAbs2().cwiseQuotient(s.qX).sum();
  const double sum_y = s.mu_tilde.cwiseAbs2().cwiseQuotient(s.qY).sum();
  s.frakZ = std::sqrt(s.tau * sum_x / sum_y);
  s.kappa = s.tau / (s.tau - 1.0) * sum_x;
  s.kappa_printed = s.tau / (s.tau - 1.0) * s.mu.cwiseAbs2().cwiseQuotient(nx).sum();

  s.rhoX = s.mu.cwiseQuotient(s.qX).maxCoeff();
  s.rhoY = s.mu_tilde.cwiseQuotient(s.qY).maxCoeff();

  // Largest i0 with tau^i0 <= n, corrected against rounding in the log ratio.
  int i0 = static_cast<int>(std::floor(std::log(n) / std::log(s.tau)));
  while (i0 > 0 && std::pow(s.tau, i0) > n) --i0;
  while (std::pow(s.tau, i0 + 1) <= n) ++i0;
  s.i0 = i0;
  s.phi_n = std::pow(s.tau, i0) / n;
  s.e_mn = std::pow(n, -0.25) + std::pow(m, -0.25);
  const double r4 = std::pow(m / n, 0.25);
  s.u_mn = r4 * (1.0 + r4);
  return s;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json mat_json(const Eigen::MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

nlohmann::json spectral_to_json(const SpectralData& s) {
  return {{"K", s.K},
          {"J", s.J},
          {"n", s.n},
          {"m", s.m},
          {"M_X", mat_json(s.MX)},
          {"M_Y", mat_json(s.MY)},
          {"tau", s.tau},
          {"lambda2_mod", s.lambda2_mod},
          {"gamma", s.gamma},
          {"theta", s.theta},
          {"mu", vec_json(s.mu)},
          {"nu", vec_json(s.nu)},
          {"mu_tilde", vec_json(s.mu_tilde)},
          {"zeta", s.zeta},
          {"zeta_star", s.zeta_star},
          {"Z_star", s.Z_star},
          {"frakZ", s.frakZ},
          {"kappa", s.kappa},
          {"kappa_printed", s.kappa_printed},
          {"qX", vec_json(s.qX)},
          {"qY", vec_json(s.qY)},
          {"rhoX", s.rhoX},
          {"rhoY", s.rhoY},
          {"i0", s.i0},
          {"phi", s.phi_n},
          {"e_mn", s.e_mn},
          {"u_mn", s.u_mn}};
}

bool IdentityReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck& c) { return c.pass; });
}

double IdentityReport::max_residual() const {
  double worst = 0;
  for (const auto& c : checks) worst = std::max(worst, c.residual);
  return worst;
}

IdentityReport identity_report(const SpectralData& s) {
  IdentityReport report;
  auto add = [&](std::string name, double residual, double tol) {
    report.checks.push_back({std::move(name), residual, tol, residual <= tol});
  };
  constexpr double tol = 1e-10;
  const double tau = s.tau;
  add("left_eigen_MX", (s.mu.transpose() * s.MX - tau * s.mu.transpose()).lpNorm<Eigen::Infinity>() / tau, tol);
  add("right_eigen_MX", (s.MX * s.nu - tau * s.nu).lpNorm<Eigen::Infinity>() / tau, tol);
  add("left_eigen_MY",
      (s.mu_tilde.transpose() * s.MY - tau * s.mu_tilde.transpose()).lpNorm<Eigen::Infinity>() / tau, tol);
  add("mu_l1_norm", std::abs(s.mu.sum() - 1.0), tol);
  add("mu_tilde_l1_norm", std::abs(s.mu_tilde.sum() - 1.0), tol);
  add("mu_nu_normalization", std::abs(s.mu.dot(s.nu) - 1.0), tol);
  const double zeta_lhs = s.zeta * s.zeta * static_cast<double>(s.n) / static_cast<double>(s.m);
  const double z2 = s.frakZ * s.frakZ;
  add("zeta_identity", std::abs(zeta_lhs - z2) / z2, tol);

  const bool bracket = std::pow(tau, s.i0) <= static_cast<double>(s.n) &&
                       static_cast<double>(s.n) < std::pow(tau, s.i0 + 1);
  add("i0_bracket", bracket ? 0.0 : 1.0, 0.0);
  const bool phi_ok = s.phi_n > 1.0 / tau && s.phi_n <= 1.0;
  add("phi_range", phi_ok ? 0.0 : 1.0, 0.0);

  const double lower = s.mu.minCoeff() * s.zeta_star / s.J;
  const double sandwich_violation =
      std::max({0.0, lower - s.zeta, s.zeta - s.zeta_star}) / std::max(s.zeta, 1e-300);
  add("zeta_star_sandwich", sandwich_violation, tol);
  return report;
}

C0C1Estimate c0_c1_estimate(const SpectralData& s, int horizon) {
  if (!(s.tau > 1.0)) throw numerical_error("c0_c1_estimate: tau <= 1");
  horizon = std::max(horizon, 0);
  C0C1Estimate out;

  auto scan_c0 = [&](const Eigen::MatrixXd& M, const Eigen::VectorXd& weights) {
    const auto size = M.rows();
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(size, size);
    double best = 0;
    double scale = 1.0;  // tau^-i
    for (int i = 0; i <= horizon; ++i) {
      for (Eigen::Index a = 0; a < size; ++a)
        for (Eigen::Index k = 0; k < size; ++k) best = std::max(best, scale * power(a, k) / weights(k));
      power = (power * M).eval();
      scale /= s.tau;
    }
    return best;
  };
  out.c0_hat = std::max(scan_c0(s.MX, s.mu), scan_c0(s.MY, s.mu_tilde));

  const auto K = s.MX.rows();
  const Eigen::MatrixXd projector = s.nu * s.mu.transpose();
  const Eigen::MatrixXd deflated = s.MX - s.tau * projector;
  auto row_sum_norm = [](const Eigen::MatrixXd& A) { return A.cwiseAbs().rowwise().sum().maxCoeff(); };
  out.c1_hat = row_sum_norm(Eigen::MatrixXd::Identity(K, K) - projector);
  if (s.lambda2_mod > 1e-10 * s.tau) {
    Eigen::MatrixXd power = deflated;
    double scale = 1.0 / s.lambda2_mod;
    for (int i = 1; i <= horizon; ++i) {
      out.c1_hat = std::max(out.c1_hat, scale * row_sum_norm(power));
      power = (power * deflated).eval();
      scale /= s.lambda2_mod;
    }
  }
  return out;
}

Rank1Model rank1_build(const Rank1Params& r, const std::vector<std::int64_t>& n,
                       const std::vector<std::int64_t>& m) {
  if (r.alpha.size() != static_cast<Eigen::Index>(n.size()) || r.beta.size() != static_cast<Eigen::Index>(m.size()))
    throw invalid_input("rank1: alpha must have K entries and beta J entries");
  if ((r.alpha.array() <= 0).any() || (r.beta.array() <= 0).any())
    throw invalid_input("rank1: alpha and beta must be positive");
  Rank1Model out;
  out.params.n = n;
  out.params.m = m;
  out.params.P = r.alpha * r.beta.transpose();
  for (Eigen::Index k = 0; k < out.params.P.rows(); ++k) {
    for (Eigen::Index j = 0; j < out.params.P.cols(); ++j) {
      if (out.params.P(k, j) > 1.0) {
        std::ostringstream msg;
        msg << "invalid probability alpha_" << k + 1 << " beta_" << j + 1 << " = " << out.params.P(k, j) << " > 1";
        throw invalid_input(msg.str());
      }
    }
  }
  require_valid(out.params);

  Eigen::VectorXd nx(r.alpha.size());
  Eigen::VectorXd ny(r.beta.size());
  for (std::size_t k = 0; k < n.size(); ++k) nx(static_cast<Eigen::Index>(k)) = static_cast<double>(n[k]);
  for (std::size_t j = 0; j < m.size(); ++j) ny(static_cast<Eigen::Index>(j)) = static_cast<double>(m[j]);
  const double C = ny.dot(r.beta.cwiseAbs2());
  const Eigen::VectorXd nx_alpha = nx.cwiseProduct(r.alpha);
  const double total = nx_alpha.sum();
  out.tau = C * r.alpha.dot(nx_alpha);
  out.mu = nx_alpha / total;
  out.nu = C * (total / out.tau) * r.alpha;
  return out;
}

DegreeBound degree_bound(const ModelParams& params) {
  require_valid(params);
  DegreeBound out;
  double s_b2 = 0;
  for (int k = 0; k < params.K(); ++k) {
    double degree = 0;
    for (int j = 0; j < params.J(); ++j) degree += params.P(k, j) * static_cast<double>(params.m[j]);
    s_b2 += static_cast<double>(params.n[k]) * degree * degree;
  }
  out.bound = s_b2 / static_cast<double>(params.total_m());
  out.tau = perron(mean_matrices(params).MX).tau;
  out.slack = out.tau - out.bound;
  return out;
}

}  // namespace igdist
