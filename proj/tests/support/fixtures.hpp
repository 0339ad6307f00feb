#pragma once

// Named reference models used across the suites.

#include <cmath>
#include <cstdint>

#include "igdist/model.hpp"

namespace igdist::testing {

inline ModelParams scalar_model(std::int64_t n, std::int64_t m, double p) {
  ModelParams params;
  params.n = {n};
  params.m = {m};
  params.P = Eigen::MatrixXd::Constant(1, 1, p);
  return params;
}

inline ModelParams fix_scalar4() { return scalar_model(1000, 1000, 0.002); }
inline ModelParams fix_scalar2() { return scalar_model(10000, 10000, std::sqrt(2.0) * 1e-4); }

inline Rank1Params fix_rank1_factors() {
  Rank1Params r;
  r.alpha = Eigen::Vector2d(0.005, 0.004);
  r.beta = Eigen::VectorXd::Constant(1, 1.0);
  return r;
}

inline ModelParams fix_rank1() { return rank1_build(fix_rank1_factors(), {200, 300}, {500}).params; }

// Two vertex and two object types, everything positive.
inline ModelParams two_by_two() {
  ModelParams p;
  p.n = {300, 500};
  p.m = {400, 600};
  p.P.resize(2, 2);
  p.P << 0.004, 0.001, 0.002, 0.003;
  return p;
}

}  // namespace igdist::testing
