#include <doctest.h>

#include <cmath>
#include <functional>

#include "../support/coincidence_grid.hpp"
#include "igdist/coincidence.hpp"
#include "igdist/error.hpp"

using namespace igdist;
using namespace igdist::testing;

namespace {

SamplingScheme single(std::int64_t w, std::int64_t z, std::int64_t zp, std::int64_t wstar = 0) {
  return {{w}, {{z}}, {{zp}}, {wstar}};
}

}  // namespace

TEST_CASE("lambda values") {
  CHECK(lambda_value(single(10, 2, 3)) == doctest::Approx(0.6));
  CHECK(lambda_value(single(10, 2, 0)) == 0.0);
  const SamplingScheme two{{10, 20}, {{2}, {1, 3}}, {{3}, {5}}, {0, 0}};
  CHECK(lambda_value(two) == doctest::Approx(1.6));
}

TEST_CASE("lambda is additive over disjoint unions") {
  const SamplingScheme a{{7}, {{2, 1}}, {{3}}, {1}};
  const SamplingScheme b{{12, 5}, {{4}, {}}, {{2, 2}, {1}}, {0, 2}};
  SamplingScheme u = a;
  for (int l = 0; l < b.L(); ++l) {
    u.w.push_back(b.w[static_cast<std::size_t>(l)]);
    u.zA.push_back(b.zA[static_cast<std::size_t>(l)]);
    u.zB.push_back(b.zB[static_cast<std::size_t>(l)]);
    u.wstar.push_back(b.wstar[static_cast<std::size_t>(l)]);
  }
  CHECK(lambda_value(u) == doctest::Approx(lambda_value(a) + lambda_value(b)).epsilon(1e-15));
  CHECK(enumerate_fraction(u).value() == doctest::Approx(enumerate_fraction(a).value() * enumerate_fraction(b).value()));
}

TEST_CASE("bounds") {
  const auto b = bounds(single(10, 2, 3));
  CHECK(b.B1 == doctest::Approx(1.0));
  CHECK(b.B1_star == 0.0);
  CHECK(b.B2 == 0.0);
  CHECK(bounds(single(10, 2, 3), {1.0}, {1.0}).B2 == doctest::Approx(0.6));
  CHECK(bounds(single(10, 2, 3, 4)).B1_star == doctest::Approx(2.0 * 3 * 4 / 100));
  CHECK(bounds(single(4, 4, 4), {10.0}, {10.0}).B2 == doctest::Approx(3.0));
}

TEST_CASE("exact oracle values") {
  CHECK(closed_form_fraction(single(2, 1, 1)) == Fraction{1, 2});
  CHECK(enumerate_fraction(single(2, 1, 1)) == Fraction{1, 2});
  CHECK(closed_form_fraction(single(10, 2, 3)) == Fraction{7, 15});
  CHECK(enumerate_fraction(single(10, 2, 3)) == Fraction{7, 15});
  CHECK(p_no_collision_exact(single(10, 2, 3)) == doctest::Approx(7.0 / 15));
  CHECK(p_no_collision_exact(single(10, 4, 5, 10)) == 1.0);
  CHECK(p_no_collision_exact(single(2, 2, 1)) == 0.0);
  // Two A-draws of size 1 from a 3-set against one B-draw of size 1: the B
  // label avoids the union, whose size is 1 w.p. 1/3 and 2 w.p. 2/3.
  CHECK(enumerate_fraction({{3}, {{1, 1}}, {{1}}, {0}}) == Fraction{4, 9});
}

TEST_CASE("exact oracle guard and validation") {
  CHECK_THROWS_WITH(enumerate_fraction(single(60, 30, 30)), "instance too large for exact oracle");
  CHECK_THROWS_AS(p_no_collision_exact(single(1, 1, 1)), Error);
  CHECK_THROWS_AS(p_no_collision_exact(single(5, 6, 1)), Error);
  // Closed form still works far beyond the enumeration guard.
  CHECK(p_no_collision_exact(single(1000, 30, 40)) > 0.0);
}

TEST_CASE("Monte Carlo oracle") {
  const auto certain = p_no_collision_mc(single(2, 2, 1), 10'000, 1);
  CHECK(certain.estimate == 0.0);
  const auto mc = p_no_collision_mc(single(10, 2, 3), 100'000, 2);
  CHECK(std::abs(mc.estimate - 7.0 / 15) <= 3 * mc.std_error);
  const auto again = p_no_collision_mc(single(10, 2, 3), 100'000, 2, 3);
  CHECK(again.estimate == mc.estimate);
  const SamplingScheme multi{{6, 5}, {{2, 1}, {2}}, {{1, 2}, {1, 1}}, {1, 2}};
  const auto m2 = p_no_collision_mc(multi, 100'000, 3);
  CHECK(std::abs(m2.estimate - enumerate_fraction(multi).value()) <= 3 * m2.std_error);
}

TEST_CASE("poisson check examples") {
  const auto r = poisson_check(single(10, 2, 3));
  CHECK(r.exact);
  CHECK(r.abs_diff == doctest::Approx(std::abs(7.0 / 15 - std::exp(-0.6))));
  CHECK(r.bound == doctest::Approx(1.0));
  CHECK(r.pass);
  const auto full = poisson_check(single(10, 2, 3, 10));
  CHECK(full.p_no_collision == 1.0);
  CHECK(full.pass);
  const auto big = poisson_check(single(60, 30, 30, 1), 20'000, 5);
  CHECK_FALSE(big.exact);
  CHECK(big.pass);
  CHECK(poisson_report_csv_row(r).rfind("exact,", 0) == 0);
}

TEST_CASE("exhaustive small grid") {
  std::int64_t count = 0, failures = 0, closed_mismatch = 0, mono_z = 0, mono_w = 0;
  for_each_grid_instance([&](const SamplingScheme& s) {
    ++count;
    const auto exact = enumerate_fraction(s);
    const auto r = poisson_check(s);
    if (!r.pass) ++failures;
    if (closed_form_applies(s) && !(closed_form_fraction(s) == exact)) ++closed_mismatch;
    // Growing any A-draw by one (within the grid) cannot raise P[S = 0].
    for (int l = 0; l < s.L(); ++l) {
      const auto i = static_cast<std::size_t>(l);
      for (std::size_t d = 0; d < s.zA[i].size(); ++d) {
        if (s.zA[i][d] == s.w[i] || s.zA[i][d] == 3) continue;  // stay on the grid
        auto grown = s;
        ++grown.zA[i][d];
        if (enumerate_fraction(grown).value() > exact.value() + 1e-15) ++mono_z;
      }
      if (s.wstar[i] < s.w[i]) {
        auto wider = s;
        ++wider.wstar[i];
        if (enumerate_fraction(wider).value() < exact.value() - 1e-15) ++mono_w;
      }
    }
  });
  MESSAGE("grid instances: " << count);
  CHECK(count > 40'000);
  CHECK(failures == 0);
  CHECK(closed_mismatch == 0);
  CHECK(mono_z == 0);
  CHECK(mono_w == 0);
}

TEST_CASE("scheme JSON") {
  const auto j = nlohmann::json::parse(R"({"w":[10,4],"zA":[[2],[1,1]],"zB":[[3],[]],"wstar":[0,1]})");
  const auto s = scheme_from_json(j);
  CHECK(s.L() == 2);
  CHECK(s.zA[1] == std::vector<std::int64_t>{1, 1});
  CHECK(scheme_to_json(s) == j);
  const auto no_star = scheme_from_json(nlohmann::json::parse(R"({"w":[5],"zA":[[1]],"zB":[[1]]})"));
  CHECK(no_star.wstar == std::vector<std::int64_t>{0});
  CHECK_THROWS_AS(scheme_from_json(nlohmann::json::parse(R"({"w":[5],"zA":[[1]],"zB":[[1]],"x":1})")), Error);
  CHECK_THROWS_AS(scheme_from_json(nlohmann::json::parse(R"({"w":[5],"zA":[[9]],"zB":[[1]]})")), Error);
}
