#include <doctest.h>

#include <cmath>

#include "nlstab/grid.hpp"
#include "nlstab/nonlinearity.hpp"
#include "nlstab/profile.hpp"
#include "oracles.hpp"

using namespace nlstab;

namespace {

Profile cubic_ground(double r_max = 40.0, int n = 800) {
  return solve_profile(Nonlinearity::cubic(), 1.0, 0, RadialGrid::uniform(r_max, n));
}

constexpr double kCubicOraclePhi0 = 4.337387679975;
constexpr double kCubicOracleMass = 18.897251302549;

}  // namespace

TEST_CASE("cubic ground state matches the shooting oracle") {
  const Profile p = cubic_ground();
  // independent adaptive-RK shooting; grid values carry the h^2 stencil bias
  const auto ref = oracle::shoot_profile(Nonlinearity::cubic(), 1.0, 0, {0.5, 1.0, 12.0});
  CHECK(ref.phi0 == doctest::Approx(kCubicOraclePhi0).epsilon(1e-10));
  CHECK(ref.mass == doctest::Approx(kCubicOracleMass).epsilon(1e-10));
  CHECK(p.phi0 == doctest::Approx(ref.phi0).epsilon(1e-2));
  CHECK(p.mass == doctest::Approx(ref.mass).epsilon(1.5e-2));
  // frozen finite-difference values at r_max = 40, n = 800
  CHECK(p.phi0 == doctest::Approx(4.364851612291).epsilon(1e-9));
  CHECK(p.mass == doctest::Approx(18.730313569679).epsilon(1e-9));
  CHECK(p.mass_slope == doctest::Approx(-9.534223636).epsilon(1e-6));
  CHECK(p.residual_norm < 1e-10);
  CHECK(p.node_count == 0);
  for (int i = 0; i < p.grid.n; ++i) CHECK(p.phi[i] > -1e-12);
}

TEST_CASE("amplitude converges to the oracle at second order") {
  const double e1 = std::abs(cubic_ground(40.0, 400).phi0 - kCubicOraclePhi0);
  const double e2 = std::abs(cubic_ground(40.0, 800).phi0 - kCubicOraclePhi0);
  const double e4 = std::abs(cubic_ground(40.0, 1600).phi0 - kCubicOraclePhi0);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 5.0);
  CHECK(e2 / e4 > 3.0);
  CHECK(e2 / e4 < 5.0);
}

TEST_CASE("excited states carry the requested node count") {
  const Profile p1 =
      solve_profile(Nonlinearity::saturable(), 0.3, 1, RadialGrid::uniform(120.0, 1100));
  CHECK(p1.node_count == 1);
  CHECK(count_sign_changes(p1.phi) == 1);
  // frozen at r_max = 120, n = 1100; oracle shooting gives 5.0752249
  CHECK(p1.phi0 == doctest::Approx(5.077761).epsilon(1e-5));
  const auto ref = oracle::shoot_profile(Nonlinearity::saturable(), 0.3, 1, {1.0, 40.0});
  CHECK(p1.phi0 == doctest::Approx(ref.phi0).epsilon(1e-3));
  CHECK(p1.mass == doctest::Approx(ref.mass).epsilon(1e-3));

  const Profile p2 = solve_profile(Nonlinearity::cubic(), 1.0, 2, RadialGrid::uniform(60.0, 900));
  CHECK(p2.node_count == 2);
  CHECK(count_sign_changes(p2.phi) == 2);
  CHECK(p2.phi0 > p2.phi.cwiseAbs().maxCoeff() - 1e-9);
}

TEST_CASE("fractional-power tail is handled by the slope cut") {
  // beta = s^(1/4) decays too slowly for any amplitude threshold on beta
  // itself; the separatrix trim works on the local slope instead
  const auto nl = Nonlinearity::pure_power(1.5);
  const Profile a = solve_profile(nl, 1.0, 1, RadialGrid::uniform(40.0, 700));
  const Profile b = solve_profile(nl, 1.0, 1, RadialGrid::uniform(100.0, 1750));
  CHECK(a.phi0 == doctest::Approx(9.8258373).epsilon(1e-6));
  CHECK(b.phi0 == doctest::Approx(a.phi0).epsilon(1e-5));
  CHECK(a.node_count == 1);
  // the adaptive-RK oracle agrees; its endpoint stays at 18 because the
  // separatrix for this slow tail outruns double precision beyond that
  const auto ref = oracle::shoot_profile(nl, 1.0, 1, {1.0, 18.0});
  CHECK(a.phi0 == doctest::Approx(ref.phi0).epsilon(2e-3));
}

TEST_CASE("mass slope matches a finite difference across the family") {
  const auto nl = Nonlinearity::saturable();
  const auto grid = RadialGrid::uniform(80.0, 1200);
  const double om = 0.5, dom = 1e-4;
  const Profile mid = solve_profile(nl, om, 0, grid);
  const Profile lo = solve_profile(nl, om - dom, 0, grid);
  const Profile hi = solve_profile(nl, om + dom, 0, grid);
  const double fd = (hi.mass - lo.mass) / (2.0 * dom);
  CHECK(mid.mass_slope == doctest::Approx(fd).epsilon(1e-4));
  // the frequency-derivative field carries the same information
  CHECK(mid.mass_slope ==
        doctest::Approx(2.0 * grid.dot_v(grid.to_v(mid.phi), grid.to_v(mid.dphi_domega)))
            .epsilon(1e-10));
}

TEST_CASE("profile residual is the discrete equation defect") {
  const Profile p = cubic_ground();
  CHECK(profile_residual(p.grid, p.nl, p.omega, p.phi) == doctest::Approx(p.residual_norm));
  Vec off = p.phi;
  off[10] += 1e-3;
  CHECK(profile_residual(p.grid, p.nl, p.omega, off) > 100.0 * p.residual_norm);
}

TEST_CASE("domain truncation does not move the solution") {
  const Profile a = cubic_ground(40.0, 800);
  const Profile b = cubic_ground(60.0, 1200);
  CHECK(a.phi0 == doctest::Approx(b.phi0).epsilon(1e-8));
  CHECK(a.mass == doctest::Approx(b.mass).epsilon(1e-8));
}

TEST_CASE("unreachable requests throw") {
  ProfileOptions opts;
  opts.shoot_lo = 1e-3;
  opts.shoot_hi = 2e-3;  // bracket cannot contain the one-node separatrix
  CHECK_THROWS_AS(
      solve_profile(Nonlinearity::cubic(), 1.0, 1, RadialGrid::uniform(30.0, 400), opts), Error);
}
