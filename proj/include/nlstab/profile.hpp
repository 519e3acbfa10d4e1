#pragma once

#include "nlstab/grid.hpp"
#include "nlstab/nonlinearity.hpp"

namespace nlstab {

// Real standing-wave profile phi(r) solving
//   phi'' + (2/r) phi' - omega phi + beta(phi^2) phi = 0,  phi'(0) = 0, phi -> 0,
// discretized in v = r*phi on the grid.  node_count counts interior sign
// changes; the ground state has none.
struct Profile {
  RadialGrid grid;
  Nonlinearity nl;
  double omega = 0.0;
  int node_count = 0;
  Vec phi;          // node values, u form
  Vec dphi_domega;  // frequency derivative of the profile family
  double phi0 = 0.0;
  double mass = 0.0;        // ||phi||_L2^2
  double mass_slope = 0.0;  // d/domega of the mass along the family
  double residual_norm = 0.0;

  Vec v() const { return grid.to_v(phi); }
};

struct ProfileOptions {
  double shoot_lo = 1e-3;   // bracket scan range for phi(0)
  double shoot_hi = 50.0;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  bool with_derivative = true;  // also solve for dphi/domega
};

// Shooting plus collocation-Newton solve of the profile with the requested
// number of nodes.  Throws NoSolution when no sign-change bracket exists in
// the scan range and NoConvergence when polishing fails.
Profile solve_profile(const Nonlinearity& nl, double omega, int node_count,
                      const RadialGrid& grid, const ProfileOptions& opts = {});

// Frequency derivative: solves the linearized-at-phi equation
// (-Lap + omega - beta - 2 phi^2 beta') psi = -phi.  Throws
// SingularLinearization when the operator has a near-zero eigenvalue.
Vec omega_derivative(const Profile& p);

// d/domega ||phi_omega||_2^2 = 2 <phi, dphi/domega>.
double mass_slope_of(const Profile& p);

// Discrete residual of the profile equation in the weighted grid norm.
double profile_residual(const RadialGrid& grid, const Nonlinearity& nl, double omega,
                        const Vec& phi);

int count_sign_changes(const Vec& phi, double floor_frac = 1e-7);

}  // namespace nlstab
