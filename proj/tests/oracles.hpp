#pragma once

// Independent reference implementations used to pin expected values.  These
// deliberately avoid the library's discretization: the profile oracle
// integrates the radial ODE with an adaptive embedded pair and bisection
// shooting, and the transforms and reduced solutions are closed forms.

#include <functional>
#include <vector>

#include "nlstab/nonlinearity.hpp"
#include "nlstab/types.hpp"

namespace oracle {

using nlstab::cplx;

struct ShootResult {
  double phi0 = 0.0;      // shooting amplitude phi(0)
  double mass = 0.0;      // int 4 pi r^2 phi^2 over [0, infinity)
  std::vector<double> r;  // sample nodes, echoed from the request
  std::vector<double> phi;
};

// Adaptive RK integration of phi'' + (2/r) phi' - omega phi + beta(phi^2) phi = 0
// with bisection on phi(0) for the requested node count.  Throws
// std::runtime_error when the bracket does not contain a solution.
ShootResult shoot_profile(const nlstab::Nonlinearity& nl, double omega, int node_count,
                          const std::vector<double>& sample_r, double a_lo = 1e-3,
                          double a_hi = 60.0);

// Five-point fourth-order first derivative of f at x.
double derivative(const std::function<double(double)>& f, double x, double h);

// Radial Fourier transform of the unit Gaussian exp(-r^2/2) at radius rho:
// (2 pi)^(3/2) exp(-rho^2/2).
double gaussian_transform(double rho);

// Free radial Schrodinger evolution of the unit Gaussian at time t.
cplx free_gaussian(double r, double t);

// Brute-force minimal resonance enumeration by direct predicate check over
// all multi-indices with |m| <= cap.
std::vector<std::vector<int>> resonance_brute(const std::vector<double>& lambda, double omega,
                                              int cap);

// Closed-form single-mode reduced solution with damping sign s and rate gamma:
// |zeta(t)|^2 and, for zeta(0) = sqrt(y0) real, the phase of zeta(t).
double reduced_mod2(double y0, double gamma, int s, double t);
double reduced_phase(double y0, double gamma, int s, double lambda, double a_self, double t);

}  // namespace oracle
