#pragma once

#include "nlstab/types.hpp"

namespace nlstab {

// Uniform radial grid on (0, r_max].  Nodes sit at r_i = i*h, i = 1..n, with
// h = r_max/n.  Radial fields u(r) are stored either as node values ("u
// form") or premultiplied by r ("v form", v = r*u), in which the discrete
// Laplacian of the 3d radial problem is the plain second difference with
// homogeneous Dirichlet ghosts at r = 0 and r = r_max + h.
//
// Quadrature over (0, r_max] uses the weight w_i = 4*pi*r_i^2*h, which makes
// the weighted inner product of u-fields exactly proportional to the
// Euclidean inner product of their v forms; every symmetric matrix acting on
// v vectors is then symmetric in the physical inner product with no
// boundary-row exception.
struct RadialGrid {
  double r_max = 0.0;
  int n = 0;
  double h = 0.0;
  Vec r;  // nodes, size n
  Vec w;  // quadrature weights 4*pi*r_i^2*h, size n

  static RadialGrid uniform(double r_max, int n);

  // Default resolution for a profile at frequency omega: r_max = 30/sqrt(omega)
  // scaled by `scale` in point count.
  static RadialGrid standard(double omega, double scale = 1.0, int base_points = 2000,
                             double r_max_factor = 30.0);

  // integral of a u-form field over R^3 (radial measure)
  double integrate(const Vec& u) const;

  // L2 inner products of radial fields given in v form; the complex pairing
  // conjugates the second slot.
  double dot_v(const Vec& a, const Vec& b) const { return 4.0 * M_PI * h * a.dot(b); }
  cplx dot_v(const CVec& a, const CVec& b) const { return 4.0 * M_PI * h * b.dot(a); }

  Vec to_v(const Vec& u) const { return u.cwiseProduct(r); }
  CVec to_v(const CVec& u) const { return u.cwiseProduct(r.cast<cplx>()); }
  Vec to_u(const Vec& v) const { return v.cwiseQuotient(r); }
  CVec to_u(const CVec& v) const { return v.cwiseQuotient(r.cast<cplx>()); }

  bool compatible(const RadialGrid& o) const {
    return n == o.n && std::abs(r_max - o.r_max) < 1e-12 * r_max;
  }
};

}  // namespace nlstab
