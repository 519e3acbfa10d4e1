#include "nlstab/profile.hpp"

#include <algorithm>
#include <cmath>

#include "nlstab/linalg.hpp"

namespace nlstab {

namespace {

// One RK4 step of the shooting system v'' = (omega - beta((v/r)^2)) v.
struct ShootState {
  double v;
  double dv;
};

inline ShootState rhs(const Nonlinearity& nl, double omega, double r, const ShootState& s) {
  const double phi = s.v / r;
  return {s.dv, (omega - nl.beta(phi * phi)) * s.v};
}

inline ShootState rk4_step(const Nonlinearity& nl, double omega, double r, const ShootState& s,
                           double dt) {
  const ShootState k1 = rhs(nl, omega, r, s);
  const ShootState s2{s.v + 0.5 * dt * k1.v, s.dv + 0.5 * dt * k1.dv};
  const ShootState k2 = rhs(nl, omega, r + 0.5 * dt, s2);
  const ShootState s3{s.v + 0.5 * dt * k2.v, s.dv + 0.5 * dt * k2.dv};
  const ShootState k3 = rhs(nl, omega, r + 0.5 * dt, s3);
  const ShootState s4{s.v + dt * k3.v, s.dv + dt * k3.dv};
  const ShootState k4 = rhs(nl, omega, r + dt, s4);
  return {s.v + dt / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v),
          s.dv + dt / 6.0 * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv)};
}

struct ShootResult {
  int crossings = 0;
  bool blew_up = false;
  double r_stop = 0.0;
  int filled = 0;   // grid nodes reached before any blow-up exit
  Vec v_nodes;      // filled only when sampling is requested
};

ShootResult shoot(const Nonlinearity& nl, double omega, double a, const RadialGrid& grid,
                  bool sample) {
  const int substeps = std::max(2, static_cast<int>(std::ceil(grid.h / (0.02 / std::sqrt(std::max(1.0, omega))))));
  const double dt = grid.h / substeps;
  const double blow = 4.0 * std::abs(a);

  ShootResult out;
  if (sample) out.v_nodes = Vec::Zero(grid.n);

  // series start: phi = a + c2 r^2, v = a r + c2 r^3
  const double c2 = a * (omega - nl.beta(a * a)) / 6.0;
  double r = dt;
  ShootState s{a * r + c2 * r * r * r, a + 3.0 * c2 * r * r};

  double prev_sign = (a > 0) ? 1.0 : -1.0;
  int step = 1;
  const int total = grid.n * substeps;
  while (step <= total) {
    if (step > 1) {
      s = rk4_step(nl, omega, r, s, dt);
      r += dt;
    }
    const double phi = s.v / r;
    if (std::abs(phi) > blow) {
      out.blew_up = true;
      out.r_stop = r;
      return out;
    }
    if (phi != 0.0 && std::abs(phi) > 1e-12 * std::abs(a)) {
      const double sign = phi > 0 ? 1.0 : -1.0;
      if (sign != prev_sign) {
        ++out.crossings;
        prev_sign = sign;
      }
    }
    if (sample && step % substeps == 0) {
      out.v_nodes[step / substeps - 1] = s.v;
      out.filled = step / substeps;
    }
    ++step;
  }
  out.r_stop = r;
  return out;
}

// Discrete residual in v form; ghosts v_0 = v_{n+1} = 0.
Vec collocation_residual(const RadialGrid& g, const Nonlinearity& nl, double omega,
                         const Vec& v) {
  const double ih2 = 1.0 / (g.h * g.h);
  const int n = g.n;
  Vec f(n);
  for (int i = 0; i < n; ++i) {
    const double vm = i > 0 ? v[i - 1] : 0.0;
    const double vp = i + 1 < n ? v[i + 1] : 0.0;
    const double phi = v[i] / g.r[i];
    f[i] = (vp - 2.0 * v[i] + vm) * ih2 - omega * v[i] + nl.beta(phi * phi) * v[i];
  }
  return f;
}

}  // namespace

int count_sign_changes(const Vec& phi, double floor_frac) {
  const double floor = floor_frac * phi.cwiseAbs().maxCoeff();
  int count = 0;
  double prev = 0.0;
  for (int i = 0; i < phi.size(); ++i) {
    if (std::abs(phi[i]) <= floor) continue;
    const double sign = phi[i] > 0 ? 1.0 : -1.0;
    if (prev != 0.0 && sign != prev) ++count;
    prev = sign;
  }
  return count;
}

double profile_residual(const RadialGrid& grid, const Nonlinearity& nl, double omega,
                        const Vec& phi) {
  const Vec f = collocation_residual(grid, nl, omega, grid.to_v(phi));
  return std::sqrt(4.0 * M_PI * grid.h) * f.norm();
}

Profile solve_profile(const Nonlinearity& nl, double omega, int node_count,
                      const RadialGrid& grid, const ProfileOptions& opts) {
  if (omega <= 0.0) throw NoSolution("frequency must be positive");
  if (node_count < 0) throw NoSolution("node count must be nonnegative");
  if (nl.beta(1.0) == 0.0 && nl.beta(4.0) == 0.0)
    throw NoSolution("nonlinearity vanishes; no localized profile exists");

  // ---- bracket the separatrix amplitude by crossing count ----
  double lo = 0.0, hi = 0.0;
  {
    double a = opts.shoot_lo;
    int prev_crossings = -1;
    double prev_a = 0.0;
    while (a <= opts.shoot_hi * (1.0 + 1e-12)) {
      const ShootResult sr = shoot(nl, omega, a, grid, false);
      if (sr.crossings <= node_count) {
        prev_crossings = sr.crossings;
        prev_a = a;
      } else if (prev_crossings >= 0) {
        lo = prev_a;
        hi = a;
        break;
      }
      a *= 1.15;
    }
    if (hi == 0.0)
      throw NoSolution("no shooting bracket with the requested node count in the scan range");
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const ShootResult sr = shoot(nl, omega, mid, grid, false);
    (sr.crossings <= node_count ? lo : hi) = mid;
  }
  const double a_star = 0.5 * (lo + hi);

  // ---- sampled trajectory, cut at the tail trough, exponential tail ----
  ShootResult traj = shoot(nl, omega, a_star, grid, true);
  Vec v = traj.v_nodes;
  const int valid = traj.filled;
  if (v.size() == 0 || valid < grid.n / 4)
    throw NoConvergence("separatrix trajectory unusable; widen the scan range");
  {
    // cut where |v| is small and locally flat; a sign crossing also makes
    // |v| small, but there the slope sits on the lobe scale, far above the
    // sqrt(omega)*|v| of a decaying tail, so it never matches
    const double vmax = v.head(valid).cwiseAbs().maxCoeff();
    const double rate = std::sqrt(omega);
    int i_cut = -1;
    for (int i = 1; i + 1 < valid; ++i) {
      const double m = std::abs(v[i]);
      if (m > 1e-3 * vmax) continue;
      if (std::abs(v[i + 1] - v[i - 1]) > 4.0 * grid.h * rate * m) continue;
      i_cut = i;
      break;
    }
    if (i_cut < 0 && traj.blew_up)
      throw NoConvergence("separatrix trajectory unusable; widen the scan range");
    if (i_cut >= 0) {
      for (int i = i_cut + 1; i < grid.n; ++i)
        v[i] = v[i_cut] * std::exp(-rate * (grid.r[i] - grid.r[i_cut]));
    }
  }

  // ---- damped collocation Newton ----
  const double ih2 = 1.0 / (grid.h * grid.h);
  Vec f = collocation_residual(grid, nl, omega, v);
  double fnorm = f.norm();
  bool converged = false;
  for (int it = 0; it < opts.newton_max_iter; ++it) {
    if (fnorm <= opts.newton_tol * std::max(1.0, v.norm())) {
      converged = true;
      break;
    }
    Vec jdiag(grid.n);
    for (int i = 0; i < grid.n; ++i) {
      const double phi = v[i] / grid.r[i];
      const double s = phi * phi;
      jdiag[i] = -2.0 * ih2 - omega + nl.beta(s) + 2.0 * s * nl.beta1(s);
    }
    const Vec dv = linalg::tridiag_solve(jdiag, ih2, Vec(-f));
    double step = 1.0;
    Vec v_next;
    double fnorm_next = 0.0;
    for (; step >= 1.0 / 64.0; step *= 0.5) {
      v_next = v + step * dv;
      fnorm_next = collocation_residual(grid, nl, omega, v_next).norm();
      if (fnorm_next < fnorm) break;
    }
    if (fnorm_next >= fnorm) throw NoConvergence("profile Newton stalled");
    v = v_next;
    f = collocation_residual(grid, nl, omega, v);
    fnorm = f.norm();
  }
  if (!converged && fnorm > opts.newton_tol * std::max(1.0, v.norm()))
    throw NoConvergence("profile Newton did not reach tolerance");

  Profile p;
  p.grid = grid;
  p.nl = nl;
  p.omega = omega;
  p.phi = grid.to_u(v);
  p.node_count = count_sign_changes(p.phi);
  if (p.node_count != node_count)
    throw NoConvergence("polished profile has wrong node count");
  const double max_phi = p.phi.cwiseAbs().maxCoeff();
  if (std::abs(p.phi[grid.n - 1]) > 1e-8 * max_phi)
    throw GridTooCoarse("profile has not decayed at r_max");
  p.phi0 = (4.0 * p.phi[0] - p.phi[1]) / 3.0;
  p.mass = grid.integrate(p.phi.cwiseProduct(p.phi));
  p.residual_norm =
      profile_residual(grid, nl, omega, p.phi) / std::sqrt(grid.integrate(p.phi.cwiseProduct(p.phi)));
  if (opts.with_derivative) {
    p.dphi_domega = omega_derivative(p);
    p.mass_slope = mass_slope_of(p);
  }
  return p;
}

Vec omega_derivative(const Profile& p) {
  const RadialGrid& g = p.grid;
  const double ih2 = 1.0 / (g.h * g.h);
  Vec diag(g.n);
  for (int i = 0; i < g.n; ++i) {
    const double s = p.phi[i] * p.phi[i];
    diag[i] = 2.0 * ih2 + p.omega - p.nl.beta(s) - 2.0 * s * p.nl.beta1(s);
  }
  const auto eigs = linalg::eig_sym_tridiag(diag, -ih2, false);
  double min_abs = std::abs(eigs.values[0]);
  for (int i = 0; i < eigs.values.size(); ++i)
    min_abs = std::min(min_abs, std::abs(eigs.values[i]));
  if (min_abs <= 1e-8 * p.omega)
    throw SingularLinearization("linearized profile operator is near singular");
  const Vec rhs = -g.to_v(p.phi);
  const Vec psi_v = linalg::tridiag_solve(diag, -ih2, rhs);
  return g.to_u(psi_v);
}

double mass_slope_of(const Profile& p) {
  if (p.dphi_domega.size() != p.grid.n)
    throw IllConditioned("profile lacks the frequency derivative");
  return 2.0 * p.grid.integrate(p.phi.cwiseProduct(p.dphi_domega));
}

}  // namespace nlstab
