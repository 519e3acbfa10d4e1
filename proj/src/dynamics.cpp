#include "nlstab/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <fftw3.h>

#include "nlstab/linalg.hpp"

namespace nlstab {

namespace {

CVec sigma3(const CVec& x) {
  CVec y = x;
  y.tail(x.size() / 2) *= -1.0;
  return y;
}

// Dormand-Prince 5(4) tableau
constexpr double kA[7][6] = {
    {0, 0, 0, 0, 0, 0},
    {1.0 / 5, 0, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
    {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384,      0, 500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84, 0};
constexpr double kB4[7] = {5179.0 / 57600,    0,       7571.0 / 16695, 393.0 / 640,
                           -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

CVec reduced_rhs(const ReducedModel& m, const CVec& z) {
  const int k = m.size();
  Vec mod2(k);
  for (int j = 0; j < k; ++j) mod2[j] = std::norm(z[j]);
  CVec dz(k);
  for (int j = 0; j < k; ++j) {
    double phase = m.lambda[j];
    if (m.nf.size() > 0)
      for (int l = 0; l < k; ++l) phase += m.nf(j, l) * mod2[l];
    dz[j] = cplx(0.0, -1.0) * phase * z[j];
  }
  for (const auto& e : m.fgr.entries) {
    double amp = e.gamma;
    for (int i = 0; i < k; ++i) {
      const int mi = e.m[i] - (i == e.j ? 1 : 0);
      for (int q = 0; q < mi; ++q) amp *= mod2[i];
    }
    dz[e.j] -= static_cast<double>(m.signatures[e.j]) * amp * z[e.j];
  }
  return dz;
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
  double acc = 0.0;
  for (size_t i = 1; i < t.size(); ++i) acc += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return acc;
}

// DST-I working buffers; the unnormalized FFTW transform is its own inverse
// up to the factor 2(n+1)
struct DstPlan {
  Eigen::Index n;
  std::vector<double> buf;
  fftw_plan plan;

  explicit DstPlan(Eigen::Index n_) : n(n_), buf(static_cast<size_t>(n_)) {
    plan = fftw_plan_r2r_1d(static_cast<int>(n), buf.data(), buf.data(), FFTW_RODFT00,
                            FFTW_ESTIMATE);
  }
  ~DstPlan() { fftw_destroy_plan(plan); }
  DstPlan(const DstPlan&) = delete;
  DstPlan& operator=(const DstPlan&) = delete;

  void run(Vec& x) {
    std::copy(x.data(), x.data() + n, buf.begin());
    fftw_execute(plan);
    std::copy(buf.begin(), buf.end(), x.data());
  }
};

}  // namespace

void ReducedModel::validate() const {
  const int k = size();
  if (static_cast<int>(signatures.size()) != k)
    throw ConfigError("reduced model: signature count mismatch");
  for (const int s : signatures)
    if (s != 1 && s != -1) throw ConfigError("reduced model: signatures must be +-1");
  if (nf.size() > 0 && (nf.rows() != k || nf.cols() != k))
    throw ConfigError("reduced model: near-field coefficient shape mismatch");
  for (const auto& e : fgr.entries) {
    if (e.gamma < 0.0) throw ConfigError("reduced model: negative damping coefficient");
    if (e.j < 0 || e.j >= k || static_cast<int>(e.m.size()) != k)
      throw ConfigError("reduced model: damping entry shape mismatch");
  }
}

ReducedModel make_reduced_model(const std::vector<double>& lambda,
                                const std::vector<int>& signatures, const FgrMatrix& fgr,
                                const Mat& nf) {
  ReducedModel m;
  m.lambda = lambda;
  m.signatures = signatures;
  m.fgr = fgr;
  m.nf = nf;
  m.res = fgr.res;
  m.validate();
  return m;
}

ReducedTrajectory integrate_reduced(const ReducedModel& model, const CVec& zeta0,
                                    double t_final, const ReducedOptions& opts) {
  model.validate();
  if (zeta0.size() != model.size()) throw ConfigError("reduced model: seed size mismatch");
  ReducedTrajectory traj;
  double t = 0.0;
  CVec y = zeta0;
  traj.times.push_back(t);
  traj.zeta.push_back(y);

  double lam_max = 0.0;
  for (const double l : model.lambda) lam_max = std::max(lam_max, std::abs(l));
  double dt = opts.dt_init > 0.0 ? opts.dt_init
                                 : std::min(t_final / 10.0, 0.1 / (lam_max + 1.0));
  double last_stored = 0.0;

  std::array<CVec, 7> k;
  for (std::size_t step = 0; step < opts.max_steps && t < t_final; ++step) {
    dt = std::min(dt, t_final - t);
    k[0] = reduced_rhs(model, y);
    for (int s = 1; s < 7; ++s) {
      CVec arg = y;
      for (int q = 0; q < s; ++q)
        if (kA[s][q] != 0.0) arg += dt * kA[s][q] * k[q];
      k[s] = reduced_rhs(model, arg);
    }
    CVec y5 = y, y4 = y;
    for (int s = 0; s < 7; ++s) {
      if (kB5[s] != 0.0) y5 += dt * kB5[s] * k[s];
      if (kB4[s] != 0.0) y4 += dt * kB4[s] * k[s];
    }
    double err = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale =
          opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(y5[i] - y4[i]) / scale);
    }
    if (err <= 1.0) {
      t += dt;
      y = y5;
      if (opts.sample_dt <= 0.0 || t - last_stored >= opts.sample_dt || t >= t_final) {
        traj.times.push_back(t);
        traj.zeta.push_back(y);
        last_stored = t;
      }
      if (y.norm() > opts.ceiling) {
        traj.blowup = true;
        traj.blowup_time = t;
        break;
      }
    }
    dt *= std::clamp(0.9 * std::pow(std::max(err, 1e-12), -0.2), 0.2, 5.0);
    if (dt < 1e-14 * std::max(t, 1.0)) {
      // the only finite-time singularity of this system is amplitude blow-up
      traj.blowup = true;
      traj.blowup_time = t;
      break;
    }
  }
  return traj;
}

ReducedMetrics reduced_instability_metrics(const ReducedModel& model,
                                           const ReducedTrajectory& traj) {
  ReducedMetrics out;
  const int k = model.size();
  const size_t nt = traj.times.size();
  out.quartic.assign(k, 0.0);
  out.ledger_gap = Vec::Zero(k);
  if (nt == 0) return out;

  std::vector<std::vector<double>> mod2(k, std::vector<double>(nt));
  for (int j = 0; j < k; ++j)
    for (size_t i = 0; i < nt; ++i) mod2[j][i] = traj.mod2(i, j);

  for (int j = 0; j < k; ++j) {
    std::vector<double> quart(nt);
    for (size_t i = 0; i < nt; ++i) quart[i] = mod2[j][i] * mod2[j][i];
    out.quartic[j] = trapezoid(traj.times, quart);
  }
  for (const auto& member : model.res.members) {
    std::vector<double> f(nt, 1.0);
    for (size_t i = 0; i < nt; ++i)
      for (int j = 0; j < k; ++j)
        for (int q = 0; q < member[j]; ++q) f[i] *= mod2[j][i];
    out.member_integrals.push_back(trapezoid(traj.times, f));
  }

  // balance identity per mode: |z_j|^2(t) - |z_j|^2(0)
  //   = -2 s_j sum_M Gamma_{M,j} int |z^{M-delta_j}|^2 |z_j|^2
  for (int j = 0; j < k; ++j) {
    double scale = 0.0;
    for (size_t i = 0; i < nt; ++i) scale = std::max(scale, mod2[j][i]);
    if (scale == 0.0) continue;
    std::vector<double> rate(nt, 0.0);
    for (const auto& e : model.fgr.entries) {
      if (e.j != j) continue;
      for (size_t i = 0; i < nt; ++i) {
        double amp = e.gamma;
        for (int l = 0; l < k; ++l) {
          const int ml = e.m[l] - (l == j ? 1 : 0);
          for (int q = 0; q < ml; ++q) amp *= mod2[l][i];
        }
        rate[i] += amp * mod2[j][i];
      }
    }
    double acc = 0.0, worst = 0.0;
    for (size_t i = 1; i < nt; ++i) {
      acc += 0.5 * (traj.times[i] - traj.times[i - 1]) * (rate[i] + rate[i - 1]);
      const double lhs = mod2[j][i] - mod2[j][0];
      worst = std::max(worst, std::abs(lhs + 2.0 * model.signatures[j] * acc));
    }
    out.ledger_gap[j] = worst / scale;
  }

  bool monotone = true;
  const double slack = 1e-8;
  for (int j = 0; j < k; ++j) {
    double scale = 1e-300;
    for (size_t i = 0; i < nt; ++i) scale = std::max(scale, mod2[j][i]);
    for (size_t i = 1; i < nt; ++i)
      if (model.signatures[j] * (mod2[j][i] - mod2[j][i - 1]) > slack * scale) monotone = false;
  }
  out.seed_nondecreasing = monotone;

  if (nt >= 3) {
    const double t_mid = 0.5 * traj.times.back();
    double first = 0.0, second = 0.0;
    for (size_t i = 1; i < nt; ++i) {
      const double q = 0.5 * (traj.times[i] - traj.times[i - 1]) *
                       (mod2[0][i] * mod2[0][i] + mod2[0][i - 1] * mod2[0][i - 1]);
      (0.5 * (traj.times[i] + traj.times[i - 1]) < t_mid ? first : second) += q;
    }
    out.quartic_unbounded = second > 1.5 * first && second > 0.0;
  }
  out.contradiction = out.seed_nondecreasing && out.quartic_unbounded;
  return out;
}

double field_mass(const RadialGrid& grid, const CVec& u) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < grid.n; ++i) acc += grid.w[i] * std::norm(u[i]);
  return acc;
}

double field_energy(const RadialGrid& grid, const CVec& u, const Nonlinearity& nl) {
  double acc = 0.0;
  const Eigen::Index n = grid.n;
  for (Eigen::Index i = 0; i < n; ++i) {
    cplx du;
    if (i == 0)
      du = (u[1] - u[0]) / grid.h;
    else if (i == n - 1)
      du = (u[n - 1] - u[n - 2]) / grid.h;
    else
      du = (u[i + 1] - u[i - 1]) / (2.0 * grid.h);
    acc += grid.w[i] * (std::norm(du) - nl.antiderivative(std::norm(u[i])));
  }
  return acc;
}

FieldState make_state(const RadialGrid& grid, const CVec& u, double time,
                      const Nonlinearity& nl) {
  if (u.size() != grid.n) throw ConfigError("field size does not match grid");
  FieldState st;
  st.grid = grid;
  st.u = u;
  st.time = time;
  st.mass = field_mass(grid, u);
  st.energy = field_energy(grid, u, nl);
  return st;
}

FieldTrajectory nls_evolve(const FieldState& u0, const Nonlinearity& nl, double t_final,
                           const EvolveOptions& opts) {
  const RadialGrid& grid = u0.grid;
  const Eigen::Index n = grid.n;
  if (opts.dt <= 0.0) throw ConfigError("evolution step must be positive");
  if (opts.backend != "cn" && opts.backend != "dst")
    throw ConfigError("unknown evolution backend: " + opts.backend);

  // accuracy ceiling: the nonlinear kick must stay a small rotation per step
  double beta_max = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    beta_max = std::max(beta_max, std::abs(nl.beta(std::norm(u0.u[i]))));
  if (opts.dt * beta_max > 0.5)
    throw CFLViolation("step too large for the nonlinear rotation rate");

  const long nsteps = std::max<long>(1, std::lround(t_final / opts.dt));
  const double dt = t_final / static_cast<double>(nsteps);
  const long per_sample =
      std::max<long>(1, std::lround(opts.sample_dt / dt));

  CVec v = grid.to_v(u0.u);
  Vec r2(n);
  for (Eigen::Index i = 0; i < n; ++i) r2[i] = grid.r[i] * grid.r[i];

  // Crank-Nicolson half-step data: (1 - i tau/2 D) v+ = (1 + i tau/2 D) v,
  // D the Dirichlet second difference; unitary, FD-consistent with the
  // profile equation so discrete standing waves stay stationary up to
  // splitting error
  const double tau = 0.5 * dt;
  const double hh = grid.h * grid.h;
  const cplx off_lhs(0.0, -tau / (2.0 * hh));
  const cplx off_rhs(0.0, tau / (2.0 * hh));
  const CVec diag_lhs = CVec::Constant(n, cplx(1.0, tau / hh));
  const cplx diag_rhs(1.0, -tau / hh);

  // DST half-step data: exact dispersion of the continuum Laplacian on the
  // sine basis; preferred for free-field accuracy checks
  DstPlan dst(n);
  CVec dst_phase(n);
  {
    const double l_tot = (static_cast<double>(n) + 1.0) * grid.h;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double kk = (static_cast<double>(k) + 1.0) * M_PI / l_tot;
      dst_phase[k] = std::exp(cplx(0.0, -kk * kk * tau));
    }
  }
  const double dst_norm = 1.0 / (2.0 * (static_cast<double>(n) + 1.0));

  auto linear_half = [&](CVec& w) {
    if (opts.backend == "cn") {
      CVec rhs(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        cplx acc = diag_rhs * w[i];
        if (i > 0) acc += off_rhs * w[i - 1];
        if (i + 1 < n) acc += off_rhs * w[i + 1];
        rhs[i] = acc;
      }
      w = linalg::tridiag_solve(diag_lhs, off_lhs, rhs);
    } else {
      Vec re = w.real(), im = w.imag();
      dst.run(re);
      dst.run(im);
      for (Eigen::Index k = 0; k < n; ++k) {
        const cplx c = cplx(re[k], im[k]) * dst_phase[k];
        re[k] = c.real();
        im[k] = c.imag();
      }
      dst.run(re);
      dst.run(im);
      for (Eigen::Index k = 0; k < n; ++k) w[k] = dst_norm * cplx(re[k], im[k]);
    }
  };
  auto kick = [&](CVec& w) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = std::norm(w[i]) / r2[i];
      w[i] *= std::exp(cplx(0.0, dt * nl.beta(s)));
    }
  };

  FieldTrajectory traj;
  auto record = [&](double t) {
    FieldState st = make_state(grid, grid.to_u(v), t, nl);
    traj.times.push_back(t);
    traj.mass.push_back(st.mass);
    traj.energy.push_back(st.energy);
    if (opts.keep_fields) traj.states.push_back(std::move(st));
  };
  record(0.0);

  for (long step = 0; step < nsteps; ++step) {
    linear_half(v);
    kick(v);
    linear_half(v);
    const double t = static_cast<double>(step + 1) * dt;
    if ((step + 1) % per_sample == 0 || step + 1 == nsteps) {
      if (!v.allFinite())
        throw NaNDetected("field lost finiteness at t = " + std::to_string(t));
      record(t);
    }
  }
  return traj;
}

Modulation modulation_decompose(const FieldState& st, const Nonlinearity& nl,
                                double omega_guess, const ModulationOptions& opts) {
  const RadialGrid& grid = st.grid;
  double om = omega_guess;
  ProfileOptions popt;
  popt.with_derivative = true;

  auto solve_at = [&](double w) {
    if (!(w > 0.0)) throw DecompositionFailed("frequency iterate left the family");
    try {
      return solve_profile(nl, w, opts.node_count, grid, popt);
    } catch (const NoSolution&) {
      throw DecompositionFailed("no profile at the frequency iterate");
    } catch (const NoConvergence&) {
      throw DecompositionFailed("profile solve stalled during decomposition");
    }
  };
  Profile p = solve_at(om);
  // narrow the shooting bracket around the running profile for the re-solves
  auto renarrow = [&] {
    popt.shoot_lo = 0.5 * p.phi0;
    popt.shoot_hi = 2.0 * p.phi0;
  };
  renarrow();

  auto wdot = [&](const CVec& a, const Vec& b) {
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < grid.n; ++i) acc += grid.w[i] * a[i] * b[i];
    return acc;
  };

  double ga = std::arg(wdot(st.u, p.phi));
  bool converged = false;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const double qp = p.mass_slope;
    if (std::abs(qp) < opts.pairing_floor * std::max(1.0, p.mass))
      throw DegenerateJacobian("mass slope vanishes; modulation system singular");
    const cplx e = std::exp(cplx(0.0, -ga));
    const cplx i_phi = e * wdot(st.u, p.phi);
    const cplx i_psi = e * wdot(st.u, p.dphi_domega);
    const double f1 = i_phi.real() - p.mass;
    const double f2 = i_psi.imag();
    const double scale = std::max(p.mass, std::abs(i_phi));
    if (std::abs(f1) + std::abs(f2) <= opts.tol * scale) {
      converged = true;
      break;
    }
    // quasi-Newton: the (omega, gamma) Jacobian with the O(R) corner dropped
    const double j11 = i_psi.real() - qp;
    const double j12 = i_phi.imag();
    const double j21 = 0.0;
    const double j22 = -i_psi.real();
    const double det = j11 * j22 - j12 * j21;
    if (std::abs(det) < 1e-14 * std::max(1.0, qp * qp))
      throw DegenerateJacobian("modulation Jacobian is singular");
    const double dom = -(j22 * f1 - j12 * f2) / det;
    const double dga = -(-j21 * f1 + j11 * f2) / det;
    om += dom;
    ga += dga;
    p = solve_at(om);
    renarrow();
  }
  if (!converged) throw DecompositionFailed("orthogonality conditions did not converge");

  Modulation out;
  out.omega = om;
  out.gamma = std::remainder(ga, 2.0 * M_PI);
  out.profile = p;
  out.iterations = it;
  const cplx e = std::exp(cplx(0.0, -ga));
  CVec r_u = e * st.u - p.phi.cast<cplx>();
  CVec r_v = grid.to_v(r_u);
  out.R.resize(2 * grid.n);
  out.R.head(grid.n) = r_v;
  out.R.tail(grid.n) = r_v.conjugate();
  return out;
}

ModeProjection mode_project(const RadialGrid& grid, const CVec& R,
                            const std::vector<EigMode>& modes) {
  const int k = static_cast<int>(modes.size());
  ModeProjection out;
  out.z.resize(k);
  out.zbar.resize(k);
  out.f = R;
  for (int j = 0; j < k; ++j) {
    const EigMode& m = modes[j];
    const int s = m.sig();
    if (s == 0) throw EigensolverFailure("projection mode lacks a definite signature");
    const CVec& xi = m.xi;
    CVec eta(xi.size());
    eta.head(xi.size() / 2) = xi.tail(xi.size() / 2).conjugate();
    eta.tail(xi.size() / 2) = xi.head(xi.size() / 2).conjugate();
    out.z[j] = static_cast<double>(s) * grid.dot_v(R, sigma3(xi));
    out.zbar[j] = -static_cast<double>(s) * grid.dot_v(R, sigma3(eta));
    out.f -= out.z[j] * xi + out.zbar[j] * eta;
  }
  const double scale = std::max(std::sqrt(std::abs(grid.dot_v(R, R))), 1e-300);
  for (int j = 0; j < k; ++j) {
    const CVec& xi = modes[j].xi;
    CVec eta(xi.size());
    eta.head(xi.size() / 2) = xi.tail(xi.size() / 2).conjugate();
    eta.tail(xi.size() / 2) = xi.head(xi.size() / 2).conjugate();
    out.ortho_defect = std::max(out.ortho_defect,
                                std::abs(grid.dot_v(out.f, sigma3(xi))) / scale);
    out.ortho_defect = std::max(out.ortho_defect,
                                std::abs(grid.dot_v(out.f, sigma3(eta))) / scale);
  }
  return out;
}

cplx h1_dot(const RadialGrid& grid, const CVec& a, const CVec& b) {
  const Eigen::Index n = grid.n;
  auto deriv = [&](const CVec& u, Eigen::Index i) -> cplx {
    if (i == 0) return (u[1] - u[0]) / grid.h;
    if (i == n - 1) return (u[n - 1] - u[n - 2]) / grid.h;
    return (u[i + 1] - u[i - 1]) / (2.0 * grid.h);
  };
  cplx acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    acc += grid.w[i] * (a[i] * std::conj(b[i]) + deriv(a, i) * std::conj(deriv(b, i)));
  return acc;
}

double h1_norm(const RadialGrid& grid, const CVec& u) {
  return std::sqrt(std::abs(h1_dot(grid, u, u)));
}

double orbital_distance(const FieldState& u, const Profile& p) {
  if (u.grid.n != p.grid.n) throw ConfigError("state and profile grids differ");
  const CVec phi = p.phi.cast<cplx>();
  const cplx ip = h1_dot(u.grid, u.u, phi);
  const double ga = std::abs(ip) > 0.0 ? std::arg(ip) : 0.0;
  const CVec diff = u.u - std::exp(cplx(0.0, ga)) * phi;
  return h1_norm(u.grid, diff);
}

InstabilityReport instability_experiment(const Profile& p, const Linearization& lin,
                                         const std::vector<EigMode>& modes,
                                         const KernelReport& kernel, const FgrMatrix& fgr,
                                         const ExperimentOptions& opts) {
  (void)kernel;
  if (modes.empty()) throw ConfigError("experiment needs at least one discrete mode");
  const int k = static_cast<int>(modes.size());
  int j0 = opts.mode_index;
  if (j0 < 0) {
    j0 = 0;
    for (int j = 0; j < k; ++j)
      if (modes[j].sig() == -1) {
        j0 = j;
        break;
      }
  }
  if (j0 >= k) throw ConfigError("experiment mode index out of range");

  std::vector<double> lambda(k);
  std::vector<int> sigs(k);
  for (int j = 0; j < k; ++j) {
    lambda[j] = modes[j].lambda.real();
    sigs[j] = modes[j].sig();
    if (sigs[j] == 0) throw ConfigError("experiment modes need definite signatures");
  }
  const ReducedModel model = make_reduced_model(lambda, sigs, fgr);

  InstabilityReport rep;
  rep.seeded_mode = j0;
  rep.delta = opts.delta;
  rep.tube_radius = opts.tube_factor * opts.delta;

  // self-damping coefficient of the seeded mode fixes the reduced time scale
  double gamma_self = 0.0;
  {
    MultiIndex full(k, 0);
    full[j0] = 2;
    for (const auto& e : fgr.entries)
      if (e.j == j0 && e.m == full) gamma_self = e.gamma;
  }
  if (gamma_self > 0.0 && opts.delta > 0.0)
    rep.t_star = 1.0 / (2.0 * gamma_self * opts.delta * opts.delta);
  rep.horizon = opts.horizon_override > 0.0
                    ? opts.horizon_override
                    : (std::isfinite(rep.t_star) ? opts.horizon_factor * rep.t_star
                                                 : 50.0 / p.omega);

  // seed: r = z xi^(1) + conj(z) conj(xi^(2)) with z = delta
  const Eigen::Index n = p.grid.n;
  const CVec& xi = modes[j0].xi;
  const CVec r_v = opts.delta * (xi.head(n) + xi.tail(n).conjugate());
  const CVec u_seed = p.phi.cast<cplx>() + p.grid.to_u(r_v);
  FieldState state = make_state(p.grid, u_seed, 0.0, p.nl);
  const double mass0 = state.mass;

  CVec zeta0 = CVec::Zero(k);
  zeta0[j0] = opts.delta;
  ReducedOptions ropts = opts.reduced;
  if (ropts.sample_dt <= 0.0) ropts.sample_dt = rep.horizon / (4.0 * opts.samples);
  rep.reduced = integrate_reduced(model, zeta0, rep.horizon, ropts);

  const double sample_dt = rep.horizon / std::max(1, opts.samples);
  EvolveOptions eopts = opts.evolve;
  eopts.sample_dt = sample_dt;

  double omega_guess = p.omega;
  auto probe = [&](const FieldState& s) {
    rep.times.push_back(s.time);
    rep.distance.push_back(orbital_distance(s, p));
    if (!rep.decomposition_lost) {
      try {
        ModulationOptions mo;
        mo.node_count = p.node_count;
        const Modulation dec = modulation_decompose(s, p.nl, omega_guess, mo);
        omega_guess = dec.omega;
        const ModeProjection proj = mode_project(p.grid, dec.R, modes);
        rep.z_abs.push_back(std::abs(proj.z[j0]));
      } catch (const Error&) {
        rep.decomposition_lost = true;
        rep.z_abs.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    } else {
      rep.z_abs.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    if (!rep.tube_exit && rep.distance.back() > rep.tube_radius) {
      rep.tube_exit = true;
      rep.tube_exit_time = s.time;
    }
  };
  probe(state);

  eopts.keep_fields = true;
  for (int s = 0; s < opts.samples; ++s) {
    try {
      const FieldTrajectory chunk = nls_evolve(state, p.nl, sample_dt, eopts);
      state = chunk.states.back();
      state.time = static_cast<double>(s + 1) * sample_dt;
    } catch (const NaNDetected&) {
      rep.pde_blowup = true;
      rep.pde_blowup_time = static_cast<double>(s + 1) * sample_dt;
      break;
    }
    probe(state);
    rep.mass_drift = std::abs(state.mass - mass0) / std::max(mass0, 1e-300);
  }

  double base = 0.0, peak = 0.0;
  for (const double z : rep.z_abs)
    if (std::isfinite(z)) {
      if (base == 0.0) base = z;
      peak = std::max(peak, z);
    }
  rep.growth_factor = base > 0.0 ? peak / base : 0.0;
  rep.grew = rep.growth_factor >= 2.0;
  (void)lin;
  return rep;
}

}  // namespace nlstab
