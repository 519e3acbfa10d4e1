#include "nlstab/fgr.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <Eigen/SparseLU>

namespace nlstab {

namespace {

// Truncated polynomial in the mode amplitudes (z_1..z_k, zbar_1..zbar_k) and
// one probe slot of degree <= 1, with grid-vector coefficients.  Exponent key
// layout: [z..., zbar..., probe].
struct Jet {
  int n_amp = 0;   // 2k amplitude slots
  int cap = 3;     // total amplitude degree cap
  std::map<std::vector<int>, Vec> terms;

  static int amp_degree(const std::vector<int>& e) {
    return std::accumulate(e.begin(), e.end() - 1, 0);
  }

  void add_term(const std::vector<int>& e, const Vec& v) {
    auto it = terms.find(e);
    if (it == terms.end())
      terms.emplace(e, v);
    else
      it->second += v;
  }
};

Jet jet_zero(int n_amp, int cap) {
  Jet j;
  j.n_amp = n_amp;
  j.cap = cap;
  return j;
}

Jet jet_const(int n_amp, int cap, const Vec& v) {
  Jet j = jet_zero(n_amp, cap);
  j.add_term(std::vector<int>(n_amp + 1, 0), v);
  return j;
}

Jet operator+(const Jet& a, const Jet& b) {
  Jet out = a;
  for (const auto& [e, v] : b.terms) out.add_term(e, v);
  return out;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet out = a;
  for (const auto& [e, v] : b.terms) out.add_term(e, Vec(-v));
  return out;
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet out = jet_zero(a.n_amp, a.cap);
  std::vector<int> e(a.n_amp + 1);
  for (const auto& [ea, va] : a.terms) {
    for (const auto& [eb, vb] : b.terms) {
      int deg = 0;
      for (size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      deg = Jet::amp_degree(e);
      if (deg > a.cap || e.back() > 1) continue;
      out.add_term(e, va.cwiseProduct(vb));
    }
  }
  return out;
}

Jet scale(const Jet& a, const Vec& field) {
  Jet out = jet_zero(a.n_amp, a.cap);
  for (const auto& [e, v] : a.terms) out.add_term(e, v.cwiseProduct(field));
  return out;
}

Jet scale(const Jet& a, double c) {
  Jet out = jet_zero(a.n_amp, a.cap);
  for (const auto& [e, v] : a.terms) out.add_term(e, Vec(c * v));
  return out;
}

Vec coeff_of(const Jet& j, const MultiIndex& m, const MultiIndex& n, int probe, Eigen::Index len) {
  std::vector<int> e;
  e.reserve(m.size() + n.size() + 1);
  e.insert(e.end(), m.begin(), m.end());
  e.insert(e.end(), n.begin(), n.end());
  e.push_back(probe);
  auto it = j.terms.find(e);
  if (it == j.terms.end()) return Vec::Zero(len);
  return it->second;
}

// remainder of beta(|phi + .|^2)(phi + .) past its linearization, evaluated on
// jet arguments (a, b) standing for the two components of the doubled field
Jet nonlinear_remainder(const Profile& p, const Jet& a, const Jet& b, int order) {
  const Eigen::Index n = p.grid.n;
  Vec beta0(n), beta1(n), beta2(n), beta3(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = p.phi[i] * p.phi[i];
    beta0[i] = p.nl.beta(s);
    beta1[i] = p.nl.beta1(s);
    beta2[i] = order >= 3 ? p.nl.beta2(s) : 0.0;
    beta3[i] = order >= 3 ? p.nl.beta3(s) : 0.0;
  }
  if (order >= 2) {
    // order-2 coefficients already need beta''
    for (Eigen::Index i = 0; i < n; ++i) beta2[i] = p.nl.beta2(p.phi[i] * p.phi[i]);
  }
  const Vec& phi = p.phi;

  // s - phi^2 = phi(a+b) + ab
  const Jet ds = scale(a + b, phi) + a * b;
  const Jet ds2 = ds * ds;
  const Jet ds3 = ds2 * ds;
  Jet beta_jet = jet_const(a.n_amp, a.cap, beta0) + scale(ds, beta1) +
                 scale(ds2, Vec(0.5 * beta2)) + scale(ds3, Vec(beta3 / 6.0));

  const Jet phi_plus_a = jet_const(a.n_amp, a.cap, phi) + a;
  const Jet full = beta_jet * phi_plus_a;

  Vec b1phi2(n);
  for (Eigen::Index i = 0; i < n; ++i) b1phi2[i] = beta1[i] * phi[i] * phi[i];
  const Jet linear =
      jet_const(a.n_amp, a.cap, Vec(beta0.cwiseProduct(phi))) + scale(a, Vec(beta0 + b1phi2)) +
      scale(b, b1phi2);
  return full - linear;
}

void enumerate_indices(int k, int total_cap, std::vector<MultiIndex>& out) {
  MultiIndex cur(k, 0);
  // all multi-indices with |m| <= total_cap, graded lexicographic
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == k) {
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[pos] = v;
      rec(pos + 1, left - v);
    }
    cur[pos] = 0;
  };
  rec(0, total_cap);
}

int index_sum(const MultiIndex& m) { return std::accumulate(m.begin(), m.end(), 0); }

double index_dot(const MultiIndex& m, const std::vector<double>& lambda) {
  double s = 0.0;
  for (size_t i = 0; i < m.size(); ++i) s += m[i] * lambda[i];
  return s;
}

double richardson_plateau(const std::vector<std::array<double, 3>>& trace, double rel,
                          double floor_abs, std::vector<double>& extrapolated) {
  if (trace.size() < 4) throw ConfigError("limiting absorption needs at least 4 epsilon values");
  for (size_t i = 0; i + 1 < trace.size(); ++i) {
    const double e0 = trace[i][0];
    const double e1 = trace[i + 1][0];
    const double g0 = trace[i][2];
    const double g1 = trace[i + 1][2];
    const double rho = e1 / e0;
    extrapolated.push_back((g1 - rho * g0) / (1.0 - rho));
  }
  for (size_t i = 1; i < extrapolated.size(); ++i) {
    const double prev = extrapolated[i - 1];
    const double curr = extrapolated[i];
    if (std::abs(curr - prev) <= std::max(rel * std::abs(curr), floor_abs)) return curr;
  }
  throw NoExtrapolationPlateau("extrapolated values keep moving; enlarge the domain or enable the absorbing layer");
}

Vec absorber_profile(const RadialGrid& grid, double omega, const FgrOptions& opts) {
  Vec w = Vec::Zero(grid.n);
  const double r0 = opts.absorber_start * grid.r_max;
  const double span = grid.r_max - r0;
  for (Eigen::Index i = 0; i < grid.n; ++i)
    if (grid.r[i] > r0) {
      const double t = (grid.r[i] - r0) / span;
      w[i] = opts.absorber_strength * omega * t * t;
    }
  return w;
}

CVec sigma3(const CVec& x) {
  CVec y = x;
  y.tail(x.size() / 2) *= -1.0;
  return y;
}

// shared quadratic-form evaluation Im<(H - L - i eps)^{-1} src, sigma3 probe>
double limiting_absorption(const Linearization& lin, const CVec& src, const CVec& probe,
                           double cap, const FgrOptions& opts, FgrDiagnostics& diag,
                           const ContinuumProjector* pc,
                           const std::array<Vec, 4>* weight) {
  const CVec s3probe = sigma3(probe);
  const double floor_abs = 1e-8 * src.norm() * probe.norm() * 4.0 * M_PI * lin.grid.h /
                           std::max(lin.omega, 1e-12);
  auto evaluate = [&](cplx z, const Vec* w_abs) {
    CVec y = resolvent_apply(lin, z, src, w_abs);
    if (pc) y = pc->apply(y);
    if (weight) y = TaylorCoefficients::apply(*weight, y);
    return lin.grid.dot_v(y, s3probe);
  };
  if (opts.absorber) {
    const Vec w_full = absorber_profile(lin.grid, lin.omega, opts);
    const Vec w_half = 0.5 * w_full;
    const cplx z(cap, 0.0);
    const cplx v_full = evaluate(z, &w_full);
    const cplx v_half = evaluate(z, &w_half);
    diag.trace.push_back({opts.absorber_strength, v_full.real(), v_full.imag()});
    diag.trace.push_back({0.5 * opts.absorber_strength, v_half.real(), v_half.imag()});
    const double g0 = v_full.imag();
    const double g1 = v_half.imag();
    if (std::abs(g1 - g0) > std::max(opts.plateau_rel * std::abs(g1), floor_abs))
      throw NoExtrapolationPlateau("absorbing-layer values disagree between strengths");
    diag.extrapolated.push_back(g1);
    return g1;
  }
  for (const double f : opts.eps_factors) {
    const double eps = f * lin.omega;
    const cplx v = evaluate(cplx(cap, eps), nullptr);
    diag.trace.push_back({eps, v.real(), v.imag()});
  }
  return richardson_plateau(diag.trace, opts.plateau_rel, floor_abs, diag.extrapolated);
}

}  // namespace

const CVec& TaylorCoefficients::r_at(const MultiIndex& m, const MultiIndex& n) const {
  auto it = r.find({m, n});
  if (it == r.end()) throw ConfigError("missing Taylor coefficient");
  return it->second;
}

const std::array<Vec, 4>& TaylorCoefficients::a_at(const MultiIndex& m,
                                                   const MultiIndex& n) const {
  auto it = a.find({m, n});
  if (it == a.end()) throw ConfigError("missing Taylor operator coefficient");
  return it->second;
}

CVec TaylorCoefficients::apply(const std::array<Vec, 4>& op, const CVec& x) {
  const Eigen::Index n = x.size() / 2;
  CVec y(2 * n);
  y.head(n) = op[0].cast<cplx>().cwiseProduct(x.head(n)) +
              op[1].cast<cplx>().cwiseProduct(x.tail(n));
  y.tail(n) = op[2].cast<cplx>().cwiseProduct(x.head(n)) +
              op[3].cast<cplx>().cwiseProduct(x.tail(n));
  return y;
}

RealMode realify_mode(const EigMode& mode, double imag_tol) {
  if (mode.xi.size() == 0) throw EigensolverFailure("mode carries no eigenvector");
  if (std::abs(mode.lambda.imag()) > imag_tol * std::abs(mode.lambda))
    throw EigensolverFailure("mode frequency is not real");
  Eigen::Index imax = 0;
  mode.xi.cwiseAbs().maxCoeff(&imax);
  const cplx phase = mode.xi[imax] / std::abs(mode.xi[imax]);
  const CVec aligned = mode.xi / phase;
  if (aligned.imag().norm() > imag_tol * aligned.norm())
    throw EigensolverFailure("eigenvector cannot be phase-aligned to a real vector");
  RealMode rm;
  const Eigen::Index n = aligned.size() / 2;
  rm.first = aligned.head(n).real();
  rm.second = aligned.tail(n).real();
  rm.lambda = mode.lambda.real();
  rm.signature = mode.sig();
  if (rm.signature == 0) throw EigensolverFailure("mode has no definite signature");
  return rm;
}

TaylorCoefficients taylor_coefficients(const Profile& p, const std::vector<EigMode>& modes,
                                       int order) {
  if (order < 2 || order > 3)
    throw InsufficientSmoothness("expansion supported at orders 2 and 3");
  if (!p.nl.smooth_to(order))
    throw InsufficientSmoothness("nonlinearity lacks the derivatives for order " +
                                 std::to_string(order));
  const int k = static_cast<int>(modes.size());
  const Eigen::Index n = p.grid.n;
  const int n_amp = 2 * k;

  std::vector<RealMode> rms;
  rms.reserve(modes.size());
  for (const auto& m : modes) rms.push_back(realify_mode(m));

  // a = sum z_j xi_j^1 + zbar_j xi_j^2, b = sum z_j xi_j^2 + zbar_j xi_j^1
  Jet a = jet_zero(n_amp, order);
  Jet b = jet_zero(n_amp, order);
  for (int j = 0; j < k; ++j) {
    std::vector<int> ez(n_amp + 1, 0), ezb(n_amp + 1, 0);
    ez[j] = 1;
    ezb[k + j] = 1;
    a.add_term(ez, rms[j].first);
    a.add_term(ezb, rms[j].second);
    b.add_term(ez, rms[j].second);
    b.add_term(ezb, rms[j].first);
  }
  Jet probe = jet_zero(n_amp, order);
  {
    std::vector<int> ep(n_amp + 1, 0);
    ep.back() = 1;
    probe.add_term(ep, Vec::Ones(n));
  }

  const Jet e1 = nonlinear_remainder(p, a + probe, b, order);  // R first, A col 1 row 1
  const Jet e2 = nonlinear_remainder(p, a, b + probe, order);  // A col 2 row 1
  const Jet e3 = nonlinear_remainder(p, b + probe, a, order);  // R second, A col 2 row 2
  const Jet e4 = nonlinear_remainder(p, b, a + probe, order);  // A col 1 row 2

  TaylorCoefficients tc;
  tc.order = order;
  tc.n_modes = k;

  std::vector<MultiIndex> all;
  enumerate_indices(2 * k, order, all);
  for (const MultiIndex& full : all) {
    const MultiIndex m(full.begin(), full.begin() + k);
    const MultiIndex nn(full.begin() + k, full.end());
    const int total = index_sum(full);
    if (total >= 2 && total <= order) {
      CVec rv(2 * n);
      rv.head(n) = Vec(-coeff_of(e1, m, nn, 0, n)).cast<cplx>();
      rv.tail(n) = coeff_of(e3, m, nn, 0, n).cast<cplx>();
      tc.r[{m, nn}] = std::move(rv);
    }
    if (total >= 1 && total <= order - 1) {
      std::array<Vec, 4> av;
      av[0] = -coeff_of(e1, m, nn, 1, n);
      av[1] = -coeff_of(e2, m, nn, 1, n);
      av[2] = coeff_of(e4, m, nn, 1, n);
      av[3] = coeff_of(e3, m, nn, 1, n);
      tc.a[{m, nn}] = std::move(av);
    }
  }

  // localization guard: the resolvent sources must not touch the boundary
  for (const auto& [key, rv] : tc.r) {
    double inner = 0.0, outer = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = p.grid.w[i] * (std::norm(rv[i]) + std::norm(rv[n + i]));
      (p.grid.r[i] >= 0.5 * p.grid.r_max ? outer : inner) += w;
    }
    if (outer > 1e-8 * (inner + outer) && inner + outer > 0.0)
      throw GridTooCoarse("expansion coefficient reaches the domain boundary");
  }
  return tc;
}

ResonanceSet resonance_set(const std::vector<double>& lambda, double omega, int cap,
                           double tol) {
  ResonanceSet rs;
  rs.lambda = lambda;
  rs.omega = omega;
  for (const double l : lambda)
    if (!(l > 0.0) || !(l < omega))
      throw DomainError("mode frequencies must lie in (0, omega)");
  const int k = static_cast<int>(lambda.size());
  if (k == 0) return rs;

  for (const double l : lambda) {
    const int nj = static_cast<int>(std::floor(omega / l));
    rs.n_caps.push_back(nj * l < omega ? nj : nj - 1);
    rs.n_max = std::max(rs.n_max, rs.n_caps.back());
  }

  std::vector<MultiIndex> all;
  enumerate_indices(k, cap, all);
  const double near = tol * std::max(1.0, omega);
  for (const MultiIndex& m : all) {
    if (index_sum(m) == 0) continue;
    const double dot = index_dot(m, lambda);
    if (std::abs(dot - omega) <= near)
      throw ResonantConfiguration("combination frequency collides with omega");
    if (dot <= omega) continue;
    bool minimal = true;
    for (int j = 0; j < k && minimal; ++j) {
      if (m[j] == 0) continue;
      MultiIndex pred = m;
      pred[j] -= 1;
      if (index_dot(pred, lambda) >= omega) minimal = false;
    }
    if (minimal) rs.members.push_back(m);
  }
  std::sort(rs.members.begin(), rs.members.end());
  return rs;
}

CVec ContinuumProjector::apply(const CVec& x) const {
  CVec y = x;
  for (size_t k = 0; k < vectors.size(); ++k) y -= vectors[k] * grid.dot_v(x, duals[k]);
  return y;
}

ContinuumProjector make_projector(const RadialGrid& grid, const KernelReport& kernel,
                                  const std::vector<EigMode>& modes) {
  ContinuumProjector pc;
  pc.grid = grid;
  if (std::abs(kernel.pairing) < 1e-300)
    throw IllConditioned("vanishing pairing: generalized kernel projection undefined");
  const cplx qinv(1.0 / kernel.pairing, 0.0);
  // biorthogonal pairs: <sigma3 Phi, sigma3 dPhi> = <dPhi, Phi> = q', all
  // cross pairings cancel between the two halves
  pc.vectors.push_back(kernel.phase_mode);
  pc.duals.push_back(sigma3(kernel.scale_mode) * qinv);
  pc.vectors.push_back(kernel.scale_mode);
  pc.duals.push_back(sigma3(kernel.phase_mode) * qinv);

  const Eigen::Index n = grid.n;
  for (const auto& m : modes) {
    const RealMode rm = realify_mode(m);
    CVec xi(2 * n);
    xi.head(n) = rm.first.cast<cplx>();
    xi.tail(n) = rm.second.cast<cplx>();
    CVec mirror(2 * n);
    mirror.head(n) = rm.second.cast<cplx>();
    mirror.tail(n) = rm.first.cast<cplx>();
    const double s = rm.signature;
    pc.vectors.push_back(xi);
    pc.duals.push_back(sigma3(xi) * cplx(s, 0.0));
    pc.vectors.push_back(mirror);
    pc.duals.push_back(sigma3(mirror) * cplx(-s, 0.0));
  }
  return pc;
}

CVec resolvent_apply(const Linearization& lin, cplx z, const CVec& rhs, const Vec* absorber) {
  Eigen::SparseMatrix<cplx> s = lin.shifted(z);
  if (absorber) {
    const Eigen::Index n = lin.grid.n;
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((*absorber)[i] == 0.0) continue;
      s.coeffRef(i, i) += cplx(0.0, -(*absorber)[i]);
      s.coeffRef(n + i, n + i) += cplx(0.0, (*absorber)[i]);
    }
  }
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
  lu.compute(s);
  if (lu.info() != Eigen::Success) throw SingularLinearization("resolvent factorization failed");
  CVec y = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !y.allFinite())
    throw SingularLinearization("resolvent solve failed");
  return y;
}

FgrValue fgr_coefficient(const Linearization& lin, const TaylorCoefficients& coeffs,
                         const ContinuumProjector& pc, const std::vector<RealMode>& modes,
                         const MultiIndex& m, int j, const FgrOptions& opts) {
  const int k = static_cast<int>(modes.size());
  if (j < 0 || j >= k || static_cast<int>(m.size()) != k)
    throw ConfigError("mode index or multi-index shape mismatch");
  std::vector<double> lambda(k);
  for (int i = 0; i < k; ++i) lambda[i] = modes[i].lambda;
  MultiIndex full = m;
  full[j] += 1;
  const double cap = index_dot(full, lambda);
  if (cap <= lin.omega) throw WrongSide("combination frequency sits below the continuum edge");

  const MultiIndex zero(k, 0);
  const CVec src = pc.apply(coeffs.r_at(full, zero));
  const auto& weight = coeffs.a_at(zero, m);

  const Eigen::Index n = lin.grid.n;
  CVec xi(2 * n);
  xi.head(n) = modes[j].first.cast<cplx>();
  xi.tail(n) = modes[j].second.cast<cplx>();

  FgrValue out;
  out.diag.rho0 = std::sqrt(cap - lin.omega);
  out.gamma = limiting_absorption(lin, src, xi, cap, opts, out.diag, &pc, &weight);
  return out;
}

double fgr_free_oracle(const RadialGrid& grid, const Vec& f1, double rho0) {
  if (!(rho0 > 0.0)) throw DomainError("the sphere radius must be positive");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < grid.n; ++i)
    acc += grid.h * grid.r[i] * std::sin(rho0 * grid.r[i]) * f1[i];
  const double fhat = 4.0 * M_PI / rho0 * acc;
  return 2.0 * M_PI * rho0 * fhat * fhat;
}

double free_field_gamma(const RadialGrid& grid, double omega, const Vec& f1, double lambda_cap,
                        const FgrOptions& opts) {
  if (lambda_cap <= omega) throw WrongSide("energy below the continuum edge");
  const ScalarOperator free_block = make_scalar_operator(grid, omega, Vec::Zero(grid.n));
  const Linearization lin = linearization_from_blocks(grid, omega, free_block, free_block);
  CVec f(2 * grid.n);
  f.head(grid.n) = grid.to_v(f1).cast<cplx>();
  f.tail(grid.n).setZero();
  FgrDiagnostics diag;
  const double im = limiting_absorption(lin, f, f, lambda_cap, opts, diag, nullptr, nullptr);
  // Im R(+i0) = pi delta, and the sphere-integral oracle carries the full
  // (2 pi)^3 Fourier normalization
  const double twopi3 = std::pow(2.0 * M_PI, 3);
  return twopi3 / M_PI * im;
}

HypothesisProbe hypothesis_probe(const Linearization& lin, const TaylorCoefficients& coeffs,
                                 const ContinuumProjector& pc, const std::vector<RealMode>& modes,
                                 const MultiIndex& m, int j, const FgrOptions& opts) {
  HypothesisProbe out;
  out.lhs = fgr_coefficient(lin, coeffs, pc, modes, m, j, opts).gamma;

  const int k = static_cast<int>(modes.size());
  std::vector<double> lambda(k);
  for (int i = 0; i < k; ++i) lambda[i] = modes[i].lambda;
  MultiIndex full = m;
  full[j] += 1;
  const double cap = index_dot(full, lambda);
  const MultiIndex zero(k, 0);
  const CVec src = pc.apply(coeffs.r_at(full, zero));
  FgrDiagnostics diag;
  const double im = limiting_absorption(lin, src, src, cap, opts, diag, &pc, nullptr);
  out.rhs = (m[j] + 1) * im;
  out.relative_gap = std::abs(out.lhs - out.rhs) /
                     std::max({std::abs(out.lhs), std::abs(out.rhs), 1e-300});
  return out;
}

double FgrMatrix::at(const MultiIndex& full, int j) const {
  for (const auto& e : entries)
    if (e.j == j && e.m == full) return e.gamma;
  throw ConfigError("no damping coefficient for the requested index");
}

FgrMatrix compute_fgr_matrix(const Linearization& lin, const Profile& p,
                             const std::vector<EigMode>& modes, const KernelReport& kernel,
                             const FgrOptions& opts) {
  FgrMatrix out;
  out.omega = lin.omega;
  std::vector<RealMode> rms;
  std::vector<double> lambda;
  for (const auto& m : modes) {
    rms.push_back(realify_mode(m));
    lambda.push_back(rms.back().lambda);
  }
  out.res = resonance_set(lambda, lin.omega);

  int order = 2;
  for (const auto& m : out.res.members) order = std::max(order, index_sum(m));
  if (order > 3)
    throw InsufficientSmoothness("resonance set needs expansion order beyond 3");

  const TaylorCoefficients coeffs = taylor_coefficients(p, modes, order);
  const ContinuumProjector pc = make_projector(lin.grid, kernel, modes);

  for (const auto& member : out.res.members) {
    for (int j = 0; j < static_cast<int>(modes.size()); ++j) {
      if (member[j] == 0) continue;
      MultiIndex m = member;
      m[j] -= 1;
      FgrEntry e;
      e.m = member;
      e.j = j;
      const FgrValue v = fgr_coefficient(lin, coeffs, pc, rms, m, j, opts);
      e.gamma = v.gamma;
      e.rho0 = v.diag.rho0;
      out.entries.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace nlstab
