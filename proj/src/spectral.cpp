#include "nlstab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/SparseLU>

namespace nlstab {

namespace {

struct Refined {
  cplx lambda;
  CVec xi;
  double residual;
};

double mode_residual(const Linearization& lin, const CVec& xi, cplx lambda) {
  return (lin.apply(xi) - lambda * xi).norm() / xi.norm();
}

// Inverse iteration with Rayleigh updates against the sparse doubled operator.
// Works on a unit-norm vector; returns the best iterate seen.
Refined refine_mode(const Linearization& lin, cplx lambda, CVec xi, double tol, int iters) {
  xi.normalize();
  Refined best{lambda, xi, mode_residual(lin, xi, lambda)};
  if (!lin.tridiagonal()) return best;
  cplx shift = lambda;
  for (int it = 0; it < iters && best.residual > tol; ++it) {
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
    lu.compute(lin.shifted(shift));
    if (lu.info() != Eigen::Success) {
      // landed on an exactly singular shift; nudge off it
      shift *= 1.0 + 1e-12;
      shift += cplx(0.0, 1e-13 * lin.omega);
      continue;
    }
    CVec y = lu.solve(xi);
    if (lu.info() != Eigen::Success || !y.allFinite()) break;
    y.normalize();
    const cplx rayleigh = y.dot(lin.apply(y));  // dot conjugates the first slot
    const double res = mode_residual(lin, y, rayleigh);
    xi = y;
    if (res < best.residual) best = {rayleigh, y, res};
    shift = rayleigh;
  }
  return best;
}

struct RawPair {
  cplx lambda;
  CVec xi;  // empty when the class needs no vector
};

double list_defect(const std::vector<cplx>& vals, bool conjugate) {
  double worst = 0.0;
  for (size_t i = 0; i < vals.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < vals.size(); ++j) {
      const cplx target = conjugate ? std::conj(vals[j]) : -vals[j];
      best = std::min(best, std::abs(vals[i] - target));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

ModeClass classify(cplx lambda, double omega, const SpectralOptions& o) {
  // magnitude first: the symmetry doublet at the origin may pick up stray
  // imaginary parts larger than imag_tol without being suspicious
  const double mag = std::abs(lambda);
  if (mag <= o.kernel_tol * omega) return ModeClass::kernel;
  const double im = std::abs(lambda.imag());
  if (im > o.off_axis_tol * omega) return ModeClass::off_axis;
  if (im > o.imag_tol * omega) return ModeClass::ambiguous;
  if (mag >= omega * (1.0 - o.edge_tol)) return ModeClass::continuum_artifact;
  return ModeClass::gap_discrete;
}

bool needs_vector(ModeClass c) {
  return c == ModeClass::gap_discrete || c == ModeClass::off_axis;
}

// positive representative: Re > 0, or on the imaginary axis Im > 0
bool is_representative(cplx l, double omega, const SpectralOptions& o) {
  if (l.real() > o.imag_tol * omega) return true;
  if (std::abs(l.real()) <= o.imag_tol * omega) return l.imag() > 0.0;
  return false;
}

double sigma3_pairing(const RadialGrid& g, const CVec& xi) {
  const Eigen::Index n = xi.size() / 2;
  return 4.0 * M_PI * g.h * (xi.head(n).squaredNorm() - xi.tail(n).squaredNorm());
}

}  // namespace

std::vector<EigMode> Spectrum::gap_modes() const {
  std::vector<EigMode> out;
  for (const auto& m : modes)
    if (m.cls == ModeClass::gap_discrete && m.xi.size() > 0 && m.lambda.real() > 0.0)
      out.push_back(m);
  std::sort(out.begin(), out.end(),
            [](const EigMode& a, const EigMode& b) { return a.lambda.real() < b.lambda.real(); });
  return out;
}

std::vector<EigMode> Spectrum::off_axis_modes() const {
  std::vector<EigMode> out;
  for (const auto& m : modes)
    if (m.cls == ModeClass::off_axis && m.xi.size() > 0) out.push_back(m);
  return out;
}

int Spectrum::count(ModeClass c) const {
  int k = 0;
  for (const auto& m : modes)
    if (m.cls == c) ++k;
  return k;
}

std::pair<int, int> jordan_defect(const Mat& a, cplx mu, double rank_tol) {
  CMat shifted = a.cast<cplx>();
  shifted.diagonal().array() -= mu;
  const CMat squared = shifted * shifted;
  auto null_count = [rank_tol](const CMat& m) {
    const Vec sv = linalg::singular_values(m);
    const double cutoff = rank_tol * std::max(sv[0], 1.0);
    int k = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] <= cutoff) ++k;
    return k;
  };
  return {null_count(shifted), null_count(squared)};
}

Spectrum discrete_spectrum(const Linearization& lin, const SpectralOptions& opts) {
  const Eigen::Index n = lin.grid.n;
  const double omega = lin.omega;
  bool product = opts.method == "product" ||
                 (opts.method == "auto" && n > opts.product_threshold);
  if (opts.method == "full") product = false;

  Spectrum out;
  out.omega = omega;
  out.method = product ? "product" : "full";

  std::vector<cplx> raw;
  std::vector<RawPair> pairs;
  Mat c_product;  // kept for multiplicity checks

  if (product) {
    // eigensolve of minus*plus: its spectrum is exactly the squared spectrum
    // of the doubled operator, at a quarter of the dense-solve cost
    c_product = lin.product();
    linalg::EigPairs ep = linalg::eig_nonsym(c_product, true);
    raw.reserve(2 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const cplx lambda = std::sqrt(ep.values[k]);
      raw.push_back(lambda);
      raw.push_back(-lambda);
      const ModeClass cls = classify(lambda, omega, opts);
      if (!needs_vector(cls)) continue;
      if (std::abs(lambda) < 1e-300) continue;
      // xi = (a + L_+ a / lambda, a - L_+ a / lambda)
      CVec a = ep.vectors.col(k);
      a.normalize();
      const CVec c = lin.plus.apply(a) / lambda;
      CVec xi(2 * n);
      xi.head(n) = a + c;
      xi.tail(n) = a - c;
      pairs.push_back({lambda, xi});
    }
  } else {
    const Mat k = lin.dense_generator();
    linalg::EigPairs ep = linalg::eig_nonsym(k, true);
    raw.reserve(2 * n);
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
      const cplx lambda = cplx(0.0, 1.0) * ep.values[j];
      raw.push_back(lambda);
      const ModeClass cls = classify(lambda, omega, opts);
      if (!needs_vector(cls) || !is_representative(lambda, omega, opts)) continue;
      // generator eigenvector (x, y) -> doubled vector (x + iy, x - iy)
      const CVec x = ep.vectors.col(j).head(n);
      const CVec y = ep.vectors.col(j).tail(n);
      CVec xi(2 * n);
      xi.head(n) = x + cplx(0.0, 1.0) * y;
      xi.tail(n) = x - cplx(0.0, 1.0) * y;
      pairs.push_back({lambda, xi});
    }
    c_product = lin.product();
  }

  out.pairing_defect = list_defect(raw, false);
  out.conjugation_defect = list_defect(raw, true);
  const double sym_scale = std::max(1.0, omega);
  if (out.pairing_defect > opts.pairing_tol * sym_scale)
    throw SymmetryViolation("eigenvalue pairing defect " + std::to_string(out.pairing_defect));
  if (out.conjugation_defect > opts.pairing_tol * sym_scale)
    throw SymmetryViolation("conjugation defect " + std::to_string(out.conjugation_defect));

  // artifact entries (no vectors)
  for (const cplx& l : raw) {
    const ModeClass cls = classify(l, omega, opts);
    if (needs_vector(cls)) continue;
    EigMode m;
    m.lambda = l;
    m.cls = cls;
    out.modes.push_back(std::move(m));
  }

  // discrete modes: refine the representative and its mirror independently,
  // so the +/- pairing of the refined values stays a genuine check
  for (auto& pr : pairs) {
    if (!is_representative(pr.lambda, omega, opts)) continue;
    Refined plus{pr.lambda, pr.xi, mode_residual(lin, pr.xi, pr.lambda)};
    CVec mirror(2 * n);
    mirror.head(n) = pr.xi.tail(n);
    mirror.tail(n) = pr.xi.head(n);
    Refined minus{-pr.lambda, mirror, mode_residual(lin, mirror, -pr.lambda)};
    if (opts.refine && lin.tridiagonal()) {
      plus = refine_mode(lin, plus.lambda, plus.xi, opts.refine_tol, opts.refine_iters);
      minus = refine_mode(lin, minus.lambda, minus.xi, opts.refine_tol, opts.refine_iters);
    }
    out.refined_pairing_defect =
        std::max(out.refined_pairing_defect, std::abs(plus.lambda + minus.lambda));

    for (const Refined* side : {&plus, &minus}) {
      EigMode m;
      m.lambda = side->lambda;
      m.xi = side->xi;
      m.xi.normalize();
      m.residual = side->residual;
      // reclassify: refinement may snap an apparent off-axis value back onto
      // the real axis (solver noise on clustered edge eigenvalues)
      m.cls = classify(side->lambda, omega, opts);
      m.sigma3_norm = sigma3_pairing(lin.grid, m.xi) / (4.0 * M_PI * lin.grid.h);
      if ((m.cls == ModeClass::gap_discrete || m.cls == ModeClass::off_axis) &&
          std::abs(m.lambda) <= opts.kernel_band * omega && std::abs(m.sigma3_norm) <= 1e-3) {
        // near the origin with near-null Krein pairing: the numerically split
        // symmetry doublet, not a discrete mode (genuine ones pair at O(1));
        // the Jordan block can split along either axis, so an imaginary split
        // lands in the off-axis bucket without being one
        m.cls = ModeClass::kernel;
      }
      if (m.cls == ModeClass::gap_discrete) {
        if (std::abs(m.sigma3_norm) <= opts.signature_tol) {
          m.signature = SignatureTag::degenerate;
        } else {
          m.signature = m.sigma3_norm > 0 ? SignatureTag::plus : SignatureTag::minus;
          // rescale so <xi, sigma3 xi> = signature exactly
          m.xi /= std::sqrt(std::abs(sigma3_pairing(lin.grid, m.xi)));
        }
      } else if (m.cls == ModeClass::off_axis) {
        m.signature = SignatureTag::not_applicable;
      }
      out.modes.push_back(std::move(m));
    }
  }

  // multiplicity: clustered squared eigenvalues get a rank test on the product
  std::vector<cplx> squares;
  squares.reserve(raw.size() / 2);
  for (const cplx& l : raw)
    if (is_representative(l, omega, opts)) squares.push_back(l * l);
  for (auto& m : out.modes) {
    if (m.cls != ModeClass::gap_discrete && m.cls != ModeClass::off_axis) continue;
    const cplx mu = m.lambda * m.lambda;
    const double ctol = 1e-6 * std::max(omega * omega, std::abs(mu));
    int cluster = 0;
    for (const cplx& s : squares)
      if (std::abs(s - mu) <= ctol) ++cluster;
    m.cluster_size = std::max(1, cluster);
    if (m.cluster_size > 1) {
      auto [g1, g2] = jordan_defect(c_product, mu);
      m.multiplicity_ok = (g1 == g2) && (g1 >= m.cluster_size);
    }
  }

  std::sort(out.modes.begin(), out.modes.end(), [](const EigMode& a, const EigMode& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
    return a.lambda.imag() < b.lambda.imag();
  });
  return out;
}

KernelReport generalized_kernel(const Linearization& lin, const Profile& p,
                                const KernelOptions& opts) {
  if (p.dphi_domega.size() != p.grid.n)
    throw IllConditioned("profile lacks the omega derivative");
  const Eigen::Index n = lin.grid.n;
  const double ktol = opts.null_tol * lin.omega;

  KernelReport rep;
  const linalg::SymEig ep = lin.plus.eigensystem(false);
  const linalg::SymEig em = lin.minus.eigensystem(true);
  Eigen::Index minus_kernel_idx = -1;
  double minus_kernel_best = std::numeric_limits<double>::infinity();
  double gap_to_rest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(ep.values[i]) <= ktol) ++rep.null_plus;
    const double am = std::abs(em.values[i]);
    if (am <= ktol) {
      ++rep.null_minus;
      if (am < minus_kernel_best) {
        minus_kernel_best = am;
        minus_kernel_idx = i;
      }
    } else {
      gap_to_rest = std::min(gap_to_rest, am);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(ep.values[i]) > ktol) gap_to_rest = std::min(gap_to_rest, std::abs(ep.values[i]));
  if (gap_to_rest < opts.gap_guard * lin.omega)
    throw IllConditioned("kernel not separated: nearest nonzero block eigenvalue " +
                         std::to_string(gap_to_rest));

  rep.dim_kernel = rep.null_plus + rep.null_minus;

  const Vec phi_v = p.v();
  const Vec psi_v = p.grid.to_v(p.dphi_domega);
  rep.phase_mode = CVec(2 * n);
  rep.phase_mode.head(n) = phi_v.cast<cplx>();
  rep.phase_mode.tail(n) = -phi_v.cast<cplx>();
  rep.scale_mode = CVec(2 * n);
  rep.scale_mode.head(n) = psi_v.cast<cplx>();
  rep.scale_mode.tail(n) = psi_v.cast<cplx>();

  rep.res_phase = lin.apply(rep.phase_mode).norm() / (lin.omega * rep.phase_mode.norm());
  rep.res_scale = (lin.apply(rep.scale_mode) + rep.phase_mode).norm() /
                  (lin.omega * rep.scale_mode.norm());

  // chain-terminating pairing <d_omega Phi, Phi> = d(mass)/d(omega)
  rep.pairing = 2.0 * p.grid.integrate(p.phi.cwiseProduct(p.dphi_domega));
  const double pairing_floor =
      opts.pairing_tol * 2.0 * std::sqrt(p.grid.integrate(p.phi.cwiseAbs2()) *
                                         p.grid.integrate(p.dphi_domega.cwiseAbs2()));
  const bool chain_stops = std::abs(rep.pairing) > pairing_floor;

  // angle between the numerical kernel chain and the symmetry pair: the
  // minus-block kernel vector against phi, and the solve against d_omega phi
  double angle = M_PI / 2;
  if (minus_kernel_idx >= 0) {
    const Vec u = em.vectors.col(minus_kernel_idx);
    const double c1 = std::abs(u.dot(phi_v)) / (u.norm() * phi_v.norm());
    angle = std::acos(std::min(1.0, c1));
    if (rep.null_plus == 0 && lin.plus.tridiagonal()) {
      try {
        const Vec chain = linalg::tridiag_solve(lin.plus.diag, lin.plus.off, Vec(-u));
        const double c2 = std::abs(chain.dot(psi_v)) / (chain.norm() * psi_v.norm());
        angle = std::max(angle, std::acos(std::min(1.0, c2)));
      } catch (const SingularLinearization&) {
        // chain solve failed; the angle keeps its first-vector value
      }
    }
  }
  rep.angle = angle;

  if (rep.null_minus == 1 && rep.null_plus == 0) {
    rep.dim_generalized = chain_stops ? 2 : 3;
  } else {
    // degenerate layout: count one chain extension per kernel direction as a
    // lower bound; the verdict treats this as failing the nondegeneracy check
    rep.dim_generalized = rep.dim_kernel + std::max(1, rep.null_minus);
  }
  rep.clean = rep.null_minus == 1 && rep.null_plus == 0 && chain_stops &&
              rep.dim_generalized == 2 && rep.res_phase <= opts.residual_tol &&
              rep.res_scale <= opts.residual_tol && rep.angle <= opts.angle_tol;
  return rep;
}

NegativeIndex negative_index(const ScalarOperator& plus, const ScalarOperator& minus,
                             double zero_band) {
  NegativeIndex idx;
  idx.n_plus = plus.count_below(-zero_band);
  idx.n_minus = minus.count_below(-zero_band);
  return idx;
}

namespace {

// real 2n-vector pair (x; y) representation of the constraint <u, c> = 0 for
// u = (r, rbar) with rbar = conj(r), r = x + iy
std::pair<Vec, Vec> constraint_rows(const CVec& c) {
  const Eigen::Index n = c.size() / 2;
  const CVec sum = c.head(n) + c.tail(n);
  const CVec diff = c.head(n) - c.tail(n);
  Vec g_re(2 * n), g_im(2 * n);
  g_re.head(n) = sum.real();
  g_re.tail(n) = diff.imag();
  g_im.head(n) = -sum.imag();
  g_im.tail(n) = diff.real();
  return {g_re, g_im};
}

double constrained_min(const Mat& a, const std::vector<Vec>& cons) {
  const Eigen::Index n = a.rows();
  Mat q(n, static_cast<Eigen::Index>(cons.size()));
  Eigen::Index k = 0;
  for (const Vec& c : cons) {
    if (c.norm() < 1e-300) continue;
    Vec v = c / c.norm();
    for (Eigen::Index j = 0; j < k; ++j) v -= q.col(j).dot(v) * q.col(j);
    const double nv = v.norm();
    if (nv > 1e-10) q.col(k++) = v / nv;
  }
  if (k >= n) return std::numeric_limits<double>::infinity();
  q.conservativeResize(n, k);
  if (k == 0) return linalg::eig_sym_smallest(a, 1, false).values[0];
  const Mat p = Mat::Identity(n, n) - q * q.transpose();
  const double shift = a.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
  const Mat projected = p * a * p + shift * (q * q.transpose());
  return linalg::eig_sym_smallest(projected, 1, false).values[0];
}

}  // namespace

double quadratic_form_min(const Linearization& lin, const std::vector<CVec>& constraints) {
  const Eigen::Index n = lin.grid.n;
  // the unitary change to (x, y) block-diagonalizes the symmetric form:
  // <sigma3 H u, u> / <u, u> = (x' L+ x + y' L- y) / (|x|^2 + |y|^2)
  std::vector<Vec> rows;
  for (const CVec& c : constraints) {
    auto [g_re, g_im] = constraint_rows(c);
    const double scale = std::max(g_re.norm(), g_im.norm());
    if (g_re.norm() > 1e-12 * scale + 1e-300) rows.push_back(g_re);
    if (g_im.norm() > 1e-12 * scale + 1e-300) rows.push_back(g_im);
  }
  bool decoupled = true;
  for (const Vec& g : rows) {
    const double hx = g.head(n).norm();
    const double hy = g.tail(n).norm();
    if (std::min(hx, hy) > 1e-10 * std::max(hx, hy)) {
      decoupled = false;
      break;
    }
  }
  if (decoupled) {
    std::vector<Vec> cx, cy;
    for (const Vec& g : rows) {
      if (g.head(n).norm() >= g.tail(n).norm())
        cx.push_back(g.head(n));
      else
        cy.push_back(g.tail(n));
    }
    const double mx = constrained_min(lin.plus.dense(), cx);
    const double my = constrained_min(lin.minus.dense(), cy);
    return std::min(mx, my);
  }
  Mat big = Mat::Zero(2 * n, 2 * n);
  big.topLeftCorner(n, n) = lin.plus.dense();
  big.bottomRightCorner(n, n) = lin.minus.dense();
  return constrained_min(big, rows);
}

StabilityReport stability_verdict(const Spectrum& spec, const KernelReport& kernel,
                                  const NegativeIndex& neg, double mass_slope, int node_count,
                                  double qform_min) {
  StabilityReport rep;
  rep.mass_slope = mass_slope;
  rep.node_count = node_count;
  rep.negative_index = neg.total();
  rep.quadratic_form_minimum = qform_min;
  rep.dim_generalized = kernel.dim_generalized;
  rep.kernel_angle = kernel.angle;

  bool ambiguous = spec.count(ModeClass::ambiguous) > 0;
  rep.worst_off_axis_im = 0.0;
  for (const auto& m : spec.modes)
    if (m.cls == ModeClass::off_axis)
      rep.worst_off_axis_im = std::max(rep.worst_off_axis_im, std::abs(m.lambda.imag()));
  rep.real_spectrum = spec.count(ModeClass::off_axis) == 0;

  rep.signatures_ok = true;
  bool negative_found = false;
  bool degenerate_sig = false;
  for (const auto& m : spec.gap_modes()) {
    rep.gap_signatures.emplace_back(m.lambda.real(), m.sig());
    if (m.signature == SignatureTag::minus || !m.multiplicity_ok) {
      rep.signatures_ok = false;
      negative_found = true;
    }
    if (m.signature == SignatureTag::degenerate) {
      rep.signatures_ok = false;
      degenerate_sig = true;
    }
  }
  rep.kernel_ok = kernel.clean;

  // serialized values, fixed interface: "linearly-stable",
  // "fails-condition-1" (spectrum leaves the real axis),
  // "fails-condition-2" (a non-positive-signature discrete mode),
  // "fails-condition-3" (degenerate generalized kernel),
  // "degenerate/inconclusive" (ambiguous data)
  if (!rep.real_spectrum) {
    rep.verdict = "fails-condition-1";
    rep.mechanism = "eigenvalues off the real axis (exponential instability)";
  } else if (negative_found) {
    rep.verdict = "fails-condition-2";
    rep.mechanism = "negative-signature discrete mode (radiation-damped growth)";
  } else if (degenerate_sig || ambiguous) {
    rep.verdict = "degenerate/inconclusive";
    rep.mechanism = degenerate_sig ? "signature pairing vanishes within tolerance"
                                   : "eigenvalues with unresolved imaginary parts";
  } else if (!rep.kernel_ok) {
    rep.verdict = "fails-condition-3";
    rep.mechanism = "generalized kernel larger than the symmetry pair";
  } else {
    rep.verdict = "linearly-stable";
    rep.mechanism = "real spectrum, positive signatures, nondegenerate kernel";
  }

  if (node_count >= 1 && rep.real_spectrum && rep.kernel_ok && rep.signatures_ok) {
    // a nodal profile passing all three checks contradicts the negative-index
    // bound; flag it loudly instead of accepting silently
    rep.inconsistency = true;
    rep.mechanism += " [INCONSISTENT: nodal profile passed every check]";
  }
  return rep;
}

ThresholdScanResult threshold_scan(const Linearization& base, const BumpPerturbation& u1,
                                   const std::vector<double>& epsilons,
                                   const std::vector<CVec>& threshold_modes,
                                   const SpectralOptions& opts) {
  if (epsilons.empty()) throw ConfigError("threshold scan needs at least one epsilon");
  ThresholdScanResult out;
  const Eigen::Index n = base.grid.n;

  for (const CVec& psi : threshold_modes) {
    // d = <sigma3 U1 psi, psi> / <psi, sigma3 psi>; sigma3 U1 = f + sigma1 g
    const CVec fc = u1.f.cast<cplx>();
    const CVec gc = u1.g.cast<cplx>();
    CVec num(2 * n);
    num.head(n) = fc.cwiseProduct(psi.head(n)) + gc.cwiseProduct(psi.tail(n));
    num.tail(n) = fc.cwiseProduct(psi.tail(n)) + gc.cwiseProduct(psi.head(n));
    const cplx numerator = base.grid.dot_v(num, psi);
    CVec s3psi = psi;
    s3psi.tail(n) *= -1.0;
    const cplx denom = base.grid.dot_v(psi, s3psi);
    if (std::abs(denom) < 1e-300) throw IllConditioned("sigma3-null threshold mode");
    out.d_predicted.push_back((numerator / denom).real());
  }

  std::vector<double> eps_sorted = epsilons;
  std::sort(eps_sorted.begin(), eps_sorted.end());

  struct Track {
    ThresholdBranch branch;
    double last = 0.0;
    bool open = true;
  };
  std::vector<Track> tracks;

  for (const double eps : eps_sorted) {
    const Linearization pert = perturbed(base, u1, eps);
    const Spectrum spec = discrete_spectrum(pert, opts);
    std::vector<double> found;
    for (const auto& m : spec.gap_modes()) found.push_back(m.lambda.real());

    std::vector<bool> used(found.size(), false);
    for (auto& t : tracks) {
      if (!t.open) continue;
      double best = std::numeric_limits<double>::infinity();
      int best_i = -1;
      for (size_t i = 0; i < found.size(); ++i) {
        if (used[i]) continue;
        const double d = std::abs(found[i] - t.last);
        if (d < best) {
          best = d;
          best_i = static_cast<int>(i);
        }
      }
      const double jump_cap = 0.5 * (base.omega - t.last) + 1e-6 * base.omega;
      if (best_i < 0 || best > jump_cap) {
        // the tracked eigenvalue is gone: crossed into the edge band
        t.open = false;
        t.branch.absorbed = true;
        continue;
      }
      used[static_cast<size_t>(best_i)] = true;
      t.last = found[static_cast<size_t>(best_i)];
      t.branch.eps.push_back(eps);
      t.branch.lambda.push_back(t.last);
    }
    for (size_t i = 0; i < found.size(); ++i) {
      if (used[i]) continue;
      Track t;
      t.last = found[i];
      t.branch.eps.push_back(eps);
      t.branch.lambda.push_back(found[i]);
      tracks.push_back(std::move(t));
    }
  }

  for (auto& t : tracks) {
    ThresholdBranch& b = t.branch;
    if (b.eps.size() >= 3) {
      // least-squares fit of log(omega - lambda) against log(eps)
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int m = 0;
      for (size_t i = 0; i < b.eps.size(); ++i) {
        const double gapv = base.omega - b.lambda[i];
        if (gapv <= 0.0) continue;
        const double x = std::log(b.eps[i]);
        const double y = std::log(gapv);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
      }
      if (m >= 3) {
        const double denom = m * sxx - sx * sx;
        if (std::abs(denom) > 1e-300) {
          b.slope = (m * sxy - sx * sy) / denom;
          b.coeff = std::exp((sy - b.slope * sx) / m);
        }
      }
    }
    out.branches.push_back(std::move(b));
  }
  return out;
}

CVec to_pair_basis(const CVec& cartesian) {
  const Eigen::Index n = cartesian.size() / 2;
  CVec out(2 * n);
  out.head(n) = cartesian.head(n) + cplx(0.0, 1.0) * cartesian.tail(n);
  out.tail(n) = cartesian.head(n) - cplx(0.0, 1.0) * cartesian.tail(n);
  return out;
}

CVec to_cartesian_basis(const CVec& pair) {
  const Eigen::Index n = pair.size() / 2;
  CVec out(2 * n);
  out.head(n) = 0.5 * (pair.head(n) + pair.tail(n));
  out.tail(n) = cplx(0.0, -0.5) * (pair.head(n) - pair.tail(n));
  return out;
}

}  // namespace nlstab
