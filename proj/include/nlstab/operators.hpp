#pragma once

#include <optional>

#include <Eigen/SparseCore>

#include "nlstab/grid.hpp"
#include "nlstab/linalg.hpp"
#include "nlstab/profile.hpp"

namespace nlstab {

// Schroedinger-type scalar operator -Lap + omega + V(r) on radial fields,
// acting on v = r*u vectors as a symmetric tridiagonal matrix (constant
// off-diagonal -1/h^2), optionally plus a dense symmetric part for separable
// potentials.
struct ScalarOperator {
  RadialGrid grid;
  Vec diag;            // 2/h^2 + omega + V(r_i)
  double off = 0.0;    // -1/h^2
  std::optional<Mat> extra;

  Vec apply(const Vec& v) const;
  CVec apply(const CVec& v) const;
  Mat dense() const;
  bool tridiagonal() const { return !extra.has_value(); }

  linalg::SymEig eigensystem(bool vectors) const;
  int count_below(double tau) const;
  double min_eigenvalue() const;
};

ScalarOperator make_scalar_operator(const RadialGrid& grid, double omega, const Vec& potential);

// The two scalar blocks that diagonalize the doubled linearization at a real
// profile: `plus` carries the potential -beta - 2 phi^2 beta', `minus` carries
// -beta.  `minus` annihilates the profile itself.
struct ScalarPair {
  ScalarOperator plus;
  ScalarOperator minus;
};

ScalarPair split_blocks(const Profile& p);

// Doubled linearization about e^{i omega t} phi.  In the (r, rbar) component
// basis the operator is the real matrix [[L0, -M], [M, -L0]] with
// L0 = (plus + minus)/2 and M = (minus - plus)/2; its spectrum is symmetric
// under lambda -> -lambda and lambda -> conj(lambda), and lambda^2 ranges over
// the eigenvalues of the product minus*plus.
struct Linearization {
  RadialGrid grid;
  double omega = 0.0;
  ScalarOperator plus;
  ScalarOperator minus;

  int size2() const { return 2 * grid.n; }

  // apply the doubled operator to (first block, second block) stacked v-vectors
  CVec apply(const CVec& x) const;

  // sigma3 * H, which is symmetric; used by quadratic-form probes
  CVec apply_sym(const CVec& x) const;

  // dense real forms
  Mat dense_generator() const;  // [[0, minus], [-plus, 0]], eigenvalues -i*lambda
  Mat dense_doubled() const;    // [[L0, -M], [M, -L0]], eigenvalues lambda
  Mat product() const;          // minus * plus (n x n)

  // sparse (H - z) in the (r, rbar) basis; requires tridiagonal blocks
  Eigen::SparseMatrix<cplx> shifted(cplx z) const;

  bool tridiagonal() const { return plus.tridiagonal() && minus.tridiagonal(); }
};

Linearization build_linearization(const Profile& p);
Linearization linearization_from_blocks(const RadialGrid& grid, double omega,
                                        const ScalarOperator& plus, const ScalarOperator& minus);

// Localized multiplicative perturbation U1 = sigma3*f + i*sigma2*g with
// compactly supported Gaussian bumps (cut at 6 widths).
struct BumpPerturbation {
  Vec f;
  Vec g;
};

BumpPerturbation make_bump(const RadialGrid& grid, double f_amp, double f_center, double f_width,
                           double g_amp = 0.0, double g_center = 0.0, double g_width = 1.0);

Linearization perturbed(const Linearization& base, const BumpPerturbation& u1, double eps);

// Free doubled resolvent kernel at separation d (2x2, diagonal):
// entry (0,0) = e^{-zeta d}/(4 pi d), entry (1,1) = -e^{-sqrt(2 omega - zeta^2) d}/(4 pi d).
Eigen::Matrix2cd free_resolvent_kernel(double omega, cplx zeta, double d);

// Plain text matrix exchange: "rows cols" header then row-major entries.
void write_matrix(const std::string& path, const Mat& a);
Mat read_matrix(const std::string& path);

}  // namespace nlstab
