#pragma once

#include <limits>
#include <string>
#include <vector>

#include "nlstab/operators.hpp"

namespace nlstab {

enum class ModeClass { gap_discrete, kernel, continuum_artifact, off_axis, ambiguous };
enum class SignatureTag { plus, minus, degenerate, not_applicable };

// One eigenvalue of the doubled linearization.  Eigenvectors are kept (and
// refined) only for gap-discrete and off-axis modes; artifact entries carry
// the value and classification alone.
struct EigMode {
  cplx lambda;
  CVec xi;  // (r, rbar) doubled v-vector, unit pairing for signed gap modes
  ModeClass cls = ModeClass::ambiguous;
  SignatureTag signature = SignatureTag::not_applicable;
  double sigma3_norm = 0.0;  // <xi, sigma3 xi> at unit Euclidean norm
  double residual = 0.0;     // |H xi - lambda xi| at unit norm
  int cluster_size = 1;
  bool multiplicity_ok = true;

  int sig() const {
    if (signature == SignatureTag::plus) return 1;
    if (signature == SignatureTag::minus) return -1;
    return 0;
  }
};

struct SpectralOptions {
  std::string method = "auto";  // auto | product | full
  int product_threshold = 700;  // auto: full below, product of the blocks above
  double edge_tol = 1e-3;       // * omega; |lambda| >= omega*(1 - edge_tol) is continuum artifact
  double kernel_tol = 1e-6;     // * omega
  double kernel_band = 1e-4;    // * omega; sigma3-null modes below this are kernel splits
  double imag_tol = 1e-8;       // * omega; below: treated as real
  double off_axis_tol = 1e-6;   // * omega; above: genuine off-axis candidate
  double signature_tol = 1e-6;  // on <xi, sigma3 xi> at unit norm
  double pairing_tol = 1e-6;    // symmetry defect above this throws
  double refine_tol = 1e-10;
  int refine_iters = 16;
  bool refine = true;
};

struct Spectrum {
  double omega = 0.0;
  std::vector<EigMode> modes;     // every computed eigenvalue, sorted by (Re, Im)
  double pairing_defect = 0.0;      // max_i min_j |l_i + l_j| over the solver output
  double conjugation_defect = 0.0;  // max_i min_j |l_i - conj(l_j)|
  double refined_pairing_defect = 0.0;  // from independently refined +/- partners
  std::string method;

  std::vector<EigMode> gap_modes() const;   // positive real gap modes, ascending
  std::vector<EigMode> off_axis_modes() const;
  int count(ModeClass c) const;
};

Spectrum discrete_spectrum(const Linearization& lin, const SpectralOptions& opts = {});

// Geometric null dimensions of (a - mu) and (a - mu)^2 by singular-value rank
// gap; used for the algebraic-vs-geometric multiplicity check on clustered
// eigenvalues of the block product.
std::pair<int, int> jordan_defect(const Mat& a, cplx mu, double rank_tol = 1e-10);

struct KernelReport {
  int null_plus = 0;         // near-zero eigenvalues of the plus block
  int null_minus = 0;
  int dim_kernel = 0;        // of the doubled operator
  int dim_generalized = 0;
  double angle = 0.0;        // rad, numerical kernel chain vs the symmetry vectors
  double res_phase = 0.0;    // |H sym_phase| relative
  double res_scale = 0.0;    // |H sym_scale + sym_phase| relative
  double pairing = 0.0;      // <sym_scale, sym_phase's sigma3-dual> = d(mass)/d(omega)
  bool clean = false;        // dimension 2, residuals and angle within tolerance
  CVec phase_mode;           // sigma3 Phi, doubled v-vector
  CVec scale_mode;           // d/domega Phi, doubled v-vector
};

struct KernelOptions {
  double null_tol = 1e-6;     // * omega, eigenvalue magnitude counted as kernel
  double residual_tol = 1e-6;
  double angle_tol = 1e-4;    // rad
  double pairing_tol = 1e-8;  // relative floor for the chain-terminating pairing
  double gap_guard = 1e-6;    // * omega; smallest non-kernel eigenvalue below this is flagged
};

KernelReport generalized_kernel(const Linearization& lin, const Profile& p,
                                const KernelOptions& opts = {});

struct NegativeIndex {
  int n_plus = 0;
  int n_minus = 0;
  int total() const { return n_plus + n_minus; }
};

NegativeIndex negative_index(const ScalarOperator& plus, const ScalarOperator& minus,
                             double zero_band = 1e-8);

// Minimum of <sigma3 H u, u> / <u, u> over the orthogonal complement of the
// given constraint vectors ((r, rbar) doubled basis).  Returns +inf when the
// complement is trivial.
double quadratic_form_min(const Linearization& lin, const std::vector<CVec>& constraints);

struct StabilityReport {
  bool real_spectrum = false;
  double worst_off_axis_im = 0.0;
  bool signatures_ok = false;
  std::vector<std::pair<double, int>> gap_signatures;  // (lambda, s)
  bool kernel_ok = false;
  int dim_generalized = 0;
  double kernel_angle = 0.0;
  int negative_index = 0;
  double quadratic_form_minimum = 0.0;  // NaN when not computed
  double mass_slope = 0.0;
  int node_count = 0;
  std::string verdict;       // serialized values listed with the implementation
  bool inconsistency = false;  // nodal profile passed all three checks
  std::string mechanism;
};

StabilityReport stability_verdict(const Spectrum& spec, const KernelReport& kernel,
                                  const NegativeIndex& neg, double mass_slope, int node_count,
                                  double qform_min = std::numeric_limits<double>::quiet_NaN());

struct ThresholdBranch {
  std::vector<double> eps;
  std::vector<double> lambda;
  double slope = 0.0;   // d log(omega - lambda) / d log eps
  double coeff = 0.0;   // fitted linear coefficient of (omega - lambda) in eps
  bool absorbed = false;  // branch left the gap during the scan
};

struct ThresholdScanResult {
  std::vector<ThresholdBranch> branches;
  std::vector<double> d_predicted;  // <sigma3 U1 psi, psi> / <psi, sigma3 psi> per supplied mode
};

ThresholdScanResult threshold_scan(const Linearization& base, const BumpPerturbation& u1,
                                   const std::vector<double>& epsilons,
                                   const std::vector<CVec>& threshold_modes,
                                   const SpectralOptions& opts = {});

// conversions between the (r, rbar) pair basis and the (Re, Im) component basis
CVec to_pair_basis(const CVec& cartesian);
CVec to_cartesian_basis(const CVec& pair);

}  // namespace nlstab
