#pragma once

#include <array>
#include <map>
#include <vector>

#include "nlstab/spectral.hpp"

namespace nlstab {

using MultiIndex = std::vector<int>;

// Taylor data of the nonlinear remainder about the profile: vector-valued
// R_{m,n} (order z^m zbar^n of the remainder itself) and 2x2 multiplication
// operators A_{m,n} (the part linear in the continuum component).  Both are
// exact polynomial coefficients, assembled by truncated-polynomial arithmetic
// in the mode amplitudes; no finite differencing.
struct TaylorCoefficients {
  int order = 0;
  int n_modes = 0;
  std::map<std::pair<MultiIndex, MultiIndex>, CVec> r;                 // doubled v-vectors
  std::map<std::pair<MultiIndex, MultiIndex>, std::array<Vec, 4>> a;   // {a11, a12, a21, a22}

  const CVec& r_at(const MultiIndex& m, const MultiIndex& n) const;
  const std::array<Vec, 4>& a_at(const MultiIndex& m, const MultiIndex& n) const;
  static CVec apply(const std::array<Vec, 4>& op, const CVec& x);
};

// Real first/second components of a gap mode after phase alignment.
struct RealMode {
  Vec first;
  Vec second;
  double lambda = 0.0;
  int signature = 0;
};

RealMode realify_mode(const EigMode& mode, double imag_tol = 1e-7);

TaylorCoefficients taylor_coefficients(const Profile& p, const std::vector<EigMode>& modes,
                                       int order);

struct ResonanceSet {
  std::vector<MultiIndex> members;
  std::vector<double> lambda;
  double omega = 0.0;
  std::vector<int> n_caps;  // per mode: largest N_j with N_j lambda_j < omega
  int n_max = 0;
};

ResonanceSet resonance_set(const std::vector<double>& lambda, double omega, int cap = 12,
                           double tol = 1e-9);

// sigma3-biorthogonal projection onto the continuum: identity minus the
// generalized-kernel pair and the discrete-mode pairs.
struct ContinuumProjector {
  RadialGrid grid;
  std::vector<CVec> vectors;  // projector terms: sum_k vectors[k] <., duals[k]>
  std::vector<CVec> duals;
  CVec apply(const CVec& x) const;
};

ContinuumProjector make_projector(const RadialGrid& grid, const KernelReport& kernel,
                                  const std::vector<EigMode>& modes);

// One resolvent application (H - z)^{-1} rhs via a sparse factorization.
CVec resolvent_apply(const Linearization& lin, cplx z, const CVec& rhs,
                     const Vec* absorber = nullptr);

struct FgrOptions {
  std::vector<double> eps_factors = {1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3, 3.125e-3};
  double plateau_rel = 0.10;
  bool absorber = false;          // complex absorbing layer instead of extrapolation
  double absorber_strength = 1.0; // * omega at the outer edge
  double absorber_start = 0.8;    // * r_max
};

struct FgrDiagnostics {
  std::vector<std::array<double, 3>> trace;  // (epsilon, re, im) per solve
  std::vector<double> extrapolated;
  double rho0 = 0.0;
};

struct FgrValue {
  double gamma = 0.0;
  FgrDiagnostics diag;
};

FgrValue fgr_coefficient(const Linearization& lin, const TaylorCoefficients& coeffs,
                         const ContinuumProjector& pc, const std::vector<RealMode>& modes,
                         const MultiIndex& m, int j, const FgrOptions& opts = {});

double fgr_free_oracle(const RadialGrid& grid, const Vec& f1, double rho0);

// Limiting-absorption value of the free-field quadratic form, in the same
// normalization as fgr_free_oracle (the (2 pi)^3 / pi conversion applied).
double free_field_gamma(const RadialGrid& grid, double omega, const Vec& f1, double lambda_cap,
                        const FgrOptions& opts = {});

struct HypothesisProbe {
  double lhs = 0.0;   // fgr_coefficient value
  double rhs = 0.0;   // (m_j + 1) * Im of the same-vector resolvent form
  double relative_gap = 0.0;
};

HypothesisProbe hypothesis_probe(const Linearization& lin, const TaylorCoefficients& coeffs,
                                 const ContinuumProjector& pc, const std::vector<RealMode>& modes,
                                 const MultiIndex& m, int j, const FgrOptions& opts = {});

struct FgrEntry {
  MultiIndex m;  // resonance member M = m + delta_j
  int j = 0;
  double gamma = 0.0;
  double rho0 = 0.0;
};

struct FgrMatrix {
  std::vector<FgrEntry> entries;
  ResonanceSet res;
  double omega = 0.0;

  double at(const MultiIndex& full, int j) const;  // keyed by (M, j)
};

FgrMatrix compute_fgr_matrix(const Linearization& lin, const Profile& p,
                             const std::vector<EigMode>& modes, const KernelReport& kernel,
                             const FgrOptions& opts = {});

}  // namespace nlstab
