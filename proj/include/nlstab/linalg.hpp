#pragma once

#include "nlstab/types.hpp"

namespace nlstab::linalg {

struct EigPairs {
  CVec values;
  CMat vectors;  // column k is the eigenvector for values[k]
};

// Dense nonsymmetric eigendecomposition (right eigenvectors).
EigPairs eig_nonsym(const Mat& a, bool vectors = true);

struct SymEig {
  Vec values;   // ascending
  Mat vectors;  // empty unless requested
};

// Symmetric tridiagonal with constant off-diagonal.
SymEig eig_sym_tridiag(const Vec& diag, double off, bool vectors);

// Dense symmetric.
SymEig eig_sym(const Mat& a, bool vectors);

// Smallest `k` eigenvalues (and vectors) of a dense symmetric matrix.
SymEig eig_sym_smallest(const Mat& a, int k, bool vectors);

// Number of eigenvalues of the constant-off-diagonal symmetric tridiagonal
// matrix strictly below tau (Sturm / LDL pivot count).
int tridiag_count_below(const Vec& diag, double off, double tau);

// Singular values, descending.
Vec singular_values(const Mat& a);
Vec singular_values(const CMat& a);

// Thomas solve of (tridiagonal with constant off-diagonal) x = rhs.
Vec tridiag_solve(const Vec& diag, double off, const Vec& rhs);
CVec tridiag_solve(const CVec& diag, cplx off, const CVec& rhs);

}  // namespace nlstab::linalg
