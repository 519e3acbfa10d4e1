#include "nlstab/linalg.hpp"

#include <lapacke.h>

#include <cmath>
#include <vector>

namespace nlstab::linalg {

EigPairs eig_nonsym(const Mat& a, bool vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  if (a.cols() != n) throw EigensolverFailure("eig_nonsym: matrix not square");
  Mat work = a;
  Vec wr(n), wi(n);
  Mat vr = vectors ? Mat(n, n) : Mat(1, 1);
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', vectors ? 'V' : 'N', n, work.data(), n, wr.data(),
                    wi.data(), nullptr, 1, vr.data(), vectors ? n : 1);
  if (info != 0) throw EigensolverFailure("dgeev failed, info=" + std::to_string(info));

  EigPairs out;
  out.values.resize(n);
  if (vectors) out.vectors.resize(n, n);
  for (lapack_int j = 0; j < n; ++j) {
    out.values[j] = cplx(wr[j], wi[j]);
    if (!vectors) continue;
    if (wi[j] > 0.0 && j + 1 < n) {
      out.vectors.col(j) = vr.col(j).cast<cplx>() + cplx(0, 1) * vr.col(j + 1).cast<cplx>();
    } else if (wi[j] < 0.0 && j > 0) {
      out.vectors.col(j) = vr.col(j - 1).cast<cplx>() - cplx(0, 1) * vr.col(j).cast<cplx>();
    } else {
      out.vectors.col(j) = vr.col(j).cast<cplx>();
    }
  }
  return out;
}

SymEig eig_sym_tridiag(const Vec& diag, double off, bool vectors) {
  const lapack_int n = static_cast<lapack_int>(diag.size());
  SymEig out;
  out.values = diag;
  std::vector<double> e(std::max<lapack_int>(1, n - 1), off);
  lapack_int info;
  if (vectors) {
    out.vectors.resize(n, n);
    info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, out.values.data(), e.data(),
                          out.vectors.data(), n);
  } else {
    info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'N', n, out.values.data(), e.data(), nullptr, 1);
  }
  if (info != 0) throw EigensolverFailure("dstevd failed, info=" + std::to_string(info));
  return out;
}

SymEig eig_sym(const Mat& a, bool vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  SymEig out;
  out.vectors = a;
  out.values.resize(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'L', n,
                                         out.vectors.data(), n, out.values.data());
  if (info != 0) throw EigensolverFailure("dsyevd failed, info=" + std::to_string(info));
  if (!vectors) out.vectors.resize(0, 0);
  return out;
}

SymEig eig_sym_smallest(const Mat& a, int k, bool vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  k = std::min<int>(k, n);
  Mat work = a;
  SymEig out;
  out.values.resize(n);
  Mat z(n, k);
  std::vector<lapack_int> isuppz(2 * std::max(1, k));
  lapack_int m = 0;
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'I', 'L', n, work.data(), n, 0.0, 0.0, 1, k,
      0.0, &m, out.values.data(), z.data(), n, isuppz.data());
  if (info != 0) throw EigensolverFailure("dsyevr failed, info=" + std::to_string(info));
  out.values.conservativeResize(m);
  if (vectors) out.vectors = z.leftCols(m);
  return out;
}

int tridiag_count_below(const Vec& diag, double off, double tau) {
  const double b2 = off * off;
  int count = 0;
  double d = 1.0;
  for (int i = 0; i < diag.size(); ++i) {
    d = (diag[i] - tau) - (i > 0 ? b2 / d : 0.0);
    if (d == 0.0) d = 1e-300;
    if (d < 0.0) ++count;
  }
  return count;
}

Vec singular_values(const Mat& a) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  Mat work = a;
  Vec s(std::min(m, n));
  std::vector<double> superb(std::max<lapack_int>(1, std::min(m, n) - 1));
  const lapack_int info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'N', 'N', m, n, work.data(), m,
                                         s.data(), nullptr, 1, nullptr, 1, superb.data());
  if (info != 0) throw EigensolverFailure("dgesvd failed, info=" + std::to_string(info));
  return s;
}

namespace {

template <typename V, typename S>
V tridiag_solve_impl(const V& diag, S off, const V& rhs) {
  const auto n = diag.size();
  V c(n), x(n);
  S piv = diag[0];
  if (piv == S(0)) throw SingularLinearization("tridiagonal solve hit a zero pivot");
  x[0] = rhs[0] / piv;
  for (Eigen::Index i = 1; i < n; ++i) {
    c[i - 1] = off / piv;
    piv = diag[i] - off * c[i - 1];
    if (piv == S(0)) throw SingularLinearization("tridiagonal solve hit a zero pivot");
    x[i] = (rhs[i] - off * x[i - 1]) / piv;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] -= c[i] * x[i + 1];
  return x;
}

}  // namespace

Vec tridiag_solve(const Vec& diag, double off, const Vec& rhs) {
  return tridiag_solve_impl<Vec, double>(diag, off, rhs);
}

CVec tridiag_solve(const CVec& diag, cplx off, const CVec& rhs) {
  return tridiag_solve_impl<CVec, cplx>(diag, off, rhs);
}

Vec singular_values(const CMat& a) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  CMat work = a;
  Vec s(std::min(m, n));
  std::vector<double> superb(std::max<lapack_int>(1, std::min(m, n) - 1));
  const lapack_int info = LAPACKE_zgesvd(
      LAPACK_COL_MAJOR, 'N', 'N', m, n, reinterpret_cast<lapack_complex_double*>(work.data()), m,
      s.data(), nullptr, 1, nullptr, 1, superb.data());
  if (info != 0) throw EigensolverFailure("zgesvd failed, info=" + std::to_string(info));
  return s;
}

}  // namespace nlstab::linalg
