#include "nlstab/operators.hpp"

#include <cmath>
#include <fstream>
#include <vector>

namespace nlstab {

namespace {

// tridiagonal action with Dirichlet ghosts on both ends
template <typename V>
V tridiag_apply(const Vec& diag, double off, const V& x) {
  const Eigen::Index n = x.size();
  V y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    typename V::Scalar acc = diag[i] * x[i];
    if (i > 0) acc += off * x[i - 1];
    if (i + 1 < n) acc += off * x[i + 1];
    y[i] = acc;
  }
  return y;
}

}  // namespace

Vec ScalarOperator::apply(const Vec& v) const {
  Vec y = tridiag_apply(diag, off, v);
  if (extra) y += (*extra) * v;
  return y;
}

CVec ScalarOperator::apply(const CVec& v) const {
  CVec y = tridiag_apply(diag, off, v);
  if (extra) y += (*extra) * v;
  return y;
}

Mat ScalarOperator::dense() const {
  const Eigen::Index n = diag.size();
  Mat a = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = diag[i];
    if (i + 1 < n) {
      a(i, i + 1) = off;
      a(i + 1, i) = off;
    }
  }
  if (extra) a += *extra;
  return a;
}

linalg::SymEig ScalarOperator::eigensystem(bool vectors) const {
  if (tridiagonal()) return linalg::eig_sym_tridiag(diag, off, vectors);
  return linalg::eig_sym(dense(), vectors);
}

int ScalarOperator::count_below(double tau) const {
  if (tridiagonal()) return linalg::tridiag_count_below(diag, off, tau);
  const Vec vals = linalg::eig_sym(dense(), false).values;
  int c = 0;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (vals[i] < tau) ++c;
  return c;
}

double ScalarOperator::min_eigenvalue() const {
  if (tridiagonal()) return linalg::eig_sym_tridiag(diag, off, false).values[0];
  return linalg::eig_sym_smallest(dense(), 1, false).values[0];
}

ScalarOperator make_scalar_operator(const RadialGrid& grid, double omega, const Vec& potential) {
  if (potential.size() != grid.n) throw GridTooCoarse("potential length does not match grid");
  ScalarOperator op;
  op.grid = grid;
  const double h2 = grid.h * grid.h;
  op.off = -1.0 / h2;
  op.diag = Vec::Constant(grid.n, 2.0 / h2 + omega) + potential;
  return op;
}

ScalarPair split_blocks(const Profile& p) {
  const Eigen::Index n = p.grid.n;
  Vec vp(n), vm(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = p.phi[i] * p.phi[i];
    const double b = p.nl.beta(s);
    vm[i] = -b;
    vp[i] = -b - 2.0 * s * p.nl.beta1(s);
  }
  return {make_scalar_operator(p.grid, p.omega, vp), make_scalar_operator(p.grid, p.omega, vm)};
}

CVec Linearization::apply(const CVec& x) const {
  const Eigen::Index n = grid.n;
  if (x.size() != 2 * n) throw GridTooCoarse("doubled vector length mismatch");
  const CVec a = x.head(n);
  const CVec b = x.tail(n);
  // L0 = (plus+minus)/2, M = (minus-plus)/2; H = [[L0, -M], [M, -L0]]
  const CVec pa = plus.apply(a);
  const CVec ma = minus.apply(a);
  const CVec pb = plus.apply(b);
  const CVec mb = minus.apply(b);
  CVec y(2 * n);
  y.head(n) = 0.5 * (pa + ma) - 0.5 * (mb - pb);
  y.tail(n) = 0.5 * (ma - pa) - 0.5 * (pb + mb);
  return y;
}

CVec Linearization::apply_sym(const CVec& x) const {
  CVec y = apply(x);
  y.tail(x.size() / 2) *= -1.0;
  return y;
}

Mat Linearization::dense_generator() const {
  const Eigen::Index n = grid.n;
  Mat k = Mat::Zero(2 * n, 2 * n);
  k.topRightCorner(n, n) = minus.dense();
  k.bottomLeftCorner(n, n) = -plus.dense();
  return k;
}

Mat Linearization::dense_doubled() const {
  const Eigen::Index n = grid.n;
  const Mat p = plus.dense();
  const Mat m = minus.dense();
  Mat h(2 * n, 2 * n);
  h.topLeftCorner(n, n) = 0.5 * (p + m);
  h.topRightCorner(n, n) = -0.5 * (m - p);
  h.bottomLeftCorner(n, n) = 0.5 * (m - p);
  h.bottomRightCorner(n, n) = -0.5 * (p + m);
  return h;
}

Mat Linearization::product() const { return minus.dense() * plus.dense(); }

Eigen::SparseMatrix<cplx> Linearization::shifted(cplx z) const {
  if (!tridiagonal())
    throw IllConditioned("sparse shift requires tridiagonal blocks");
  const Eigen::Index n = grid.n;
  const double offp = plus.off;
  const double offm = minus.off;
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(8 * static_cast<size_t>(n));
  auto push = [&trip](Eigen::Index i, Eigen::Index j, cplx val) {
    if (val != cplx(0.0, 0.0)) trip.emplace_back(i, j, val);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const double l0 = 0.5 * (plus.diag[i] + minus.diag[i]);
    const double m = 0.5 * (minus.diag[i] - plus.diag[i]);
    push(i, i, cplx(l0, 0.0) - z);
    push(n + i, n + i, cplx(-l0, 0.0) - z);
    push(i, n + i, cplx(-m, 0.0));
    push(n + i, i, cplx(m, 0.0));
    if (i + 1 < n) {
      const double o0 = 0.5 * (offp + offm);
      const double om = 0.5 * (offm - offp);
      push(i, i + 1, cplx(o0, 0.0));
      push(i + 1, i, cplx(o0, 0.0));
      push(n + i, n + i + 1, cplx(-o0, 0.0));
      push(n + i + 1, n + i, cplx(-o0, 0.0));
      push(i, n + i + 1, cplx(-om, 0.0));
      push(i + 1, n + i, cplx(-om, 0.0));
      push(n + i, i + 1, cplx(om, 0.0));
      push(n + i + 1, i, cplx(om, 0.0));
    }
  }
  Eigen::SparseMatrix<cplx> s(2 * n, 2 * n);
  s.setFromTriplets(trip.begin(), trip.end());
  s.makeCompressed();
  return s;
}

Linearization build_linearization(const Profile& p) {
  ScalarPair blocks = split_blocks(p);
  return {p.grid, p.omega, std::move(blocks.plus), std::move(blocks.minus)};
}

Linearization linearization_from_blocks(const RadialGrid& grid, double omega,
                                        const ScalarOperator& plus, const ScalarOperator& minus) {
  if (plus.diag.size() != grid.n || minus.diag.size() != grid.n)
    throw GridTooCoarse("block size does not match grid");
  return {grid, omega, plus, minus};
}

BumpPerturbation make_bump(const RadialGrid& grid, double f_amp, double f_center, double f_width,
                           double g_amp, double g_center, double g_width) {
  auto bump = [&grid](double amp, double c, double w) {
    Vec b = Vec::Zero(grid.n);
    if (amp == 0.0) return b;
    if (w <= 0.0) throw ConfigError("bump width must be positive");
    for (Eigen::Index i = 0; i < grid.n; ++i) {
      const double t = (grid.r[i] - c) / w;
      if (std::abs(t) < 6.0) b[i] = amp * std::exp(-0.5 * t * t);
    }
    return b;
  };
  return {bump(f_amp, f_center, f_width), bump(g_amp, g_center, g_width)};
}

Linearization perturbed(const Linearization& base, const BumpPerturbation& u1, double eps) {
  Linearization out = base;
  // sigma3*f shifts both blocks by f; i*sigma2*g couples with opposite signs:
  // plus gains f - g, minus gains f + g.
  out.plus.diag += eps * (u1.f - u1.g);
  out.minus.diag += eps * (u1.f + u1.g);
  return out;
}

Eigen::Matrix2cd free_resolvent_kernel(double omega, cplx zeta, double d) {
  if (d <= 0.0) throw IllConditioned("kernel separation must be positive");
  Eigen::Matrix2cd k = Eigen::Matrix2cd::Zero();
  const double pref = 1.0 / (4.0 * M_PI * d);
  const cplx zeta2 = std::sqrt(cplx(2.0 * omega, 0.0) - zeta * zeta);
  k(0, 0) = pref * std::exp(-zeta * d);
  k(1, 1) = -pref * std::exp(-zeta2 * d);
  return k;
}

void write_matrix(const std::string& path, const Mat& a) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out.precision(17);
  out << a.rows() << " " << a.cols() << "\n";
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out << a(i, j);
      out << (j + 1 < a.cols() ? ' ' : '\n');
    }
  }
  if (!out) throw ConfigError("failed writing " + path);
}

Mat read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows <= 0 || cols <= 0)
    throw ConfigError("bad matrix header in " + path);
  Mat a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(in >> a(i, j))) throw ConfigError("truncated matrix in " + path);
  return a;
}

}  // namespace nlstab
