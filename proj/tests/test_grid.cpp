#include <doctest.h>

#include <cmath>

#include "nlstab/grid.hpp"

using namespace nlstab;

TEST_CASE("uniform grid places nodes at i*h through r_max") {
  const auto g = RadialGrid::uniform(30.0, 600);
  CHECK(g.n == 600);
  CHECK(g.h == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(g.r[0] == doctest::Approx(g.h).epsilon(1e-14));
  CHECK(g.r[g.n - 1] == doctest::Approx(30.0).epsilon(1e-14));
  for (int i = 1; i < g.n; ++i)
    CHECK(g.r[i] - g.r[i - 1] == doctest::Approx(g.h).epsilon(1e-12));
}

TEST_CASE("quadrature weights are 4 pi r^2 h") {
  const auto g = RadialGrid::uniform(12.0, 200);
  for (int i = 0; i < g.n; i += 37)
    CHECK(g.w[i] == doctest::Approx(4.0 * M_PI * g.r[i] * g.r[i] * g.h).epsilon(1e-14));
}

TEST_CASE("integrate matches the closed-form Gaussian mass") {
  // int |exp(-r^2/2)|^2 over R^3 = pi^(3/2)
  const auto g = RadialGrid::uniform(16.0, 3200);
  Vec u(g.n);
  for (int i = 0; i < g.n; ++i) u[i] = std::exp(-0.5 * g.r[i] * g.r[i]);
  const double exact = std::pow(M_PI, 1.5);
  CHECK(g.integrate(u.cwiseProduct(u)) == doctest::Approx(exact).epsilon(1e-6));
}

TEST_CASE("dot_v equals the weighted u-form inner product") {
  const auto g = RadialGrid::uniform(8.0, 160);
  Vec a(g.n), b(g.n);
  for (int i = 0; i < g.n; ++i) {
    a[i] = std::exp(-g.r[i]);
    b[i] = 1.0 / (1.0 + g.r[i] * g.r[i]);
  }
  const Vec va = g.to_v(a), vb = g.to_v(b);
  double weighted = 0.0;
  for (int i = 0; i < g.n; ++i) weighted += g.w[i] * a[i] * b[i];
  CHECK(g.dot_v(va, vb) == doctest::Approx(weighted).epsilon(1e-12));
}

TEST_CASE("complex pairing conjugates the second slot") {
  const auto g = RadialGrid::uniform(5.0, 50);
  CVec a(g.n), b(g.n);
  for (int i = 0; i < g.n; ++i) {
    a[i] = cplx(std::exp(-g.r[i]), 0.3 * g.r[i] * std::exp(-g.r[i]));
    b[i] = cplx(1.0, -0.5) * std::exp(-0.7 * g.r[i]);
  }
  const cplx ab = g.dot_v(a, b);
  // <a, i b> = -i <a, b> under a second-slot conjugation
  const CVec ib = cplx(0.0, 1.0) * b;
  const cplx aib = g.dot_v(a, ib);
  CHECK(std::abs(aib + cplx(0.0, 1.0) * ab) < 1e-14 * std::abs(ab));
  // conjugate symmetry
  const cplx ba = g.dot_v(b, a);
  CHECK(std::abs(ba - std::conj(ab)) < 1e-14 * std::abs(ab));
}

TEST_CASE("u/v conversions are inverse") {
  const auto g = RadialGrid::uniform(10.0, 128);
  Vec u(g.n);
  for (int i = 0; i < g.n; ++i) u[i] = std::cos(g.r[i]) * std::exp(-g.r[i]);
  CHECK((g.to_u(g.to_v(u)) - u).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("standard grid scales point count and tracks omega") {
  const auto g1 = RadialGrid::standard(1.0);
  CHECK(g1.r_max == doctest::Approx(30.0));
  CHECK(g1.n == 2000);
  const auto g2 = RadialGrid::standard(0.25, 2.0);
  CHECK(g2.r_max == doctest::Approx(60.0));
  CHECK(g2.n == 4000);
}

TEST_CASE("compatible requires matching shape") {
  const auto a = RadialGrid::uniform(30.0, 600);
  const auto b = RadialGrid::uniform(30.0, 600);
  const auto c = RadialGrid::uniform(30.0, 601);
  CHECK(a.compatible(b));
  CHECK(!a.compatible(c));
}
