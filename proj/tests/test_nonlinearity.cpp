#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "nlstab/nonlinearity.hpp"
#include "nlstab/types.hpp"

using namespace nlstab;

namespace {

// centered fourth-order stencil, good to ~1e-10 on these smooth ranges
double fd1(const std::function<double(double)>& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

}  // namespace

TEST_CASE("closed forms of the supported families") {
  const auto cub = Nonlinearity::cubic();
  const auto sat = Nonlinearity::saturable();
  const auto cq = Nonlinearity::cubic_quintic(0.8, -0.05);
  const auto pp = Nonlinearity::pure_power(2.5);
  for (const double s : {0.0, 0.3, 1.7, 9.0}) {
    CHECK(cub.beta(s) == doctest::Approx(s).epsilon(1e-15));
    CHECK(sat.beta(s) == doctest::Approx(s / (1.0 + s)).epsilon(1e-15));
    CHECK(cq.beta(s) == doctest::Approx(0.8 * s - 0.05 * s * s).epsilon(1e-15));
    CHECK(pp.beta(s) == doctest::Approx(std::pow(s, 0.75)).epsilon(1e-14));
  }
}

TEST_CASE("derivative chain agrees with finite differences") {
  std::vector<Nonlinearity> fams = {
      Nonlinearity::cubic(), Nonlinearity::saturable(), Nonlinearity::cubic_quintic(1.0, 0.02),
      Nonlinearity::pure_power(3.8)};
  for (const auto& nl : fams) {
    for (const double s : {0.4, 1.3, 4.2}) {
      const double h = 1e-3 * std::max(1.0, s);
      CHECK(nl.beta1(s) ==
            doctest::Approx(fd1([&](double x) { return nl.beta(x); }, s, h)).epsilon(1e-8));
      CHECK(nl.beta2(s) ==
            doctest::Approx(fd1([&](double x) { return nl.beta1(x); }, s, h)).epsilon(1e-8));
      CHECK(nl.beta3(s) ==
            doctest::Approx(fd1([&](double x) { return nl.beta2(x); }, s, h)).epsilon(1e-7));
    }
  }
}

TEST_CASE("antiderivative differentiates back to beta") {
  std::vector<Nonlinearity> fams = {
      Nonlinearity::cubic(), Nonlinearity::saturable(), Nonlinearity::cubic_quintic(0.5, -0.01),
      Nonlinearity::pure_power(1.5)};
  for (const auto& nl : fams) {
    for (const double s : {0.2, 1.0, 6.5}) {
      const double h = 1e-4 * std::max(1.0, s);
      CHECK(fd1([&](double x) { return nl.antiderivative(x); }, s, h) ==
            doctest::Approx(nl.beta(s)).epsilon(1e-9));
    }
    CHECK(nl.antiderivative(0.0) == 0.0);
  }
}

TEST_CASE("parse resolves names and validates the exponent") {
  CHECK(Nonlinearity::parse("cubic", 0, 0, 0).kind == Nonlinearity::Kind::cubic);
  CHECK(Nonlinearity::parse("saturable", 0, 0, 0).kind == Nonlinearity::Kind::saturable);
  CHECK(Nonlinearity::parse("pure_power", 2.0, 0, 0).p == doctest::Approx(2.0));
  const auto cq = Nonlinearity::parse("cubic_quintic", 0, 0.9, -0.1);
  CHECK(cq.c3 == doctest::Approx(0.9));
  CHECK(cq.c5 == doctest::Approx(-0.1));
  CHECK_THROWS(Nonlinearity::parse("septic", 0, 0, 0));
  CHECK_THROWS(Nonlinearity::pure_power(1.0));
  CHECK_THROWS(Nonlinearity::pure_power(5.0));
}

TEST_CASE("smoothness gate for the expansion machinery") {
  // analytic families pass any order
  CHECK(Nonlinearity::cubic().smooth_to(3));
  CHECK(Nonlinearity::saturable().smooth_to(3));
  CHECK(Nonlinearity::cubic_quintic(1.0, -0.02).smooth_to(3));
  // integer half-exponent: beta is a polynomial
  CHECK(Nonlinearity::pure_power(3.0).smooth_to(3));
  // fractional half-exponent: derivatives of beta blow up at s = 0
  const auto pp = Nonlinearity::pure_power(1.5);  // beta = s^(1/4)
  CHECK(!pp.smooth_to(1));
  CHECK(!pp.smooth_to(2));
  const auto pp2 = Nonlinearity::pure_power(2.0);  // beta = s^(1/2)
  CHECK(pp2.smooth_to(0));
  CHECK(!pp2.smooth_to(1));
}

TEST_CASE("names round-trip through parse") {
  for (const char* name : {"cubic", "saturable", "cubic_quintic", "pure_power"}) {
    const auto nl = Nonlinearity::parse(name, 2.5, 1.0, -0.02);
    CHECK(nl.name() == name);
  }
}
