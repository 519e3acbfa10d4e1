#include "nlstab/nonlinearity.hpp"

#include <cmath>

namespace nlstab {

Nonlinearity Nonlinearity::cubic() {
  Nonlinearity nl;
  nl.kind = Kind::cubic;
  nl.p = 3.0;
  return nl;
}

Nonlinearity Nonlinearity::pure_power(double p) {
  if (!(p > 1.0 && p < 5.0)) throw NoSolution("pure power exponent must satisfy 1 < p < 5");
  Nonlinearity nl;
  nl.kind = Kind::pure_power;
  nl.p = p;
  return nl;
}

Nonlinearity Nonlinearity::saturable() {
  Nonlinearity nl;
  nl.kind = Kind::saturable;
  return nl;
}

Nonlinearity Nonlinearity::cubic_quintic(double c3, double c5) {
  Nonlinearity nl;
  nl.kind = Kind::cubic_quintic;
  nl.c3 = c3;
  nl.c5 = c5;
  return nl;
}

Nonlinearity Nonlinearity::parse(const std::string& name, double p, double c3, double c5) {
  if (name == "cubic") return cubic();
  if (name == "pure_power") return pure_power(p);
  if (name == "saturable") return saturable();
  if (name == "cubic_quintic") return cubic_quintic(c3, c5);
  throw ConfigError("unknown nonlinearity: " + name);
}

double Nonlinearity::beta(double s) const {
  switch (kind) {
    case Kind::cubic: return s;
    case Kind::pure_power: return std::pow(s, 0.5 * (p - 1.0));
    case Kind::saturable: return s / (1.0 + s);
    case Kind::cubic_quintic: return c3 * s + c5 * s * s;
  }
  return 0.0;
}

double Nonlinearity::beta1(double s) const {
  switch (kind) {
    case Kind::cubic: return 1.0;
    case Kind::pure_power: {
      const double q = 0.5 * (p - 1.0);
      return q * std::pow(s, q - 1.0);
    }
    case Kind::saturable: {
      const double d = 1.0 + s;
      return 1.0 / (d * d);
    }
    case Kind::cubic_quintic: return c3 + 2.0 * c5 * s;
  }
  return 0.0;
}

double Nonlinearity::beta2(double s) const {
  switch (kind) {
    case Kind::cubic: return 0.0;
    case Kind::pure_power: {
      const double q = 0.5 * (p - 1.0);
      return q * (q - 1.0) * std::pow(s, q - 2.0);
    }
    case Kind::saturable: {
      const double d = 1.0 + s;
      return -2.0 / (d * d * d);
    }
    case Kind::cubic_quintic: return 2.0 * c5;
  }
  return 0.0;
}

double Nonlinearity::beta3(double s) const {
  switch (kind) {
    case Kind::cubic: return 0.0;
    case Kind::pure_power: {
      const double q = 0.5 * (p - 1.0);
      return q * (q - 1.0) * (q - 2.0) * std::pow(s, q - 3.0);
    }
    case Kind::saturable: {
      const double d = 1.0 + s;
      return 6.0 / (d * d * d * d);
    }
    case Kind::cubic_quintic: return 0.0;
  }
  return 0.0;
}

double Nonlinearity::antiderivative(double s) const {
  switch (kind) {
    case Kind::cubic: return 0.5 * s * s;
    case Kind::pure_power: {
      const double q = 0.5 * (p - 1.0);
      return std::pow(s, q + 1.0) / (q + 1.0);
    }
    case Kind::saturable: return s - std::log1p(s);
    case Kind::cubic_quintic: return 0.5 * c3 * s * s + c5 * s * s * s / 3.0;
  }
  return 0.0;
}

bool Nonlinearity::smooth_to(int order) const {
  if (kind != Kind::pure_power) return true;
  // s^q has bounded k-th derivative near 0 only when q is large enough;
  // integer q (odd p) is smooth to any order.
  const double q = 0.5 * (p - 1.0);
  if (std::abs(q - std::round(q)) < 1e-12) return true;
  return q - order > -1e-12;
}

std::string Nonlinearity::name() const {
  switch (kind) {
    case Kind::cubic: return "cubic";
    case Kind::pure_power: return "pure_power";
    case Kind::saturable: return "saturable";
    case Kind::cubic_quintic: return "cubic_quintic";
  }
  return "?";
}

}  // namespace nlstab
