#pragma once

#include "nlstab/types.hpp"

namespace nlstab {

// Local nonlinearity beta(s), s = |u|^2, entering i u_t + Lap u + beta(|u|^2) u = 0.
// Supported families:
//   pure_power     beta(s) = s^((p-1)/2), 1 < p < 5
//   cubic          beta(s) = s                  (pure_power with p = 3)
//   saturable      beta(s) = s / (1 + s)
//   cubic_quintic  beta(s) = c3 s + c5 s^2
struct Nonlinearity {
  enum class Kind { pure_power, cubic, saturable, cubic_quintic };

  Kind kind = Kind::cubic;
  double p = 3.0;        // pure_power exponent
  double c3 = 1.0;       // cubic_quintic coefficients
  double c5 = 0.0;

  static Nonlinearity cubic();
  static Nonlinearity pure_power(double p);
  static Nonlinearity saturable();
  static Nonlinearity cubic_quintic(double c3, double c5);
  static Nonlinearity parse(const std::string& name, double p, double c3, double c5);

  double beta(double s) const;
  double beta1(double s) const;  // d beta / d s
  double beta2(double s) const;
  double beta3(double s) const;

  // Antiderivative B(s) = int_0^s beta, used by the energy functional.
  double antiderivative(double s) const;

  // True when derivatives of beta up to `order` are bounded near s = 0, which
  // the expansion machinery requires.
  bool smooth_to(int order) const;

  std::string name() const;
};

}  // namespace nlstab
