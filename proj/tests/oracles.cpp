#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace oracle {
namespace {

constexpr double kPi = 3.14159265358979323846;

// State (v, v', m) for v = r phi, so the radial equation is v'' = (omega - beta) v
// with no first-order term and m' = 4 pi v^2 accumulates the mass.
using State = std::array<double, 3>;

State rhs(const nlstab::Nonlinearity& nl, double omega, double r, const State& y) {
  const double phi = y[0] / r;
  return {y[1], (omega - nl.beta(phi * phi)) * y[0], 4.0 * kPi * y[0] * y[0]};
}

// Cash-Karp embedded 4(5) pair.
struct StepResult {
  State y;
  double err = 0.0;
};

StepResult ck_step(const nlstab::Nonlinearity& nl, double omega, double r, const State& y,
                   double h) {
  static const double c[6] = {0.0, 1.0 / 5, 3.0 / 10, 3.0 / 5, 1.0, 7.0 / 8};
  static const double a[6][5] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {3.0 / 10, -9.0 / 10, 6.0 / 5},
      {-11.0 / 54, 5.0 / 2, -70.0 / 27, 35.0 / 27},
      {1631.0 / 55296, 175.0 / 512, 575.0 / 13824, 44275.0 / 110592, 253.0 / 4096}};
  static const double b5[6] = {37.0 / 378, 0.0, 250.0 / 621, 125.0 / 594, 0.0, 512.0 / 1771};
  static const double b4[6] = {2825.0 / 27648, 0.0,          18575.0 / 48384,
                               13525.0 / 55296, 277.0 / 14336, 1.0 / 4};

  State k[6];
  k[0] = rhs(nl, omega, r, y);
  for (int s = 1; s < 6; ++s) {
    State ys = y;
    for (int j = 0; j < s; ++j)
      for (int i = 0; i < 3; ++i) ys[i] += h * a[s][j] * k[j][i];
    k[s] = rhs(nl, omega, r + c[s] * h, ys);
  }
  StepResult out;
  out.y = y;
  double diff[3] = {0, 0, 0};
  for (int s = 0; s < 6; ++s)
    for (int i = 0; i < 3; ++i) {
      out.y[i] += h * b5[s] * k[s][i];
      diff[i] += h * (b5[s] - b4[s]) * k[s][i];
    }
  for (int i = 0; i < 3; ++i) {
    const double w = 1e-18 + 1e-12 * std::max(std::abs(out.y[i]), std::abs(y[i]));
    out.err = std::max(out.err, std::abs(diff[i]) / w);
  }
  return out;
}

// Advance (r, y) to exactly r_target, invoking on_step after every accepted step.
template <class F>
void integrate_to(const nlstab::Nonlinearity& nl, double omega, double& r, State& y,
                  double r_target, double h_max, double& h, const F& on_step) {
  while (r < r_target) {
    h = std::min({h, h_max, r_target - r});
    if (h < 1e-13 * std::max(r, 1.0)) throw std::runtime_error("shooting step underflow");
    const StepResult trial = ck_step(nl, omega, r, y, h);
    if (trial.err <= 1.0) {
      r += h;
      y = trial.y;
      h *= std::min(5.0, 0.9 * std::pow(std::max(trial.err, 1e-10), -0.2));
      if (!on_step()) return;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(trial.err, -0.2));
    }
  }
}

State series_start(const nlstab::Nonlinearity& nl, double omega, double a, double r0) {
  const double c = (omega * a - nl.beta(a * a) * a) / 6.0;
  return {a * r0 + c * r0 * r0 * r0, a + 3.0 * c * r0 * r0,
          4.0 * kPi * a * a * r0 * r0 * r0 / 3.0};
}

// Shooting classification: +1 when phi(0) = a is too large for the requested
// node count (an extra crossing appears), -1 when too small (the trajectory
// escapes with the crossings already made).
int classify(const nlstab::Nonlinearity& nl, double omega, int node_count, double a,
             double r_end) {
  const double r0 = 1e-6;
  double r = r0;
  State y = series_start(nl, omega, a, r0);
  const double sw = std::sqrt(omega);
  const double h_max = 0.2 / std::max(1.0, sw);
  const double phi_bound = 1.2 * a + 0.2 * sw;
  double h = 1e-4;
  int crossings = 0;
  bool was_neg = false;
  int verdict = 0;
  integrate_to(nl, omega, r, y, r_end, h_max, h, [&]() {
    const bool neg = y[0] < 0.0;
    if (neg != was_neg && y[0] != 0.0) {
      was_neg = neg;
      if (++crossings > node_count) {
        verdict = +1;
        return false;
      }
    }
    if (std::abs(y[0] / r) > phi_bound) {
      verdict = -1;
      return false;
    }
    return true;
  });
  if (verdict != 0) return verdict;
  if (crossings < node_count) return -1;
  // At r_end the growing-mode amplitude decides whether the tail escapes on
  // the current sign (amplitude too small) or heads for one more crossing.
  const double grow = y[1] + sw * y[0];
  const double parity = (node_count % 2 == 0) ? 1.0 : -1.0;
  return grow * parity >= 0.0 ? -1 : +1;
}

}  // namespace

ShootResult shoot_profile(const nlstab::Nonlinearity& nl, double omega, int node_count,
                          const std::vector<double>& sample_r, double a_lo, double a_hi) {
  if (sample_r.empty()) throw std::invalid_argument("shoot_profile: no sample nodes");
  if (omega <= 0.0) throw std::invalid_argument("shoot_profile: omega must be positive");
  std::vector<double> targets = sample_r;
  std::sort(targets.begin(), targets.end());
  const double r_end = targets.back();

  if (classify(nl, omega, node_count, a_lo, r_end) != -1)
    throw std::runtime_error("shooting bracket: lower endpoint not below the profile");
  double hi = a_hi;
  int tries = 0;
  while (classify(nl, omega, node_count, hi, r_end) != +1) {
    hi *= 2.0;
    if (++tries > 4) throw std::runtime_error("shooting bracket: no upper endpoint found");
  }
  double lo = a_lo;
  for (int it = 0; it < 80 && (hi - lo) > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (classify(nl, omega, node_count, mid, r_end) == +1 ? hi : lo) = mid;
  }
  const double a = 0.5 * (lo + hi);

  // Final pass: sample at the requested nodes, switch to the analytic
  // exponential tail once the nonlinearity is negligible, and recount nodes.
  ShootResult out;
  out.phi0 = a;
  out.r = sample_r;
  out.phi.assign(sample_r.size(), 0.0);

  const double sw = std::sqrt(omega);
  const double r0 = 1e-6;
  double r = r0;
  State y = series_start(nl, omega, a, r0);
  double h = 1e-4;
  const double h_max = 0.2 / std::max(1.0, sw);
  int crossings = 0;
  bool was_neg = false;
  double vpeak = 0.0;
  bool tail = false;
  double tail_r = 0.0, tail_v = 0.0;

  const auto watch = [&]() {
    vpeak = std::max(vpeak, std::abs(y[0]));
    const bool neg = y[0] < 0.0;
    if (neg != was_neg && y[0] != 0.0) {
      was_neg = neg;
      ++crossings;
    }
    const double phi = y[0] / r;
    if (crossings == node_count && y[0] * y[1] < 0.0 && std::abs(y[0]) < 1e-3 * vpeak &&
        nl.beta(phi * phi) < 1e-13 * omega) {
      // v ~ A exp(-sw r) + B exp(sw r); this combination annihilates B, so the
      // bisection residue in the growing mode cannot pollute the tail.
      tail = true;
      tail_r = r;
      tail_v = 0.5 * (y[0] - y[1] / sw);
      return false;
    }
    return true;
  };

  std::vector<std::pair<double, std::size_t>> order(targets.size());
  for (std::size_t i = 0; i < sample_r.size(); ++i) order[i] = {sample_r[i], i};
  std::sort(order.begin(), order.end());

  for (const auto& [rt, idx] : order) {
    if (tail) {
      out.phi[idx] = tail_v * std::exp(-sw * (rt - tail_r)) / rt;
      continue;
    }
    if (rt < r) {
      const double c = (omega * a - nl.beta(a * a) * a) / 6.0;
      out.phi[idx] = rt == 0.0 ? a : a + c * rt * rt;
      continue;
    }
    integrate_to(nl, omega, r, y, rt, h_max, h, watch);
    out.phi[idx] = tail ? tail_v * std::exp(-sw * (rt - tail_r)) / rt : y[0] / r;
  }
  while (!tail && r < r_end) integrate_to(nl, omega, r, y, r_end, h_max, h, watch);
  if (crossings != node_count) throw std::runtime_error("shooting node count mismatch");

  if (!tail) {
    tail_r = r;
    tail_v = 0.5 * (y[0] - y[1] / sw);
  }
  out.mass = y[2] + 4.0 * kPi * tail_v * tail_v / (2.0 * sw);
  return out;
}

double derivative(const std::function<double(double)>& f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

double gaussian_transform(double rho) {
  return std::pow(2.0 * kPi, 1.5) * std::exp(-rho * rho / 2.0);
}

cplx free_gaussian(double r, double t) {
  const cplx sigma(1.0, 2.0 * t);
  return std::pow(sigma, -1.5) * std::exp(-r * r / (2.0 * sigma));
}

std::vector<std::vector<int>> resonance_brute(const std::vector<double>& lambda, double omega,
                                              int cap) {
  const int k = static_cast<int>(lambda.size());
  std::vector<std::vector<int>> members;
  std::vector<int> m(k, 0);
  const std::function<void(int, int)> walk = [&](int pos, int left) {
    if (pos == k) {
      double dot = 0.0;
      int total = 0;
      for (int j = 0; j < k; ++j) {
        dot += m[j] * lambda[j];
        total += m[j];
      }
      if (total == 0 || dot <= omega) return;
      for (int j = 0; j < k; ++j)
        if (m[j] > 0 && dot - lambda[j] >= omega) return;
      members.push_back(m);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      m[pos] = v;
      walk(pos + 1, left - v);
    }
    m[pos] = 0;
  };
  walk(0, cap);
  std::sort(members.begin(), members.end());
  return members;
}

double reduced_mod2(double y0, double gamma, int s, double t) {
  return y0 / (1.0 + 2.0 * s * gamma * y0 * t);
}

double reduced_phase(double y0, double gamma, int s, double lambda, double a_self, double t) {
  if (gamma == 0.0) return -lambda * t - a_self * y0 * t;
  return -lambda * t - a_self * std::log(1.0 + 2.0 * s * gamma * y0 * t) / (2.0 * s * gamma);
}

}  // namespace oracle
