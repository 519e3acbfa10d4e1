#include "nlstab/grid.hpp"

#include <cmath>

namespace nlstab {

RadialGrid RadialGrid::uniform(double r_max, int n) {
  if (r_max <= 0.0 || n < 8) throw GridTooCoarse("radial grid needs r_max > 0 and n >= 8");
  RadialGrid g;
  g.r_max = r_max;
  g.n = n;
  g.h = r_max / n;
  g.r.resize(n);
  g.w.resize(n);
  for (int i = 0; i < n; ++i) {
    g.r[i] = (i + 1) * g.h;
    g.w[i] = 4.0 * M_PI * g.r[i] * g.r[i] * g.h;
  }
  return g;
}

RadialGrid RadialGrid::standard(double omega, double scale, int base_points, double r_max_factor) {
  if (omega <= 0.0) throw NoSolution("frequency must be positive");
  const double r_max = r_max_factor / std::sqrt(omega);
  const int n = std::max(8, static_cast<int>(std::lround(base_points * scale)));
  return uniform(r_max, n);
}

double RadialGrid::integrate(const Vec& u) const { return w.dot(u); }

}  // namespace nlstab
