#pragma once

#include <string>

#include "nlstab/fgr.hpp"

namespace nlstab {

// Reduced discrete-mode system
//   i zeta_j' = lambda_j zeta_j + sum_l a_{j,l} |zeta_l|^2 zeta_j
//               - i s_j sum_{M in Res, M_j >= 1} Gamma_{M,j} |zeta^{M - delta_j}|^2 zeta_j
// with the damping coefficients taken from the FGR matrix and the real
// near-field coefficients a as configuration.
struct ReducedModel {
  std::vector<double> lambda;
  std::vector<int> signatures;
  FgrMatrix fgr;
  Mat nf;  // a_{j,l}, real; zero when not configured
  ResonanceSet res;

  int size() const { return static_cast<int>(lambda.size()); }
  void validate() const;  // throws ConfigError on shape/sign violations
};

ReducedModel make_reduced_model(const std::vector<double>& lambda,
                                const std::vector<int>& signatures, const FgrMatrix& fgr,
                                const Mat& nf = Mat());

struct ReducedOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  double ceiling = 1e6;     // |zeta| blow-up report threshold
  double dt_init = 0.0;     // 0 = automatic
  double sample_dt = 0.0;   // 0 = every accepted step
  std::size_t max_steps = 5'000'000;
};

struct ReducedTrajectory {
  std::vector<double> times;
  std::vector<CVec> zeta;
  bool blowup = false;       // ceiling reached; expected for amplified modes
  double blowup_time = std::numeric_limits<double>::quiet_NaN();

  double mod2(std::size_t it, int j) const { return std::norm(zeta[it][j]); }
};

ReducedTrajectory integrate_reduced(const ReducedModel& model, const CVec& zeta0,
                                    double t_final, const ReducedOptions& opts = {});

struct ReducedMetrics {
  std::vector<double> quartic;           // int |zeta_j|^4 dt per mode
  std::vector<double> member_integrals;  // int |zeta^M|^2 dt per resonance member
  Vec ledger_gap;           // residual of the |zeta_j|^2 balance identity, per mode
  bool seed_nondecreasing = false;  // s_j|zeta_j|^2 nonincreasing for every mode
  bool quartic_unbounded = false;   // second-half growth of int |zeta_1|^4
  bool contradiction = false;       // both of the above for the seeded mode
};

ReducedMetrics reduced_instability_metrics(const ReducedModel& model,
                                           const ReducedTrajectory& traj);

// Full radial evolution state, u sampled at the grid nodes.
struct FieldState {
  RadialGrid grid;
  CVec u;
  double time = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double omega = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
};

double field_mass(const RadialGrid& grid, const CVec& u);
double field_energy(const RadialGrid& grid, const CVec& u, const Nonlinearity& nl);
FieldState make_state(const RadialGrid& grid, const CVec& u, double time = 0.0,
                      const Nonlinearity& nl = Nonlinearity{});

struct EvolveOptions {
  double dt = 1e-3;
  std::string backend = "cn";  // "cn": FD-consistent Crank-Nicolson half-steps;
                               // "dst": sine-transform half-steps, exact free dispersion
  double sample_dt = 0.1;
  bool keep_fields = true;     // store sampled states (mass/energy always recorded)
};

struct FieldTrajectory {
  std::vector<FieldState> states;  // sampled; states[0] is the initial state
  std::vector<double> times;
  std::vector<double> mass;
  std::vector<double> energy;
};

// Strang split-step: half linear flow, full nonlinear phase kick, half linear.
FieldTrajectory nls_evolve(const FieldState& u0, const Nonlinearity& nl, double t_final,
                           const EvolveOptions& opts = {});

struct Modulation {
  double omega = 0.0;
  double gamma = 0.0;
  CVec R;           // doubled v-space residual (r, conj r)
  Profile profile;  // the profile at the fitted omega
  int iterations = 0;
};

struct ModulationOptions {
  double tol = 1e-12;
  int max_iter = 40;
  double pairing_floor = 1e-10;  // |q'| below this is DegenerateJacobian
  int node_count = 0;            // profile family to decompose against
};

Modulation modulation_decompose(const FieldState& u, const Nonlinearity& nl, double omega_guess,
                                const ModulationOptions& opts = {});

struct ModeProjection {
  CVec z;      // mode amplitudes, z_j = s_j <R, sigma3 xi_j>
  CVec zbar;   // conjugate-channel amplitudes; equals conj(z) for a true pair state
  CVec f;      // continuum remainder
  double ortho_defect = 0.0;  // max |<f, sigma3 xi_j>| over channels
};

ModeProjection mode_project(const RadialGrid& grid, const CVec& R,
                            const std::vector<EigMode>& modes);

// min over gamma of |u - e^{i gamma} phi|_{H1}; gamma* = arg <u, phi>_{H1}
double orbital_distance(const FieldState& u, const Profile& p);
double h1_norm(const RadialGrid& grid, const CVec& u);
cplx h1_dot(const RadialGrid& grid, const CVec& a, const CVec& b);

struct ExperimentOptions {
  double delta = 1e-2;
  double tube_factor = 10.0;    // tube radius = tube_factor * delta
  double horizon_factor = 5.0;  // horizon = horizon_factor * t_star
  double horizon_override = 0;  // used when t_star unavailable or > 0 given
  int mode_index = -1;          // -1 = first negative-signature mode
  int samples = 120;
  EvolveOptions evolve;
  ReducedOptions reduced;
};

struct InstabilityReport {
  int seeded_mode = 0;
  double delta = 0.0;
  double tube_radius = 0.0;
  double horizon = 0.0;
  double t_star = std::numeric_limits<double>::quiet_NaN();
  double growth_factor = 0.0;  // max |z_1(t)| / delta over samples
  bool grew = false;
  bool tube_exit = false;
  double tube_exit_time = std::numeric_limits<double>::quiet_NaN();
  bool pde_blowup = false;
  double pde_blowup_time = std::numeric_limits<double>::quiet_NaN();
  bool decomposition_lost = false;
  double mass_drift = 0.0;
  std::vector<double> times;
  std::vector<double> z_abs;      // |z_1|(t) from projection
  std::vector<double> distance;   // orbital distance
  ReducedTrajectory reduced;      // overlay from the same seed
};

InstabilityReport instability_experiment(const Profile& p, const Linearization& lin,
                                         const std::vector<EigMode>& modes,
                                         const KernelReport& kernel, const FgrMatrix& fgr,
                                         const ExperimentOptions& opts = {});

}  // namespace nlstab
