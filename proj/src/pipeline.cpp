#include "nlstab/pipeline.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <thread>

#include <json.hpp>

namespace nlstab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* class_name(ModeClass c) {
  switch (c) {
    case ModeClass::gap_discrete: return "gap_discrete";
    case ModeClass::kernel: return "kernel";
    case ModeClass::continuum_artifact: return "continuum_artifact";
    case ModeClass::off_axis: return "off_axis";
    case ModeClass::ambiguous: return "ambiguous";
  }
  return "?";
}

std::string error_label(const Error& e) {
  if (dynamic_cast<const ResonantConfiguration*>(&e)) return "ResonantConfiguration";
  if (dynamic_cast<const WrongSide*>(&e)) return "WrongSide";
  if (dynamic_cast<const NoExtrapolationPlateau*>(&e)) return "NoExtrapolationPlateau";
  if (dynamic_cast<const InsufficientSmoothness*>(&e)) return "InsufficientSmoothness";
  if (dynamic_cast<const NoSolution*>(&e)) return "NoSolution";
  if (dynamic_cast<const NoConvergence*>(&e)) return "NoConvergence";
  if (dynamic_cast<const GridTooCoarse*>(&e)) return "GridTooCoarse";
  if (dynamic_cast<const SymmetryViolation*>(&e)) return "SymmetryViolation";
  if (dynamic_cast<const EigensolverFailure*>(&e)) return "EigensolverFailure";
  if (dynamic_cast<const SingularLinearization*>(&e)) return "SingularLinearization";
  if (dynamic_cast<const IllConditioned*>(&e)) return "IllConditioned";
  if (dynamic_cast<const DecompositionFailed*>(&e)) return "DecompositionFailed";
  if (dynamic_cast<const DegenerateJacobian*>(&e)) return "DegenerateJacobian";
  if (dynamic_cast<const NaNDetected*>(&e)) return "NaNDetected";
  if (dynamic_cast<const CFLViolation*>(&e)) return "CFLViolation";
  return "Error";
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write artifact: " + path.string());
  out.precision(17);
  out << "# schema_version," << kSchemaVersion << "\n";
  return out;
}

void write_json(const fs::path& path, json j) {
  j["schema_version"] = kSchemaVersion;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write artifact: " + path.string());
  out << j.dump(2) << "\n";
}

struct Ctx {
  RunConfig cfg;
  RadialGrid grid;
  fs::path dir;
  std::optional<Profile> profile;
  std::optional<Linearization> lin;
  std::optional<Spectrum> spec;
  std::optional<KernelReport> kernel;
  NegativeIndex neg;
  std::optional<StabilityReport> stability;
  std::optional<FgrMatrix> fgr;
  std::vector<EigMode> fgr_modes;  // positive-frequency gap representatives
  std::optional<InstabilityReport> experiment;
};

// --- stage: profile ---------------------------------------------------------

void stage_profile(Ctx& c) {
  c.profile = solve_profile(c.cfg.nl, c.cfg.omega, c.cfg.node_count, c.grid);
  const Profile& p = *c.profile;

  auto csv = open_csv(c.dir / "profile.csv");
  csv << "r,phi,dphi_domega\n";
  for (int i = 0; i < c.grid.n; ++i)
    csv << c.grid.r[i] << "," << p.phi[i] << "," << p.dphi_domega[i] << "\n";

  write_json(c.dir / "profile.json",
             {{"omega", p.omega},
              {"node_count", p.node_count},
              {"phi0", p.phi0},
              {"mass", p.mass},
              {"mass_slope", p.mass_slope},
              {"residual_norm", p.residual_norm},
              {"nonlinearity", p.nl.name()},
              {"r_max", c.grid.r_max},
              {"n_points", c.grid.n}});
}

// --- stage: spectrum --------------------------------------------------------

void stage_spectrum(Ctx& c) {
  c.lin = build_linearization(*c.profile);
  c.spec = discrete_spectrum(*c.lin, c.cfg.spectral);
  const Spectrum& s = *c.spec;

  auto csv = open_csv(c.dir / "spectrum.csv");
  csv << "re_lambda,im_lambda,class,signature,sigma3_norm,residual,cluster_size,"
         "multiplicity_ok\n";
  for (const auto& m : s.modes)
    csv << m.lambda.real() << "," << m.lambda.imag() << "," << class_name(m.cls) << ","
        << m.sig() << "," << m.sigma3_norm << "," << m.residual << "," << m.cluster_size
        << "," << (m.multiplicity_ok ? 1 : 0) << "\n";

  write_json(c.dir / "spectrum.json",
             {{"omega", s.omega},
              {"method", s.method},
              {"pairing_defect", s.pairing_defect},
              {"conjugation_defect", s.conjugation_defect},
              {"refined_pairing_defect", s.refined_pairing_defect},
              {"n_gap", s.count(ModeClass::gap_discrete)},
              {"n_off_axis", s.count(ModeClass::off_axis)},
              {"n_ambiguous", s.count(ModeClass::ambiguous)}});
}

// --- stage: verdict ---------------------------------------------------------

// off-axis candidates must survive a x2 grid refinement; discretization noise
// near the continuum does not, and gets reclassified before the verdict
int confirm_off_axis(Ctx& c) {
  Spectrum& s = *c.spec;
  if (s.count(ModeClass::off_axis) == 0) return 0;

  RunConfig fine = c.cfg;
  fine.grid_scale = c.cfg.grid_scale * 2.0;
  const RadialGrid grid2 = fine.make_grid();
  const Profile p2 = solve_profile(fine.nl, fine.omega, fine.node_count, grid2);
  const Spectrum s2 = discrete_spectrum(build_linearization(p2), fine.spectral);

  int dropped = 0;
  for (auto& m : s.modes) {
    if (m.cls != ModeClass::off_axis) continue;
    bool confirmed = false;
    for (const auto& m2 : s2.off_axis_modes())
      if (std::abs(m2.lambda - m.lambda) < 0.1 * std::abs(m.lambda) + 1e-6 * s.omega)
        confirmed = true;
    if (!confirmed) {
      m.cls = std::abs(m.lambda) >= s.omega * (1.0 - c.cfg.spectral.edge_tol)
                  ? ModeClass::continuum_artifact
                  : ModeClass::ambiguous;
      ++dropped;
    }
  }
  return dropped;
}

void stage_verdict(Ctx& c) {
  const Profile& p = *c.profile;
  c.kernel = generalized_kernel(*c.lin, p, c.cfg.kernel);
  c.neg = negative_index(c.lin->plus, c.lin->minus);
  const int dropped = confirm_off_axis(c);

  c.fgr_modes = c.spec->gap_modes();

  double qmin = std::numeric_limits<double>::quiet_NaN();
  try {
    std::vector<CVec> constraints;
    const int n = c.grid.n;
    const Vec phiv = p.v();
    const Vec psiv = c.grid.to_v(p.dphi_domega);
    CVec cap(2 * n), s3d(2 * n);
    cap.head(n) = phiv.cast<cplx>();
    cap.tail(n) = phiv.cast<cplx>();
    s3d.head(n) = psiv.cast<cplx>();
    s3d.tail(n) = -psiv.cast<cplx>();
    constraints.push_back(cap);
    constraints.push_back(s3d);
    for (const auto& m : c.fgr_modes) {
      CVec s3xi = m.xi;
      s3xi.tail(n) *= -1.0;
      constraints.push_back(s3xi);
      CVec eta(2 * n);
      eta.head(n) = m.xi.tail(n).conjugate();
      eta.tail(n) = -m.xi.head(n).conjugate();
      constraints.push_back(eta);  // sigma3 sigma1 conj(xi)
    }
    qmin = quadratic_form_min(*c.lin, constraints);
  } catch (const Error&) {
    // diagnostic only; the verdict falls back to the index counts
  }

  c.stability =
      stability_verdict(*c.spec, *c.kernel, c.neg, p.mass_slope, p.node_count, qmin);
  const StabilityReport& r = *c.stability;

  json gs = json::array();
  for (const auto& [lam, s] : r.gap_signatures) gs.push_back({{"lambda", lam}, {"s", s}});
  write_json(c.dir / "stability.json",
             {{"verdict", r.verdict},
              {"mechanism", r.mechanism},
              {"real_spectrum", r.real_spectrum},
              {"worst_off_axis_im", r.worst_off_axis_im},
              {"off_axis_dropped_by_refinement", dropped},
              {"signatures_ok", r.signatures_ok},
              {"gap_signatures", gs},
              {"kernel_ok", r.kernel_ok},
              {"dim_generalized", r.dim_generalized},
              {"kernel_angle", r.kernel_angle},
              {"negative_index", r.negative_index},
              {"quadratic_form_minimum", r.quadratic_form_minimum},
              {"mass_slope", r.mass_slope},
              {"node_count", r.node_count},
              {"inconsistency", r.inconsistency}});
}

// --- stage: fgr -------------------------------------------------------------

void stage_fgr(Ctx& c) {
  c.fgr = compute_fgr_matrix(*c.lin, *c.profile, c.fgr_modes, *c.kernel, c.cfg.fgr);
  const FgrMatrix& f = *c.fgr;

  json members = json::array();
  for (const auto& m : f.res.members) members.push_back(m);
  json entries = json::array();
  for (const auto& e : f.entries)
    entries.push_back({{"m", e.m}, {"j", e.j}, {"gamma", e.gamma}, {"rho0", e.rho0}});
  json lam = json::array();
  for (const auto& m : c.fgr_modes) lam.push_back(m.lambda.real());
  write_json(c.dir / "fgr.json", {{"omega", f.omega},
                                  {"lambda", lam},
                                  {"resonance_members", members},
                                  {"n_caps", f.res.n_caps},
                                  {"entries", entries}});
}

// --- stage: reduce ----------------------------------------------------------

double self_damping(const FgrMatrix& f, int k, int j) {
  MultiIndex full(k, 0);
  full[j] = 2;
  for (const auto& e : f.entries)
    if (e.j == j && e.m == full) return e.gamma;
  return 0.0;
}

void stage_reduce(Ctx& c) {
  const int k = static_cast<int>(c.fgr_modes.size());
  std::vector<double> lambda(k);
  std::vector<int> sigs(k);
  for (int j = 0; j < k; ++j) {
    lambda[j] = c.fgr_modes[j].lambda.real();
    sigs[j] = c.fgr_modes[j].sig();
  }
  const ReducedModel model = make_reduced_model(lambda, sigs, *c.fgr);

  int j0 = c.cfg.dynamics.mode_index;
  if (j0 < 0) {
    j0 = 0;
    for (int j = 0; j < k; ++j)
      if (sigs[j] == -1) {
        j0 = j;
        break;
      }
  }
  const double delta = c.cfg.dynamics.delta;
  const double g = self_damping(*c.fgr, k, j0);
  const double t_star = g > 0.0 && delta > 0.0
                            ? 1.0 / (2.0 * g * delta * delta)
                            : std::numeric_limits<double>::quiet_NaN();
  const double horizon =
      c.cfg.dynamics.horizon_override > 0.0
          ? c.cfg.dynamics.horizon_override
          : (std::isfinite(t_star) ? c.cfg.dynamics.horizon_factor * t_star
                                   : 50.0 / c.cfg.omega);

  CVec zeta0 = CVec::Zero(k);
  zeta0[j0] = delta;
  ReducedOptions ropts = c.cfg.dynamics.reduced;
  if (ropts.sample_dt <= 0.0) ropts.sample_dt = horizon / 2000.0;
  const ReducedTrajectory traj = integrate_reduced(model, zeta0, horizon, ropts);
  const ReducedMetrics metrics = reduced_instability_metrics(model, traj);

  auto csv = open_csv(c.dir / "reduced.csv");
  csv << "t";
  for (int j = 0; j < k; ++j) csv << ",re_zeta" << j << ",im_zeta" << j << ",mod2_" << j;
  csv << "\n";
  for (size_t i = 0; i < traj.times.size(); ++i) {
    csv << traj.times[i];
    for (int j = 0; j < k; ++j)
      csv << "," << traj.zeta[i][j].real() << "," << traj.zeta[i][j].imag() << ","
          << traj.mod2(i, j);
    csv << "\n";
  }

  write_json(c.dir / "reduced.json",
             {{"seed_mode", j0},
              {"delta", delta},
              {"t_star", std::isfinite(t_star) ? json(t_star) : json()},
              {"horizon", horizon},
              {"blowup", traj.blowup},
              {"blowup_time", traj.blowup ? json(traj.blowup_time) : json()},
              {"quartic_integrals", metrics.quartic},
              {"monotone", metrics.seed_nondecreasing},
              {"quartic_unbounded", metrics.quartic_unbounded},
              {"contradiction", metrics.contradiction}});
}

// --- stage: evolve ----------------------------------------------------------

void stage_evolve(Ctx& c) {
  const Profile& p = *c.profile;
  const double horizon = c.cfg.dynamics.horizon_override > 0.0
                             ? c.cfg.dynamics.horizon_override
                             : 50.0 / p.omega;
  FieldState u0 = make_state(c.grid, p.phi.cast<cplx>(), 0.0, p.nl);
  EvolveOptions eopts = c.cfg.dynamics.evolve;
  eopts.sample_dt = horizon / 200.0;
  eopts.keep_fields = true;
  const FieldTrajectory traj = nls_evolve(u0, p.nl, horizon, eopts);

  auto csv = open_csv(c.dir / "evolve.csv");
  csv << "t,mass,energy,orbital_distance\n";
  double worst = 0.0;
  for (size_t i = 0; i < traj.states.size(); ++i) {
    const double d = orbital_distance(traj.states[i], p);
    worst = std::max(worst, d);
    csv << traj.times[i] << "," << traj.mass[i] << "," << traj.energy[i] << "," << d << "\n";
  }
  write_json(c.dir / "evolve.json",
             {{"horizon", horizon},
              {"backend", eopts.backend},
              {"dt", eopts.dt},
              {"max_orbital_distance", worst},
              {"mass_drift",
               std::abs(traj.mass.back() - traj.mass.front()) / traj.mass.front()}});
}

// --- stage: experiment ------------------------------------------------------

void stage_experiment(Ctx& c) {
  c.experiment =
      instability_experiment(*c.profile, *c.lin, c.fgr_modes, *c.kernel, *c.fgr,
                             c.cfg.dynamics);
  const InstabilityReport& r = *c.experiment;

  auto csv = open_csv(c.dir / "experiment.csv");
  csv << "t,z_abs,orbital_distance\n";
  for (size_t i = 0; i < r.times.size(); ++i)
    csv << r.times[i] << "," << r.z_abs[i] << "," << r.distance[i] << "\n";

  auto overlay = open_csv(c.dir / "experiment_reduced.csv");
  overlay << "t,zeta_abs\n";
  for (size_t i = 0; i < r.reduced.times.size(); ++i)
    overlay << r.reduced.times[i] << ","
            << std::sqrt(r.reduced.mod2(i, r.seeded_mode)) << "\n";

  write_json(c.dir / "experiment.json",
             {{"seeded_mode", r.seeded_mode},
              {"delta", r.delta},
              {"tube_radius", r.tube_radius},
              {"horizon", r.horizon},
              {"t_star", std::isfinite(r.t_star) ? json(r.t_star) : json()},
              {"growth_factor", r.growth_factor},
              {"grew", r.grew},
              {"tube_exit", r.tube_exit},
              {"tube_exit_time", r.tube_exit ? json(r.tube_exit_time) : json()},
              {"pde_blowup", r.pde_blowup},
              {"decomposition_lost", r.decomposition_lost},
              {"mass_drift", r.mass_drift},
              {"reduced_blowup", r.reduced.blowup}});
}

// --- stage: sweep -----------------------------------------------------------

struct SweepRow {
  double omega = 0.0;
  std::string status = "ok";
  double mass = 0.0, mass_slope = 0.0;
  std::vector<double> lambda;
  std::vector<int> sig;
  std::vector<double> gamma_jj;
  std::string verdict;
  bool vk_flag = false;
};

SweepRow sweep_point(const RunConfig& cfg, double omega) {
  SweepRow row;
  row.omega = omega;
  try {
    RunConfig local = cfg;
    local.omega = omega;
    const RadialGrid grid = local.make_grid();
    const Profile p = solve_profile(local.nl, omega, local.node_count, grid);
    row.mass = p.mass;
    row.mass_slope = p.mass_slope;
    const Linearization lin = build_linearization(p);
    const Spectrum spec = discrete_spectrum(lin, local.spectral);
    const KernelReport kernel = generalized_kernel(lin, p, local.kernel);
    const NegativeIndex neg = negative_index(lin.plus, lin.minus);
    const StabilityReport rep =
        stability_verdict(spec, kernel, neg, p.mass_slope, p.node_count);
    row.verdict = rep.verdict;
    const auto gaps = spec.gap_modes();
    const int k = static_cast<int>(gaps.size());
    for (const auto& m : gaps) {
      row.lambda.push_back(m.lambda.real());
      row.sig.push_back(m.sig());
    }
    row.gamma_jj.assign(k, std::numeric_limits<double>::quiet_NaN());
    if (k > 0) {
      const FgrMatrix f = compute_fgr_matrix(lin, p, gaps, kernel, local.fgr);
      for (int j = 0; j < k; ++j) row.gamma_jj[j] = self_damping(f, k, j);
    }
  } catch (const Error& e) {
    row.status = error_label(e);
  }
  return row;
}

void stage_sweep(Ctx& c) {
  const int count = c.cfg.sweep_count;
  std::vector<double> omegas(count);
  for (int i = 0; i < count; ++i)
    omegas[i] = count == 1 ? c.cfg.omega_min
                           : c.cfg.omega_min + (c.cfg.omega_max - c.cfg.omega_min) * i /
                                                   static_cast<double>(count - 1);

  std::vector<SweepRow> rows(count);
  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(count)));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
      rows[i] = sweep_point(c.cfg, omegas[i]);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (size_t i = 1; i < rows.size(); ++i)
    rows[i].vk_flag = rows[i].status == "ok" && rows[i - 1].status == "ok" &&
                      rows[i].mass_slope * rows[i - 1].mass_slope < 0.0;

  size_t kmax = 0;
  for (const auto& r : rows) kmax = std::max(kmax, r.lambda.size());

  auto csv = open_csv(c.dir / "sweep.csv");
  csv << "omega,status,mass,mass_slope,vk_flag";
  for (size_t j = 0; j < kmax; ++j) csv << ",lambda_" << j;
  for (size_t j = 0; j < kmax; ++j) csv << ",s_" << j;
  for (size_t j = 0; j < kmax; ++j) csv << ",gamma_" << j << j;
  csv << ",verdict\n";
  for (const auto& r : rows) {
    csv << r.omega << "," << r.status << "," << r.mass << "," << r.mass_slope << ","
        << (r.vk_flag ? 1 : 0);
    for (size_t j = 0; j < kmax; ++j)
      if (j < r.lambda.size())
        csv << "," << r.lambda[j];
      else
        csv << ",";
    for (size_t j = 0; j < kmax; ++j)
      if (j < r.sig.size())
        csv << "," << r.sig[j];
      else
        csv << ",";
    for (size_t j = 0; j < kmax; ++j)
      if (j < r.gamma_jj.size() && std::isfinite(r.gamma_jj[j]))
        csv << "," << r.gamma_jj[j];
      else
        csv << ",";
    csv << "," << r.verdict << "\n";
  }
}

}  // namespace

PipelineOutcome run_pipeline(const RunConfig& cfg, const std::string& verb) {
  static const std::map<std::string, std::vector<std::string>> kPlans = {
      {"profile", {"profile"}},
      {"spectrum", {"profile", "spectrum"}},
      {"verdict", {"profile", "spectrum", "verdict"}},
      {"fgr", {"profile", "spectrum", "verdict", "fgr"}},
      {"reduce", {"profile", "spectrum", "verdict", "fgr", "reduce"}},
      {"evolve", {"profile", "evolve"}},
      {"experiment", {"profile", "spectrum", "verdict", "fgr", "experiment"}},
      {"sweep", {"sweep"}},
  };
  const auto plan = kPlans.find(verb);
  if (plan == kPlans.end()) throw ConfigError("unknown verb: " + verb);
  if (verb == "sweep" && !cfg.has_sweep)
    throw ConfigError("sweep verb needs a sweep section in the config");

  PipelineOutcome out;
  Ctx ctx;
  ctx.cfg = cfg;
  ctx.grid = cfg.make_grid();
  ctx.dir = fs::path(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(ctx.dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + cfg.out_dir);

  for (const std::string& stage : plan->second) {
    StageStatus st;
    st.name = stage;
    try {
      if (stage == "profile") stage_profile(ctx);
      else if (stage == "spectrum") stage_spectrum(ctx);
      else if (stage == "verdict") stage_verdict(ctx);
      else if (stage == "fgr") stage_fgr(ctx);
      else if (stage == "reduce") stage_reduce(ctx);
      else if (stage == "evolve") stage_evolve(ctx);
      else if (stage == "experiment") stage_experiment(ctx);
      else if (stage == "sweep") stage_sweep(ctx);
      st.ok = true;
    } catch (const ConfigError& e) {
      st.message = e.what();
      out.exit_code = 2;
    } catch (const Error& e) {
      st.message = std::string(error_label(e)) + ": " + e.what();
      out.exit_code = 3;
    }
    out.stages.push_back(st);
    if (!st.ok) break;
  }

  json stages = json::object();
  for (const auto& st : out.stages)
    stages[st.name] = st.ok ? json("ok") : json(st.message);

  json chain;
  chain["linear_verdict"] = ctx.stability ? json(ctx.stability->verdict) : json();
  if (ctx.fgr) {
    double gmin = std::numeric_limits<double>::infinity();
    for (const auto& e : ctx.fgr->entries) gmin = std::min(gmin, e.gamma);
    const bool holds = !ctx.fgr->entries.empty() && gmin > 0.0;
    chain["fgr_hypothesis"] = holds ? "holds" : "fails";
    chain["min_gamma"] = ctx.fgr->entries.empty() ? json() : json(gmin);
  } else {
    chain["fgr_hypothesis"] = json();
  }
  if (ctx.experiment) {
    chain["experiment"] = json{{"grew", ctx.experiment->grew},
                               {"tube_exit", ctx.experiment->tube_exit},
                               {"growth_factor", ctx.experiment->growth_factor}};
  } else {
    chain["experiment"] = json();
  }

  json summary;
  summary["verb"] = verb;
  summary["config"] = json::parse(config_to_json_text(cfg));
  summary["stages"] = stages;
  summary["verdict_chain"] = chain;
  summary["exit_code"] = out.exit_code;
  write_json(ctx.dir / "summary.json", summary);

  out.summary_path = (ctx.dir / "summary.json").string();
  if (ctx.stability) out.verdict = ctx.stability->verdict;
  return out;
}

}  // namespace nlstab
