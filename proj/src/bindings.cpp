#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlstab/pipeline.hpp"

namespace py = pybind11;
using namespace nlstab;

namespace {

Nonlinearity make_nl(const std::string& name, double p, double c3, double c5) {
  return Nonlinearity::parse(name, p, c3, c5);
}

py::dict profile_dict(const Profile& p) {
  py::dict d;
  d["omega"] = p.omega;
  d["node_count"] = p.node_count;
  d["phi0"] = p.phi0;
  d["mass"] = p.mass;
  d["mass_slope"] = p.mass_slope;
  d["residual_norm"] = p.residual_norm;
  d["r"] = p.grid.r;
  d["phi"] = p.phi;
  d["dphi_domega"] = p.dphi_domega;
  return d;
}

struct Workspace {
  Profile profile;
  Linearization lin;
  Spectrum spec;
  KernelReport kernel;
  NegativeIndex neg;
  StabilityReport stability;
};

Workspace analyze(const std::string& nl_name, double p_exp, double c3, double c5,
                  double omega, int node_count, double r_max, int n_points) {
  const Nonlinearity nl = make_nl(nl_name, p_exp, c3, c5);
  const RadialGrid grid = RadialGrid::uniform(r_max, n_points);
  Workspace w{solve_profile(nl, omega, node_count, grid),
              Linearization{},
              {},
              {},
              {},
              {}};
  w.lin = build_linearization(w.profile);
  w.spec = discrete_spectrum(w.lin);
  w.kernel = generalized_kernel(w.lin, w.profile);
  w.neg = negative_index(w.lin.plus, w.lin.minus);
  w.stability = stability_verdict(w.spec, w.kernel, w.neg, w.profile.mass_slope,
                                  w.profile.node_count);
  return w;
}

py::dict verdict_dict(const Workspace& w) {
  py::dict d;
  d["verdict"] = w.stability.verdict;
  d["mechanism"] = w.stability.mechanism;
  d["real_spectrum"] = w.stability.real_spectrum;
  d["negative_index"] = w.stability.negative_index;
  d["dim_generalized"] = w.stability.dim_generalized;
  d["mass_slope"] = w.stability.mass_slope;
  py::list gaps;
  for (const auto& [lam, s] : w.stability.gap_signatures) {
    py::dict g;
    g["lambda"] = lam;
    g["s"] = s;
    gaps.append(g);
  }
  d["gap_modes"] = gaps;
  py::list values;
  for (const auto& m : w.spec.modes)
    values.append(py::make_tuple(m.lambda.real(), m.lambda.imag()));
  d["eigenvalues"] = values;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "standing-wave stability analyzer for the 3d radial NLS";

  m.def("schema_version", [] { return kSchemaVersion; });

  m.def(
      "profile",
      [](const std::string& nl, double omega, int node_count, double r_max, int n_points,
         double p, double c3, double c5) {
        const RadialGrid grid = RadialGrid::uniform(r_max, n_points);
        return profile_dict(solve_profile(make_nl(nl, p, c3, c5), omega, node_count, grid));
      },
      py::arg("nonlinearity"), py::arg("omega"), py::arg("node_count") = 0,
      py::arg("r_max") = 30.0, py::arg("n_points") = 800, py::arg("p") = 3.0,
      py::arg("c3") = 1.0, py::arg("c5") = 0.0);

  m.def(
      "verdict",
      [](const std::string& nl, double omega, int node_count, double r_max, int n_points,
         double p, double c3, double c5) {
        return verdict_dict(
            analyze(nl, p, c3, c5, omega, node_count, r_max, n_points));
      },
      py::arg("nonlinearity"), py::arg("omega"), py::arg("node_count") = 0,
      py::arg("r_max") = 30.0, py::arg("n_points") = 800, py::arg("p") = 3.0,
      py::arg("c3") = 1.0, py::arg("c5") = 0.0);

  m.def(
      "fgr",
      [](const std::string& nl, double omega, int node_count, double r_max, int n_points,
         double p, double c3, double c5) {
        Workspace w = analyze(nl, p, c3, c5, omega, node_count, r_max, n_points);
        const FgrMatrix f =
            compute_fgr_matrix(w.lin, w.profile, w.spec.gap_modes(), w.kernel, {});
        py::list entries;
        for (const auto& e : f.entries) {
          py::dict d;
          d["m"] = e.m;
          d["j"] = e.j;
          d["gamma"] = e.gamma;
          d["rho0"] = e.rho0;
          entries.append(d);
        }
        py::dict d;
        d["entries"] = entries;
        d["members"] = f.res.members;
        d["omega"] = f.omega;
        return d;
      },
      py::arg("nonlinearity"), py::arg("omega"), py::arg("node_count") = 0,
      py::arg("r_max") = 30.0, py::arg("n_points") = 800, py::arg("p") = 3.0,
      py::arg("c3") = 1.0, py::arg("c5") = 0.0);

  m.def(
      "resonance_set",
      [](const std::vector<double>& lambda, double omega) {
        return resonance_set(lambda, omega).members;
      },
      py::arg("lambda"), py::arg("omega"));

  m.def(
      "run",
      [](const std::string& config_text, const std::string& verb) {
        const RunConfig cfg = config_from_json_text(config_text);
        const PipelineOutcome out = run_pipeline(cfg, verb);
        py::dict d;
        d["exit_code"] = out.exit_code;
        d["summary_path"] = out.summary_path;
        d["verdict"] = out.verdict;
        return d;
      },
      py::arg("config_text"), py::arg("verb"));

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<Error>(m, "NumericalError");
}
