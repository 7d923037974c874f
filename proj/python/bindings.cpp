// Python bindings for the hybandit core. Matrices cross the boundary as
// lists of rows.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hybandit/algorithms.hpp"
#include "hybandit/environments.hpp"
#include "hybandit/harness.hpp"
#include "hybandit/linalg.hpp"
#include "hybandit/model.hpp"

namespace py = pybind11;
using namespace hybandit;

namespace {

using Rows = std::vector<std::vector<double>>;

Matrix to_matrix(const Rows& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) throw std::invalid_argument("ragged matrix rows");
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Rows to_rows(const Matrix& m) {
  Rows out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hybrid-reward linear contextual bandits";

  py::register_exception<SingularMatrixError>(m, "SingularMatrixError", PyExc_ArithmeticError);
  py::register_exception<ReplayLogError>(m, "ReplayLogError", PyExc_ValueError);

  py::class_<Dims>(m, "Dims")
      .def(py::init([](std::size_t d1, std::size_t d2, std::size_t K) { return Dims{d1, d2, K}; }),
           py::arg("d1"), py::arg("d2"), py::arg("K"))
      .def_readwrite("d1", &Dims::d1)
      .def_readwrite("d2", &Dims::d2)
      .def_readwrite("K", &Dims::K)
      .def_property_readonly("hybrid_dim", &Dims::hybrid_dim)
      .def("__eq__", [](const Dims& a, const Dims& b) { return a == b; })
      .def("__repr__", [](const Dims& d) {
        return "Dims(d1=" + std::to_string(d.d1) + ", d2=" + std::to_string(d.d2) +
               ", K=" + std::to_string(d.K) + ")";
      });

  py::class_<HybridParams>(m, "HybridParams")
      .def(py::init([](Vector theta, std::vector<Vector> betas, double S) {
             HybridParams p{std::move(theta), std::move(betas), S};
             p.validate();
             return p;
           }),
           py::arg("theta"), py::arg("betas"), py::arg("S") = 1.0)
      .def_readonly("theta", &HybridParams::theta)
      .def_readonly("betas", &HybridParams::betas)
      .def_readonly("S", &HybridParams::S)
      .def_property_readonly("dims", &HybridParams::dims);

  py::class_<ArmFeatures>(m, "ArmFeatures")
      .def(py::init([](Vector x, Vector z) { return ArmFeatures{std::move(x), std::move(z)}; }),
           py::arg("x"), py::arg("z"))
      .def_readonly("x", &ArmFeatures::x)
      .def_readonly("z", &ArmFeatures::z);

  m.def("embed",
        [](std::size_t arm, const Vector& x, const Vector& z, const Dims& dims) {
          return embed(arm, x, z, dims).dense(dims.K);
        },
        py::arg("arm"), py::arg("x"), py::arg("z"), py::arg("dims"),
        "Dense form of the hybrid embedding; arms are 0-based.");
  m.def("flatten", [](const HybridParams& p) { return flatten(p).phi; });
  m.def("mean_reward", &mean_reward, py::arg("params"), py::arg("arm"), py::arg("x"), py::arg("z"));
  m.def("instantaneous_regret",
        [](const HybridParams& p, const std::vector<ArmFeatures>& arms, std::size_t chosen) {
          return instantaneous_regret(p, ContextRound{arms}, chosen);
        },
        py::arg("params"), py::arg("arms"), py::arg("chosen"));

  // linear algebra
  m.def("sym_eigenvalues", [](const Rows& a) { return sym_eigenvalues(to_matrix(a)); });
  m.def("hermitian_dilation", [](const Rows& b) { return to_rows(hermitian_dilation(to_matrix(b))); });
  m.def("max_singular_value", [](const Rows& b) { return max_singular_value(to_matrix(b)); });

  py::class_<BlockDesign>(m, "BlockDesign")
      .def(py::init<std::size_t, std::size_t, std::size_t, double>(), py::arg("d1"), py::arg("d2"),
           py::arg("K"), py::arg("lam"))
      .def_property_readonly("dim", &BlockDesign::dim)
      .def_property_readonly("round", &BlockDesign::round)
      .def_property_readonly("pull_counts", &BlockDesign::pull_counts)
      .def("update",
           [](BlockDesign& d, std::size_t arm, Vector x, Vector z) {
             d.update({arm, std::move(x), std::move(z)});
           },
           py::arg("arm"), py::arg("x"), py::arg("z"))
      .def("quad_form_inv",
           [](const BlockDesign& d, std::size_t arm, Vector x, Vector z) {
             return d.quad_form_inv({arm, std::move(x), std::move(z)});
           },
           py::arg("arm"), py::arg("x"), py::arg("z"))
      .def("solve", [](const BlockDesign& d, const Vector& rhs) { return d.solve(rhs); })
      .def("assemble_dense", [](const BlockDesign& d) { return to_rows(d.assemble_dense()); })
      .def("sandwich_spectrum", [](const BlockDesign& d) { return sandwich_spectrum(d); });

  // policies
  py::enum_<Algo>(m, "Algo")
      .value("LinUCB", Algo::LinUCB)
      .value("DisLinUCB", Algo::DisLinUCB)
      .value("HyLinUCB", Algo::HyLinUCB)
      .value("Oracle", Algo::Oracle);
  py::enum_<GammaForm>(m, "GammaForm")
      .value("Default", GammaForm::Default)
      .value("MainText", GammaForm::MainText)
      .value("Appendix", GammaForm::Appendix);
  m.def("parse_algo", [](const std::string& s) { return parse_algo(s); });
  m.def("exploration_coefficient", &exploration_coefficient, py::arg("algo"), py::arg("S"),
        py::arg("dims"), py::arg("T"), py::arg("delta"), py::arg("lam"),
        py::arg("form") = GammaForm::Default);
  m.def("default_lambda", &default_lambda, py::arg("algo"), py::arg("K"));

  py::class_<PolicyConfig>(m, "PolicyConfig")
      .def(py::init([](Algo algo, const Dims& dims, double S, std::size_t T, double delta,
                       std::optional<double> lam, std::optional<double> gamma) {
             return make_policy_config(algo, dims, S, T, delta, {lam, gamma, GammaForm::Default});
           }),
           py::arg("algo"), py::arg("dims"), py::arg("S") = 1.0, py::arg("T") = 1000,
           py::arg("delta") = 0.1, py::arg("lam") = py::none(), py::arg("gamma") = py::none())
      .def_readonly("algo", &PolicyConfig::algo)
      .def_readonly("dims", &PolicyConfig::dims)
      .def_readonly("lam", &PolicyConfig::lambda)
      .def_readonly("gamma", &PolicyConfig::gamma)
      .def_readonly("overridden", &PolicyConfig::overridden);

  py::class_<Policy>(m, "Policy")
      .def_property_readonly("config", &Policy::config)
      .def("ucb_score", &Policy::ucb_score, py::arg("arm"), py::arg("features"))
      .def("estimated_mean", &Policy::estimated_mean, py::arg("arm"), py::arg("features"))
      .def("select_arm",
           [](const Policy& p, const std::vector<ArmFeatures>& arms) {
             return p.select_arm(ContextRound{arms});
           })
      .def("update", &Policy::update, py::arg("arm"), py::arg("features"), py::arg("reward"));
  m.def("make_policy",
        [](const PolicyConfig& c, std::optional<HybridParams> params) {
          return make_policy(c, params ? &*params : nullptr);
        },
        py::arg("config"), py::arg("params") = py::none());

  // environments
  py::class_<SyntheticEnvironment>(m, "SyntheticEnvironment")
      .def(py::init([](const Dims& dims, std::size_t T, double noise_std, std::uint64_t seed) {
             SyntheticEnvConfig c;
             c.dims = dims;
             c.T = T;
             c.noise_std = noise_std;
             c.env_seed = seed;
             return SyntheticEnvironment(c);
           }),
           py::arg("dims"), py::arg("T"), py::arg("noise_std") = 0.1, py::arg("seed") = 0)
      .def_property_readonly("dims", &SyntheticEnvironment::dims)
      .def_property_readonly("horizon", &SyntheticEnvironment::horizon)
      .def_property_readonly("params", &SyntheticEnvironment::params)
      .def("context", [](const SyntheticEnvironment& e, std::size_t t) { return e.context(t).arms; })
      .def("dump", &environment_dump);

  m.def("hybrid_least_squares",
        [](const std::vector<std::tuple<std::size_t, Vector, Vector, double>>& data,
           std::size_t K, double ridge) {
          std::vector<Observation> obs;
          for (const auto& [arm, x, z, y] : data) obs.push_back({arm, x, z, y});
          LeastSquaresOptions o;
          o.ridge = ridge;
          o.allow_zero_ridge = ridge == 0.0;
          const LearnedModel lm = hybrid_least_squares(obs, K, o);
          return py::make_tuple(lm.params, lm.fit_residual);
        },
        py::arg("data"), py::arg("K"), py::arg("ridge") = 1e-6,
        "data is a list of (arm, x, z, y); returns (HybridParams, mean squared residual).");

  m.def("generate_replay_log",
        [](const std::filesystem::path& path, std::size_t n, std::size_t K, std::size_t user_dim,
           std::size_t arm_dim, std::uint64_t seed) {
          SyntheticLogConfig c{user_dim, arm_dim, K, n, seed, 0.5};
          const SyntheticLog log = generate_replay_log(c);
          write_replay_log(path, log.records);
          return log.params;
        },
        py::arg("path"), py::arg("n_records"), py::arg("K") = 5, py::arg("user_dim") = 3,
        py::arg("arm_dim") = 3, py::arg("seed") = 0);
  m.def("count_replay_records",
        [](const std::filesystem::path& path) { return parse_replay_log(path).size(); });

  // harness
  py::class_<TheoryConstants>(m, "TheoryConstants")
      .def_readonly("rho", &TheoryConstants::rho)
      .def_readonly("T_m", &TheoryConstants::T_m)
      .def_readonly("T_o", &TheoryConstants::T_o)
      .def_readonly("horizon_exceeds_T_o", &TheoryConstants::horizon_exceeds_T_o)
      .def_readonly("gamma_linucb", &TheoryConstants::gamma_linucb)
      .def_readonly("gamma_hylinucb", &TheoryConstants::gamma_hylinucb)
      .def_readonly("gamma_dislinucb", &TheoryConstants::gamma_dislinucb);
  m.def("theory_constants", &theory_constants, py::arg("rho"), py::arg("dims"), py::arg("T"),
        py::arg("delta"), py::arg("S") = 1.0);
  m.def("unit_ball_rho", &unit_ball_rho);

  py::class_<EllipticReport>(m, "EllipticReport")
      .def_readonly("holds", &EllipticReport::holds)
      .def_readonly("worst_slack", &EllipticReport::worst_slack)
      .def_readonly("final_lhs", &EllipticReport::final_lhs)
      .def_readonly("final_bound", &EllipticReport::final_bound)
      .def_readonly("violations", &EllipticReport::violations);
  m.def("check_elliptic_potential",
        [](const std::vector<Vector>& xs, double lam) { return check_elliptic_potential(xs, lam); },
        py::arg("xs"), py::arg("lam"));

  m.def("run_trial",
        [](const PolicyConfig& c, const SyntheticEnvironment& env, std::uint64_t trial_seed) {
          const TrialResult r = run_trial(c, env, 0, 0, trial_seed);
          return py::make_tuple(r.regret.cum_regret, r.regret.chosen);
        },
        py::arg("config"), py::arg("env"), py::arg("trial_seed") = 0,
        "Returns (cumulative regret per round, chosen arm per round).");
}
