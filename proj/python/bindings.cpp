#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "advdrive/adversary.hpp"
#include "advdrive/commands.hpp"
#include "advdrive/config.hpp"
#include "advdrive/experiment.hpp"
#include "advdrive/io.hpp"
#include "advdrive/metrics.hpp"
#include "advdrive/perturb.hpp"
#include "advdrive/traffic_sim.hpp"
#include "advdrive/victim.hpp"

namespace py = pybind11;
using namespace advdrive;

namespace {

// JSON crosses the boundary as text; Python's json module does the rest.
py::object to_py(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

ExperimentConfig make_config(const std::map<std::string, std::string>& overrides,
                             const std::string& path) {
  ExperimentConfig c;
  if (!path.empty()) apply_config_file(c, path);
  for (const auto& [k, v] : overrides) c.set(k, v);
  c.validate();
  return c;
}

py::dict step_to_dict(const StepOutcome& s) {
  py::dict d;
  d["observation"] = std::vector<double>(s.observation.begin(), s.observation.end());
  d["reward"] = s.reward;
  d["collided"] = s.collided;
  d["completed"] = s.completed;
  d["truncated"] = s.truncated;
  d["ego_speed"] = s.ego_speed;
  return d;
}

py::dict perturbation_to_dict(const Perturbation& p) {
  py::dict d;
  d["delta"] = p.delta;
  d["achieved_action"] = p.achieved_action;
  d["target_action"] = p.target_action;
  d["loss"] = p.loss;
  return d;
}

PerturbConfig perturb_config(const std::string& method, double eps, int steps,
                             std::optional<double> alpha) {
  PerturbConfig c;
  c.method = parse_perturb_method(method);
  c.eps_pert = eps;
  c.pgd_steps = steps;
  c.pgd_alpha = alpha;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Budgeted adversarial attacks on a left-turn driving policy";
  m.attr("OBSERVATION_SIZE") = kObservationSize;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_readwrite("v_max", &EnvConfig::v_max)
      .def_readwrite("beta", &EnvConfig::beta)
      .def_readwrite("dt", &EnvConfig::dt)
      .def_readwrite("arrival_p", &EnvConfig::arrival_p)
      .def_readwrite("t_max", &EnvConfig::t_max)
      .def_readwrite("sense_radius", &EnvConfig::sense_radius)
      .def_readwrite("vehicle_length", &EnvConfig::vehicle_length)
      .def_readwrite("vehicle_width", &EnvConfig::vehicle_width)
      .def_readwrite("cross_speed", &EnvConfig::cross_speed)
      .def_readwrite("route_length", &EnvConfig::route_length);

  py::class_<IntersectionEnv>(m, "IntersectionEnv")
      .def(py::init<const EnvConfig&>(), py::arg("config") = EnvConfig{})
      .def("reset",
           [](IntersectionEnv& e, std::uint64_t seed) {
             const Observation o = e.reset(seed);
             return std::vector<double>(o.begin(), o.end());
           },
           py::arg("seed"))
      .def("step", [](IntersectionEnv& e, double action) { return step_to_dict(e.step(action)); },
           py::arg("action"))
      .def_property_readonly("finished", &IntersectionEnv::finished);

  py::class_<VictimAgent>(m, "Victim")
      .def("action",
           [](const VictimAgent& v, const std::vector<double>& obs) { return victim_action(v, obs); })
      .def("mean",
           [](const VictimAgent& v, const std::vector<double>& obs) { return victim_mean(v, obs); })
      .def("gradient",
           [](const VictimAgent& v, const std::vector<double>& obs) {
             return victim_action_gradient(v, obs);
           })
      .def("to_json", [](const VictimAgent& v) { return dump_json(victim_to_json(v)); })
      .def_readonly("seed", &VictimAgent::seed);

  m.def("train_victim",
        [](const std::map<std::string, std::string>& overrides, const std::string& config_path) {
          const ExperimentConfig c = make_config(overrides, config_path);
          py::gil_scoped_release release;
          return train_victim(c.env, c.victim_ppo, c.seed()).agent;
        },
        py::arg("overrides") = std::map<std::string, std::string>{},
        py::arg("config_path") = "",
        "Train a victim; overrides are config keys such as {'victim.total_steps': '2000'}.");
  m.def("untrained_victim",
        [](std::uint64_t seed) {
          return make_victim(EnvConfig{}, PpoConfig::victim_defaults(), seed);
        },
        py::arg("seed") = 0);
  m.def("load_victim", [](const std::string& path) { return load_victim(path).agent; });
  m.def("victim_from_json",
        [](const std::string& text) { return victim_from_json(nlohmann::json::parse(text)); });

  m.def("perturb",
        [](const VictimAgent& v, const std::vector<double>& obs, double target,
           const std::string& method, double eps, int pgd_steps, std::optional<double> pgd_alpha) {
          return perturbation_to_dict(
              perturb(v, obs, target, perturb_config(method, eps, pgd_steps, pgd_alpha)));
        },
        py::arg("victim"), py::arg("obs"), py::arg("target"), py::arg("method") = "fgsm",
        py::arg("eps") = 0.05, py::arg("pgd_steps") = 10, py::arg("pgd_alpha") = py::none());

  m.def("attack_efficiency", &attack_efficiency, py::arg("cr"), py::arg("ana"),
        py::arg("k") = 0.05);

  m.def("config_text",
        [](const std::map<std::string, std::string>& overrides, const std::string& path) {
          return make_config(overrides, path).to_text();
        },
        py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("config_path") = "",
        "Resolved configuration as key = value lines.");

  // The CLI subcommands. Returns {"files": [...], "summary": str}.
  m.def(
      "run",
      [](const std::string& command, const std::map<std::string, std::string>& overrides,
         const std::string& config_path, const std::string& victim,
         const std::vector<std::string>& adversaries, const std::string& method,
         const std::vector<std::string>& perturbs, bool include_none, bool include_ra) {
        CommandOptions o;
        o.config = make_config(overrides, config_path);
        o.victim_path = victim;
        o.adversary_paths = adversaries;
        o.method = parse_attack_method(method);
        for (const std::string& p : perturbs) o.perturbs.push_back(parse_perturb_method(p));
        o.include_none = include_none;
        o.include_ra = include_ra;
        CommandResult r;
        {
          py::gil_scoped_release release;
          if (command == "train-victim") {
            r = cmd_train_victim(o);
          } else if (command == "train-adversary") {
            r = cmd_train_adversary(o);
          } else if (command == "evaluate") {
            r = cmd_evaluate(o);
          } else if (command == "compare") {
            r = cmd_compare(o);
          } else if (command == "sweep-gamma") {
            r = cmd_sweep_gamma(o);
          } else if (command == "sweep-gamma-test") {
            r = cmd_sweep_gamma_test(o);
          } else if (command == "sweep-density") {
            r = cmd_sweep_density(o);
          } else {
            throw std::invalid_argument("unknown command '" + command + "'");
          }
        }
        py::dict d;
        d["files"] = r.files;
        d["summary"] = r.summary;
        return d;
      },
      py::arg("command"), py::arg("overrides") = std::map<std::string, std::string>{},
      py::arg("config_path") = "", py::arg("victim") = "",
      py::arg("adversaries") = std::vector<std::string>{}, py::arg("method") = "ours",
      py::arg("perturbs") = std::vector<std::string>{}, py::arg("include_none") = false,
      py::arg("include_ra") = false);

  m.def("evaluate",
        [](const VictimAgent& v, const std::string& method, std::optional<std::string> adversary,
           int episodes, int gamma_test, std::uint64_t seed) {
          const AttackMethod am = parse_attack_method(method);
          std::optional<AdversaryAgent> adv;
          if (adversary) adv = load_adversary(*adversary);
          AttackerSpec spec{am, adv ? &*adv : nullptr,
                            adv ? adv->settings.perturb : PerturbConfig{}};
          MetricsReport r;
          {
            py::gil_scoped_release release;
            r = evaluate_attacker(v, "", EnvConfig{}, spec, gamma_test, episodes, {seed}, 0.05, 1)
                    .report;
          }
          return to_py(report_to_json(r));
        },
        py::arg("victim"), py::arg("method") = "none", py::arg("adversary") = py::none(),
        py::arg("episodes") = 100, py::arg("gamma_test") = 10, py::arg("seed") = 0,
        "Metrics report (SR, CR, AS, AR, ANA, AE) as a dict.");
}
