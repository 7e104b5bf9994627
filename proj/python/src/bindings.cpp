#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evo/error.hpp"
#include "evo/harness/run.hpp"
#include "evo/harness/suite.hpp"
#include "evo/planner/planner.hpp"
#include "evo/recall/encoder.hpp"
#include "evo/sim/world.hpp"

namespace py = pybind11;
using namespace evo;

// Structured values cross the boundary as JSON text; the package decodes them.
namespace {

RunConfig config_from(const std::string& text) { return RunConfig::from_json(json::parse(text)); }

class Session {
 public:
  explicit Session(const std::string& config) : cfg_(config_from(config)), ctx_(RunContext::from_config(cfg_)) {}

  std::string run(const std::string& task_id, std::uint64_t seed) {
    const auto id = "ep_" + std::to_string(++episodes_);
    return run_single(cfg_, ctx_, task_id, seed, id).to_json().dump();
  }
  std::string eval() { return run_eval(cfg_, ctx_).to_json().dump(); }
  std::string knowledge() const { return ctx_.kb.to_json().dump(); }
  std::int64_t kb_version() const { return ctx_.kb.version(); }
  std::size_t store_size() const { return ctx_.store->size(); }
  void save_knowledge(const std::string& dir) const { ctx_.kb.save(dir); }

 private:
  RunConfig cfg_;
  RunContext ctx_;
  int episodes_ = 0;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the evoagent package";

  // Later registrations are tried first, so the subclass goes last.
  py::register_exception<Error>(m, "EvoError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("default_config", [] { return RunConfig().to_json().dump(); });
  m.def("apply_override", [](const std::string& config, const std::string& key, const std::string& value) {
    json j = json::parse(config);
    apply_override(j, key, value);
    return j.dump();
  });
  m.def("check_config", [](const std::string& config) { return config_from(config).to_json().dump(); });
  m.def("standard_suite", [] { return json(standard_suite()).dump(); });
  m.def("run_eval", [](const std::string& config) { return run_eval(config_from(config)).to_json().dump(); });
  m.def("run_eval_text", [](const std::string& config) { return run_eval(config_from(config)).to_text(); });
  m.def("curriculum_run", [](const std::string& config) { return curriculum_run(config_from(config)).to_json().dump(); });
  m.def("scripted_plan", [](const std::string& goal, const std::string& inventory) {
    StateSnapshot s;
    s.inventory = json::parse(inventory).get<Inventory>();
    return json(scripted_plan(goal, s, {}, {}, sim::RecipeGraph::standard(), {}, false)).dump();
  });
  m.def("encode", [](const std::string& text) { return encode(text); });
  m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) { return cosine(a, b); });

  py::class_<Session>(m, "Session")
      .def(py::init<const std::string&>())
      .def("run", &Session::run)
      .def("eval", &Session::eval)
      .def("knowledge", &Session::knowledge)
      .def("kb_version", &Session::kb_version)
      .def("store_size", &Session::store_size)
      .def("save_knowledge", &Session::save_knowledge);

  py::class_<sim::World>(m, "World")
      .def(py::init<>())
      .def("reset",
           [](sim::World& w, std::uint64_t seed, const std::vector<std::string>& init) {
             return json(w.reset(seed, init)).dump();
           },
           py::arg("seed"), py::arg("init_commands") = std::vector<std::string>{})
      .def("step",
           [](sim::World& w, const std::string& action) {
             const auto r = w.step(std::string_view(action));
             const char* status = r.status == sim::StepStatus::ok                   ? "ok"
                                  : r.status == sim::StepStatus::rejected_malformed ? "rejected_malformed"
                                                                                     : "precondition_failed";
             return json{{"status", status}, {"terminated", r.terminated}, {"message", r.message}}.dump();
           })
      .def("snapshot", [](const sim::World& w) { return json(w.snapshot()).dump(); })
      .def("dump", &sim::World::dump)
      .def("count", &sim::World::count)
      .def("health", &sim::World::health)
      .def("tick", &sim::World::tick)
      .def("terminated", &sim::World::terminated)
      .def("agent", [](const sim::World& w) {
        const auto c = w.agent();
        return std::make_tuple(c.x, c.y, c.z);
      });
}
