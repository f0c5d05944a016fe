// pyharness — python bindings over the workspace kernel and auditor.
// Records cross the boundary as plain dicts/lists mirroring the on-disk
// JSON schemas.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "harness/auditor.hpp"
#include "harness/evolver.hpp"
#include "harness/fixtures.hpp"
#include "harness/gatekeeper.hpp"
#include "harness/scenario.hpp"

namespace py = pybind11;
using namespace harness;

namespace {

py::object to_py(const json& j) {
  switch (j.type()) {
  case json::value_t::null:
    return py::none();
  case json::value_t::boolean:
    return py::bool_(j.get<bool>());
  case json::value_t::number_integer:
    return py::int_(j.get<long long>());
  case json::value_t::number_unsigned:
    return py::int_(j.get<unsigned long long>());
  case json::value_t::number_float:
    return py::float_(j.get<double>());
  case json::value_t::string:
    return py::str(j.get<std::string>());
  case json::value_t::array: {
    py::list out;
    for (const auto& item : j) out.append(to_py(item));
    return out;
  }
  case json::value_t::object: {
    py::dict out;
    for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
    return out;
  }
  default:
    return py::none();
  }
}

json from_py(const py::handle& obj) {
  if (obj.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(obj)) return obj.cast<bool>();
  if (py::isinstance<py::int_>(obj)) return obj.cast<long long>();
  if (py::isinstance<py::float_>(obj)) return obj.cast<double>();
  if (py::isinstance<py::str>(obj)) return obj.cast<std::string>();
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    json arr = json::array();
    for (const auto& item : obj) arr.push_back(from_py(item));
    return arr;
  }
  if (py::isinstance<py::dict>(obj)) {
    json out = json::object();
    for (const auto& [k, v] : obj.cast<py::dict>())
      out[k.cast<std::string>()] = from_py(v);
    return out;
  }
  throw std::invalid_argument("unsupported python value in record");
}

class PyWorkspace {
public:
  static PyWorkspace init(const std::string& root) {
    Workspace ws = Workspace::init(root);
    HarnessConfig::defaults().install(ws);
    write_default_protected(ws);
    return PyWorkspace(std::move(ws));
  }
  static PyWorkspace open(const std::string& root, bool read_only) {
    return PyWorkspace(Workspace::open(root, read_only
                                                 ? Workspace::Mode::read_only
                                                 : Workspace::Mode::read_write));
  }

  std::string root() const { return ws_.root().string(); }
  int current_iteration() const { return ws_.current_iteration(); }
  std::string current_stage() const { return to_string(ws_.current_stage()); }

  py::object register_artifact(const std::string& rel_path,
                               const std::string& kind,
                               const std::string& producer_role, int iteration,
                               const py::object& content) {
    fs::path file = ws_.ensure_iteration_dir(iteration) / rel_path;
    fs::create_directories(file.parent_path());
    write_json_file(file, from_py(content));
    auto a = ws_.register_artifact(file, artifact_kind_from(kind),
                                   producer_role, iteration);
    return to_py(a.to_json());
  }

  py::list events() const {
    py::list out;
    for (const auto& e : ws_.events()) out.append(to_py(e.to_json()));
    return out;
  }

  py::list artifacts() const {
    py::list out;
    for (const auto& a : ws_.artifacts()) out.append(to_py(a.to_json()));
    return out;
  }

  py::object quality_gate(int iteration) {
    HarnessConfig cfg = HarnessConfig::load(ws_);
    ClaimRegistry registry(ws_);
    Gatekeeper gate(ws_, cfg, registry);
    return to_py(gate.run_quality_gate(iteration).to_json());
  }

  py::object check_claim(const std::string& claim_id,
                         const std::string& usage) {
    ClaimRegistry registry(ws_);
    return to_py(registry.check(claim_id, usage_from(usage)).to_json());
  }

  py::dict memory_digest() {
    HarnessConfig cfg = HarnessConfig::load(ws_);
    MemoryRouter memory(ws_, cfg);
    py::dict out;
    for (const auto& [category, count] : memory.digest())
      out[py::str(to_string(category))] = count;
    return out;
  }

  std::string state_snapshot() const { return ws_.state_snapshot(); }

private:
  explicit PyWorkspace(Workspace ws) : ws_(std::move(ws)) {}
  Workspace ws_;
};

py::dict run_scenario_file(const std::string& scenario_file,
                           const std::string& workspace_root, unsigned seed) {
  Scenario scenario = Scenario::from_file(scenario_file);
  ScenarioDriver driver(scenario, workspace_root, seed);
  return to_py(driver.run().to_json()).cast<py::dict>();
}

py::dict audit(const std::string& root) {
  ConversionAuditor auditor(root);
  auto conversions = auditor.extract_conversions();
  auto matrix = auditor.transition_matrix();
  auto reviews = auditor.review_to_action();
  auto failures = auditor.failure_registry();

  py::dict out;
  py::list conv;
  for (const auto& e : conversions.events) conv.append(to_py(e.to_json()));
  out["conversions"] = conv;
  out["summary"] =
      py::dict(py::arg("count") = conversions.summary.count,
               py::arg("median_latency") = conversions.summary.median_latency,
               py::arg("max_latency") = conversions.summary.max_latency);
  out["transitions"] = to_py(matrix.to_json());
  py::list rows;
  for (const auto& r : reviews.rows) rows.append(to_py(r.to_json()));
  out["review_rows"] = rows;
  py::list frows;
  for (const auto& r : failures) frows.append(to_py(r.to_json()));
  out["failures"] = frows;
  return out;
}

py::list build_fixture_set(const std::string& outdir) {
  py::list out;
  for (const auto& m : build_fixtures(outdir)) out.append(to_py(m.to_json()));
  return out;
}

py::list inject_into(const std::string& root, const py::dict& spec) {
  Workspace ws = Workspace::open(root);
  auto injection = Injection::from_json(from_py(spec));
  py::list out;
  for (const auto& id : inject(ws, injection)) out.append(py::str(id));
  return out;
}

} // namespace

PYBIND11_MODULE(pyharness, m) {
  m.doc() = "research-harness kernel: workspaces, gates, memory, audits";

  py::class_<PyWorkspace>(m, "Workspace")
      .def_static("init", &PyWorkspace::init, py::arg("root"))
      .def_static("open", &PyWorkspace::open, py::arg("root"),
                  py::arg("read_only") = true)
      .def_property_readonly("root", &PyWorkspace::root)
      .def_property_readonly("iteration", &PyWorkspace::current_iteration)
      .def_property_readonly("stage", &PyWorkspace::current_stage)
      .def("register_artifact", &PyWorkspace::register_artifact,
           py::arg("rel_path"), py::arg("kind"), py::arg("producer_role"),
           py::arg("iteration"), py::arg("content"))
      .def("events", &PyWorkspace::events)
      .def("artifacts", &PyWorkspace::artifacts)
      .def("quality_gate", &PyWorkspace::quality_gate, py::arg("iteration"))
      .def("check_claim", &PyWorkspace::check_claim, py::arg("claim_id"),
           py::arg("usage"))
      .def("memory_digest", &PyWorkspace::memory_digest)
      .def("state_snapshot", &PyWorkspace::state_snapshot);

  m.def("run_scenario", &run_scenario_file, py::arg("scenario_file"),
        py::arg("workspace_root"), py::arg("seed") = 0,
        "run a scripted scenario into a fresh workspace; returns the report");
  m.def("audit", &audit, py::arg("root"),
        "read-only audit: conversions, transitions, review rows, failures");
  m.def("build_fixtures", &build_fixture_set, py::arg("outdir"),
        "generate the fixture workspaces and their manifests");
  m.def("inject", &inject_into, py::arg("root"), py::arg("injection"),
        "deterministically mutate registered artifacts");
}
