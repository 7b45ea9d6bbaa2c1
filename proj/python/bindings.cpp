#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "huberloc/dataio.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace huberloc;

namespace
{

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Position> to_positions(const Array& a)
{
  if (a.ndim() != 2 || a.shape(1) != 2)
    throw InvalidArgument("expected an (n, 2) array of positions");
  auto v = a.unchecked<2>();
  std::vector<Position> out(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i)
    out[static_cast<std::size_t>(i)] = {v(i, 0), v(i, 1)};
  return out;
}

Array from_positions(const std::vector<Position>& p)
{
  Array out({static_cast<py::ssize_t>(p.size()), py::ssize_t{2}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    v(static_cast<py::ssize_t>(i), 0) = p[i].x;
    v(static_cast<py::ssize_t>(i), 1) = p[i].y;
  }
  return out;
}

nlohmann::json to_nlohmann(const py::handle& obj)
{
  const std::string text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text);
}

ScenarioConfig scenario_of(const py::object& obj)
{
  if (obj.is_none())
    return {};
  return scenario_from_json(to_nlohmann(obj));
}

py::dict trace_dict(const std::string& name, const SolveTrace& t)
{
  return py::dict("name"_a = name, "rounds"_a = t.rounds, "reason"_a = std::string(to_string(t.reason)),
                  "cost"_a = t.cost, "max_displacement"_a = t.max_displacement, "warnings"_a = t.warnings);
}

py::dict report_dict(const RunReport& r)
{
  std::vector<double> errors;
  std::vector<std::uint64_t> hashes;
  std::vector<bool> failed;
  for (const auto& run : r.runs)
  {
    errors.push_back(run.network_error);
    hashes.push_back(run.measurement_hash);
    failed.push_back(run.failed);
  }
  return py::dict("method"_a = r.method, "errors"_a = errors, "failed"_a = failed, "measurement_hashes"_a = hashes,
                  "failures"_a = r.failures, "median"_a = r.median, "mean"_a = r.mean, "quantiles"_a = r.quantiles);
}

std::vector<Method> methods_of(const std::vector<std::string>& names)
{
  std::vector<Method> out;
  for (const auto& n : names)
    out.push_back(parse_method(n));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Cooperative sensor localization with relaxed and plain Huber costs.";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

  py::enum_<LossKind>(m, "LossKind")
      .value("NLS", LossKind::Nls)
      .value("RELAXED_NLS", LossKind::RelaxedNls)
      .value("HUBER", LossKind::Huber)
      .value("RELAXED_HUBER", LossKind::RelaxedHuber);

  m.def("residual", [](std::pair<double, double> xi, std::pair<double, double> xj, double r) {
    return residual({xi.first, xi.second}, {xj.first, xj.second}, r);
  }, "xi"_a, "xj"_a, "range"_a);
  m.def("link_cost", [](LossKind kind, double u, double knee) { return link_cost(kind, {knee}, u); }, "kind"_a,
        "u"_a, "knee"_a = 1.0);
  m.def(
      "link_grad",
      [](LossKind kind, std::pair<double, double> xi, std::pair<double, double> xj, double r, double knee) {
        const Position g = link_grad(kind, {knee}, {xi.first, xi.second}, {xj.first, xj.second}, r);
        return std::pair{g.x, g.y};
      },
      "kind"_a, "xi"_a, "xj"_a, "range"_a, "knee"_a = 1.0);

  py::class_<Network>(m, "Network")
      .def_property_readonly("num_sensors", &Network::num_sensors)
      .def_property_readonly("num_anchors", &Network::num_anchors)
      .def_property_readonly("edges",
                             [](const Network& n) {
                               std::vector<std::pair<std::size_t, std::size_t>> out;
                               for (const auto& e : n.edges())
                                 out.emplace_back(e.first.value, e.second.value);
                               return out;
                             })
      .def_property_readonly("anchor_positions", [](const Network& n) { return from_positions(n.anchor_positions()); })
      .def_property_readonly("true_sensor_positions",
                             [](const Network& n) { return from_positions(n.true_sensor_positions()); });

  m.def(
      "build_topology",
      [](const Array& points, std::size_t num_sensors, double comm_radius) {
        const auto p = to_positions(points);
        return build_topology(p, num_sensors, comm_radius);
      },
      "points"_a, "num_sensors"_a, "comm_radius"_a = kFullConnectivity,
      "Sensors are the first num_sensors rows, anchors the rest.");

  py::class_<MeasurementSet>(m, "MeasurementSet")
      .def("__len__", &MeasurementSet::size)
      .def_property_readonly("ranges",
                             [](const MeasurementSet& ms) {
                               std::vector<double> r;
                               for (const auto& e : ms)
                                 r.push_back(e.range);
                               return r;
                             })
      .def_property_readonly("labels",
                             [](const MeasurementSet& ms) {
                               std::vector<std::string> l;
                               for (const auto& e : ms)
                                 l.emplace_back(to_string(e.label));
                               return l;
                             })
      .def("hash", &MeasurementSet::hash);

  m.def(
      "synthesize",
      [](const Network& net, double sigma_n, double nlos_prob, double bias_mean, std::uint64_t seed) {
        return synthesize(net, {sigma_n, nlos_prob, bias_mean}, seed);
      },
      "net"_a, "sigma_n"_a = 0.5, "nlos_prob"_a = 0.0, "bias_mean"_a = 10.0, "seed"_a = 0);
  m.def("nlos_ratio", &nlos_ratio, "ms"_a);
  m.def(
      "gaussian_init", [](const Network& net, double std_dev, std::uint64_t seed) {
        return from_positions(gaussian_init(net, std_dev, seed).positions);
      },
      "net"_a, "std_dev"_a, "seed"_a);

  m.def(
      "solve",
      [](const std::string& method, const Network& net, const MeasurementSet& ms, const Array& init,
         const py::object& scenario) {
        const ScenarioConfig sc = scenario_of(scenario);
        sc.validate();
        MethodResult res;
        {
          py::gil_scoped_release release;
          res = solve_method(parse_method(method), sc, net, ms, {0, to_positions(init)});
        }
        py::list stages;
        for (const auto& [name, trace] : res.stages)
          stages.append(trace_dict(name, trace));
        return py::dict("positions"_a = from_positions(res.state.positions), "stages"_a = stages,
                        "diverged"_a = res.diverged, "failure"_a = res.failure);
      },
      "method"_a, "net"_a, "ms"_a, "init"_a, "scenario"_a = py::none(),
      "Runs one method. `scenario` is a dict in the scenario JSON layout; missing fields keep their defaults.");

  m.def(
      "run_monte_carlo",
      [](const py::object& scenario, const std::vector<std::string>& methods, std::uint64_t seed,
         std::size_t workers) {
        const ScenarioConfig sc = scenario_of(scenario);
        const auto ms = methods_of(methods);
        std::map<Method, RunReport> reports;
        {
          py::gil_scoped_release release;
          reports = run_monte_carlo(sc, ms, seed, workers);
        }
        py::dict out;
        for (const auto& [method, r] : reports)
          out[py::str(std::string(to_string(method)))] = report_dict(r);
        return out;
      },
      "scenario"_a, "methods"_a, "seed"_a, "workers"_a = 1);

  m.def("network_error", [](const Array& est, const Array& truth) {
    return network_error(to_positions(est), to_positions(truth));
  }, "estimates"_a, "truth"_a);

  m.def(
      "cdf_table",
      [](const std::vector<double>& samples, const std::vector<double>& grid) {
        std::vector<std::pair<double, double>> out;
        for (const auto& p : cdf_table(samples, grid))
          out.emplace_back(p.error, p.fraction);
        return out;
      },
      "samples"_a, "grid"_a);

  m.def("scenario_defaults", [] {
    return py::module_::import("json").attr("loads")(to_json(ScenarioConfig{}).dump());
  });

  m.def(
      "load_problem",
      [](const std::string& nodes, const std::string& ranges) {
        Problem p = load_problem(nodes, ranges);
        return py::make_tuple(std::move(p.net), std::move(p.ms), p.ids);
      },
      "nodes"_a, "ranges"_a);
}
