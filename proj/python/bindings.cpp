#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlgpc/cost.hpp"
#include "nlgpc/derivatives.hpp"
#include "nlgpc/harness.hpp"
#include "nlgpc/plant.hpp"
#include "nlgpc/predictor.hpp"
#include "nlgpc/recnn.hpp"
#include "nlgpc/solver.hpp"
#include "nlgpc/tasks.hpp"

namespace py = pybind11;
using namespace nlgpc;

namespace {

std::vector<std::vector<double>> mat_to_rows(const Mat& m) {
  std::vector<std::vector<double>> rows(m.rows, std::vector<double>(m.cols));
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) rows[r][c] = m(r, c);
  return rows;
}

LayerSpec make_layer(const std::string& kind, int units, const std::string& activation) {
  LayerSpec spec;
  if (kind == "dense") spec.kind = LayerKind::Dense;
  else if (kind == "gru") spec.kind = LayerKind::Gru;
  else if (kind == "lstm") spec.kind = LayerKind::Lstm;
  else throw ConfigError("layer kind must be dense, gru or lstm");
  spec.units = units;
  if (activation == "linear") spec.activation = Activation::Linear;
  else if (activation == "relu") spec.activation = Activation::Relu;
  else if (activation == "tanh") spec.activation = Activation::Tanh;
  else if (activation == "sigmoid") spec.activation = Activation::Sigmoid;
  else throw ConfigError("activation must be linear, relu, tanh or sigmoid");
  return spec;
}

std::vector<LayerSpec> make_layers(const std::vector<std::tuple<std::string, int, std::string>>& raw) {
  std::vector<LayerSpec> out;
  for (const auto& [kind, units, act] : raw) out.push_back(make_layer(kind, units, act));
  return out;
}

}  // namespace

PYBIND11_MODULE(nlgpc, m) {
  m.doc() = "neural generalized predictive control testbed";

  py::register_exception<BarrierDomainError>(m, "BarrierDomainError");
  py::register_exception<SerializationError>(m, "SerializationError");

  py::class_<HorizonConfig>(m, "HorizonConfig")
      .def(py::init<>())
      .def_readwrite("N", &HorizonConfig::N)
      .def_readwrite("N1", &HorizonConfig::N1)
      .def_readwrite("N2", &HorizonConfig::N2)
      .def_readwrite("Nc", &HorizonConfig::Nc)
      .def_readwrite("n_d", &HorizonConfig::n_d)
      .def_readwrite("d_d", &HorizonConfig::d_d)
      .def("validate", &HorizonConfig::validate);

  py::class_<Dims>(m, "Dims")
      .def(py::init<>())
      .def_readwrite("m", &Dims::m)
      .def_readwrite("n", &Dims::n)
      .def_readwrite("w", &Dims::w);

  m.def("input_length", &input_length);

  py::class_<ChildModel>(m, "ChildModel")
      .def(py::init([](const std::vector<std::tuple<std::string, int, std::string>>& layers,
                       int input_width) { return ChildModel(make_layers(layers), input_width); }),
           py::arg("layers"), py::arg("input_width"))
      .def_static("seeded",
                  [](const std::vector<std::tuple<std::string, int, std::string>>& layers,
                     int input_width, std::uint32_t seed) {
                    return ChildModel::seeded(make_layers(layers), input_width, seed);
                  })
      .def("forward", &ChildModel::forward)
      .def("reset_state", &ChildModel::reset_state)
      .def("parameter_count", &ChildModel::parameter_count)
      .def_property_readonly("input_width", &ChildModel::input_width)
      .def_property_readonly("output_width", &ChildModel::output_width);

  m.def("count_parameters",
        [](const std::vector<std::tuple<std::string, int, std::string>>& layers, int p) {
          return count_parameters(make_layers(layers), p);
        });
  m.def("flash_bytes", &flash_bytes);
  m.def("save_weights", py::overload_cast<const ChildModel&, const std::string&>(&save_weights));
  m.def("load_weights", py::overload_cast<const std::string&>(&load_weights));

  m.def("gru_fixed_point_demo", [](const Vec& h) {
    // zero-parameter cell: h' = 0.5 h
    GruWeights w{Mat(h.size(), 1), Mat(h.size(), 1), Mat(h.size(), 1),
                 Mat(h.size(), h.size()), Mat(h.size(), h.size()), Mat(h.size(), h.size()),
                 Vec(h.size(), 0.0), Vec(h.size(), 0.0), Vec(h.size(), 0.0)};
    return gru_step(w, Vec(1, 0.0), h);
  });

  py::class_<QueueState>(m, "QueueState")
      .def_static("filled", &QueueState::filled)
      .def_readwrite("tau", &QueueState::tau)
      .def_readwrite("alpha", &QueueState::alpha)
      .def_readwrite("l", &QueueState::l);

  m.def("build_input_vector", &build_input_vector);
  m.def("roll_queues", &roll_queues);

  py::class_<ControlSequence>(m, "ControlSequence")
      .def_static("constant", &ControlSequence::constant)
      .def("row", &ControlSequence::row)
      .def_property_readonly("steps", &ControlSequence::steps);

  m.def("rollout", [](ChildModel& model, const QueueState& q, const ControlSequence& U,
                      const HorizonConfig& h) { return rollout(model, q, U, h); });

  py::class_<StencilConfig>(m, "StencilConfig")
      .def(py::init<>())
      .def_readwrite("epsilon", &StencilConfig::epsilon)
      .def_readwrite("relative", &StencilConfig::relative);

  m.def("central_jacobian",
        [](const std::function<Vec(const Vec&)>& g, const Vec& x, const StencilConfig& sc) {
          return mat_to_rows(central_jacobian(g, x, sc));
        });

  py::class_<CostSpec>(m, "CostSpec")
      .def(py::init<>())
      .def_readwrite("q_diag", &CostSpec::q_diag)
      .def_readwrite("lambda_diag", &CostSpec::lambda_diag)
      .def_readwrite("s", &CostSpec::s)
      .def_readwrite("r", &CostSpec::r)
      .def_readwrite("b", &CostSpec::b);

  m.def("barrier", &barrier);
  m.def("barrier_grad", &barrier_grad);
  m.def("barrier_hess", &barrier_hess);

  py::class_<TrajectoryParams>(m, "TrajectoryParams")
      .def(py::init<>())
      .def_readwrite("A", &TrajectoryParams::A)
      .def_readwrite("B", &TrajectoryParams::B)
      .def_readwrite("C", &TrajectoryParams::C)
      .def_readwrite("omega", &TrajectoryParams::omega)
      .def_readwrite("y0", &TrajectoryParams::y0);

  m.def("eight_ref", &eight_ref);
  m.def("pringle_ref", &pringle_ref);
  m.def("line_ref", &line_ref);
  m.def("default_eight", &default_eight);
  m.def("default_pringle", &default_pringle);
  m.def("default_line", &default_line);

  py::class_<PlantParams>(m, "PlantParams")
      .def(py::init<>())
      .def_readwrite("seed", &PlantParams::seed)
      .def_readwrite("noise_amp", &PlantParams::noise_amp)
      .def_readwrite("sensor_gain", &PlantParams::sensor_gain);

  py::class_<Plant>(m, "Plant")
      .def(py::init<PlantParams>(), py::arg("params") = PlantParams{})
      .def("step", &Plant::step)
      .def("apply_disturbance", &Plant::apply_disturbance)
      .def("static_map", &Plant::static_map)
      .def("rest_input", &Plant::rest_input)
      .def("rest_pose", &Plant::rest_pose);

  py::class_<RunLog>(m, "RunLog");
  m.def("read_log_csv", &read_log_csv);
  m.def("compute_rmse", &compute_rmse);
}
