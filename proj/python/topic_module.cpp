#include "topic/config.hpp"
#include "topic/experiment.hpp"
#include "topic/graph_io.hpp"
#include "topic/losses.hpp"
#include "topic/neural_gas.hpp"
#include "topic/protocol.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace topic;

namespace {

LabeledSet labeled(const std::vector<Vector>& inputs, const std::vector<Label>& labels) {
    if (inputs.size() != labels.size()) throw InputError("inputs and labels differ in length");
    LabeledSet s;
    s.inputs = inputs;
    s.labels = labels;
    return s;
}

py::tuple loss_tuple(const LossResult& r) { return py::make_tuple(r.loss, r.grads); }

}  // namespace

PYBIND11_MODULE(_topic, m) {
    m.doc() = "Few-shot class-incremental learning with a neural gas topology";

    auto base_error = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", base_error.ptr());
    py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

    py::class_<ModelShape>(m, "ModelShape")
        .def(py::init<>())
        .def(py::init([](std::size_t i, std::size_t h, std::size_t f, std::size_t c) {
                 return ModelShape{i, h, f, c};
             }),
             py::arg("input_dim"), py::arg("hidden_dim"), py::arg("feature_dim"), py::arg("class_count"))
        .def_readwrite("input_dim", &ModelShape::input_dim)
        .def_readwrite("hidden_dim", &ModelShape::hidden_dim)
        .def_readwrite("feature_dim", &ModelShape::feature_dim)
        .def_readwrite("class_count", &ModelShape::class_count);

    py::class_<ModelParams>(m, "ModelParams")
        .def_readwrite("w1", &ModelParams::w1)
        .def_readwrite("b1", &ModelParams::b1)
        .def_readwrite("w2", &ModelParams::w2)
        .def_readwrite("b2", &ModelParams::b2)
        .def_readwrite("phi", &ModelParams::phi)
        .def_property_readonly("class_count", &ModelParams::class_count)
        .def_property_readonly("feature_dim", &ModelParams::feature_dim);

    m.def("init_params", &init_params, py::arg("shape"), py::arg("seed"));
    m.def("extract_feature", &extract_feature, py::arg("x"), py::arg("params"));
    m.def("logits", &logits, py::arg("x"), py::arg("params"));
    m.def("softmax", &softmax, py::arg("o"), py::arg("temperature") = 1.0);
    m.def("expand_output_layer", &expand_output_layer, py::arg("params"), py::arg("added"), py::arg("seed"));

    py::class_<NGNode>(m, "NGNode")
        .def(py::init([](Vector centroid, Vector variance, Vector pseudo_input, Label label, int session) {
                 return NGNode{std::move(centroid), std::move(variance), std::move(pseudo_input), label, session};
             }),
             py::arg("centroid"), py::arg("variance"), py::arg("pseudo_input") = Vector(),
             py::arg("label") = 0, py::arg("origin_session") = 1)
        .def_readwrite("centroid", &NGNode::centroid)
        .def_readwrite("variance", &NGNode::variance)
        .def_readwrite("pseudo_input", &NGNode::pseudo_input)
        .def_readwrite("label", &NGNode::label)
        .def_readwrite("origin_session", &NGNode::origin_session);

    py::class_<NGGraph>(m, "NGGraph")
        .def(py::init<std::uint32_t>(), py::arg("lifetime") = 200)
        .def("__len__", &NGGraph::size)
        .def_property_readonly("lifetime", &NGGraph::lifetime)
        .def("add_node", &NGGraph::add_node)
        .def("node", py::overload_cast<std::size_t>(&NGGraph::node, py::const_), py::return_value_policy::copy)
        .def("set_node", [](NGGraph& g, std::size_t i, const NGNode& n) { g.node(i) = n; })
        .def("connected", &NGGraph::connected)
        .def("age", &NGGraph::age)
        .def("connect", &NGGraph::connect)
        .def("disconnect", &NGGraph::disconnect)
        .def("neighbors", &NGGraph::neighbors)
        .def("edge_count", &NGGraph::edge_count)
        .def("invariants_hold", &NGGraph::invariants_hold);

    py::class_<Ranking>(m, "Ranking")
        .def_readonly("order", &Ranking::order)
        .def_readonly("distances", &Ranking::distances);

    m.def("rank_nodes", &rank_nodes, py::arg("graph"), py::arg("f"));
    m.def("hebbian_update",
          [](NGGraph& g, const Vector& f, double eta, double alpha) { return hebbian_update(g, f, eta, alpha); },
          py::arg("graph"), py::arg("f"), py::arg("eta"), py::arg("alpha"));
    m.def("edge_update", &edge_update, py::arg("graph"), py::arg("r1"), py::arg("r2"));
    m.def("init_graph", &init_graph, py::arg("features"), py::arg("labels"), py::arg("node_count"),
          py::arg("seed"), py::arg("lifetime") = 200, py::arg("variance_floor") = kDefaultVarianceFloor);
    m.def("train_on_features", &train_on_features, py::arg("graph"), py::arg("features"), py::arg("eta"),
          py::arg("alpha"), py::arg("passes"), py::arg("seed"));
    m.def("assign_pseudo_exemplars",
          [](NGGraph& g, const std::vector<Vector>& inputs, const std::vector<Label>& labels,
             const std::vector<Vector>& features) { assign_pseudo_exemplars(g, labeled(inputs, labels), features); },
          py::arg("graph"), py::arg("inputs"), py::arg("labels"), py::arg("features"));
    m.def("estimate_variances",
          [](NGGraph& g, const std::vector<Vector>& features, double floor) { estimate_variances(g, features, floor); },
          py::arg("graph"), py::arg("features"), py::arg("variance_floor") = kDefaultVarianceFloor);
    m.def("quantization_error", &quantization_error, py::arg("graph"), py::arg("features"));
    m.def("xi_heuristic", &xi_heuristic, py::arg("graph"));
    m.def("save_graph", py::overload_cast<const NGGraph&, const std::filesystem::path&>(&save_graph));
    m.def("load_graph", py::overload_cast<const std::filesystem::path&>(&load_graph));

    // Losses return (loss, gradients) with gradients laid out like ModelParams.
    m.def("cross_entropy_loss",
          [](const std::vector<Vector>& inputs, const std::vector<Label>& labels, const ModelParams& p) {
              return loss_tuple(cross_entropy_loss(labeled(inputs, labels), p));
          },
          py::arg("inputs"), py::arg("labels"), py::arg("params"));
    m.def("anchor_loss",
          [](const NGGraph& g, const std::vector<std::size_t>& old_nodes, const ModelParams& p) {
              return loss_tuple(anchor_loss(g, old_nodes, p));
          },
          py::arg("graph"), py::arg("old_nodes"), py::arg("params"));
    m.def("min_max_loss",
          [](const std::vector<Vector>& inputs, const std::vector<Label>& labels, const NGGraph& g,
             const ModelParams& p, double xi, int session, bool min_term, bool max_term) {
              return loss_tuple(min_max_loss(labeled(inputs, labels), g, p, xi, session, {min_term, max_term}));
          },
          py::arg("inputs"), py::arg("labels"), py::arg("graph"), py::arg("params"), py::arg("xi"),
          py::arg("session"), py::arg("min_term") = true, py::arg("max_term") = true);
    m.def("distillation_loss",
          [](const std::vector<Vector>& inputs, const ModelParams& snapshot, const ModelParams& p,
             double temperature, std::size_t n_old) {
              LabeledSet s;
              s.inputs = inputs;
              s.labels.assign(inputs.size(), 0);
              return loss_tuple(distillation_loss(s, snapshot, p, temperature, n_old));
          },
          py::arg("inputs"), py::arg("snapshot"), py::arg("params"), py::arg("temperature"), py::arg("n_old"));

    py::enum_<Method>(m, "Method")
        .value("ft", Method::ft)
        .value("distill", Method::distill)
        .value("exemplar_anchor", Method::exemplar_anchor)
        .value("topic_al", Method::topic_al)
        .value("topic_al_mml", Method::topic_al_mml)
        .value("topic_al_mml_dl", Method::topic_al_mml_dl)
        .value("joint", Method::joint);
    m.def("parse_method", &parse_method);

    py::class_<HyperParams>(m, "HyperParams")
        .def(py::init<>())
        .def_readwrite("eta", &HyperParams::eta)
        .def_readwrite("alpha", &HyperParams::alpha)
        .def_readwrite("lifetime", &HyperParams::lifetime)
        .def_readwrite("node_budget", &HyperParams::node_budget)
        .def_readwrite("growth_k", &HyperParams::growth_k)
        .def_readwrite("ng_passes", &HyperParams::ng_passes)
        .def_readwrite("variance_floor", &HyperParams::variance_floor)
        .def_readwrite("lambda1", &HyperParams::lambda1)
        .def_readwrite("lambda2", &HyperParams::lambda2)
        .def_readwrite("xi", &HyperParams::xi)
        .def_readwrite("gamma", &HyperParams::gamma)
        .def_readwrite("temperature", &HyperParams::temperature)
        .def_readwrite("base_lr", &HyperParams::base_lr)
        .def_readwrite("inc_lr", &HyperParams::inc_lr)
        .def_readwrite("base_epochs", &HyperParams::base_epochs)
        .def_readwrite("inc_epochs", &HyperParams::inc_epochs)
        .def_readwrite("batch_size", &HyperParams::batch_size)
        .def_readwrite("exemplars_per_class", &HyperParams::exemplars_per_class)
        .def_readwrite("clip_norm", &HyperParams::clip_norm);

    py::class_<StreamSpec>(m, "StreamSpec")
        .def(py::init<>())
        .def_readwrite("base_classes", &StreamSpec::base_classes)
        .def_readwrite("new_classes", &StreamSpec::new_classes)
        .def_readwrite("ways", &StreamSpec::ways)
        .def_readwrite("shots", &StreamSpec::shots)
        .def_readwrite("input_dim", &StreamSpec::input_dim)
        .def_readwrite("class_separation", &StreamSpec::class_separation)
        .def_readwrite("cluster_spread", &StreamSpec::cluster_spread)
        .def_readwrite("train_per_base", &StreamSpec::train_per_base)
        .def_readwrite("test_per_class", &StreamSpec::test_per_class);

    py::class_<ModelSpec>(m, "ModelSpec")
        .def(py::init<>())
        .def_readwrite("hidden_dim", &ModelSpec::hidden_dim)
        .def_readwrite("feature_dim", &ModelSpec::feature_dim);

    py::class_<Session>(m, "Session")
        .def_readonly("index", &Session::index)
        .def_readonly("labels", &Session::labels)
        .def_property_readonly("train_inputs", [](const Session& s) { return s.train.inputs; })
        .def_property_readonly("train_labels", [](const Session& s) { return s.train.labels; })
        .def_property_readonly("test_inputs", [](const Session& s) { return s.test.inputs; })
        .def_property_readonly("test_labels", [](const Session& s) { return s.test.labels; });

    py::class_<SessionStream>(m, "SessionStream")
        .def_readonly("input_dim", &SessionStream::input_dim)
        .def_readonly("sessions", &SessionStream::sessions)
        .def("session_count", &SessionStream::session_count)
        .def("classes_through", &SessionStream::classes_through)
        .def("labels_disjoint", &SessionStream::labels_disjoint);
    m.def("make_synthetic_stream", &make_synthetic_stream, py::arg("spec"), py::arg("seed"));

    py::class_<SessionMetrics>(m, "SessionMetrics")
        .def_readonly("session", &SessionMetrics::session)
        .def_readonly("joint_acc", &SessionMetrics::joint_acc)
        .def_readonly("old_acc", &SessionMetrics::old_acc)
        .def_readonly("new_acc", &SessionMetrics::new_acc)
        .def_readonly("confusion", &SessionMetrics::confusion)
        .def("diagonal_mass", &SessionMetrics::diagonal_mass);

    m.def("evaluate_joint", &evaluate_joint, py::arg("params"), py::arg("stream"), py::arg("upto"));
    m.def("run_method",
          [](const SessionStream& s, Method method, const HyperParams& hp, const ModelSpec& model,
             std::uint64_t seed) {
              py::gil_scoped_release release;
              return run_method(s, method, hp, model, seed);
          },
          py::arg("stream"), py::arg("method"), py::arg("hp") = HyperParams{},
          py::arg("model") = ModelSpec{}, py::arg("seed") = 1);

    // Runs a config text end to end; returns (exit status, log text).
    m.def("run_config",
          [](const std::string& text, const std::string& out_dir) {
              std::ostringstream log;
              int status = kExitConfig;
              try {
                  ExperimentConfig c = parse_config(text);
                  c.out_dir = out_dir;
                  py::gil_scoped_release release;
                  status = run_experiment(c, log, true);
              } catch (const InputError& e) {
                  log << "config error: " << e.what() << '\n';
              }
              return py::make_tuple(status, log.str());
          },
          py::arg("text"), py::arg("out_dir"));
    m.def("config_keys", &config_keys);
}
