#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cpf/bundle.hpp"
#include "cpf/experiment.hpp"
#include "cpf/grid.hpp"
#include "cpf/metrics.hpp"
#include "cpf/student.hpp"
#include "cpf/synthetic.hpp"
#include "cpf/teacher.hpp"

namespace py = pybind11;
using namespace cpf;

namespace {

Graph graph_from_python(Index n, const std::vector<Edge>& edges, const Matrix& features,
                        const std::vector<int>& labels, int num_classes) {
  return build_graph(n, edges, features, labels, num_classes);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Graph knowledge distillation into propagation/feature-transformation students";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<TrainingDiverged>(m, "TrainingDiverged", PyExc_RuntimeError);

  py::class_<Graph>(m, "Graph")
      .def(py::init(&graph_from_python), py::arg("num_nodes"), py::arg("edges"), py::arg("features"),
           py::arg("labels"), py::arg("num_classes") = -1)
      .def_readonly("num_nodes", &Graph::num_nodes)
      .def_readonly("num_classes", &Graph::num_classes)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def_property_readonly("feature_dim", &Graph::feature_dim)
      .def_readonly("features", &Graph::features)
      .def_readonly("labels", &Graph::labels)
      .def_readonly("original_ids", &Graph::original_ids)
      .def("degree", &Graph::degree)
      .def("neighbors", [](const Graph& g, Index v) {
        const auto span = g.neighbors_of(v);
        return std::vector<Index>(span.begin(), span.end());
      })
      .def("edges", &Graph::edge_list)
      .def("is_connected", &Graph::is_connected);

  py::class_<Split>(m, "Split")
      .def(py::init<>())
      .def_readwrite("train", &Split::train)
      .def_readwrite("val", &Split::val)
      .def_readwrite("test", &Split::test)
      .def_readwrite("seed", &Split::seed)
      .def("unlabeled", &Split::unlabeled);

  m.def("largest_connected_component", &largest_connected_component, py::arg("graph"));
  m.def(
      "load_bundle",
      [](const std::filesystem::path& dir) {
        Bundle b = load_bundle(dir);
        py::dict meta;
        for (const auto& [k, v] : b.meta) meta[py::str(k)] = v;
        return py::make_tuple(std::move(b.graph), b.split ? py::cast(*b.split) : py::none(), meta);
      },
      py::arg("path"), "Returns (graph, split or None, meta dict).");
  m.def(
      "write_bundle",
      [](const std::filesystem::path& dir, const Graph& g, const std::optional<Split>& split) {
        write_bundle(dir, g, split ? &*split : nullptr);
      },
      py::arg("path"), py::arg("graph"), py::arg("split") = py::none());
  m.def(
      "make_split",
      [](const Graph& g, Index labeled_per_class, Index val_count, const std::string& val_mode, std::uint64_t seed) {
        if (val_mode != "per_class" && val_mode != "total") throw py::value_error("val_mode must be per_class or total");
        return make_split(g, {labeled_per_class, val_count,
                              val_mode == "total" ? ValidationMode::total : ValidationMode::per_class, seed});
      },
      py::arg("graph"), py::arg("labeled_per_class") = 20, py::arg("val_count") = 30,
      py::arg("val_mode") = "per_class", py::arg("seed") = 0);
  m.def(
      "make_synthetic_graph",
      [](Index num_nodes, int num_classes, Index feature_dim, double avg_degree, double homophily, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.num_nodes = num_nodes;
        spec.num_classes = num_classes;
        spec.feature_dim = feature_dim;
        spec.avg_degree = avg_degree;
        spec.homophily = homophily;
        spec.seed = seed;
        return make_synthetic_graph(spec);
      },
      py::arg("num_nodes") = 1000, py::arg("num_classes") = 4, py::arg("feature_dim") = 64,
      py::arg("avg_degree") = 4.0, py::arg("homophily") = 0.8, py::arg("seed") = 0);

  m.def(
      "accuracy", [](const Matrix& scores, const Graph& g, const std::vector<Index>& nodes) {
        return accuracy(scores, g, nodes);
      },
      py::arg("scores"), py::arg("graph"), py::arg("nodes"));
  m.def("relative_improvement", &relative_improvement, py::arg("student_acc"), py::arg("teacher_acc"));

  m.def(
      "label_propagation",
      [](const Graph& g, const Split& split, double smoothness, int iterations) {
        return student::label_propagation(g, split, {smoothness, iterations});
      },
      py::arg("graph"), py::arg("split"), py::arg("smoothness") = 0.5, py::arg("iterations") = 10);

  m.def(
      "train_teacher",
      [](const Graph& g, const Split& split, const std::string& kind, std::uint64_t seed, int max_epochs) {
        auto config = teacher::default_teacher_config(teacher::teacher_kind_from_string(kind));
        config.max_epochs = max_epochs;
        teacher::TeacherResult r;
        {
          py::gil_scoped_release release;
          r = teacher::train_teacher(g, split, config, seed);
        }
        py::dict out;
        out["soft_labels"] = r.soft_labels.probs;
        out["source"] = r.soft_labels.source;
        out["val_acc"] = r.val_acc;
        out["test_acc"] = r.test_acc;
        out["best_epoch"] = r.best_epoch;
        out["epochs"] = r.history.size();
        return out;
      },
      py::arg("graph"), py::arg("split"), py::arg("kind") = "gcn", py::arg("seed") = 0, py::arg("max_epochs") = 500);

  py::class_<student::StudentParams>(m, "StudentParams")
      .def_property_readonly("variant", [](const student::StudentParams& p) { return student::to_string(p.variant); })
      .def_readonly("layers", &student::StudentParams::layers)
      .def_readonly("dropout", &student::StudentParams::dropout)
      .def_readonly("seed", &student::StudentParams::seed)
      .def_readonly("alpha_logit", &student::StudentParams::alpha_logit)
      .def_readonly("conf", &student::StudentParams::conf)
      .def_readonly("z", &student::StudentParams::z)
      .def_readonly("w1", &student::StudentParams::w1)
      .def_readonly("b1", &student::StudentParams::b1)
      .def_readonly("w2", &student::StudentParams::w2)
      .def_readonly("b2", &student::StudentParams::b2)
      .def("alpha", &student::StudentParams::alpha, py::arg("num_nodes"))
      .def("save", [](const student::StudentParams& p, const std::filesystem::path& path) { write_student(p, path); })
      .def_static("load", &student::read_student, py::arg("path"));

  m.def(
      "train_student",
      [](const Graph& g, const Split& split, const Matrix& teacher_probs, const std::string& variant, int layers,
         Index hidden, double dropout, double lr, double weight_decay, int max_epochs, int patience,
         std::uint64_t seed) {
        student::StudentHyperparams hp;
        hp.layers = layers;
        hp.hidden = hidden;
        hp.dropout = dropout;
        hp.lr = lr;
        hp.weight_decay = weight_decay;
        hp.max_epochs = max_epochs;
        hp.patience = patience;
        const SoftLabelMatrix soft{teacher_probs, "external:python"};
        student::StudentResult r;
        {
          py::gil_scoped_release release;
          r = student::train_student(g, split, soft, student::variant_from_string(variant), hp, seed);
        }
        py::dict out;
        out["params"] = r.params;
        out["probs"] = r.prediction.probs;
        out["val_acc"] = r.val_acc;
        out["test_acc"] = r.test_acc;
        out["best_epoch"] = r.best_epoch;
        out["epochs"] = r.history.size();
        return out;
      },
      py::arg("graph"), py::arg("split"), py::arg("teacher_probs"), py::arg("variant") = "cpf-ind",
      py::arg("layers") = 10, py::arg("hidden") = 64, py::arg("dropout") = 0.5, py::arg("lr") = 0.005,
      py::arg("weight_decay") = 0.0005, py::arg("max_epochs") = 1000, py::arg("patience") = 50,
      py::arg("seed") = 0);

  m.def(
      "student_forward",
      [](const Graph& g, const Split& split, const student::StudentParams& params, bool keep_layers) {
        const auto inputs = student::make_student_inputs(g, split, {});
        auto pred = student::cpf_forward(inputs, params, keep_layers);
        return py::make_tuple(pred.probs, pred.per_layer);
      },
      py::arg("graph"), py::arg("split"), py::arg("params"), py::arg("keep_layers") = false,
      "Returns (probs, per-layer list).");

  m.def(
      "rank_interpretability",
      [](const Graph& g, const student::StudentParams& params, const Matrix& probs, Index top_k) {
        student::StudentPrediction pred{probs, {}};
        py::list out;
        for (const auto& c : rank_interpretability(params, pred, g, top_k)) {
          py::dict d;
          d["node"] = c.node;
          d["kind"] = c.kind;
          d["rank"] = c.rank;
          d["value"] = c.value;
          d["ego_nodes"] = c.ego_nodes;
          d["ego_edges"] = c.ego_edges;
          d["predicted"] = c.predicted;
          d["agreement"] = c.agreement;
          out.append(d);
        }
        return out;
      },
      py::arg("graph"), py::arg("params"), py::arg("probs"), py::arg("top_k") = 10);

  m.attr("__version__") = CPF_VERSION;
}
