#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "atmgad/error.hpp"
#include "atmgad/metrics.hpp"
#include "atmgad/motif.hpp"
#include "atmgad/synth.hpp"
#include "atmgad/train.hpp"

namespace py = pybind11;
using namespace atmgad;

namespace {

std::vector<std::int8_t> labels_from(const std::vector<int>& y) { return {y.begin(), y.end()}; }

Matrix matrix_from(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols) throw ValidationError("features: ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * m.cols));
  }
  return m;
}

py::dict metrics_dict(const EvalMetrics& m) {
  py::dict d;
  d["auc"] = m.auc;
  d["auprc"] = m.auprc;
  d["accuracy"] = m.accuracy;
  d["num_nodes"] = m.num_nodes;
  return d;
}

}  // namespace

PYBIND11_MODULE(_atmgad, m) {
  m.doc() = "Temporal-motif graph anomaly detection";

  // Later registrations are tried first, so the base class goes first.
  py::register_exception<InputError>(m, "InputError", PyExc_OSError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<TransactionGraph>(m, "Graph")
      .def(py::init([](std::size_t n, const std::vector<std::tuple<NodeId, NodeId, Timestamp>>& edges) {
             std::vector<EdgeRecord> recs;
             for (auto [s, d, t] : edges) recs.push_back({s, d, t, std::nullopt});
             return TransactionGraph(n, std::move(recs));
           }),
           py::arg("num_nodes"), py::arg("edges"))
      .def_property_readonly("num_nodes", &TransactionGraph::num_nodes)
      .def_property_readonly("num_edges", &TransactionGraph::num_edges)
      .def_property_readonly("tau_max", &TransactionGraph::tau_max)
      .def_property_readonly("feature_dim", &TransactionGraph::feature_dim)
      .def("t_earliest", py::overload_cast<NodeId>(&TransactionGraph::t_earliest, py::const_))
      .def("edges",
           [](const TransactionGraph& g) {
             std::vector<std::tuple<NodeId, NodeId, Timestamp>> out;
             for (const auto& e : g.edges()) out.emplace_back(e.src, e.dst, e.timestamp);
             return out;
           })
      .def("labels",
           [](const TransactionGraph& g) {
             return std::vector<int>(g.labels().begin(), g.labels().end());
           })
      .def("features",
           [](const TransactionGraph& g) {
             const Matrix& x = g.features();
             std::vector<std::vector<double>> rows(x.rows, std::vector<double>(x.cols));
             for (std::size_t i = 0; i < x.rows; ++i)
               for (std::size_t j = 0; j < x.cols; ++j) rows[i][j] = x(i, j);
             return rows;
           })
      .def("with_features_labels",
           [](const TransactionGraph& g, const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
             return g.with_features_labels(matrix_from(x), labels_from(y));
           })
      .def("labeled_nodes", &TransactionGraph::labeled_nodes);

  m.def("load_graph",
        [](const std::filesystem::path& edges, const std::filesystem::path& features,
           const std::filesystem::path& labels, bool remap_ids) {
          return attach_features_labels(load_edge_list(edges, {remap_ids}), features, labels);
        },
        py::arg("edges"), py::arg("features"), py::arg("labels"), py::arg("remap_ids") = false);
  m.def("load_edge_list",
        [](const std::filesystem::path& p, bool remap) { return load_edge_list(p, {remap}); }, py::arg("path"),
        py::arg("remap_ids") = false);
  m.def("synth_burst_graph",
        py::overload_cast<std::size_t, double, Timestamp, std::uint64_t>(&synth_burst_graph), py::arg("n_nodes"),
        py::arg("fraud_fraction") = 0.1, py::arg("burst_len") = 20, py::arg("seed") = 0);

  m.def(
      "make_splits",
      [](const TransactionGraph& g, int k, double train_fraction, std::uint64_t seed) {
        std::vector<std::pair<std::vector<NodeId>, std::vector<NodeId>>> out;
        for (auto& s : make_splits(g, k, train_fraction, seed)) out.emplace_back(s.train_ids, s.test_ids);
        return out;
      },
      py::arg("graph"), py::arg("k") = 3, py::arg("train_fraction") = 0.7, py::arg("seed") = 0);

  m.def(
      "catalog",
      [](const std::string& mode) {
        const auto& cat = build_catalog(catalog_mode_from_string(mode));
        std::vector<std::string> out;
        for (std::size_t i = 0; i < cat.size(); ++i) out.push_back(cat.describe(static_cast<MotifTypeId>(i)));
        return out;
      },
      py::arg("mode") = "focal_rooted", "Type descriptions, indexed by type id");

  m.def(
      "enumerate_instances",
      [](const TransactionGraph& g, NodeId v, double delta, const std::string& mode) {
        if (v >= g.num_nodes()) throw ValidationError("node " + std::to_string(v) + " out of range");
        py::list out;
        for (const auto& inst : enumerate_instances(g, v, delta, build_catalog(catalog_mode_from_string(mode)))) {
          py::dict d;
          d["type"] = inst.type;
          d["nodes"] = inst.nodes;
          d["edges"] = inst.edges;
          d["tau_max"] = inst.tau_max;
          out.append(d);
        }
        return out;
      },
      py::arg("graph"), py::arg("node"), py::arg("delta"), py::arg("mode") = "focal_rooted");

  m.def("sparsemax", [](const std::vector<double>& z) { return diff::sparsemax(z); });
  m.def("auc", [](const std::vector<double>& s, const std::vector<int>& y) { return auc(s, labels_from(y)); });
  m.def("auprc", [](const std::vector<double>& s, const std::vector<int>& y) { return auprc(s, labels_from(y)); });

  py::class_<ModelState>(m, "Model")
      .def_property_readonly("ablation", [](const ModelState& s) { return to_string(s.model.config().ablation); })
      .def_property_readonly("deltas", [](const ModelState& s) { return s.deltas; })
      .def_property_readonly("tau_max", [](const ModelState& s) { return s.tau_max; })
      .def("predict", [](const ModelState& s, const TransactionGraph& g,
                         const std::vector<NodeId>& nodes) { return predict(s, g, nodes); })
      .def("evaluate", [](const ModelState& s, const TransactionGraph& g,
                          const std::vector<NodeId>& nodes) { return metrics_dict(evaluate(s, g, nodes)); })
      .def("save", [](const ModelState& s, const std::filesystem::path& p) { save_checkpoint(s, p); });
  m.def("load_model", [](const std::filesystem::path& p) { return load_checkpoint(p); });

  m.def(
      "train",
      [](const TransactionGraph& g, const std::vector<NodeId>& train_ids, const std::vector<NodeId>& test_ids,
         const std::string& ablation, int epochs, double learning_rate, std::uint64_t seed,
         std::optional<double> delta_fixed) {
        SplitSpec split;
        split.train_ids = train_ids;
        split.test_ids = test_ids;
        TrainConfig tc;
        tc.ablation = ablation_from_string(ablation);
        tc.epochs = epochs;
        tc.learning_rate = learning_rate;
        tc.seed = seed;
        tc.delta_fixed = delta_fixed;
        TrainResult r = [&] {
          py::gil_scoped_release release;
          return train(g, split, ModelConfig{}, tc);
        }();
        py::dict report;
        report["test"] = metrics_dict(r.report.test);
        report["train"] = metrics_dict(r.report.train);
        report["loss_curve"] = r.report.loss_curve;
        report["seconds"] = r.report.seconds;
        return py::make_tuple(std::move(r.state), report);
      },
      py::arg("graph"), py::arg("train_ids"), py::arg("test_ids"), py::arg("ablation") = "full",
      py::arg("epochs") = 200, py::arg("learning_rate") = 1e-3, py::arg("seed") = 0,
      py::arg("delta_fixed") = py::none());
}
