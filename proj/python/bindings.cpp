#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "reclag/dynamics.hpp"
#include "reclag/energy.hpp"
#include "reclag/io_data.hpp"
#include "reclag/ood.hpp"
#include "reclag/probability.hpp"
#include "reclag/trainer.hpp"

namespace py = pybind11;
using namespace reclag;

namespace {

py::dict dataset_dict(const Dataset& d) {
  py::dict out;
  out["features"] = d.features;
  out["labels"] = d.labels ? py::cast(*d.labels) : py::none();
  out["logits"] = d.logits ? py::cast(*d.logits) : py::none();
  return out;
}

Dataset make_dataset(const Matrix& features, std::optional<std::vector<std::uint32_t>> labels = std::nullopt,
                     std::optional<Matrix> logits = std::nullopt) {
  Dataset d;
  d.features = features;
  d.labels = std::move(labels);
  d.logits = std::move(logits);
  d.validate();
  return d;
}

Vector scores(const DensityModel& m, const Matrix& x) {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = ood_score(m, m.prepare(x.row(i).transpose()));
  return out;
}

}  // namespace

PYBIND11_MODULE(_reclag, m) {
  m.doc() = "Modern Hopfield networks with a RecLag memory Lagrangian";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  py::class_<DensityModel>(m, "DensityModel")
      .def(py::init([](const Matrix& xi, double beta, double gamma, double sphere_radius, double feature_norm) {
             DensityModel d{InteractionMatrix(xi), beta, gamma, sphere_radius, std::nullopt, feature_norm};
             d.validate();
             return d;
           }),
           py::arg("xi"), py::arg("beta"), py::arg("gamma"), py::arg("sphere_radius") = 1.0,
           py::arg("feature_norm") = 0.0)
      .def_property_readonly("xi", [](const DensityModel& d) { return d.xi.values(); })
      .def_readwrite("beta", &DensityModel::beta)
      .def_readwrite("gamma", &DensityModel::gamma)
      .def_readwrite("sphere_radius", &DensityModel::sphere_radius)
      .def_readwrite("feature_norm", &DensityModel::feature_norm)
      .def_property_readonly("log_partition",
                             [](const DensityModel& d) -> py::object {
                               if (!d.log_partition) return py::none();
                               return py::make_tuple(d.log_partition->estimate, d.log_partition->std_error);
                             })
      .def("score", &scores, py::arg("x"), "G of each (normalized) row; higher means in-distribution")
      .def("in_basin", [](const DensityModel& d, const Vector& x) { return in_basin(d, d.prepare(x)); })
      .def("log_density", [](const DensityModel& d, const Vector& x) { return log_density(d, d.prepare(x)); });

  m.def("gate_value",
        [](const Matrix& xi, const Vector& v, double beta, double gamma) { return gate_value(InteractionMatrix(xi), v, beta, gamma); },
        py::arg("xi"), py::arg("v"), py::arg("beta"), py::arg("gamma"));
  m.def("vanilla_update",
        [](const Matrix& xi, const Vector& v, double beta) { return vanilla_update(InteractionMatrix(xi), {v, 0}, beta).v; },
        py::arg("xi"), py::arg("v"), py::arg("beta"));
  m.def("reclag_update",
        [](const Matrix& xi, const Vector& v, double beta, double gamma) {
          return reclag_update(InteractionMatrix(xi), {v, 0}, beta, gamma).v;
        },
        py::arg("xi"), py::arg("v"), py::arg("beta"), py::arg("gamma"));
  m.def("capture_radius",
        [](const Matrix& xi, double beta, double gamma) { return capture_radius(InteractionMatrix(xi), beta, gamma); },
        py::arg("xi"), py::arg("beta"), py::arg("gamma"));
  m.def("modern_energy",
        [](const Matrix& xi, const Vector& v, double beta) { return modern_energy(InteractionMatrix(xi), v, beta); },
        py::arg("xi"), py::arg("v"), py::arg("beta"));
  m.def("adiabatic_energy",
        [](const Matrix& xi, const Vector& v, double beta, std::optional<double> gamma) {
          const MemoryLagrangian mem = gamma ? MemoryLagrangian(RecLag{beta, *gamma}) : MemoryLagrangian(LogSumExp{beta});
          return adiabatic_energy(InteractionMatrix(xi), v, mem, FeatureLagrangian::HalfSquare);
        },
        py::arg("xi"), py::arg("v"), py::arg("beta"), py::arg("gamma") = py::none(),
        "adiabatic energy under the log-sum-exp Lagrangian, or RecLag when gamma is given");

  m.def("gen_gaussian_mixture",
        [](std::size_t clusters, std::size_t per_cluster, Eigen::Index dim, double center_scale, double sigma,
           std::uint64_t seed) { return dataset_dict(gen_gaussian_mixture(clusters, per_cluster, dim, center_scale, sigma, seed)); },
        py::arg("n_clusters"), py::arg("per_cluster"), py::arg("dim") = 2, py::arg("center_scale") = 10.0,
        py::arg("sigma") = 0.2, py::arg("seed") = 0);
  m.def("gen_uniform_ring",
        [](std::size_t n, Eigen::Index dim, double r_inner, double r_outer, std::uint64_t seed) {
          return dataset_dict(gen_uniform_ring(n, dim, r_inner, r_outer, seed));
        },
        py::arg("n"), py::arg("dim") = 2, py::arg("r_inner") = 5.0, py::arg("r_outer") = 15.0, py::arg("seed") = 0);
  m.def("read_features", [](const std::string& path) { return dataset_dict(read_features(path)); }, py::arg("path"));
  m.def("write_features",
        [](const std::string& path, const Matrix& features, std::optional<std::vector<std::uint32_t>> labels,
           std::optional<Matrix> logits) { write_features(path, make_dataset(features, std::move(labels), std::move(logits))); },
        py::arg("path"), py::arg("features"), py::arg("labels") = py::none(), py::arg("logits") = py::none());

  m.def("train",
        [](const Matrix& features, Eigen::Index n_memory, double beta, std::optional<double> gamma, std::size_t epochs,
           double lr, std::size_t mc_samples, std::size_t batch_size, double norm, std::uint64_t seed,
           const std::string& estimator) {
          TrainerConfig cfg;
          cfg.n_memory = n_memory;
          cfg.beta = beta;
          cfg.gamma = gamma;
          cfg.epochs = epochs;
          cfg.learning_rate = lr;
          cfg.mc_samples = mc_samples;
          cfg.batch_size = batch_size;
          cfg.feature_norm_target = norm;
          cfg.seed = seed;
          if (estimator == "exact") {
            cfg.estimator = Estimator::Exact;
          } else if (estimator == "sampled") {
            cfg.estimator = Estimator::Sampled;
          } else if (estimator != "auto") {
            throw InvalidArgument("estimator must be auto, exact or sampled");
          }
          TrainResult r = train(make_dataset(features), cfg);
          return py::make_tuple(r.model, r.loss_history);
        },
        py::arg("features"), py::arg("n_memory") = 250, py::arg("beta") = 5.0, py::arg("gamma") = py::none(),
        py::arg("epochs") = 100, py::arg("lr") = 0.05, py::arg("mc_samples") = 5, py::arg("batch_size") = 128,
        py::arg("norm") = 10.0, py::arg("seed") = 0, py::arg("estimator") = "auto",
        "returns (model, per-epoch mean log-objective)");
  m.def("calibrate_gamma",
        [](const DensityModel& model, const Matrix& features, double tpr, std::size_t vanilla_steps) {
          return calibrate_gamma(model, make_dataset(features), tpr, vanilla_steps);
        },
        py::arg("model"), py::arg("features"), py::arg("tpr") = 0.95, py::arg("vanilla_steps") = 0);
  m.def("estimate_log_partition",
        [](DensityModel& model, std::size_t n_samples, std::uint64_t seed) {
          model.log_partition = estimate_log_partition(model, n_samples, seed);
          return py::make_tuple(model.log_partition->estimate, model.log_partition->std_error);
        },
        py::arg("model"), py::arg("n_samples"), py::arg("seed") = 0,
        "estimates log Z, stores it on the model and returns (estimate, std_error)");
  m.def("read_model", [](const std::string& path) { return read_model(path).model; }, py::arg("path"));
  m.def("write_model",
        [](const std::string& path, const DensityModel& model) {
          write_model(path, ModelFile{model, GaussianEmission{Vector::Zero(model.n_feature())}});
        },
        py::arg("path"), py::arg("model"), "writes the model with a unit-variance emission");
  m.def("demo_model", &landscape_demo_model);

  m.def("fpr_at_tpr",
        [](std::vector<double> id, std::vector<double> ood, double tpr) { return fpr_at_tpr({std::move(id), std::move(ood)}, tpr); },
        py::arg("id_scores"), py::arg("ood_scores"), py::arg("tpr") = 0.95);
  m.def("roc_and_auc",
        [](std::vector<double> id, std::vector<double> ood) {
          const DetectionMetrics d = roc_and_auc({std::move(id), std::move(ood)});
          Matrix roc(static_cast<Eigen::Index>(d.roc.size()), 2);
          for (std::size_t i = 0; i < d.roc.size(); ++i) roc.row(static_cast<Eigen::Index>(i)) << d.roc[i].fpr, d.roc[i].tpr;
          py::dict out;
          out["fpr95"] = d.fpr95;
          out["auroc"] = d.auroc;
          out["roc"] = roc;
          return out;
        },
        py::arg("id_scores"), py::arg("ood_scores"));

  m.def("export_landscape",
        [](const DensityModel& model, std::size_t resolution, std::tuple<double, double, double, double> bounds,
           bool reclag) {
          const auto [x0, x1, y0, y1] = bounds;
          const MemoryLagrangian mem =
              reclag ? MemoryLagrangian(RecLag{model.beta, model.gamma}) : MemoryLagrangian(LogSumExp{model.beta});
          const LandscapeGrid g = export_landscape(model, mem, LandscapeBounds{x0, x1, y0, y1}, resolution);
          Matrix cols(static_cast<Eigen::Index>(g.rows.size()), 6);
          for (std::size_t k = 0; k < g.rows.size(); ++k) {
            const auto& r = g.rows[k];
            cols.row(static_cast<Eigen::Index>(k)) << r.x, r.y, r.energy, r.gate, r.basin ? 1.0 : 0.0,
                r.log_density_unnormalized;
          }
          return cols;
        },
        py::arg("model"), py::arg("resolution") = 128, py::arg("bounds") = std::make_tuple(-2.5, 2.5, -2.5, 2.5),
        py::arg("reclag") = true, "rows of (x, y, energy, gate, basin, log_density_unnormalized), row-major in y");
}
