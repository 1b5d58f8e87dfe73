// Python bindings: data generators, training, prediction and the online update.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "brscn/bench.hpp"
#include "brscn/builder.hpp"
#include "brscn/data.hpp"
#include "brscn/errors.hpp"
#include "brscn/online.hpp"
#include "brscn/reservoir.hpp"

namespace py = pybind11;
using namespace brscn;

namespace {

Dataset make_dataset(const Matrix& u, const Matrix& t, Eigen::Index washout, const std::string& name) {
    Dataset d{u, t, washout, name};
    validate(d);
    return d;
}

py::dict splits_dict(const Splits& s) {
    py::dict out;
    out["train"] = s.train;
    out["val"] = s.val;
    out["test"] = s.test;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Block recurrent stochastic configuration networks";

    // Translators run newest first, so the base class goes in before its subclasses.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<DegenerateTarget>(m, "DegenerateTarget", PyExc_ArithmeticError);
    py::register_exception<NumericFailure>(m, "NumericFailure", PyExc_ArithmeticError);
    py::register_exception<ConstructionStalled>(m, "ConstructionStalled", PyExc_RuntimeError);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init(&make_dataset), py::arg("u"), py::arg("t"), py::arg("washout") = 0, py::arg("name") = "")
        .def_readwrite("u", &Dataset::u)
        .def_readwrite("t", &Dataset::t)
        .def_readwrite("washout", &Dataset::washout)
        .def_readwrite("name", &Dataset::name)
        .def_property_readonly("length", &Dataset::length)
        .def("scored_targets", &Dataset::scored_targets);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("lambda_grid", &TrainConfig::lambda_grid)
        .def_readwrite("r_initial", &TrainConfig::r_initial)
        .def_readwrite("g_max", &TrainConfig::g_max)
        .def_readwrite("epsilon", &TrainConfig::epsilon)
        .def_readwrite("j_max", &TrainConfig::j_max)
        .def_readwrite("j_step", &TrainConfig::j_step)
        .def_readwrite("n_sub", &TrainConfig::n_sub)
        .def_readwrite("alpha", &TrainConfig::alpha)
        .def_readwrite("sparsity_band", &TrainConfig::sparsity_band)
        .def_readwrite("washout", &TrainConfig::washout)
        .def_readwrite("base_seed", &TrainConfig::base_seed)
        .def_readwrite("max_r_anneals", &TrainConfig::max_r_anneals)
        .def_readwrite("readout_includes_input", &TrainConfig::readout_includes_input)
        .def("to_json", &config_to_json)
        .def_static("from_json", &config_from_json);

    py::class_<BlockModel>(m, "BlockModel")
        .def_readonly("w_out", &BlockModel::w_out)
        .def_readonly("washout", &BlockModel::washout)
        .def_property_readonly("state_dim", &BlockModel::state_dim)
        .def_property_readonly("block_sizes",
                               [](const BlockModel& b) {
                                   std::vector<Eigen::Index> sizes;
                                   for (const auto& s : b.blocks) sizes.push_back(s.size());
                                   return sizes;
                               })
        .def("recurrent_matrix", &assembled_recurrent)
        .def("predict", [](const BlockModel& b, const Matrix& u, Eigen::Index washout) { return predict(b, u, washout); },
             py::arg("u"), py::arg("washout"))
        .def("to_json", &model_to_json)
        .def_static("from_json", [](const std::string& text) { return model_from_json(text); });

    py::class_<ConvergenceRow>(m, "ConvergenceRow")
        .def_readonly("block_index", &ConvergenceRow::block_index)
        .def_readonly("total_nodes", &ConvergenceRow::total_nodes)
        .def_readonly("train_nrmse", &ConvergenceRow::train_nrmse)
        .def_readonly("val_nrmse", &ConvergenceRow::val_nrmse)
        .def_readonly("xi_total", &ConvergenceRow::xi_total)
        .def_readonly("lambda_used", &ConvergenceRow::lambda_used)
        .def_readonly("r_used", &ConvergenceRow::r_used);

    auto train_wrap = [](auto fn) {
        return [fn](const Dataset& train, const Dataset& val, const TrainConfig& cfg) {
            TrainResult r = fn(train, val, cfg);
            return py::make_tuple(std::move(r.model), r.log.rows, to_string(r.log.termination));
        };
    };
    m.def("train_brscn", train_wrap(&train_brscn), py::arg("train"), py::arg("val"), py::arg("cfg") = TrainConfig{},
          "Returns (model, convergence rows, termination reason).");
    m.def("train_rscn", train_wrap(&train_rscn), py::arg("train"), py::arg("val"), py::arg("cfg") = TrainConfig{});
    m.def("train_esn", &train_esn, py::arg("train"), py::arg("cfg") = TrainConfig{}, py::arg("n_nodes") = 96);

    m.def(
        "mackey_glass",
        [](int length, std::uint64_t seed) {
            MGConfig cfg;
            cfg.length = length;
            cfg.seed = seed;
            return gen_mackey_glass(cfg);
        },
        py::arg("length") = 1177, py::arg("seed") = 1);
    m.def(
        "mg_task", [](const std::string& variant, std::uint64_t seed) {
            MGConfig cfg;
            cfg.seed = seed;
            return splits_dict(build_mg_task(gen_mackey_glass(cfg), mg_variant_from_string(variant)));
        },
        py::arg("variant") = "mg", py::arg("seed") = 1);
    m.def("plant_task", [](std::uint64_t seed) { return splits_dict(gen_plant(seed)); }, py::arg("seed") = 1);
    m.def("load_csv", py::overload_cast<const std::string&, Eigen::Index>(&load_csv), py::arg("path"),
          py::arg("washout") = 0);
    m.def("write_csv", &write_csv, py::arg("dataset"), py::arg("path"));

    m.def("nrmse", &nrmse, py::arg("y"), py::arg("t"));
    m.def("spectral_radius", &spectral_radius, py::arg("m"), py::arg("tol") = 1e-12);
    m.def("max_singular_value", &max_singular_value, py::arg("m"), py::arg("tol") = 1e-12);
    m.def("least_squares_readout", &least_squares_readout, py::arg("x"), py::arg("t"), py::arg("ridge") = 0.0);

    m.def(
        "projection_step",
        [](const Matrix& w, const Vector& g, const Vector& y, double gamma, double c) {
            return projection_step(OnlineState{w, gamma, c, 0}, g, y).w_current;
        },
        py::arg("w"), py::arg("g"), py::arg("y"), py::arg("gamma") = 1.0, py::arg("c") = 1e-4);
}
