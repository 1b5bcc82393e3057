#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "astprune/ast.hpp"
#include "astprune/cli.hpp"
#include "astprune/data_io.hpp"
#include "astprune/errors.hpp"
#include "astprune/metrics.hpp"
#include "astprune/network.hpp"
#include "astprune/pruning.hpp"
#include "astprune/ssr.hpp"

namespace py = pybind11;
using namespace astprune;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    std::vector<int> dims;
    for (py::ssize_t i = 0; i < arr.ndim(); ++i) {
        dims.push_back(static_cast<int>(arr.shape(i)));
    }
    std::vector<double> data(arr.data(), arr.data() + arr.size());
    return Tensor::from(std::move(dims), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
    py::array_t<double> arr(shape);
    std::copy(t.data.begin(), t.data.end(), arr.mutable_data());
    return arr;
}

RegKind kind_from_string(const std::string& kind) {
    if (kind == "l1") return RegKind::L1Log;
    if (kind == "l2") return RegKind::L2Log;
    if (kind == "focuss") return RegKind::Focuss;
    if (kind == "dns") return RegKind::DnsStep;
    throw UsageError("unknown regularizer kind '" + kind + "'");
}

DataSplit split_from_arrays(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                            const std::vector<int>& labels) {
    DataSplit split;
    split.inputs = tensor_from_array(x);
    split.labels = labels;
    if (split.inputs.dims[0] != static_cast<int>(labels.size())) {
        throw ShapeError("inputs and labels disagree on the example count");
    }
    return split;
}

// Graph + parameters bundled for Python use.
struct Model {
    Graph graph;
    ParamSet params;

    Model(double width, std::uint64_t seed) {
        ArchSpec spec{width};
        std::tie(graph, params) = build_network(spec, seed);
    }

    double loss(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                const std::vector<int>& labels) {
        Batch batch{tensor_from_array(x), labels};
        return forward(graph, params, batch).loss;
    }

    void train(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
               const std::vector<int>& labels, double lr, double momentum, int batch_size,
               int epochs, std::uint64_t seed) {
        Dataset data;
        data.train = split_from_arrays(x, labels);
        TrainHyper hyper{lr, momentum, batch_size, epochs, seed};
        params = sgd_train(graph, params, data, hyper).params;
    }

    double error_rate(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                      const std::vector<int>& labels) {
        DataSplit split = split_from_arrays(x, labels);
        return evaluate(graph, params, split);
    }

    py::dict weights() const {
        py::dict out;
        for (const auto& l : params.layers) {
            out[py::str(l.name)] = py::make_tuple(array_from_tensor(l.W), array_from_tensor(l.b));
        }
        return out;
    }

    std::int64_t weight_count() const { return params.weight_count(); }
    std::int64_t bias_count() const { return params.bias_count(); }
};

} // namespace

PYBIND11_MODULE(_astprune, m) {
    m.doc() = "Affine-scaling sparsification: core operations";

    py::register_exception<Error>(m, "AstpruneError");

    py::class_<Model>(m, "Model")
        .def(py::init<double, std::uint64_t>(), py::arg("width") = 1.0, py::arg("seed") = 0)
        .def("loss", &Model::loss, py::arg("inputs"), py::arg("labels"))
        .def("train", &Model::train, py::arg("inputs"), py::arg("labels"), py::arg("lr") = 0.01,
             py::arg("momentum") = 0.9, py::arg("batch") = 64, py::arg("epochs") = 1,
             py::arg("seed") = 0)
        .def("error_rate", &Model::error_rate, py::arg("inputs"), py::arg("labels"))
        .def("weights", &Model::weights)
        .def_property_readonly("weight_count", &Model::weight_count)
        .def_property_readonly("bias_count", &Model::bias_count);

    m.def(
        "kurtosis",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
            std::vector<double> v(arr.data(), arr.data() + arr.size());
            return kurtosis(std::span<const double>(v));
        },
        py::arg("values"), "Fourth standardized central moment (population convention)");

    m.def(
        "compute_scale",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& theta,
           const std::string& kind, double tau, double p, double a, double b,
           py::object prev_omega) {
            RegularizerSpec reg;
            reg.kind = kind_from_string(kind);
            reg.tau = tau;
            reg.p = p;
            reg.a = a;
            reg.b = b;
            Tensor th = tensor_from_array(theta);
            if (prev_omega.is_none()) {
                return array_from_tensor(compute_scale(th, reg));
            }
            Tensor prev = tensor_from_array(
                prev_omega.cast<py::array_t<double, py::array::c_style | py::array::forcecast>>());
            return array_from_tensor(compute_scale(th, reg, &prev));
        },
        py::arg("theta"), py::arg("kind"), py::arg("tau") = 0.1, py::arg("p") = 0.5,
        py::arg("a") = 0.0, py::arg("b") = 0.0, py::arg("prev_omega") = py::none());

    m.def(
        "scale_params",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& theta,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& omega) {
            return array_from_tensor(scale_params(tensor_from_array(theta),
                                                  tensor_from_array(omega)));
        },
        py::arg("theta"), py::arg("omega"));

    m.def(
        "unscale",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& q,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& omega) {
            return array_from_tensor(unscale(tensor_from_array(q), tensor_from_array(omega)));
        },
        py::arg("q"), py::arg("omega"));

    m.def(
        "threshold_mask",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& weights,
           double keep) {
            ParamSet p;
            p.layers.push_back({"w", tensor_from_array(weights),
                                Tensor({1})});
            PruneConfig cfg;
            cfg.keep["w"] = keep;
            cfg.order = {"w"};
            MaskSet m_ = threshold_prune(p, cfg, "w");
            return array_from_tensor(m_.masks[0]);
        },
        py::arg("weights"), py::arg("keep"),
        "Binary keep-mask for the round(keep*n) largest magnitudes");

    m.def(
        "synth_dataset",
        [](std::uint64_t seed, int classes, int per_class, const std::vector<int>& dims) {
            DataSplit split = synth_dataset(seed, classes, per_class, dims);
            return py::make_tuple(array_from_tensor(split.inputs), split.labels);
        },
        py::arg("seed"), py::arg("classes"), py::arg("per_class"), py::arg("dims"));

    m.def(
        "load_mnist_idx",
        [](const std::string& images, const std::string& labels) {
            DataSplit split = load_mnist_idx(images, labels);
            return py::make_tuple(array_from_tensor(split.inputs), split.labels);
        },
        py::arg("images_path"), py::arg("labels_path"));

    m.def(
        "ast_linear_solve",
        [](const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const Eigen::VectorXd& theta0,
           const std::string& kind, double p, double tau, int T, double tol) {
            LinearSystem sys(A, y);
            RegularizerSpec reg;
            reg.kind = kind_from_string(kind);
            reg.p = p;
            reg.tau = tau;
            SsrResult result = ast_linear_solve(sys, reg, theta0, T, tol);
            return py::make_tuple(result.theta, result.converged,
                                  static_cast<int>(result.trajectory.size()));
        },
        py::arg("A"), py::arg("y"), py::arg("theta0"), py::arg("kind") = "focuss",
        py::arg("p") = 0.5, py::arg("tau") = 1e-8, py::arg("T") = 100, py::arg("tol") = 1e-10);

    m.def(
        "min_norm_solution",
        [](const Eigen::MatrixXd& A, const Eigen::VectorXd& y) { return min_norm_solution(A, y); },
        py::arg("A"), py::arg("y"));

    m.def(
        "brute_force_sparsest",
        [](const Eigen::MatrixXd& A, const Eigen::VectorXd& y, int max_support, double tol) {
            LinearSystem sys(A, y);
            BruteForceResult result = brute_force_sparsest(sys, max_support, tol);
            py::list supports;
            for (const auto& s : result.co_optimal) {
                supports.append(s.support);
            }
            return py::make_tuple(result.found, result.support_size, supports,
                                  result.found ? py::cast(result.best().theta) : py::none());
        },
        py::arg("A"), py::arg("y"), py::arg("max_support"), py::arg("tol") = 1e-8);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) { return run_command(args); },
        py::arg("args"), "Invoke the command-line interface in-process");
}
