#include <memory>
#include <sstream>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sepcov/checks.hpp"
#include "sepcov/io.hpp"
#include "sepcov/parallel.hpp"

namespace py = pybind11;
using namespace sepcov;

namespace {

std::string dump(const Json& j) { return j.dump(); }

std::shared_ptr<const ProductBasis> product_basis(const SeparableKernel& k, int truncation, int nodes) {
    if (k.dim() != 2) throw ShapeError("product basis needs a two-factor kernel");
    return std::make_shared<const ProductBasis>(nystrom_decompose(k.factor(0), nodes),
                                                nystrom_decompose(k.factor(1), nodes), truncation);
}

CoefficientLaw law(const std::string& s) {
    if (s == "gaussian") return CoefficientLaw::Gaussian;
    if (s == "rademacher") return CoefficientLaw::Rademacher;
    if (s == "uniform") return CoefficientLaw::Uniform;
    throw InvalidArgument("unknown coefficient law '" + s + "'");
}

}  // namespace

PYBIND11_MODULE(_sepcov, m) {
    m.doc() = "Separable covariance kernels, spectral sampling and emulators";
    m.attr("__version__") = SEPCOV_VERSION;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<RangeError>(m, "RangeError", base.ptr());
    py::register_exception<BudgetError>(m, "BudgetError", base.ptr());
    py::register_exception<SampleSizeError>(m, "SampleSizeError", base.ptr());

    py::class_<Kernel1D>(m, "Kernel1D")
        .def_static("squared_exponential",
                    [](double v, double t, std::pair<double, double> d) {
                        return Kernel1D::squared_exponential(v, t, Interval(d.first, d.second));
                    },
                    py::arg("variance"), py::arg("length_scale"), py::arg("domain") = std::make_pair(0.0, 1.0))
        .def_static("power_exponential",
                    [](double v, double t, double a, std::pair<double, double> d) {
                        return Kernel1D::power_exponential(v, t, a, Interval(d.first, d.second));
                    },
                    py::arg("variance"), py::arg("length_scale"), py::arg("exponent"),
                    py::arg("domain") = std::make_pair(0.0, 1.0))
        .def_static("constant",
                    [](double v, std::pair<double, double> d) {
                        return Kernel1D::constant(v, Interval(d.first, d.second));
                    },
                    py::arg("variance"), py::arg("domain") = std::make_pair(0.0, 1.0))
        .def("__call__", &Kernel1D::operator())
        .def("gram", &Kernel1D::gram)
        .def_property_readonly("variance", &Kernel1D::variance)
        .def_property_readonly("domain", [](const Kernel1D& k) { return std::make_pair(k.domain().lo, k.domain().hi); })
        .def("to_json", [](const Kernel1D& k) { return dump(to_json(k)); })
        .def(py::self == py::self);

    py::class_<SeparableKernel>(m, "SeparableKernel")
        .def(py::init<std::vector<Kernel1D>>(), py::arg("factors"))
        .def_static("from_json", [](const std::string& s) { return kernel_from_json(parse_json(s)); })
        .def("to_json", [](const SeparableKernel& k) { return dump(to_json(k)); })
        .def("__call__", &SeparableKernel::operator())
        .def("gram", [](const SeparableKernel& k, const PointSet& pts) { return gram(k, pts); })
        .def_property_readonly("dim", &SeparableKernel::dim)
        .def("factor", &SeparableKernel::factor)
        .def(py::self == py::self);

    m.def("isotropy_residual", &isotropy_residual);
    m.def("cross_correlation", &cross_correlation, py::arg("kernel"), py::arg("x"), py::arg("y"), py::arg("y2"));
    m.def(
        "conditional_covariance",
        [](const SeparableKernel& k, const Point& a, const Point& b, const PointSet& c) {
            return conditional_covariance(k, a, b, c).value;
        },
        py::arg("kernel"), py::arg("a"), py::arg("b"), py::arg("conditioning"));

    py::class_<SpectralBasis>(m, "SpectralBasis")
        .def_property_readonly("eigenvalues", &SpectralBasis::eigenvalues)
        .def_property_readonly("nodes", &SpectralBasis::nodes)
        .def_property_readonly("weights", &SpectralBasis::weights)
        .def_property_readonly("node_values", &SpectralBasis::node_values)
        .def_property_readonly("rank", &SpectralBasis::rank)
        .def("eigenfunctions", &SpectralBasis::eigenfunctions)
        .def("reconstruct", [](const SpectralBasis& b, double x, double x2, int n) { return mercer_reconstruct(b, x, x2, n); })
        .def("to_json", [](const SpectralBasis& b) { return dump(to_json(b)); });
    m.def("nystrom_decompose", &nystrom_decompose, py::arg("kernel"), py::arg("nodes") = kDefaultNodes,
          py::arg("max_rank") = -1, py::arg("tol") = kEigenCutoff);

    m.def(
        "kl_sample",
        [](const SeparableKernel& k, int truncation, std::uint64_t seed, int count, const Eigen::VectorXd& xs,
           const Eigen::VectorXd& ys, const std::string& coefficient_law, int nodes) {
            std::vector<Eigen::MatrixXd> out;
            for (const auto& f : kl_sample(product_basis(k, truncation, nodes), seed, count, law(coefficient_law))) {
                out.push_back(f.grid(xs, ys));
            }
            return out;
        },
        py::arg("kernel"), py::arg("truncation"), py::arg("seed"), py::arg("count"), py::arg("xs"), py::arg("ys"),
        py::arg("law") = "gaussian", py::arg("nodes") = 48);
    m.def(
        "product_sample",
        [](const SeparableKernel& k, int truncation, std::uint64_t seed, int count, const Eigen::VectorXd& xs,
           const Eigen::VectorXd& ys, const std::string& coefficient_law, int nodes) {
            std::vector<Eigen::MatrixXd> out;
            const auto l = law(coefficient_law);
            for (const auto& f : product_sample(product_basis(k, truncation, nodes), seed, count, l, l)) {
                out.push_back(f.grid(xs, ys));
            }
            return out;
        },
        py::arg("kernel"), py::arg("truncation"), py::arg("seed"), py::arg("count"), py::arg("xs"), py::arg("ys"),
        py::arg("law") = "gaussian", py::arg("nodes") = 48);
    m.def(
        "second_order_check",
        [](const SeparableKernel& k, int truncation, int samples, std::uint64_t seed, int nodes) {
            const auto pb = product_basis(k, truncation, nodes);
            return dump(to_json(second_order_identical_check(pb, samples, default_probe_pairs(*pb), seed)));
        },
        py::arg("kernel"), py::arg("truncation") = 6, py::arg("samples") = 4000, py::arg("seed") = 20260101,
        py::arg("nodes") = 40);

    m.def(
        "check_uncorrelated",
        [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int k, double tol) {
            const auto labels = [](Eigen::Index n, const char* p) {
                std::vector<std::string> v;
                for (Eigen::Index i = 0; i < n; ++i) v.push_back(p + std::to_string(i));
                return v;
            };
            return dump(to_json(check_uncorrelated(SampleFamily(labels(x.cols(), "x"), x),
                                                   SampleFamily(labels(y.cols(), "y"), y), k, tol)));
        },
        py::arg("x"), py::arg("y"), py::arg("k"), py::arg("tol") = kDefaultUncorrelationTolerance);

    m.def(
        "fit_predict",
        [](const SeparableKernel& k, const PointSet& design, const Eigen::VectorXd& values, const PointSet& pts,
           const std::string& regression, bool plug_in_mean) {
            const auto reg = regression.empty() ? RegressionPrior::none() : regression_prior_from_json(parse_json(regression));
            FitOptions opts;
            opts.plug_in_mean = plug_in_mean;
            const auto post = fit(EmulatorPrior(reg, k), RunEnsemble(design, values), opts);
            const auto p = post.predict(pts);
            return std::make_pair(p.mean, p.covariance);
        },
        py::arg("kernel"), py::arg("design"), py::arg("values"), py::arg("points"), py::arg("regression") = "",
        py::arg("plug_in_mean") = false);
    m.def(
        "kron_solve",
        [](const std::vector<Eigen::VectorXd>& axes, const SeparableKernel& k, const Eigen::VectorXd& rhs) {
            return kron_solve(GridDesign(axes), k, rhs);
        },
        py::arg("axes"), py::arg("kernel"), py::arg("rhs"));
    m.def("separability_residual", &separability_residual, py::arg("cov"), py::arg("m"), py::arg("n"));

    m.def(
        "run_experiment",
        [](const std::string& config) {
            const auto report = run_experiment(experiment_config_from_json(parse_json(config)));
            std::ostringstream csv;
            write_experiment_csv(csv, report);
            return std::make_pair(csv.str(), dump(experiment_summary_json(report)));
        },
        py::arg("config"));
    m.def(
        "run_check",
        [](const std::string& suite, std::uint64_t seed) {
            CheckOptions o;
            o.seed = seed;
            return dump(to_json(run_check(suite, o)));
        },
        py::arg("suite"), py::arg("seed") = 20260101);
    m.def("check_suites", &check_suites);
    m.def("set_thread_count", &set_thread_count);
}
