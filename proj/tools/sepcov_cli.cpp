#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sepcov/checks.hpp"
#include "sepcov/io.hpp"
#include "sepcov/parallel.hpp"

namespace fs = std::filesystem;
using namespace sepcov;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr std::uint64_t kDefaultSeed = 20260101;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    unsigned threads = 0;
};

class Run {
public:
    Run(std::string command, const Common& common) : command_(std::move(command)), common_(common) {
        if (!common_.config_path.empty()) {
            config_ = read_json_file(common_.config_path);
            if (!config_.is_object()) throw InvalidArgument(common_.config_path + ": config must be a JSON object");
        } else {
            config_ = Json::object();
        }
        std::error_code ec;
        fs::create_directories(common_.out_dir, ec);
        if (ec || !fs::is_directory(common_.out_dir)) {
            throw InvalidArgument("cannot create output directory '" + common_.out_dir + "'");
        }
        set_thread_count(common_.threads);
    }

    [[nodiscard]] const Json& config() const { return config_; }
    [[nodiscard]] bool has(const char* key) const { return config_.contains(key); }

    template <typename T>
    [[nodiscard]] T get(const char* key, T fallback) const {
        if (!config_.contains(key)) return fallback;
        try {
            return config_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw InvalidArgument(std::string("config field '") + key + "' has the wrong type");
        }
    }

    /// --seed wins over the config's `key`, then the built-in default.
    [[nodiscard]] std::uint64_t seed(const char* key = "seed") {
        seed_ = common_.seed ? *common_.seed : get<std::uint64_t>(key, kDefaultSeed);
        return seed_;
    }

    /// Relative paths inside a config resolve against the config's directory.
    [[nodiscard]] std::string resolve(const std::string& path) const {
        const fs::path p(path);
        if (p.is_absolute() || common_.config_path.empty()) return path;
        return (fs::path(common_.config_path).parent_path() / p).string();
    }

    [[nodiscard]] SeparableKernel kernel(std::optional<SeparableKernel> fallback = std::nullopt) const {
        if (config_.contains("kernel")) return kernel_from_json(config_["kernel"]);
        if (config_.contains("factors")) return kernel_from_json(config_);
        if (fallback) return *fallback;
        throw InvalidArgument("config needs a 'kernel' object");
    }

    void write(const std::string& name, const std::string& content) {
        const auto path = (fs::path(common_.out_dir) / name).string();
        std::ofstream os(path, std::ios::binary);
        os << content;
        os.close();
        if (!os) throw InvalidArgument("cannot write '" + path + "'");
        outputs_.push_back(path);
    }

    void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

    template <typename F>
    auto timed(const std::string& stage, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            stages_[stage] = seconds_since(t0);
        } else {
            auto r = f();
            stages_[stage] = seconds_since(t0);
            return r;
        }
    }

    void finish(int exit_code, const std::string& error = {}) {
        stages_["total"] = seconds_since(start_);
        Json m;
        m["command"] = command_;
        m["config_path"] = common_.config_path.empty() ? Json(nullptr) : Json(common_.config_path);
        m["master_seed"] = seed_;
        m["tool_version"] = SEPCOV_VERSION;
        m["threads"] = thread_count();
        m["exit_code"] = exit_code;
        if (!error.empty()) m["error"] = error;
        auto outputs = outputs_;
        const auto manifest = (fs::path(common_.out_dir) / "manifest.json").string();
        outputs.push_back(manifest);
        m["output_paths"] = outputs;
        m["wall_times"] = stages_;
        std::ofstream os(manifest, std::ios::binary);
        os << m.dump(2) << "\n";
    }

private:
    static double seconds_since(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    std::string command_;
    Common common_;
    Json config_;
    std::uint64_t seed_ = kDefaultSeed;
    std::vector<std::string> outputs_;
    Json stages_ = Json::object();
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Point point_from_json(const Json& j) {
    if (!j.is_array()) throw InvalidArgument("points must be arrays of coordinates");
    Point p(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InvalidArgument("coordinates must be numbers");
        p(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return p;
}

PointSet points_from_json(const Json& j, std::size_t dim) {
    if (!j.is_array()) throw InvalidArgument("'points' must be an array");
    PointSet pts(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto p = point_from_json(j[i]);
        if (p.size() != pts.cols()) throw ShapeError("point dimension does not match the kernel");
        pts.row(static_cast<Eigen::Index>(i)) = p.transpose();
    }
    return pts;
}

SeparableKernel default_kernel() {
    return SeparableKernel({Kernel1D::squared_exponential(1.0, 1.0), Kernel1D::squared_exponential(1.0, 1.0)});
}

CoefficientLaw law_from_string(const std::string& s) {
    if (s == "gaussian") return CoefficientLaw::Gaussian;
    if (s == "rademacher") return CoefficientLaw::Rademacher;
    if (s == "uniform") return CoefficientLaw::Uniform;
    throw InvalidArgument("unknown coefficient law '" + s + "'");
}

std::string matrix_json_csv(const Eigen::MatrixXd& m, const char* header) {
    std::ostringstream os;
    os << header << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            os << std::to_string(i) << ',' << std::to_string(j) << ',' << format_double(m(i, j)) << '\n';
        }
    }
    return os.str();
}

int cmd_kernel(Run& run) {
    const auto k = run.kernel();
    if (!run.has("points") && !run.has("pairs")) throw InvalidArgument("kernel config needs 'points' or 'pairs'");
    run.write_json("kernel.json", to_json(k));
    if (run.has("points")) {
        const auto pts = points_from_json(run.config()["points"], k.dim());
        const auto g = run.timed("gram", [&] { return gram(k, pts); });
        run.write("gram.csv", matrix_json_csv(g, "i,j,value"));
    }
    if (run.has("pairs")) {
        const auto& pairs = run.config()["pairs"];
        if (!pairs.is_array()) throw InvalidArgument("'pairs' must be an array");
        std::ostringstream os;
        os << "pair,value\n";
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (!pairs[i].is_array() || pairs[i].size() != 2) throw InvalidArgument("each pair holds two points");
            const auto p = point_from_json(pairs[i][0]);
            const auto q = point_from_json(pairs[i][1]);
            os << std::to_string(i) << ',' << format_double(k(p, q)) << '\n';
        }
        run.write("eval.csv", os.str());
    }
    return kExitOk;
}

int cmd_spectral(Run& run) {
    const auto k = run.kernel(default_kernel());
    const int nodes = run.get<int>("nodes", kDefaultNodes);
    const int max_rank = run.get<int>("max_rank", -1);
    const double tol = run.get<double>("tol", kEigenCutoff);
    std::ostringstream ev;
    ev << "factor,index,eigenvalue\n";
    for (std::size_t d = 0; d < k.dim(); ++d) {
        const auto b = run.timed("decompose_" + std::to_string(d),
                                 [&] { return nystrom_decompose(k.factor(d), nodes, max_rank, tol); });
        run.write_json("basis_" + std::to_string(d) + ".json", to_json(b));
        for (int i = 0; i < b.rank(); ++i) {
            ev << std::to_string(d) << ',' << std::to_string(i) << ',' << format_double(b.eigenvalues()(i)) << '\n';
        }
    }
    run.write("eigenvalues.csv", ev.str());
    return kExitOk;
}

int cmd_sample(Run& run) {
    const auto k = run.kernel(default_kernel());
    if (k.dim() != 2) throw ShapeError("sampling needs a two-factor kernel");
    const auto seed = run.seed();
    const auto sampler = run.get<std::string>("sampler", "kl");
    const int nodes = run.get<int>("nodes", 48);
    const int count = run.get<int>("count", 1);
    const int grid_n = run.get<int>("grid", 41);
    const auto law = law_from_string(run.get<std::string>("law", "gaussian"));
    if (count < 1 || grid_n < 2) throw InvalidArgument("count must be >= 1 and grid >= 2");

    const auto bx = nystrom_decompose(k.factor(0), nodes);
    const auto by = nystrom_decompose(k.factor(1), nodes);
    const int trunc = run.get<int>("truncation", std::min({bx.rank(), by.rank(), 8}));
    auto pb = std::make_shared<const ProductBasis>(bx, by, trunc);
    const auto dom = k.domains();
    const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(grid_n, dom[0].lo, dom[0].hi);
    const Eigen::VectorXd ys = Eigen::VectorXd::LinSpaced(grid_n, dom[1].lo, dom[1].hi);

    Json coeffs = Json::array();
    const auto matrix_rows = [](const Eigen::MatrixXd& m) {
        Json a = Json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            Json row = Json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            a.push_back(row);
        }
        return a;
    };
    if (sampler == "kl") {
        const auto fields = run.timed("sample", [&] { return kl_sample(pb, seed, count, law); });
        for (int r = 0; r < count; ++r) {
            std::ostringstream os;
            write_field_csv(os, xs, ys, fields[r].grid(xs, ys));
            run.write("field_" + std::to_string(r) + ".csv", os.str());
            coeffs.push_back(matrix_rows(fields[r].coefficients()));
        }
    } else if (sampler == "product") {
        const auto fields = run.timed("sample", [&] { return product_sample(pb, seed, count, law, law); });
        for (int r = 0; r < count; ++r) {
            std::ostringstream os;
            write_field_csv(os, xs, ys, fields[r].grid(xs, ys));
            run.write("field_" + std::to_string(r) + ".csv", os.str());
            const auto& cx = fields[r].coeffs_x();
            const auto& cy = fields[r].coeffs_y();
            coeffs.push_back({{"x", std::vector<double>(cx.data(), cx.data() + cx.size())},
                              {"y", std::vector<double>(cy.data(), cy.data() + cy.size())}});
        }
    } else {
        throw InvalidArgument("unknown sampler '" + sampler + "'");
    }
    run.write_json("coefficients.json", {{"sampler", sampler}, {"truncation", trunc}, {"coefficients", coeffs}});
    return kExitOk;
}

int cmd_check(Run& run, const std::string& suite) {
    CheckOptions opts;
    opts.seed = run.seed();
    if (run.has("kernel") || run.has("factors")) opts.kernel = run.kernel();
    opts.regression_dims = run.get<std::vector<std::size_t>>("regression_dims", {});
    opts.regression_variance = run.get<double>("regression_variance", 1.0);
    const auto r = run.timed("check", [&] { return run_check(suite, opts); });
    run.write_json("check_" + suite + ".json", to_json(r));
    for (const auto& a : r.assertions) {
        std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << ": " << format_double(a.value) << ' ' << a.relation
                  << ' ' << format_double(a.threshold) << '\n';
    }
    std::cout << suite << ": " << (r.pass() ? "PASS" : "FAIL") << '\n';
    return r.pass() ? kExitOk : kExitAssertion;
}

RunEnsemble load_ensemble(Run& run) {
    const auto& c = run.config();
    if (c.contains("ensemble")) {
        if (!c["ensemble"].is_string()) throw InvalidArgument("'ensemble' must be a CSV path");
        const auto path = run.resolve(c["ensemble"].get<std::string>());
        std::ifstream in(path);
        if (!in) throw InvalidArgument("cannot open '" + path + "'");
        return read_ensemble_csv(in);
    }
    if (c.contains("runs")) {
        const auto& r = c["runs"];
        if (!r.is_object() || !r.contains("design") || !r.contains("values")) {
            throw InvalidArgument("'runs' needs 'design' and 'values'");
        }
        const auto& d = r["design"];
        const std::size_t dim = d.is_array() && !d.empty() && d[0].is_array() ? d[0].size() : 0;
        const auto pts = points_from_json(d, dim);
        Eigen::VectorXd v(static_cast<Eigen::Index>(r["values"].size()));
        for (std::size_t i = 0; i < r["values"].size(); ++i) {
            if (!r["values"][i].is_number()) throw InvalidArgument("run values must be numbers");
            v(static_cast<Eigen::Index>(i)) = r["values"][i].get<double>();
        }
        return RunEnsemble(pts, v);
    }
    throw InvalidArgument("fit config needs 'ensemble' or 'runs'");
}

int cmd_fit(Run& run) {
    const auto k = run.kernel();
    const auto ens = load_ensemble(run);
    if (ens.size() > 0 && static_cast<std::size_t>(ens.design.cols()) != k.dim()) {
        throw ShapeError("ensemble dimension does not match the kernel");
    }
    const auto reg = run.has("regression") ? regression_prior_from_json(run.config()["regression"])
                                           : RegressionPrior::none();
    FitOptions opts;
    opts.plug_in_mean = run.get<bool>("plug_in_mean", false);
    opts.noise_jitter = run.get<double>("jitter", opts.noise_jitter);
    const EmulatorPrior prior(reg, k);
    const auto post = run.timed("fit", [&] { return fit(prior, ens, opts); });

    PointSet pts;
    if (run.has("points")) {
        pts = points_from_json(run.config()["points"], k.dim());
    } else {
        auto counts = run.get<std::vector<int>>("grid", std::vector<int>(k.dim(), 21));
        if (counts.size() != k.dim()) throw ShapeError("'grid' needs one count per dimension");
        pts = GridDesign::uniform(k.domains(), counts).points();
    }
    const auto pred = run.timed("predict", [&] { return post.predict(pts); });
    for (Eigen::Index i = 0; i < pred.mean.size(); ++i) {
        if (!std::isfinite(pred.mean(i)) || !std::isfinite(pred.covariance(i, i))) {
            throw NumericalError("non-finite posterior prediction");
        }
    }
    std::ostringstream os;
    write_posterior_csv(os, pts, pred);
    run.write("posterior.csv", os.str());
    Json coef = Json::array();
    for (Eigen::Index i = 0; i < post.plug_in_coefficients().size(); ++i) coef.push_back(post.plug_in_coefficients()(i));
    run.write_json("fit.json", {{"runs", ens.size()},
                                {"jitter", post.jitter()},
                                {"plug_in_mean", opts.plug_in_mean},
                                {"plug_in_coefficients", coef},
                                {"kernel", to_json(k)}});
    return kExitOk;
}

int cmd_experiment(Run& run) {
    Json cfg_json = run.config();
    const Json sweep = cfg_json.contains("sweep") ? cfg_json["sweep"] : Json();
    cfg_json.erase("sweep");
    auto cfg = experiment_config_from_json(cfg_json);
    cfg.master_seed = run.seed("master_seed");
    ExperimentReport report;
    if (sweep.is_null()) {
        report = run.timed("experiment", [&] { return run_experiment(cfg); });
    } else {
        if (!sweep.is_object()) throw InvalidArgument("'sweep' must be an object");
        std::vector<std::size_t> ps{1, 2, 3};
        std::vector<int> mult{2, 5, 10, 20};
        try {
            if (sweep.contains("p_values")) ps = sweep["p_values"].get<std::vector<std::size_t>>();
            if (sweep.contains("multipliers")) mult = sweep["multipliers"].get<std::vector<int>>();
        } catch (const nlohmann::json::exception&) {
            throw InvalidArgument("'sweep' fields must be integer arrays");
        }
        report = run.timed("experiment", [&] { return n10p_sweep(ps, mult, cfg); });
    }
    std::ostringstream os;
    write_experiment_csv(os, report);
    run.write("experiment.csv", os.str());
    Json summary = experiment_summary_json(report);
    summary["config"] = to_json(cfg);
    if (!sweep.is_null()) summary["sweep"] = sweep;
    run.write_json("experiment_summary.json", summary);
    int failures = 0;
    for (const auto& r : report.records) failures += r.error.empty() ? 0 : 1;
    std::cout << report.records.size() << " records, " << failures << " failed fits\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Separable covariance toolkit"};
    app.set_version_flag("--version", std::string(SEPCOV_VERSION));
    app.require_subcommand(1);

    Common common;
    std::string suite;
    const auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", common.config_path, "JSON config file");
        if (config_required) c->required();
        sub->add_option("--seed", common.seed, "master seed");
        sub->add_option("--out-dir", common.out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", common.threads, "worker threads, 0 for all cores")->capture_default_str();
    };
    auto* kernel = app.add_subcommand("kernel", "evaluate a kernel at points or pairs");
    auto* spectral = app.add_subcommand("spectral", "Nystrom eigen-decomposition of each factor");
    auto* sample = app.add_subcommand("sample", "draw random fields on a grid");
    auto* check = app.add_subcommand("check", "run a property suite");
    auto* fitc = app.add_subcommand("fit", "fit an emulator to runs and predict");
    auto* experiment = app.add_subcommand("experiment", "design comparison experiment");
    add_common(kernel, true);
    add_common(spectral, false);
    add_common(sample, false);
    add_common(check, false);
    add_common(fitc, true);
    add_common(experiment, false);
    check->add_option("suite", suite, "eq4, eq5, isotropy, mercer or second_order")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    std::unique_ptr<Run> run;
    try {
        run = std::make_unique<Run>(sub->get_name(), common);
        int code = kExitOk;
        if (sub == kernel) code = cmd_kernel(*run);
        if (sub == spectral) code = cmd_spectral(*run);
        if (sub == sample) code = cmd_sample(*run);
        if (sub == check) code = cmd_check(*run, suite);
        if (sub == fitc) code = cmd_fit(*run);
        if (sub == experiment) code = cmd_experiment(*run);
        run->finish(code);
        return code;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        if (run) run->finish(kExitNumerical, e.what());
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (run) run->finish(kExitUsage, e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        if (run) run->finish(kExitNumerical, e.what());
        return kExitNumerical;
    }
}
