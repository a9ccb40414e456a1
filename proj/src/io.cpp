#include "sepcov/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sepcov {

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : InvalidArgument(what), line_(line), column_(column) {}

Json parse_json(std::string_view text, const std::string& source) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        // e.byte is 1-based and points just past the offending character.
        const std::size_t offset = e.byte == 0 ? 0 : std::min(e.byte - 1, text.size());
        std::size_t line = 1;
        std::size_t column = 1;
        for (std::size_t i = 0; i < offset; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": malformed JSON", line,
                         column);
    }
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str(), path);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), end};
}

namespace {

template <typename T>
T required(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw InvalidArgument(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidArgument(std::string("field '") + key + "' has the wrong type");
    }
}

Json vector_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vector_from_json(const Json& j, const char* what) {
    if (!j.is_array()) throw InvalidArgument(std::string(what) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InvalidArgument(std::string(what) + " must hold numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

std::string family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::SquaredExponential: return "sqexp";
        case KernelFamily::PowerExponential: return "powexp";
        case KernelFamily::Constant: return "constant";
    }
    return "?";
}

}  // namespace

Json to_json(const Kernel1D& k) {
    Json j;
    j["family"] = family_name(k.family());
    j["variance"] = k.variance();
    if (k.family() != KernelFamily::Constant) j["length_scale"] = k.length_scale();
    if (k.family() == KernelFamily::PowerExponential) j["exponent"] = k.exponent();
    j["domain"] = {k.domain().lo, k.domain().hi};
    return j;
}

Kernel1D kernel1d_from_json(const Json& j) {
    const auto family = required<std::string>(j, "family");
    const auto variance = required<double>(j, "variance");
    Interval domain;
    if (j.contains("domain")) {
        const auto d = vector_from_json(j.at("domain"), "domain");
        if (d.size() != 2) throw InvalidArgument("domain must be [lo, hi]");
        domain = Interval(d(0), d(1));
    }
    if (family == "sqexp") return Kernel1D::squared_exponential(variance, required<double>(j, "length_scale"), domain);
    if (family == "powexp") {
        return Kernel1D::power_exponential(variance, required<double>(j, "length_scale"),
                                           required<double>(j, "exponent"), domain);
    }
    if (family == "constant") return Kernel1D::constant(variance, domain);
    throw InvalidArgument("unknown kernel family '" + family + "'");
}

Json to_json(const SeparableKernel& k) {
    Json factors = Json::array();
    for (const auto& f : k.factors()) factors.push_back(to_json(f));
    return {{"factors", factors}};
}

SeparableKernel kernel_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("factors") || !j.at("factors").is_array()) {
        throw InvalidArgument("kernel document needs a 'factors' array");
    }
    std::vector<Kernel1D> factors;
    for (const auto& f : j.at("factors")) factors.push_back(kernel1d_from_json(f));
    return SeparableKernel(std::move(factors));
}

Json to_json(const SpectralBasis& b) {
    Json j;
    j["kernel"] = to_json(b.kernel());
    j["eigenvalues"] = vector_json(b.eigenvalues());
    j["nodes"] = vector_json(b.nodes());
    j["weights"] = vector_json(b.weights());
    const auto& nv = b.node_values();
    Json data = Json::array();
    for (Eigen::Index r = 0; r < nv.rows(); ++r) {
        for (Eigen::Index c = 0; c < nv.cols(); ++c) data.push_back(nv(r, c));
    }
    j["node_eigenvectors"] = {{"rows", nv.rows()}, {"cols", nv.cols()}, {"data", data}};
    return j;
}

SpectralBasis basis_from_json(const Json& j) {
    const Kernel1D k = kernel1d_from_json(j.at("kernel"));
    Quadrature q{vector_from_json(j.at("nodes"), "nodes"), vector_from_json(j.at("weights"), "weights")};
    Eigen::VectorXd ev = vector_from_json(j.at("eigenvalues"), "eigenvalues");
    const auto& m = j.at("node_eigenvectors");
    const auto rows = required<Eigen::Index>(m, "rows");
    const auto cols = required<Eigen::Index>(m, "cols");
    const Eigen::VectorXd data = vector_from_json(m.at("data"), "node_eigenvectors.data");
    if (data.size() != rows * cols) throw ShapeError("node_eigenvectors data size mismatch");
    Eigen::MatrixXd nv(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) nv(r, c) = data(r * cols + c);
    }
    return SpectralBasis(k, std::move(q), std::move(ev), std::move(nv));
}

Json to_json(const UncorrelationReport& r) {
    Json j;
    j["order"] = r.order_tested;
    j["worst_violation"] = r.worst_violation;
    j["monomial_a"] = r.monomial_a;
    j["monomial_b"] = r.monomial_b;
    j["pass"] = r.pass;
    j["pass_by_order"] = r.pass_by_order;
    return j;
}

Json to_json(const SecondOrderReport& r) {
    Json pairs = Json::array();
    for (const auto& c : r.pairs) {
        pairs.push_back({{"p", vector_json(c.pair.p)},
                         {"q", vector_json(c.pair.q)},
                         {"exact", c.exact},
                         {"theoretical_kl", c.theoretical_kl},
                         {"theoretical_product", c.theoretical_product},
                         {"empirical_kl", c.empirical_kl},
                         {"se_kl", c.se_kl},
                         {"empirical_product", c.empirical_product},
                         {"se_product", c.se_product},
                         {"kl_matches_product", c.kl_matches_product},
                         {"kl_matches_exact", c.kl_matches_exact},
                         {"product_matches_exact", c.product_matches_exact}});
    }
    return {{"samples", r.samples}, {"band", r.band}, {"pass", r.pass}, {"pairs", pairs}};
}

Json to_json(const SuiteResult& r) {
    Json a = Json::array();
    for (const auto& x : r.assertions) {
        a.push_back({{"name", x.name},
                     {"pass", x.pass},
                     {"value", std::isfinite(x.value) ? Json(x.value) : Json(nullptr)},
                     {"relation", x.relation},
                     {"threshold", x.threshold}});
    }
    return {{"suite", r.suite}, {"pass", r.pass()}, {"seconds", r.seconds}, {"assertions", a}};
}

RegressionPrior regression_prior_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidArgument("regression prior must be a JSON object");
    if (!j.contains("regressors") || !j["regressors"].is_array()) {
        throw InvalidArgument("regression prior needs a 'regressors' array");
    }
    std::vector<Regressor> regs;
    for (const auto& r : j["regressors"]) {
        const auto type = required<std::string>(r, "type");
        if (type == "constant") {
            regs.push_back(Regressor::constant());
        } else if (type == "linear") {
            regs.push_back(Regressor::linear(required<std::size_t>(r, "dim")));
        } else if (type == "interaction") {
            const auto dims = required<std::vector<std::size_t>>(r, "dims");
            if (dims.size() != 2) throw InvalidArgument("interaction needs two dims");
            std::vector<double> c{0.0, 0.0};
            if (r.contains("centers")) c = required<std::vector<double>>(r, "centers");
            if (c.size() != 2) throw InvalidArgument("interaction needs two centers");
            regs.push_back(Regressor::interaction(dims[0], dims[1], c[0], c[1]));
        } else {
            throw InvalidArgument("unknown regressor type '" + type + "'");
        }
    }
    const auto n = static_cast<Eigen::Index>(regs.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    if (j.contains("mean")) mean = vector_from_json(j["mean"], "regression mean");
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    if (j.contains("covariance")) {
        const auto& c = j["covariance"];
        if (!c.is_array() || static_cast<Eigen::Index>(c.size()) != n) {
            throw InvalidArgument("regression covariance must be a square array");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto row = vector_from_json(c[static_cast<std::size_t>(i)], "regression covariance row");
            if (row.size() != n) throw InvalidArgument("regression covariance must be a square array");
            cov.row(i) = row.transpose();
        }
    } else if (j.contains("variance")) {
        cov = required<double>(j, "variance") * Eigen::MatrixXd::Identity(n, n);
    }
    return RegressionPrior(std::move(regs), std::move(mean), std::move(cov));
}

void write_field_csv(std::ostream& os, const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                     const Eigen::MatrixXd& values) {
    if (values.rows() != xs.size() || values.cols() != ys.size()) throw ShapeError("field grid size mismatch");
    os << "x,y,value\n";
    for (Eigen::Index a = 0; a < xs.size(); ++a) {
        for (Eigen::Index b = 0; b < ys.size(); ++b) {
            os << format_double(xs(a)) << ',' << format_double(ys(b)) << ',' << format_double(values(a, b)) << '\n';
        }
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto first = cell.find_first_not_of(" \t\r");
        const auto last = cell.find_last_not_of(" \t\r");
        out.push_back(first == std::string::npos ? "" : cell.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line, std::size_t column) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (!s.empty() && *begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        std::ostringstream os;
        os << "line " << line << ", column " << column << ": '" << s << "' is not a number";
        throw ParseError(os.str(), line, column);
    }
    return v;
}

}  // namespace

RunEnsemble read_ensemble_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("ensemble CSV is empty", 1, 1);
    const auto header = split_csv_line(line);
    const std::size_t p = header.size() - 1;
    if (header.size() < 2 || header.back() != "f") throw ParseError("ensemble CSV header must be x1..xp,f", 1, 1);
    for (std::size_t d = 0; d < p; ++d) {
        if (header[d] != "x" + std::to_string(d + 1)) {
            throw ParseError("ensemble CSV column " + std::to_string(d + 1) + " must be named x" + std::to_string(d + 1),
                             1, d + 1);
        }
    }
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                                 " columns",
                             lineno, 1);
        }
        std::vector<double> row;
        for (std::size_t c = 0; c < cells.size(); ++c) row.push_back(parse_number(cells[c], lineno, c + 1));
        rows.push_back(std::move(row));
    }
    PointSet design(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    Eigen::VectorXd f(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t d = 0; d < p; ++d) design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
        f(static_cast<Eigen::Index>(i)) = rows[i][p];
    }
    return RunEnsemble(std::move(design), std::move(f));
}

void write_ensemble_csv(std::ostream& os, const RunEnsemble& e) {
    for (Eigen::Index d = 0; d < e.design.cols(); ++d) os << 'x' << std::to_string(d + 1) << ',';
    os << "f\n";
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        for (Eigen::Index d = 0; d < e.design.cols(); ++d) os << format_double(e.design(i, d)) << ',';
        os << format_double(e.values(i)) << '\n';
    }
}

void write_posterior_csv(std::ostream& os, const PointSet& pts, const Prediction& pred) {
    for (Eigen::Index d = 0; d < pts.cols(); ++d) os << 'x' << std::to_string(d + 1) << ',';
    os << "mean,sd\n";
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        for (Eigen::Index d = 0; d < pts.cols(); ++d) os << format_double(pts(i, d)) << ',';
        os << format_double(pred.mean(i)) << ',' << format_double(std::sqrt(std::max(0.0, pred.covariance(i, i))))
           << '\n';
    }
}

void write_experiment_csv(std::ostream& os, const ExperimentReport& r) {
    os << "truth,design,n,p,replicate,nrmse\n";
    for (const auto& rec : r.records) {
        os << to_string(rec.truth) << ',' << to_string(rec.design) << ',' << std::to_string(rec.n) << ','
           << std::to_string(rec.p) << ',' << std::to_string(rec.replicate) << ',' << format_double(rec.nrmse)
           << '\n';
    }
}

Json experiment_summary_json(const ExperimentReport& r) {
    auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    Json aggs = Json::array();
    for (const auto& a : r.aggregates()) {
        aggs.push_back({{"truth", to_string(a.truth)},
                        {"design", to_string(a.design)},
                        {"n", a.n},
                        {"p", a.p},
                        {"median", finite_or_null(a.median)},
                        {"q1", finite_or_null(a.q1)},
                        {"q3", finite_or_null(a.q3)},
                        {"iqr", finite_or_null(a.q3 - a.q1)},
                        {"count", a.count},
                        {"failures", a.failures}});
    }
    Json tests = Json::array();
    for (const auto& s : r.sign_tests()) {
        tests.push_back({{"truth", to_string(s.truth)},
                         {"n", s.n},
                         {"p", s.p},
                         {"lhd_wins", s.wins},
                         {"axis_wins", s.losses},
                         {"ties", s.ties},
                         {"p_value", s.p_value}});
    }
    Json failures = Json::array();
    for (const auto& rec : r.records) {
        if (!rec.error.empty()) {
            failures.push_back({{"truth", to_string(rec.truth)},
                                {"design", to_string(rec.design)},
                                {"n", rec.n},
                                {"replicate", rec.replicate},
                                {"error", rec.error}});
        }
    }
    return {{"aggregates", aggs}, {"sign_tests", tests}, {"failures", failures}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidArgument("experiment config must be a JSON object");
    ExperimentConfig c;
    try {
        if (j.contains("p")) c.p = j.at("p").get<std::size_t>();
        c.n_runs = j.contains("n_runs") ? j.at("n_runs").get<int>() : 10 * static_cast<int>(c.p);
        if (j.contains("truth_sources")) {
            c.truth_sources.clear();
            for (const auto& s : j.at("truth_sources")) c.truth_sources.push_back(truth_source_from_string(s.get<std::string>()));
        }
        if (j.contains("designs")) {
            c.designs.clear();
            for (const auto& s : j.at("designs")) c.designs.push_back(design_kind_from_string(s.get<std::string>()));
        }
        if (j.contains("replicates")) c.replicates = j.at("replicates").get<int>();
        if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
        if (j.contains("test_set_size")) c.test_set_size = j.at("test_set_size").get<int>();
        if (j.contains("variance")) c.variance = j.at("variance").get<double>();
        if (j.contains("length_scale")) c.length_scale = j.at("length_scale").get<double>();
        if (j.contains("nodes")) c.nodes = j.at("nodes").get<int>();
        if (j.contains("max_tensor_terms")) c.max_tensor_terms = j.at("max_tensor_terms").get<std::size_t>();
        if (j.contains("regression_strength")) c.regression_strength = j.at("regression_strength").get<double>();
        if (j.contains("maximin")) c.maximin = j.at("maximin").get<bool>();
        if (j.contains("plug_in_mean")) c.plug_in_mean = j.at("plug_in_mean").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

Json to_json(const ExperimentConfig& c) {
    Json truths = Json::array();
    for (auto t : c.truth_sources) truths.push_back(to_string(t));
    Json designs = Json::array();
    for (auto d : c.designs) designs.push_back(to_string(d));
    return {{"p", c.p},
            {"n_runs", c.n_runs},
            {"truth_sources", truths},
            {"designs", designs},
            {"replicates", c.replicates},
            {"master_seed", c.master_seed},
            {"test_set_size", c.test_set_size},
            {"variance", c.variance},
            {"length_scale", c.length_scale},
            {"nodes", c.nodes},
            {"max_tensor_terms", c.max_tensor_terms},
            {"regression_strength", c.regression_strength},
            {"maximin", c.maximin},
            {"plug_in_mean", c.plug_in_mean}};
}

}  // namespace sepcov
