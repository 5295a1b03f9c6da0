// mw-harmonics: batch front door for the matrix-weighted harmonic analysis
// lab. Subcommands run one experiment from a JSON config and write CSV/JSON
// results. Exit codes: 0 success, 1 input error, 2 invariant violation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "mwh/acceptance.hpp"
#include "mwh/czo.hpp"
#include "mwh/maximal.hpp"
#include "mwh/muckenhoupt.hpp"
#include "mwh/serialize.hpp"

namespace fs = std::filesystem;
using namespace mwh;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CommonOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;  // 0: take the config's seed
    int threads = 0;
    std::string tier = "fast";
};

json g_overrides;  // command-line overrides merged into every loaded config

json load_config(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::invalid_argument("config: cannot open '" + path + "'");
    json j;
    file >> j;
    if (g_overrides.contains("cubes")) j["cubes"] = g_overrides["cubes"];
    if (g_overrides.contains("d")) j["d"] = g_overrides["d"];
    if (g_overrides.contains("level")) j["level"] = g_overrides["level"];
    if (g_overrides.contains("kernel_name")) j["kernel"]["name"] = g_overrides["kernel_name"];
    if (g_overrides.contains("kernel_m")) j["kernel"]["m"] = g_overrides["kernel_m"];
    return j;
}

double exponent_from_json(const json& j, const std::string& path) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "inf" || s == "infinity") return kInf;
        throw std::invalid_argument(path + ": expected a number or \"inf\"");
    }
    return j.get<double>();
}

GridLayout layout_from_config(const json& cfg) {
    int d = cfg.value("d", 1);
    int level = cfg.value("level", 4);
    if (d < 1 || d > 3) throw std::invalid_argument("d: expected 1 <= d <= 3");
    if (level < 0 || level > 10) throw std::invalid_argument("level: expected 0 <= level <= 10");
    Cube box(std::vector<Rational>(d, Rational(0)), Rational(1));
    if (cfg.contains("box")) box = cube_from_json(cfg.at("box"));
    return GridLayout(box, level);
}

std::vector<MatrixWeightField> weights_from_config(const json& cfg, const GridLayout& layout) {
    if (!cfg.contains("weights") || !cfg.at("weights").is_array() || cfg.at("weights").empty())
        throw std::invalid_argument("weights: expected a nonempty array of weight specs");
    std::vector<MatrixWeightField> out;
    for (const auto& w : cfg.at("weights")) out.push_back(make_weight(weight_spec_from_json(w), layout));
    return out;
}

std::vector<Cube> cubes_from_config(const json& cfg, const GridLayout& layout) {
    std::string spec = cfg.value("cubes", "dyadic:" + std::to_string(layout.level));
    auto colon = spec.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("cubes: expected '<family>:<level>'");
    std::string family = spec.substr(0, colon);
    int level = std::stoi(spec.substr(colon + 1));
    if (level < 0 || level > layout.level)
        throw std::invalid_argument("cubes: level must lie in [0, grid level]");
    if (family == "dyadic") return dyadic_subcubes(layout.box, level);
    if (family == "dyadic3") return dyadic_subcubes_with_shifts(layout.box, level);
    throw std::invalid_argument("cubes: unknown family '" + family + "'");
}

std::vector<VectorField> fields_from_config(const json& cfg, const GridLayout& layout, std::uint64_t seed) {
    if (!cfg.contains("fields")) throw std::invalid_argument("fields: required for this command");
    const json& fj = cfg.at("fields");
    std::string kind = fj.value("kind", "random");
    std::vector<int> dims = fj.value("n", std::vector<int>{1});
    std::vector<VectorField> out;
    Rng rng(seed ^ 0xf1e1d5ULL);
    for (std::size_t j = 0; j < dims.size(); ++j) {
        VectorField f = VectorField::zero(layout, dims[j]);
        if (kind == "random") {
            for (std::int64_t c = 0; c < layout.ncells(); ++c) f.values.col(c) = rng.normal_vector(dims[j]);
        } else if (kind == "constant") {
            f.values.setOnes();
        } else if (kind == "indicator") {
            double lo = fj.value("from", 0.0), hi = fj.value("to", 0.5);
            for (std::int64_t c = 0; c < layout.ncells(); ++c)
                if (layout.cell_center(c)[0] >= lo && layout.cell_center(c)[0] < hi)
                    f.values.col(c).setOnes();
        } else if (kind == "values") {
            const json& vals = fj.at("values").at(j);
            if (std::int64_t(vals.size()) != layout.ncells())
                throw std::invalid_argument("fields.values[" + std::to_string(j) + "]: expected " +
                                            std::to_string(layout.ncells()) + " cells");
            for (std::int64_t c = 0; c < layout.ncells(); ++c) {
                const json& v = vals.at(c);
                if (v.is_number()) f.values(0, c) = v.get<double>();
                else
                    for (int i = 0; i < dims[j]; ++i) f.values(i, c) = v.at(i).get<double>();
            }
        } else {
            throw std::invalid_argument("fields.kind: unknown kind '" + kind + "'");
        }
        out.push_back(std::move(f));
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write " + path.string());
    file << text;
}

int run_characteristic(const CommonOptions& common, const std::string& kind) {
    json cfg = load_config(common.config_path);
    GridLayout layout = layout_from_config(cfg);
    auto cubes = cubes_from_config(cfg, layout);
    std::uint64_t seed = common.seed ? common.seed : cfg.value("seed", std::uint64_t(1));
    CsvWriter csv({"cube", "value", "slack"});

    if (kind == "fw") {
        auto weights = weights_from_config(cfg, layout);
        if (weights.front().n != 1) throw std::invalid_argument("weights[0].n: fw expects a scalar weight");
        ScalarField w(layout, Eigen::ArrayXd(layout.ncells()));
        for (std::int64_t c = 0; c < layout.ncells(); ++c) w.values[c] = weights.front().at(c)(0, 0);
        for (const Cube& q : cubes) {
            if (!layout.aligned(q)) continue;
            csv.add_row({cube_key(q), format_value(fujii_wilson(w, q)), format_value(0.0)});
        }
    } else {
        auto weights = weights_from_config(cfg, layout);
        std::vector<const MatrixWeightField*> ws;
        for (const auto& w : weights) ws.push_back(&w);
        if (!cfg.contains("exponents")) throw std::invalid_argument("exponents: required");
        const json& ej = cfg.at("exponents");
        std::vector<double> p, r;
        for (const auto& v : ej.at("p")) p.push_back(exponent_from_json(v, "exponents.p"));
        if (ej.contains("r"))
            for (const auto& v : ej.at("r")) r.push_back(exponent_from_json(v, "exponents.r"));
        else r.assign(p.size(), 1.0);
        double s = ej.contains("s") ? exponent_from_json(ej.at("s"), "exponents.s") : kInf;
        auto config = derived_exponents(p, r, s);

        if (kind == "roudenko") {
            for (const Cube& q : cubes)
                csv.add_row({cube_key(q), format_value(roudenko_characteristic(ws, config, {q})),
                             format_value(0.0)});
        } else if (kind == "reducing") {
            for (const Cube& q : cubes) {
                auto red = reducing_characteristic(ws, config, {q});
                csv.add_row({cube_key(q), format_value(red.value), format_value(red.slack)});
            }
        } else if (kind == "oracle") {
            OracleOptions oo;
            oo.seed = seed;
            for (const Cube& q : cubes)
                csv.add_row({cube_key(q), format_value(averaging_norm_oracle(ws, p, q, oo)),
                             format_value(0.0)});
        } else {
            throw std::invalid_argument("kind: unknown characteristic kind '" + kind + "'");
        }
    }
    fs::create_directories(common.out_dir);
    csv.write((fs::path(common.out_dir) / ("characteristic_" + kind + ".csv")).string());
    if (cfg.value("export_weights", false)) {
        auto weights = weights_from_config(cfg, layout);
        for (std::size_t j = 0; j < weights.size(); ++j)
            weight_field_csv(weights[j]).write(
                (fs::path(common.out_dir) / ("weight_" + std::to_string(j) + ".csv")).string());
    }
    return 0;
}

int run_reduce(const CommonOptions& common) {
    json cfg = load_config(common.config_path);
    GridLayout layout = layout_from_config(cfg);
    auto weights = weights_from_config(cfg, layout);
    double p = cfg.contains("p") ? exponent_from_json(cfg.at("p"), "p") : 2.0;
    Cube q = cfg.contains("q") ? cube_from_json(cfg.at("q")) : layout.box;
    auto red = reducing_operator(weights.front(), q, p);
    json out{{"weight", red.weight_id},
             {"cube", cube_to_json(red.cube)},
             {"p", std::isinf(p) ? json("inf") : json(p)},
             {"a", matrix_to_json(red.a)},
             {"kappa", red.kappa},
             {"upper_slack", red.upper_slack},
             {"lower_margin", red.lower_margin},
             {"degenerate", red.degenerate}};
    fs::create_directories(common.out_dir);
    write_text(fs::path(common.out_dir) / "reducing_operator.json", out.dump(2) + "\n");
    if (red.upper_slack > 1e-3 || red.lower_margin < 1.0 - 1e-3) return 2;
    return 0;
}

int run_maximal(const CommonOptions& common, const std::string& op) {
    json cfg = load_config(common.config_path);
    GridLayout layout = layout_from_config(cfg);
    auto cubes = cubes_from_config(cfg, layout);
    std::uint64_t seed = common.seed ? common.seed : cfg.value("seed", std::uint64_t(1));
    auto fields = fields_from_config(cfg, layout, seed);
    std::vector<const VectorField*> fs_ptrs;
    for (const auto& f : fields) fs_ptrs.push_back(&f);

    ScalarField result = ScalarField::zero(layout);
    if (op == "eta") {
        ScalarField f = fields.front().norms();
        result = eta_maximal(f, cfg.value("eta", 1.0), cubes);
    } else if (op == "multi") {
        std::vector<ScalarField> norms;
        std::vector<const ScalarField*> np;
        for (const auto& f : fields) norms.push_back(f.norms());
        for (const auto& g : norms) np.push_back(&g);
        result = multilinear_maximal(np, cubes);
    } else if (op == "weighted" || op == "aux") {
        auto weights = weights_from_config(cfg, layout);
        std::vector<const MatrixWeightField*> ws;
        for (const auto& w : weights) ws.push_back(&w);
        std::vector<double> r = cfg.value("rvec", std::vector<double>(fields.size(), 1.0));
        if (op == "weighted") result = weighted_maximal(fs_ptrs, ws, r, cubes);
        else {
            std::vector<double> t = cfg.value("tvec", std::vector<double>(fields.size(), 2.0));
            result = auxiliary_maximal(fs_ptrs, ws, r, t, cubes);
        }
    } else if (op == "convex") {
        auto mk = convex_body_maximal(fs_ptrs, cubes);
        for (std::int64_t c = 0; c < layout.ncells(); ++c) result.values[c] = mk.norm_at(c);
    } else {
        throw std::invalid_argument("op: unknown maximal operator '" + op + "'");
    }
    CsvWriter csv({"cell", "value"});
    for (std::int64_t c = 0; c < layout.ncells(); ++c)
        csv.add_row({std::to_string(c), format_value(result.values[c])});
    fs::create_directories(common.out_dir);
    csv.write((fs::path(common.out_dir) / ("maximal_" + op + ".csv")).string());
    return 0;
}

int run_sparse_dominate(const CommonOptions& common) {
    json cfg = load_config(common.config_path);
    GridLayout layout = layout_from_config(cfg);
    std::uint64_t seed = common.seed ? common.seed : cfg.value("seed", std::uint64_t(1));
    const json kj = cfg.value("kernel", json{{"name", "riesz"}, {"m", 1}, {"d", layout.dim()}});
    if (kj.value("name", "riesz") != "riesz")
        throw std::invalid_argument("kernel.name: only 'riesz' is provided");
    auto kernel = riesz_kernel(kj.value("m", 1), kj.value("d", layout.dim()));
    auto fields = fields_from_config(cfg, layout, seed);
    if (int(fields.size()) != kernel.m)
        throw std::invalid_argument("fields: tuple arity must match kernel.m");

    bool scalar = true;
    for (const auto& f : fields) scalar = scalar && f.dim() == 1;
    SparseDomination dom;
    if (scalar) {
        std::vector<ScalarField> sf;
        std::vector<const ScalarField*> sp;
        for (const auto& f : fields) sf.push_back(f.component(0));
        for (const auto& g : sf) sp.push_back(&g);
        dom = sparse_dominate(kernel, sp, layout.box, cfg.value("eps", 0.5));
    } else {
        std::vector<const VectorField*> fp;
        for (const auto& f : fields) fp.push_back(&f);
        dom = sparse_dominate_vector(kernel, fp, layout.box, cfg.value("eps", 0.5));
    }

    json family = json::array();
    for (const Cube& q : dom.base) family.push_back(cube_to_json(q));
    json dilated = json::array();
    for (const Cube& q : dom.dilated) dilated.push_back(cube_to_json(q));
    json out{{"kernel", kernel.name},
             {"family", family},
             {"dilated", dilated},
             {"constant", dom.constant},
             {"threshold_c1", dom.threshold_c1},
             {"depth", dom.depth},
             {"aborted", dom.aborted},
             {"diagnostics", dom.diagnostics},
             {"martingale_half_sparse", is_martingale_sparse(dom.base, Rational(1, 2))}};
    fs::create_directories(common.out_dir);
    write_text(fs::path(common.out_dir) / "sparse_domination.json", out.dump(2) + "\n");
    return dom.aborted ? 2 : 0;
}

int run_nondegeneracy(const CommonOptions& common) {
    json cfg = load_config(common.config_path);
    GridLayout layout = layout_from_config(cfg);
    std::uint64_t seed = common.seed ? common.seed : cfg.value("seed", std::uint64_t(1));
    const json kj = cfg.value("kernel", json{{"name", "riesz"}, {"m", 1}, {"d", layout.dim()}});
    auto kernel = riesz_kernel(kj.value("m", 1), kj.value("d", layout.dim()));
    Cube q = cfg.contains("q") ? cube_from_json(cfg.at("q"))
                               : Cube(std::vector<Rational>(layout.dim(), Rational(0)), Rational(1, 8));
    double alpha = cfg.value("alpha", 0.5);
    auto report = nondegeneracy_check(kernel, layout, q, alpha, cfg.value("trials", 8), seed);
    json out{{"kernel", kernel.name},
             {"c_md", report.c_md},
             {"q", cube_to_json(q)},
             {"q_prime", cube_to_json(report.q_prime)},
             {"min_lower", report.min_lower},
             {"max_s_ratio", report.max_s_ratio},
             {"part_b_pass", report.part_b_pass}};
    fs::create_directories(common.out_dir);
    write_text(fs::path(common.out_dir) / "nondegeneracy.json", out.dump(2) + "\n");
    return report.part_b_pass ? 0 : 2;
}

int run_verify(const CommonOptions& common, const std::string& fault) {
    AcceptanceOptions options;
    options.tier = common.tier;
    options.seed = common.seed ? common.seed : 2024;
    options.threads = common.threads;
    options.fault = fault;
    auto results = run_acceptance(options, std::cout);
    json rows = json::array();
    int failures = 0;
    for (const auto& r : results) {
        rows.push_back(json{{"index", r.index},
                            {"name", r.name},
                            {"pass", r.pass},
                            {"detail", r.detail},
                            {"seconds", r.seconds}});
        failures += r.pass ? 0 : 1;
    }
    fs::create_directories(common.out_dir);
    write_text(fs::path(common.out_dir) / "acceptance.json",
               json{{"tier", options.tier}, {"criteria", rows}}.dump(2) + "\n");
    return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mw-harmonics: matrix-weighted multilinear harmonic analysis lab"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonOptions common;
    app.add_option("--config", common.config_path, "experiment config (JSON)");
    app.add_option("--out", common.out_dir, "output directory");
    app.add_option("--seed", common.seed, "seed override");
    app.add_option("--threads", common.threads, "worker count (default: MWLAB_THREADS or hardware)");
    app.add_option("--tier", common.tier, "acceptance tier: fast or full");

    std::string kind = "roudenko", op = "eta", fault, cubes_flag, input_flag, kernel_flag;
    int m_flag = 0, d_flag = 0, level_flag = -1;
    auto* characteristic = app.add_subcommand("characteristic", "Muckenhoupt characteristics per cube");
    characteristic->add_option("--kind", kind, "roudenko | reducing | oracle | fw");
    auto* reduce = app.add_subcommand("reduce", "reducing operator of a weight on a cube");
    auto* maximal = app.add_subcommand("maximal", "maximal operators over a cube family");
    maximal->add_option("--op", op, "eta | multi | weighted | aux | convex");
    maximal->add_option("--cubes", cubes_flag, "cube family override, e.g. dyadic:4");
    auto* sparse = app.add_subcommand("sparse-dominate", "pointwise sparse domination of a CZ operator");
    sparse->add_option("--kernel", kernel_flag, "kernel name override (riesz)");
    sparse->add_option("--m", m_flag, "kernel multilinearity override");
    sparse->add_option("--d", d_flag, "dimension override");
    sparse->add_option("--level", level_flag, "grid level override");
    sparse->add_option("--input", input_flag, "config alias carrying the input tuple");
    auto* nondeg = app.add_subcommand("nondegeneracy", "directional non-degeneracy report");
    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    verify->add_option("--fault", fault, "deliberate fault injection (sandwich)");

    CLI11_PARSE(app, argc, argv);

    if (!input_flag.empty() && common.config_path.empty()) common.config_path = input_flag;
    if (!cubes_flag.empty()) g_overrides["cubes"] = cubes_flag;
    if (!kernel_flag.empty()) g_overrides["kernel_name"] = kernel_flag;
    if (m_flag > 0) g_overrides["kernel_m"] = m_flag;
    if (d_flag > 0) g_overrides["d"] = d_flag;
    if (level_flag >= 0) g_overrides["level"] = level_flag;

    if (common.threads > 0) {
        setenv("MWLAB_THREADS", std::to_string(common.threads).c_str(), 1);
    }

    try {
        if (characteristic->parsed()) return run_characteristic(common, kind);
        if (reduce->parsed()) return run_reduce(common);
        if (maximal->parsed()) return run_maximal(common, op);
        if (sparse->parsed()) return run_sparse_dominate(common);
        if (nondeg->parsed()) return run_nondegeneracy(common);
        if (verify->parsed()) return run_verify(common, fault);
    } catch (const json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
