#include "mwh/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>

#include "mwh/czo.hpp"
#include "mwh/maximal.hpp"
#include "mwh/muckenhoupt.hpp"
#include "mwh/parallel.hpp"
#include "mwh/random.hpp"

namespace mwh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GridLayout line(int level) { return GridLayout(Cube({Rational(0)}, Rational(1)), level); }

MatrixWeightField random_weight(int n, const GridLayout& layout, std::uint64_t seed, double amp = 0.6) {
    WeightSpec spec;
    spec.kind = WeightSpec::Kind::RandomLogLipschitz;
    spec.n = n;
    spec.seed = seed;
    spec.log_amplitude = amp;
    return make_weight(spec, layout);
}

struct Check {
    bool pass = true;
    std::ostringstream detail;

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.str().empty()) detail << "; ";
            detail << what;
        }
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

// ---- criterion 1: reducing-operator sandwich --------------------------------

CriterionResult criterion_reducing_sandwich(const AcceptanceOptions& opt) {
    CriterionResult res{1, "reducing-sandwich", false, "", 0.0};
    Check chk;
    const int weights = 50;
    const std::vector<double> exponents{0.5, 1.0, 2.0, kInf};
    double worst_upper = 0.0;
    double worst_lower = kInf;
    std::mutex mu;
    GridLayout layout = line(opt.tier == "full" ? 5 : 4);
    parallel_for(weights, [&](std::int64_t i) {
        int n = 1 + int(i % 3);
        auto w = random_weight(n, layout, opt.seed + 100 + i);
        double up = 0.0, low = kInf;
        for (double p : exponents) {
            auto red = reducing_operator(w, layout.box, p);
            if (opt.fault == "sandwich") red.a *= 2.0;  // deliberate damage
            // re-verify on the stored verification net with q computed directly
            CubeQuasinorm quasi(w, layout.box, p);
            double kpow = std::pow(quasinorm_constant(p), n);
            for (const auto& v : direction_net(n, reducing_net_size(n) + 1 + reducing_net_size(n) / 3)) {
                double qv = quasi(v);
                if (qv <= 0) continue;
                double av = (red.a * v).norm();
                up = std::max(up, av / (std::sqrt(double(n)) * qv) - 1.0);
                low = std::min(low, av * kpow / qv);
            }
        }
        std::lock_guard<std::mutex> lock(mu);
        worst_upper = std::max(worst_upper, up);
        worst_lower = std::min(worst_lower, low);
    }, opt.threads);
    chk.expect(worst_upper <= 1e-3, "upper sandwich slack " + fmt(worst_upper) + " > 1e-3");
    chk.expect(worst_lower >= 1.0 - 1e-3, "lower sandwich margin " + fmt(worst_lower) + " < 1-1e-3");
    res.pass = chk.pass;
    res.detail = chk.pass ? "worst upper slack " + fmt(worst_upper) + ", worst lower margin " + fmt(worst_lower)
                          : chk.detail.str();
    return res;
}

// ---- criterion 2: tensor norm multiplicativity ------------------------------

CriterionResult criterion_tensor_norm(const AcceptanceOptions& opt) {
    CriterionResult res{2, "tensor-norm-multiplicative", false, "", 0.0};
    Rng rng(opt.seed + 2);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        int m = 2 + int(rng.uniform_int(2));
        std::vector<Eigen::MatrixXd> mats;
        double prod = 1.0;
        for (int j = 0; j < m; ++j) {
            int n = 1 + int(rng.uniform_int(3));
            Eigen::MatrixXd a(n, n);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) a(r, c) = rng.normal();
            prod *= op_norm(a);
            mats.push_back(std::move(a));
        }
        double big = op_norm(tensor_matrix(mats));
        worst = std::max(worst, std::abs(big - prod) / std::max(1.0, prod));
    }
    res.pass = worst <= 1e-10;
    res.detail = "max relative defect " + fmt(worst);
    return res;
}

// ---- criteria 3 and 7: oracle vs Roudenko, scalar embedding ------------------

CriterionResult criterion_oracle_below_roudenko(const AcceptanceOptions& opt) {
    CriterionResult res{3, "oracle-below-roudenko", false, "", 0.0};
    Check chk;
    Rng rng(opt.seed + 3);
    double worst_gap = -kInf;
    for (int inst = 0; inst < 12; ++inst) {
        int m = 1 + int(rng.uniform_int(2));
        GridLayout layout = line(3);
        std::vector<MatrixWeightField> store;
        std::vector<const MatrixWeightField*> ws;
        std::vector<double> p;
        for (int j = 0; j < m; ++j) {
            store.push_back(random_weight(1 + int(rng.uniform_int(2)), layout, opt.seed + 31 * inst + j));
            p.push_back(1.0 + double(rng.uniform_int(3)));
        }
        for (const auto& w : store) ws.push_back(&w);
        auto cfg = derived_exponents(p, std::vector<double>(m, 1.0), kInf);
        for (const Cube& q : dyadic_subcubes(layout.box, 2)) {
            double roud = roudenko_characteristic(ws, cfg, {q});
            OracleOptions oo;
            oo.seed = opt.seed + inst;
            double oracle = averaging_norm_oracle(ws, p, q, oo);
            worst_gap = std::max(worst_gap, oracle - roud);
            chk.expect(oracle <= roud + 1e-6,
                         "oracle " + fmt(oracle) + " exceeds roudenko " + fmt(roud) + " on a cube");
        }
    }
    res.pass = chk.pass;
    res.detail = chk.pass ? "max(oracle - roudenko) = " + fmt(worst_gap) : chk.detail.str();
    return res;
}

CriterionResult criterion_scalar_embedding(const AcceptanceOptions& opt) {
    CriterionResult res{7, "scalar-embedding", false, "", 0.0};
    Check chk;
    Rng rng(opt.seed + 7);
    GridLayout layout = line(3);
    auto w1 = random_weight(2, layout, opt.seed + 71);
    auto w2 = random_weight(2, layout, opt.seed + 72);
    std::vector<double> p{2.0, 3.0};
    Cube q = layout.box;
    std::vector<std::vector<Eigen::VectorXd>> tuples;
    for (int i = 0; i < 50; ++i) tuples.push_back({rng.unit_vector(2), rng.unit_vector(2)});
    OracleOptions oo;
    oo.seed = opt.seed + 7;
    oo.extra_directions = &tuples;
    double oracle = averaging_norm_oracle({&w1, &w2}, p, q, oo);
    double worst = 0.0;
    for (const auto& u : tuples) {
        ScalarField f1(layout, Eigen::ArrayXd(layout.ncells()));
        ScalarField f2(layout, Eigen::ArrayXd(layout.ncells()));
        for (std::int64_t c = 0; c < layout.ncells(); ++c) {
            f1.values[c] = (w1.at(c) * u[0]).norm();
            f2.values[c] = (w2.at(c) * u[1]).norm();
        }
        double scalar = scalar_characteristic({&f1, &f2}, p, q);
        worst = std::max(worst, scalar);
        chk.expect(scalar <= oracle * (1 + 1e-12),
                     "scalar characteristic " + fmt(scalar) + " exceeds the oracle " + fmt(oracle));
    }
    res.pass = chk.pass;
    res.detail = chk.pass ? "sup scalar " + fmt(worst) + " <= oracle " + fmt(oracle) : chk.detail.str();
    return res;
}

// ---- criterion 4: the 17/8 closed form --------------------------------------

CriterionResult criterion_closed_form(const AcceptanceOptions&) {
    CriterionResult res{4, "closed-form-17/8", false, "", 0.0};
    Check chk;
    GridLayout layout = line(3);
    std::vector<Eigen::MatrixXd> cells;
    for (std::int64_t c = 0; c < layout.ncells(); ++c)
        cells.push_back(Eigen::MatrixXd::Constant(1, 1, layout.cell_center(c)[0] < 0.5 ? 1.0 : 4.0));
    auto w = make_weight_field(layout, cells, "acceptance-step14");
    const double expect = 17.0 / 8.0;
    Cube q = layout.box;

    double oracle = averaging_norm_oracle({&w}, {2.0}, q);
    auto cfg = derived_exponents({2.0}, {1.0}, kInf);
    double roud = roudenko_characteristic({&w}, cfg, {q});
    auto red = reducing_characteristic({&w}, cfg, {q});
    chk.expect(std::abs(oracle - expect) <= 2e-3, "oracle " + fmt(oracle));
    chk.expect(std::abs(roud - expect) <= 2e-3, "roudenko " + fmt(roud));
    chk.expect(std::abs(red.value - expect) <= 2e-3, "reducing " + fmt(red.value));
    res.pass = chk.pass;
    res.detail = "oracle " + fmt(oracle) + ", roudenko " + fmt(roud) + ", reducing " + fmt(red.value) +
                 (chk.pass ? "" : "; " + chk.detail.str());
    return res;
}

// ---- criteria 5 and 6: factorization and tensor monotonicity -----------------

void random_config(Rng& rng, int m, std::vector<double>& p, std::vector<double>& r, double& s) {
    p.clear();
    r.clear();
    double inv_p = 0.0;
    for (int j = 0; j < m; ++j) {
        double rj = 0.5 + rng.uniform(0.0, 1.5);
        double pj = rj / rng.uniform(0.05, 1.0);
        r.push_back(rj);
        p.push_back(pj);
        inv_p += 1.0 / pj;
    }
    double inv_s = (rng.uniform() < 0.3) ? 0.0 : rng.uniform(-1.0, inv_p);
    s = inv_s == 0.0 ? kInf : 1.0 / inv_s;
}

CriterionResult criterion_factorization(const AcceptanceOptions& opt, bool monotonicity) {
    CriterionResult res{monotonicity ? 6 : 5, monotonicity ? "tensor-monotonicity" : "factorization", false,
                        "", 0.0};
    Check chk;
    Rng rng(opt.seed + 5);
    double worst = -kInf;
    for (int inst = 0; inst < 30; ++inst) {
        GridLayout layout = line(3);
        auto w1 = random_weight(2, layout, opt.seed + 500 + 7 * inst);
        auto w2 = random_weight(2, layout, opt.seed + 501 + 7 * inst);
        std::vector<const MatrixWeightField*> ws{&w1, &w2};
        std::vector<double> p, r;
        double s;
        random_config(rng, 2, p, r, s);
        auto cfg = derived_exponents(p, r, s);
        auto cubes = dyadic_subcubes(layout.box, 2);
        double full = roudenko_characteristic(ws, cfg, cubes);
        auto big = tensor_weight(ws);
        if (monotonicity) {
            double tensor_val = roudenko_characteristic_single(big, cfg.p_total.value(), cfg.r_total.value(),
                                                               cfg.s.value(), cubes);
            worst = std::max(worst, tensor_val / full);
            chk.expect(tensor_val <= full * (1 + 1e-6),
                         "tensor value " + fmt(tensor_val) + " exceeds " + fmt(full));
        } else {
            auto big_inv = big.inverse();
            double bound = roudenko_characteristic_single(big_inv, cfg.p_hat_total.value(),
                                                          cfg.r_total.value(), cfg.s.value(), cubes);
            bound *= roudenko_characteristic_single(w1, p[0], r[0], cfg.sigma[0].value(), cubes);
            bound *= roudenko_characteristic_single(w2, p[1], r[1], cfg.sigma[1].value(), cubes);
            worst = std::max(worst, full / bound);
            chk.expect(full <= bound * (1 + 1e-6),
                         "characteristic " + fmt(full) + " exceeds the factorization bound " + fmt(bound));
        }
    }
    res.pass = chk.pass;
    res.detail = chk.pass ? "worst ratio " + fmt(worst) : chk.detail.str();
    return res;
}

// ---- criterion 8: Aumann two-sided bound -------------------------------------

CriterionResult criterion_aumann(const AcceptanceOptions& opt) {
    CriterionResult res{8, "aumann-two-sided", false, "", 0.0};
    Check chk;
    Rng rng(opt.seed + 8);
    for (int trial = 0; trial < 100 && chk.pass; ++trial) {
        int n = 2 + int(rng.uniform_int(2));
        GridLayout layout = line(2);
        std::vector<SymmetricConvexBody> cells;
        for (std::int64_t c = 0; c < layout.ncells(); ++c) {
            if (rng.uniform() < 0.5) cells.push_back(make_ellipsoid(rng.spd_matrix(n, 0.1, 2.0)));
            else {
                std::vector<Eigen::VectorXd> pts;
                for (int i = 0; i < 3; ++i) pts.push_back(rng.normal_vector(n));
                cells.push_back(make_hull(std::move(pts)));
            }
        }
        BodyField field{layout, cells};
        auto avg = aumann_average(field, layout.box);
        double avg_norms = 0.0;
        for (std::int64_t c = 0; c < layout.ncells(); ++c)
            avg_norms += body_norm(field.at(c)) * layout.cell_volume_d();
        double norm_avg = body_norm(avg);
        chk.expect(norm_avg <= avg_norms * (1 + 1e-9),
                     "norm of average " + fmt(norm_avg) + " above average of norms " + fmt(avg_norms));
        chk.expect(avg_norms <= n * norm_avg * (1 + 1e-9),
                     "average of norms " + fmt(avg_norms) + " above n x norm of average " + fmt(n * norm_avg));
    }
    res.pass = chk.pass;
    res.detail = chk.pass ? "two-sided bound held on 100 fields" : chk.detail.str();
    return res;
}

// ---- criterion 9: M^K sparse domination --------------------------------------

CriterionResult criterion_maximal_sparse(const AcceptanceOptions& opt) {
    CriterionResult res{9, "maximal-sparse-domination", false, "", 0.0};
    Check chk;
    Rng rng(opt.seed + 9);
    const int level = opt.tier == "full" ? 6 : 5;
    GridLayout layout = line(level);
    VectorField f1 = VectorField::zero(layout, 2), f2 = VectorField::zero(layout, 2);
    for (std::int64_t c = 0; c < layout.ncells(); ++c) {
        f1.values.col(c) = rng.normal_vector(2);
        f2.values.col(c) = rng.normal_vector(2);
    }
    std::vector<const VectorField*> fs{&f1, &f2};
    auto family = dyadic_subcubes(layout.box, level);
    auto sparse = maximal_sparse_dominate(fs, family);
    bool martingale = false;
    try {
        martingale = is_martingale_sparse(sparse.family, Rational(1, 2));
    } catch (const std::exception& e) {
        chk.expect(false, std::string("martingale check rejected the family: ") + e.what());
    }
    chk.expect(martingale, "output family is not martingale 1/2-sparse");

    auto full = convex_body_maximal(fs, family);
    auto dominated = convex_body_maximal(fs, sparse.family);
    auto net = direction_net(4, 200);
    double worst = 0.0;
    for (std::int64_t cell = 0; cell < layout.ncells() && chk.pass; ++cell) {
        for (const auto& v : net) {
            double lhs = full.support_at(cell, v);
            double rhs = sparse.factor * dominated.support_at(cell, v);
            if (lhs > 0) worst = std::max(worst, lhs / std::max(rhs, 1e-300));
            chk.expect(lhs <= rhs * (1 + 1e-9) + 1e-14,
                         "containment failed at cell " + std::to_string(cell));
        }
    }
    res.pass = chk.pass;
    res.detail = chk.pass
                     ? "martingale exact; containment ratio <= " + fmt(worst) + " of factor " + fmt(sparse.factor)
                     : chk.detail.str();
    return res;
}

// ---- criterion 10: CZ sparse domination --------------------------------------

CriterionResult criterion_cz_sparse(const AcceptanceOptions&) {
    CriterionResult res{10, "cz-sparse-domination", false, "", 0.0};
    Check chk;
    std::ostringstream detail;
    for (int m : {1, 2}) {
        auto k = riesz_kernel(m, 1);
        std::vector<double> constants;
        for (int level : {5, 6, 7}) {
            GridLayout layout = line(level);
            ScalarField f = ScalarField::constant(layout, 1.0);
            std::vector<ScalarField> store(m, f);
            std::vector<const ScalarField*> fs;
            for (auto& g : store) fs.push_back(&g);
            auto dom = sparse_dominate(k, fs, layout.box, 0.5);
            chk.expect(!dom.aborted, "construction aborted at m=" + std::to_string(m));
            if (dom.aborted) break;
            bool martingale = false;
            try {
                martingale = is_martingale_sparse(dom.base, Rational(1, 2));
            } catch (const std::exception&) {
            }
            chk.expect(martingale, "stopping family not martingale 1/2-sparse");

            // dilated family with inherited witnesses at eta = 1/(2 3^d)
            GridLayout wide(Cube({Rational(-1)}, Rational(4)), level + 2);
            auto eta = is_eta_sparse(dom.dilated, Rational(1, 6), wide);
            chk.expect(eta.has_value() && verify_eta_witness(*eta, Rational(1, 6)),
                         "dilated family is not 1/6-sparse with witnesses");

            // pointwise scalar domination at every grid cell
            ScalarField tfull = apply_czo_scalar_field(k, fs);
            for (std::int64_t cell : layout.cells_in(layout.box)) {
                double denom = 0.0;
                for (const Cube& q : dom.base) {
                    Cube triple = q.tripled();
                    if (!triple.contains(layout.cell(cell))) continue;
                    double prod = 1.0;
                    for (const auto* fj : fs)
                        prod *= cube_integral(ScalarField(layout, fj->values.abs()), triple) /
                                triple.volume_d();
                    denom += prod;
                }
                chk.expect(std::abs(tfull.values[cell]) <= dom.constant * denom * (1 + 1e-9) + 1e-12,
                             "pointwise domination failed at cell " + std::to_string(cell));
            }
            constants.push_back(dom.constant);
        }
        if (constants.size() == 3) {
            double lo = *std::min_element(constants.begin(), constants.end());
            double hi = *std::max_element(constants.begin(), constants.end());
            chk.expect(hi <= 1.2 * lo, "m=" + std::to_string(m) + " constant varies " +
                                             fmt(100 * (hi / lo - 1)) + "% > 20%");
            detail << (m == 1 ? "" : "; ") << "m=" << m << " C in [" << fmt(lo) << ", " << fmt(hi) << "]";
        }
    }
    res.pass = chk.pass;
    res.detail = chk.pass ? detail.str() : chk.detail.str();
    return res;
}

// ---- criterion 11: Riesz non-degeneracy --------------------------------------

CriterionResult criterion_nondegeneracy(const AcceptanceOptions& opt) {
    CriterionResult res{11, "riesz-nondegeneracy", false, "", 0.0};
    Check chk;
    const int level = 6;
    GridLayout layout = line(level);
    Cube q({Rational(0)}, Rational(1, 4));
    auto k = riesz_kernel(1, 1);
    auto report = nondegeneracy_check(k, layout, q, 0.5, 8, opt.seed + 11);
    chk.expect(std::abs(report.c_md - 3.0) < 1e-15, "C_{1,1} != 3");
    chk.expect(report.min_lower >= 1.0 - 5.0 * std::pow(2.0, -level),
                 "lower bound " + fmt(report.min_lower) + " < " + fmt(1.0 - 5.0 * std::pow(2.0, -level)));
    chk.expect(report.part_b_pass, "residual kernel ratio " + fmt(report.max_s_ratio) + " > 1");
    res.pass = chk.pass;
    res.detail = chk.pass ? "C=3, min lower " + fmt(report.min_lower) + ", max |S||Q| " + fmt(report.max_s_ratio)
                          : chk.detail.str();
    return res;
}

// ---- criterion 12: CZ decomposition invariants -------------------------------

CriterionResult criterion_cz_decomposition(const AcceptanceOptions& opt) {
    CriterionResult res{12, "cz-decomposition", false, "", 0.0};
    Check chk;
    Rng rng(opt.seed + 12);
    for (int trial = 0; trial < 100 && chk.pass; ++trial) {
        GridLayout layout = line(5);
        ScalarField f(layout, Eigen::ArrayXd(layout.ncells()));
        for (std::int64_t c = 0; c < layout.ncells(); ++c) {
            f.values[c] = rng.normal();
            if (rng.uniform() < 0.15) f.values[c] *= 25.0;
        }
        double top = cube_average(ScalarField(layout, f.values.abs()), layout.box);
        double lambda = top * (1.01 + 2.0 * rng.uniform());
        auto dec = cz_decompose(f, lambda);
        ScalarField recon = dec.good;
        recon.values += dec.bad_sum().values;
        chk.expect((recon.values - f.values).abs().maxCoeff() <= 1e-12, "reconstruction failed");
        chk.expect(dec.good.values.abs().maxCoeff() <= 2.0 * lambda * (1 + 1e-12), "good-part bound failed");
        double total = 0.0;
        for (std::size_t i = 0; i < dec.cubes.size(); ++i) {
            chk.expect(std::abs(cube_integral(dec.bad[i], dec.cubes[i])) <= 1e-12, "bad part has nonzero mean");
            total += dec.cubes[i].volume_d();
        }
        chk.expect(total <= f.l1_norm() / lambda + 1e-12, "measure budget failed");
    }
    res.pass = chk.pass;
    res.detail = chk.pass ? "invariants held on 100 decompositions" : chk.detail.str();
    return res;
}

// ---- criterion 13: Fujii-Wilson ----------------------------------------------

CriterionResult criterion_fujii_wilson(const AcceptanceOptions& opt) {
    CriterionResult res{13, "fujii-wilson", false, "", 0.0};
    Check chk;
    GridLayout layout = line(4);
    ScalarField ones = ScalarField::constant(layout, 1.0);
    double fw1 = fujii_wilson(ones, layout.box);
    chk.expect(std::abs(fw1 - 1.0) <= 1e-12, "constant weight gave " + fmt(fw1));
    Rng rng(opt.seed + 13);
    double worst = 0.0;
    auto cubes = dyadic_subcubes(layout.box, layout.level);
    for (int trial = 0; trial < 20 && chk.pass; ++trial) {
        ScalarField w(layout, Eigen::ArrayXd(layout.ncells()));
        for (std::int64_t c = 0; c < layout.ncells(); ++c) w.values[c] = std::exp(rng.uniform(-1.5, 1.5));
        double integral = 0.0;
        for (std::int64_t c = 0; c < layout.ncells(); ++c) {
            Cube cell = layout.cell(c);
            double best = 0.0;
            for (const Cube& q : cubes)
                if (q.contains(cell)) best = std::max(best, cube_average(w, q));
            integral += best * layout.cell_volume_d();
        }
        double expect = integral / cube_integral(w, layout.box);
        double got = fujii_wilson(w, layout.box);
        worst = std::max(worst, std::abs(got - expect));
        chk.expect(std::abs(got - expect) <= 1e-10, "mismatch " + fmt(std::abs(got - expect)));
    }
    res.pass = chk.pass;
    res.detail = chk.pass ? "constant exact; max enumeration defect " + fmt(worst) : chk.detail.str();
    return res;
}

// ---- criterion 14: weak-type direction ---------------------------------------

CriterionResult criterion_weak_type(const AcceptanceOptions& opt) {
    CriterionResult res{14, "weak-type-direction", false, "", 0.0};
    Check chk;
    Rng rng(opt.seed + 14);
    for (int inst = 0; inst < 20 && chk.pass; ++inst) {
        GridLayout layout = line(3);
        VectorField f1 = VectorField::zero(layout, 2), f2 = VectorField::zero(layout, 2);
        for (std::int64_t c = 0; c < layout.ncells(); ++c) {
            f1.values.col(c) = rng.normal_vector(2);
            f2.values.col(c) = rng.normal_vector(2);
        }
        auto w1 = random_weight(2, layout, opt.seed + 140 + inst);
        auto w2 = random_weight(2, layout, opt.seed + 170 + inst);
        auto big = tensor_weight({&w1, &w2});
        double p = 1.0;
        auto cubes = dyadic_subcubes(layout.box, 3);
        auto mk = convex_body_maximal(std::vector<const VectorField*>{&f1, &f2}, cubes);
        double weak = weak_norm(mk, big, p);
        for (const Cube& q : cubes) {
            Eigen::VectorXd u = tensor_vector({cube_average(f1, q), cube_average(f2, q)});
            double norm = 0.0;
            for (std::int64_t cell : layout.cells_in(q))
                norm += std::pow((big.at(cell) * u).norm(), p) * layout.cell_volume_d();
            norm = std::pow(norm, 1.0 / p);
            chk.expect(weak >= norm * (1 - 1e-9),
                         "weak norm " + fmt(weak) + " below averaging value " + fmt(norm));
        }
    }
    res.pass = chk.pass;
    res.detail = chk.pass ? "weak norm dominated every family cube on 20 instances" : chk.detail.str();
    return res;
}

// ---- criterion 15: diagnostics stability -------------------------------------

CriterionResult criterion_diagnostics(const AcceptanceOptions&) {
    CriterionResult res{15, "diagnostics-stability", false, "", 0.0};
    Check chk;
    std::ostringstream detail;
    auto k = riesz_kernel(1, 1);
    double eta = 1.0 / (2.0 * k.m);
    std::vector<double> cotlar, endpoint;
    for (int level : {4, 5, 6}) {
        GridLayout layout = line(level);
        ScalarField f = ScalarField::zero(layout);
        for (std::int64_t c = 0; c < layout.ncells(); ++c) {
            double x = layout.cell_center(c)[0];
            f.values[c] = (x >= 0.125 && x < 0.5) ? 1.0 + x : 0.0;
        }
        auto cubes = dyadic_subcubes(layout.box, level);
        std::vector<int> skipped;
        auto mt = grand_maximal(k, {&f}, cubes, &skipped);
        auto tf = apply_czo_scalar_field(k, {&f});
        ScalarField tabs(layout, tf.values.abs());
        auto meta = eta_maximal(tabs, eta, cubes);
        auto mm = multilinear_maximal({&f}, cubes);
        double c = 0.0;
        for (std::int64_t cell = 0; cell < layout.ncells(); ++cell) {
            if (mm.values[cell] <= 0) continue;
            c = std::max(c, std::max(0.0, mt.values[cell] - meta.values[cell]) / mm.values[cell]);
        }
        cotlar.push_back(c);
        double ce = 0.0;
        for (double lambda = 0.01; lambda < 8.0; lambda *= 1.4) {
            double measure = 0.0;
            for (std::int64_t cell = 0; cell < layout.ncells(); ++cell)
                if (std::abs(tf.values[cell]) > lambda) measure += layout.cell_volume_d();
            ce = std::max(ce, std::pow(lambda, 1.0 / k.m) * measure);
        }
        endpoint.push_back(ce / f.l1_norm());
    }
    for (std::size_t i = 1; i < cotlar.size(); ++i) {
        chk.expect(cotlar[i] <= 2.0 * cotlar[i - 1] + 1e-12, "cotlar constant grew beyond 2x");
        chk.expect(endpoint[i] <= 2.0 * endpoint[i - 1] + 1e-12, "endpoint constant grew beyond 2x");
    }
    detail << "cotlar [" << fmt(cotlar[0]) << ", " << fmt(cotlar[1]) << ", " << fmt(cotlar[2]) << "], endpoint ["
           << fmt(endpoint[0]) << ", " << fmt(endpoint[1]) << ", " << fmt(endpoint[2]) << "]";
    res.pass = chk.pass;
    res.detail = chk.pass ? detail.str() : chk.detail.str() + "; " + detail.str();
    return res;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& log) {
    using Clock = std::chrono::steady_clock;
    std::vector<std::function<CriterionResult()>> criteria{
        [&] { return criterion_reducing_sandwich(options); },
        [&] { return criterion_tensor_norm(options); },
        [&] { return criterion_oracle_below_roudenko(options); },
        [&] { return criterion_closed_form(options); },
        [&] { return criterion_factorization(options, false); },
        [&] { return criterion_factorization(options, true); },
        [&] { return criterion_scalar_embedding(options); },
        [&] { return criterion_aumann(options); },
        [&] { return criterion_maximal_sparse(options); },
        [&] { return criterion_cz_sparse(options); },
        [&] { return criterion_nondegeneracy(options); },
        [&] { return criterion_cz_decomposition(options); },
        [&] { return criterion_fujii_wilson(options); },
        [&] { return criterion_weak_type(options); },
        [&] { return criterion_diagnostics(options); },
    };
    std::vector<CriterionResult> results;
    for (auto& run : criteria) {
        auto t0 = Clock::now();
        CriterionResult r = run();
        r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        log << "[" << std::setw(2) << r.index << "/15] " << (r.pass ? "PASS" : "FAIL") << "  " << std::left
            << std::setw(28) << r.name << std::right << " " << r.detail << "  (" << std::fixed
            << std::setprecision(2) << r.seconds << " s)" << std::defaultfloat << "\n"
            << std::flush;
        results.push_back(std::move(r));
    }
    // criterion 1 carries a fast-tier runtime budget
    if (options.tier == "fast" && !results.empty() && results.front().seconds >= 60.0) {
        results.front().pass = false;
        results.front().detail += "; runtime " + std::to_string(results.front().seconds) + " s >= 60 s";
        log << "[ 1/15] FAIL  reducing-sandwich runtime budget exceeded\n";
    }
    return results;
}

}  // namespace mwh
