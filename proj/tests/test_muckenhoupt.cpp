#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mwh/muckenhoupt.hpp"
#include "mwh/random.hpp"

using namespace mwh;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

GridLayout line(int level) { return GridLayout(Cube({Rational(0)}, Rational(1)), level); }

MatrixWeightField random_weight(int n, int level, std::uint64_t seed, double amp = 0.6) {
    WeightSpec spec;
    spec.kind = WeightSpec::Kind::RandomLogLipschitz;
    spec.n = n;
    spec.seed = seed;
    spec.log_amplitude = amp;
    return make_weight(spec, line(level));
}

MatrixWeightField identity_weight(int n, int level) {
    WeightSpec spec;
    spec.kind = WeightSpec::Kind::Identity;
    spec.n = n;
    return make_weight(spec, line(level));
}

// scalar weight 1 on [0,1/2), 4 on [1/2,1)
MatrixWeightField two_step_weight(int level) {
    GridLayout layout = line(level);
    std::vector<Eigen::MatrixXd> cells;
    for (std::int64_t c = 0; c < layout.ncells(); ++c) {
        double v = layout.cell_center(c)[0] < 0.5 ? 1.0 : 4.0;
        cells.push_back(Eigen::MatrixXd::Constant(1, 1, v));
    }
    return make_weight_field(layout, cells, "step14@" + std::to_string(level));
}

}  // namespace

TEST_CASE("derived exponents, first reference tuple") {
    auto cfg = derived_exponents({2, 2}, {1, 1}, kInf);
    CHECK(cfg.p_total.value() == doctest::Approx(1.0));
    CHECK(cfg.q.value() == doctest::Approx(1.0));
    CHECK(cfg.t[0].value() == doctest::Approx(2.0));
    CHECK(cfg.t[1].value() == doctest::Approx(2.0));
    CHECK(cfg.sigma[0].value() == doctest::Approx(-1.0));
    CHECK(cfg.p_hat[0].value() == doctest::Approx(-2.0));
    CHECK(cfg.kappa.value() == doctest::Approx(2.0));
    CHECK(cfg.rho.value() == doctest::Approx(0.5));
    CHECK(cfg.lambda[0] == doctest::Approx(4.0));
}

TEST_CASE("derived exponents, second reference tuple") {
    auto cfg = derived_exponents({4, 4}, {2, 2}, 4.0);
    CHECK(cfg.p_total.inv == doctest::Approx(0.5));
    CHECK(cfg.q.inv == doctest::Approx(0.25));
    CHECK(cfg.t[0].value() == doctest::Approx(4.0));
    CHECK(cfg.sigma[0].inv == doctest::Approx(-0.25));
}

TEST_CASE("p equal to r gives infinite t") {
    auto cfg = derived_exponents({2}, {2}, kInf);
    CHECK(cfg.t[0].is_infinite());
}

TEST_CASE("constraint violations are named") {
    CHECK_THROWS_WITH_AS(derived_exponents({1, 1}, {2, 1}, kInf), doctest::Contains("p >= r"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(derived_exponents({4}, {2}, 2.0), doctest::Contains("1/p >= 1/s"),
                         std::invalid_argument);
}

TEST_CASE("identity weights have unit characteristics") {
    auto w1 = identity_weight(2, 3);
    auto w2 = identity_weight(2, 3);
    auto cubes = dyadic_subcubes(w1.layout.box, 3);
    auto cfg = derived_exponents({2, 2}, {1, 1}, kInf);
    CHECK(roudenko_characteristic({&w1, &w2}, cfg, cubes) == doctest::Approx(1.0).epsilon(1e-12));
    reducing_cache().clear();
    auto red = reducing_characteristic({&w1, &w2}, cfg, cubes);
    CHECK(red.value == doctest::Approx(1.0).epsilon(5e-2));
    CHECK(averaging_norm_oracle({&w1}, {2.0}, w1.layout.box) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("two-step scalar weight evaluates to 17/8") {
    auto w = two_step_weight(3);
    std::vector<Cube> cubes{w.layout.box};
    // p = 2, r = 1, s = inf: q = 2, t = 2
    auto cfg = derived_exponents({2}, {1}, kInf);
    double roud = roudenko_characteristic({&w}, cfg, cubes);
    CHECK(roud == doctest::Approx(17.0 / 8.0).epsilon(1e-12));

    double oracle = averaging_norm_oracle({&w}, {2.0}, w.layout.box);
    CHECK(oracle == doctest::Approx(17.0 / 8.0).epsilon(1e-12));

    reducing_cache().clear();
    auto red = reducing_characteristic({&w}, cfg, cubes);
    CHECK(red.value == doctest::Approx(17.0 / 8.0).epsilon(1e-3));

    // m = 2 with the same scalar weight in both slots: separability
    auto cfg2 = derived_exponents({2, 2}, {1, 1}, kInf);
    double roud2 = roudenko_characteristic({&w, &w}, cfg2, cubes);
    CHECK(roud2 == doctest::Approx(std::pow(17.0 / 8.0, 2)).epsilon(1e-12));
}

TEST_CASE("oracle never exceeds the double-average characteristic") {
    Rng rng(2025);
    for (int trial = 0; trial < 10; ++trial) {
        int m = 1 + int(rng.uniform_int(2));
        std::vector<MatrixWeightField> store;
        std::vector<const MatrixWeightField*> weights;
        for (int j = 0; j < m; ++j) store.push_back(random_weight(1 + int(rng.uniform_int(2)), 3, 300 + trial * 7 + j));
        for (const auto& w : store) weights.push_back(&w);
        std::vector<double> p;
        for (int j = 0; j < m; ++j) p.push_back(1.0 + rng.uniform_int(3));
        std::vector<double> r(m, 1.0);
        auto cfg = derived_exponents(p, r, kInf);
        for (const Cube& q : dyadic_subcubes(store.front().layout.box, 2)) {
            double roud = roudenko_characteristic(weights, cfg, {q});
            OracleOptions opts;
            opts.seed = 99 + trial;
            double oracle = averaging_norm_oracle(weights, p, q, opts);
            CHECK(oracle <= roud + 1e-6);
        }
    }
}

TEST_CASE("scalar embedding stays below the matrix oracle") {
    Rng rng(7);
    auto w1 = random_weight(2, 3, 41);
    auto w2 = random_weight(2, 3, 43);
    std::vector<double> p{2.0, 2.0};
    Cube q = w1.layout.box;
    // embeddings feed the sampled tuples to the oracle as candidates
    std::vector<std::vector<Eigen::VectorXd>> tuples;
    for (int i = 0; i < 50; ++i) tuples.push_back({rng.unit_vector(2), rng.unit_vector(2)});
    OracleOptions opts;
    opts.extra_directions = &tuples;
    double oracle = averaging_norm_oracle({&w1, &w2}, p, q, opts);
    for (const auto& u : tuples) {
        ScalarField f1(w1.layout, Eigen::ArrayXd(w1.layout.ncells()));
        ScalarField f2(w2.layout, Eigen::ArrayXd(w2.layout.ncells()));
        for (std::int64_t c = 0; c < w1.layout.ncells(); ++c) {
            f1.values[c] = (w1.at(c) * u[0]).norm();
            f2.values[c] = (w2.at(c) * u[1]).norm();
        }
        CHECK(scalar_characteristic({&f1, &f2}, p, q) <= oracle * (1 + 1e-12));
    }
}

TEST_CASE("factorization and tensor monotonicity") {
    Rng rng(606);
    for (int trial = 0; trial < 8; ++trial) {
        auto w1 = random_weight(2, 3, 500 + 11 * trial);
        auto w2 = random_weight(2, 3, 501 + 11 * trial);
        std::vector<const MatrixWeightField*> weights{&w1, &w2};
        // random admissible configuration
        std::vector<double> r{0.5 + rng.uniform(0.0, 1.5), 0.5 + rng.uniform(0.0, 1.5)};
        std::vector<double> p;
        for (double rj : r) p.push_back(rj / rng.uniform(0.05, 1.0));
        double inv_p = 1.0 / p[0] + 1.0 / p[1];
        double inv_s = (trial % 3 == 0) ? 0.0 : rng.uniform(-1.0, inv_p);
        double s = inv_s == 0.0 ? kInf : 1.0 / inv_s;
        auto cfg = derived_exponents(p, r, s);
        auto cubes = dyadic_subcubes(w1.layout.box, 2);

        double full = roudenko_characteristic(weights, cfg, cubes);

        // tensor monotonicity: the tensor weight at the scalarized parameters
        auto big = tensor_weight(weights);
        double tensor_val = roudenko_characteristic_single(big, cfg.p_total.value(), cfg.r_total.value(),
                                                           cfg.s.value(), cubes);
        CHECK(tensor_val <= full * (1 + 1e-9) + 1e-9);

        // factorization: [W] <= [bigW^{-1}]_{p_hat,(r,s)} prod_j [W_j]_{p_j,(r_j,sigma_j)}
        auto big_inv = big.inverse();
        double head = roudenko_characteristic_single(big_inv, cfg.p_hat_total.value(), cfg.r_total.value(),
                                                     cfg.s.value(), cubes);
        double prod = head;
        prod *= roudenko_characteristic_single(w1, p[0], r[0], cfg.sigma[0].value(), cubes);
        prod *= roudenko_characteristic_single(w2, p[1], r[1], cfg.sigma[1].value(), cubes);
        CHECK(full <= prod * (1 + 1e-6));
    }
}

TEST_CASE("symmetry of the characteristic under inversion") {
    for (std::uint64_t seed : {71ull, 72ull, 73ull}) {
        auto w = random_weight(2, 3, seed);
        auto winv = w.inverse();
        auto cubes = dyadic_subcubes(w.layout.box, 2);
        double p = 3.0, r = 1.0, s = kInf;
        double p_hat = 1.0 / (1.0 / r + (std::isinf(s) ? 0.0 : 1.0 / s) - 1.0 / p);
        double fwd = roudenko_characteristic_single(w, p, r, s, cubes);
        double bwd = roudenko_characteristic_single(winv, p_hat, r, s, cubes);
        double bound = std::pow(2.0, 2 * w.n + 4) * w.n;
        CHECK(fwd / bwd <= bound);
        CHECK(bwd / fwd <= bound);
    }
}

TEST_CASE("exponent-shifted scalar reduction") {
    Rng rng(88);
    for (std::uint64_t seed : {91ull, 92ull}) {
        auto w = random_weight(2, 3, seed);
        auto cubes = dyadic_subcubes(w.layout.box, 2);
        double p = 3.0, r = 1.5, s = -2.0;
        double matrix_char = roudenko_characteristic_single(w, p, r, s, cubes);
        double inv_rho = 1.0 / r - 1.0 / s;
        double rho = 1.0 / inv_rho;
        double kappa = inv_rho / (1.0 / p - 1.0 / s);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::VectorXd v = rng.unit_vector(2);
            // scalar weight |W v|^rho as a field
            GridLayout layout = w.layout;
            std::vector<Eigen::MatrixXd> cells;
            for (std::int64_t c = 0; c < layout.ncells(); ++c)
                cells.push_back(Eigen::MatrixXd::Constant(1, 1, std::pow((w.at(c) * v).norm(), rho)));
            auto scalar = make_weight_field(layout, cells, "shift" + std::to_string(trial));
            for (const Cube& q : cubes) {
                double local = averaging_norm_oracle({&scalar}, {kappa}, q);
                CHECK(std::pow(local, 1.0 / rho) <= std::pow(matrix_char, 1.0) * (1 + 1e-6) + 1e-9);
            }
        }
    }
}

TEST_CASE("bilinear duality embedding at p = 2") {
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        auto w = random_weight(2, 3, seed);
        auto winv = w.inverse();
        Cube q = w.layout.box;
        double norm = averaging_norm_p2(w, q);
        OracleOptions opts;
        opts.seed = seed;
        double bilinear = averaging_norm_oracle({&w, &winv}, {2.0, 2.0}, q, opts);
        CHECK(norm >= 1.0 - 1e-12);
        CHECK(bilinear >= norm * (1 - 1e-6));
        CHECK(bilinear <= norm * norm * (1 + 1e-6));
    }
}

TEST_CASE("fujii-wilson on constant and step weights") {
    GridLayout layout = line(1);
    ScalarField ones = ScalarField::constant(layout, 1.0);
    CHECK(fujii_wilson(ones, layout.box) == doctest::Approx(1.0).epsilon(1e-12));

    // w = 1 on the left half, 3 on the right half, level 1
    ScalarField step(layout, Eigen::ArrayXd(2));
    step.values << 1.0, 3.0;
    // hand enumeration over the three dyadic cubes: M = 2 left, 3 right
    CHECK(fujii_wilson(step, layout.box) == doctest::Approx((2.0 * 0.5 + 3.0 * 0.5) / 2.0).epsilon(1e-12));
}

TEST_CASE("fujii-wilson matches exhaustive enumeration") {
    Rng rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        GridLayout layout = line(4);
        ScalarField w(layout, Eigen::ArrayXd(layout.ncells()));
        for (std::int64_t c = 0; c < layout.ncells(); ++c)
            w.values[c] = (trial % 4 == 0 && c == 5) ? 1e3 : std::exp(rng.uniform(-1.0, 1.0));
        // brute force: per cell, enumerate every dyadic ancestor average
        auto cubes = dyadic_subcubes(layout.box, layout.level);
        double integral = 0.0;
        for (std::int64_t c = 0; c < layout.ncells(); ++c) {
            Cube cell = layout.cell(c);
            double best = 0.0;
            for (const Cube& q : cubes)
                if (q.contains(cell)) best = std::max(best, cube_average(w, q));
            integral += best * layout.cell_volume_d();
        }
        double expected = integral / cube_integral(w, layout.box);
        CHECK(fujii_wilson(w, layout.box) == doctest::Approx(expected).epsilon(1e-10));
    }
}
