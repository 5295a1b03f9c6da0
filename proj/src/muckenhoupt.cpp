#include "mwh/muckenhoupt.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mwh/convex.hpp"
#include "mwh/random.hpp"
#include "mwh/tensor.hpp"

namespace mwh {

ExponentConfig derived_exponents(const std::vector<double>& p, const std::vector<double>& r, double s) {
    if (p.empty() || p.size() != r.size())
        throw std::invalid_argument("derived_exponents: p and r must be nonempty tuples of equal length");
    ExponentConfig cfg;
    double inv_p = 0.0, inv_r = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (!(p[j] > 0)) throw std::invalid_argument("derived_exponents: constraint p_j > 0 violated");
        if (!(r[j] > 0) || std::isinf(r[j]))
            throw std::invalid_argument("derived_exponents: constraint r_j in (0, inf) violated");
        if (p[j] < r[j]) {
            std::ostringstream msg;
            msg << "derived_exponents: constraint p >= r violated at component " << j + 1;
            throw std::invalid_argument(msg.str());
        }
        cfg.p.push_back(Exponent::from_value(p[j]));
        cfg.r.push_back(Exponent::from_value(r[j]));
        inv_p += cfg.p.back().inv;
        inv_r += cfg.r.back().inv;
    }
    if (s == 0.0) throw std::invalid_argument("derived_exponents: constraint s != 0 violated");
    cfg.s = Exponent::from_value(s);
    if (inv_p < cfg.s.inv)
        throw std::invalid_argument("derived_exponents: constraint 1/p >= 1/s violated");

    cfg.p_total = Exponent::from_reciprocal(inv_p);
    cfg.r_total = Exponent::from_reciprocal(inv_r);
    cfg.q = Exponent::from_reciprocal(inv_p - cfg.s.inv);
    double rs = inv_r - cfg.s.inv;  // 1/rho
    cfg.rho = Exponent::from_reciprocal(rs);
    cfg.kappa = Exponent::from_reciprocal(rs == 0.0 ? 0.0 : (inv_p - cfg.s.inv) / rs);
    for (std::size_t j = 0; j < p.size(); ++j) {
        double inv_t = cfg.r[j].inv - cfg.p[j].inv;
        cfg.t.push_back(Exponent::from_reciprocal(inv_t));
        double inv_sigma = cfg.r[j].inv - rs;
        cfg.sigma.push_back(Exponent::from_reciprocal(inv_sigma));
        cfg.p_hat.push_back(Exponent::from_reciprocal(cfg.r[j].inv + inv_sigma - cfg.p[j].inv));
        cfg.lambda.push_back(cfg.t.back().is_infinite() ? std::numeric_limits<double>::infinity()
                                                        : cfg.t.back().value() * rs);
    }
    cfg.p_hat_total = Exponent::from_reciprocal(inv_r + cfg.s.inv - inv_p);
    return cfg;
}

CharacteristicExponents characteristic_exponents(double p, double r, double s) {
    double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
    double inv_r = std::isinf(r) ? 0.0 : 1.0 / r;
    double inv_s = std::isinf(s) ? 0.0 : 1.0 / s;
    double inv_q = inv_p - inv_s;
    double inv_t = inv_r - inv_p;
    if (inv_q < -1e-15 || inv_t < -1e-15)
        throw std::invalid_argument("characteristic_exponents: derived exponents must be positive");
    CharacteristicExponents out;
    out.q = inv_q <= 0 ? std::numeric_limits<double>::infinity() : 1.0 / inv_q;
    out.t = inv_t <= 0 ? std::numeric_limits<double>::infinity() : 1.0 / inv_t;
    return out;
}

Eigen::MatrixXd pairwise_norm_table(const MatrixWeightField& w) {
    const std::int64_t n = w.layout.ncells();
    Eigen::MatrixXd table(n, n);
    for (std::int64_t x = 0; x < n; ++x)
        for (std::int64_t y = 0; y < n; ++y)
            table(x, y) = op_norm(Eigen::MatrixXd(w.at(x) * w.inv_at(y)));
    return table;
}

namespace {

struct CubeCells {
    std::vector<std::int64_t> cells;
    std::vector<double> weights;  // normalized overlap fractions
};

CubeCells cube_cells(const GridLayout& layout, const Cube& q) {
    CubeCells out;
    Rational covered(0);
    auto meeting = layout.cells_meeting(q);
    for (const auto& [cell, vol] : meeting) covered = covered + vol;
    for (const auto& [cell, vol] : meeting) {
        out.cells.push_back(cell);
        out.weights.push_back((vol / covered).value());
    }
    return out;
}

double roudenko_on_cube(const std::vector<const Eigen::MatrixXd*>& tables, const std::vector<double>& t,
                        double q, const CubeCells& cc) {
    const std::size_t k = cc.cells.size();
    std::vector<double> outer(k);
    std::vector<double> inner(k);
    for (std::size_t xi = 0; xi < k; ++xi) {
        double prod = 1.0;
        for (std::size_t j = 0; j < tables.size(); ++j) {
            for (std::size_t yi = 0; yi < k; ++yi)
                inner[yi] = (*tables[j])(cc.cells[xi], cc.cells[yi]);
            prod *= power_average(inner, cc.weights, t[j]);
        }
        outer[xi] = prod;
    }
    return power_average(outer, cc.weights, q);
}

}  // namespace

double roudenko_characteristic(const std::vector<const MatrixWeightField*>& weights,
                               const ExponentConfig& cfg, const std::vector<Cube>& cubes) {
    if (cubes.empty()) throw std::invalid_argument("roudenko_characteristic: empty cube list");
    if (int(weights.size()) != cfg.m())
        throw std::invalid_argument("roudenko_characteristic: weight/exponent arity mismatch");
    std::vector<Eigen::MatrixXd> tables;
    std::vector<const Eigen::MatrixXd*> table_ptrs;
    for (const auto* w : weights) tables.push_back(pairwise_norm_table(*w));
    for (const auto& t : tables) table_ptrs.push_back(&t);
    std::vector<double> t;
    for (const auto& e : cfg.t) t.push_back(e.value());
    double q = cfg.q.value();
    double best = 0.0;
    for (const Cube& qc : cubes) {
        best = std::max(best, roudenko_on_cube(table_ptrs, t, q, cube_cells(weights.front()->layout, qc)));
    }
    return best;
}

double roudenko_characteristic_single(const MatrixWeightField& w, double p, double r, double s,
                                      const std::vector<Cube>& cubes) {
    auto ex = characteristic_exponents(p, r, s);
    Eigen::MatrixXd table = pairwise_norm_table(w);
    double best = 0.0;
    for (const Cube& qc : cubes)
        best = std::max(best, roudenko_on_cube({&table}, {ex.t}, ex.q, cube_cells(w.layout, qc)));
    return best;
}

ReducingCharacteristic reducing_characteristic(const std::vector<const MatrixWeightField*>& weights,
                                               const ExponentConfig& cfg, const std::vector<Cube>& cubes) {
    if (cubes.empty()) throw std::invalid_argument("reducing_characteristic: empty cube list");
    MatrixWeightField big = tensor_weight(weights);
    std::vector<MatrixWeightField> inverses;
    for (const auto* w : weights) inverses.push_back(w->inverse());
    double q = cfg.q.value();
    ReducingCharacteristic out;
    for (const Cube& qc : cubes) {
        auto aq = reducing_cache().get(big, qc, q);
        std::vector<Eigen::MatrixXd> factors;
        double slack = aq->upper_slack;
        for (int j = 0; j < cfg.m(); ++j) {
            auto aj = reducing_cache().get(inverses[j], qc, cfg.t[j].value());
            factors.push_back(aj->a);
            slack = std::max(slack, aj->upper_slack);
        }
        double value = op_norm(Eigen::MatrixXd(aq->a * tensor_matrix(factors)));
        if (value > out.value) {
            out.value = value;
            out.slack = slack;
        }
    }
    return out;
}

double scalar_characteristic(const std::vector<const ScalarField*>& w, const std::vector<double>& p,
                             const Cube& q) {
    if (w.empty() || w.size() != p.size())
        throw std::invalid_argument("scalar_characteristic: weight/exponent arity mismatch");
    auto cc = cube_cells(w.front()->layout, q);
    double inv_p = 0.0;
    for (double pj : p) inv_p += std::isinf(pj) ? 0.0 : 1.0 / pj;
    double ptot = inv_p == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / inv_p;

    std::vector<double> prod(cc.cells.size(), 1.0);
    double value = 1.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        std::vector<double> vals(cc.cells.size());
        for (std::size_t i = 0; i < cc.cells.size(); ++i) {
            double v = w[j]->at(cc.cells[i]);
            if (!(v > 0)) throw std::domain_error("scalar_characteristic: weights must be positive");
            vals[i] = v;
            prod[i] *= v;
        }
        double pj = p[j];
        double dual = std::isinf(pj) ? 1.0 : (pj == 1.0 ? std::numeric_limits<double>::infinity()
                                                        : pj / (pj - 1.0));
        value /= power_average(vals, cc.weights, -dual);
    }
    value *= power_average(prod, cc.weights, ptot);
    return value;
}

double averaging_norm_p2(const MatrixWeightField& w, const Cube& q) {
    auto cc = cube_cells(w.layout, q);
    const int n = w.n;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < cc.cells.size(); ++i) {
        const Eigen::MatrixXd& m = w.at(cc.cells[i]);
        const Eigen::MatrixXd& mi = w.inv_at(cc.cells[i]);
        g += cc.weights[i] * (m * m);
        h += cc.weights[i] * (mi * mi);
    }
    auto sqrt_spd = [](const Eigen::MatrixXd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        return Eigen::MatrixXd(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                               es.eigenvectors().transpose());
    };
    return op_norm(Eigen::MatrixXd(sqrt_spd(g) * sqrt_spd(h)));
}

namespace {

// Machinery for the certified T_Q lower bound: all candidate values are
// ratios attained by explicit piecewise-constant inputs.
struct OracleBlock {
    double pj;
    int n;
    std::vector<const Eigen::MatrixXd*> w;     // W_j on the cube cells
    std::vector<const Eigen::MatrixXd*> winv;  // inverses
    const std::vector<double>* weights;        // cell fractions
    Eigen::MatrixXd h;                         // avg W^{-2} (p = 2 closed form)

    // Hoelder-aligned minimal-norm field with mean u(lambda); returns
    // {u, norm}.
    std::pair<Eigen::VectorXd, double> aligned(const Eigen::VectorXd& lambda) const {
        const std::size_t k = w.size();
        Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
        if (pj == 1.0) {
            // concentrate on the cell where |W v| is smallest
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < k; ++i) best = std::min(best, ((*w[i]) * lambda).norm());
            return {lambda, best};
        }
        if (std::isinf(pj)) {
            for (std::size_t i = 0; i < k; ++i) {
                Eigen::VectorXd wl = (*winv[i]) * lambda;
                double norm = wl.norm();
                if (norm <= 0) continue;
                u += (*this->weights)[i] * ((*winv[i]) * (wl / norm));
            }
            return {u, 1.0};
        }
        double dual = pj / (pj - 1.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            Eigen::VectorXd wl = (*winv[i]) * lambda;
            double norm = wl.norm();
            acc += (*this->weights)[i] * std::pow(norm, dual);
            if (norm > 0) u += (*this->weights)[i] * std::pow(norm, dual - 2.0) * ((*winv[i]) * wl);
        }
        return {u, std::pow(acc, 1.0 / pj)};
    }
};

}  // namespace

double averaging_norm_oracle(const std::vector<const MatrixWeightField*>& weights,
                             const std::vector<double>& p, const Cube& q, const OracleOptions& opts) {
    const int m = int(weights.size());
    if (m == 0 || p.size() != weights.size())
        throw std::invalid_argument("averaging_norm_oracle: weight/exponent arity mismatch");
    for (double pj : p)
        if (!(pj >= 1.0)) throw std::invalid_argument("averaging_norm_oracle: requires p_j in [1, inf]");
    auto cc = cube_cells(weights.front()->layout, q);
    const std::size_t k = cc.cells.size();
    double inv_p = 0.0;
    for (double pj : p) inv_p += std::isinf(pj) ? 0.0 : 1.0 / pj;
    double ptot = inv_p == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / inv_p;

    std::vector<OracleBlock> blocks(m);
    for (int j = 0; j < m; ++j) {
        blocks[j].pj = p[j];
        blocks[j].n = weights[j]->n;
        blocks[j].weights = &cc.weights;
        for (std::size_t i = 0; i < k; ++i) {
            blocks[j].w.push_back(&weights[j]->at(cc.cells[i]));
            blocks[j].winv.push_back(&weights[j]->inv_at(cc.cells[i]));
        }
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(blocks[j].n, blocks[j].n);
        for (std::size_t i = 0; i < k; ++i)
            h += cc.weights[i] * ((*blocks[j].winv[i]) * (*blocks[j].winv[i]));
        blocks[j].h = h;
    }

    // numerator |1_Q tensor(u)|_{L^p avg}: elementary tensors have
    // |W(x)(u_1 (x) ... (x) u_m)| = prod_j |W_j(x) u_j|
    std::vector<double> cellvals(k);
    auto numerator = [&](const std::vector<Eigen::VectorXd>& u) {
        for (std::size_t i = 0; i < k; ++i) {
            double prod = 1.0;
            for (int j = 0; j < m; ++j) prod *= ((*blocks[j].w[i]) * u[j]).norm();
            cellvals[i] = prod;
        }
        return power_average(cellvals, cc.weights, ptot);
    };

    double best = 0.0;

    // Rank-one sweep: scalar characteristic of |W_j u_j| over sampled
    // direction tuples (exact scalar closed form, attained at grid scale).
    {
        std::vector<std::vector<Eigen::VectorXd>> tuples;
        Rng rng(opts.seed ^ 0x0a11ce5ULL);
        for (int trial = 0; trial < opts.direction_samples; ++trial) {
            std::vector<Eigen::VectorXd> u(m);
            for (int j = 0; j < m; ++j) u[j] = rng.unit_vector(blocks[j].n);
            tuples.push_back(std::move(u));
        }
        for (int j = 0; j < m; ++j) {
            // axis directions
            for (int a = 0; a < blocks[j].n; ++a) {
                std::vector<Eigen::VectorXd> u(m);
                for (int i = 0; i < m; ++i) u[i] = Eigen::VectorXd::Unit(blocks[i].n, std::min(a, blocks[i].n - 1));
                tuples.push_back(std::move(u));
            }
        }
        if (opts.extra_directions)
            for (const auto& u : *opts.extra_directions) tuples.push_back(u);
        std::vector<ScalarField> fields(m);
        std::vector<const ScalarField*> field_ptrs(m);
        for (const auto& u : tuples) {
            bool ok = true;
            for (int j = 0; j < m; ++j) {
                Eigen::ArrayXd vals(weights[j]->layout.ncells());
                vals.setOnes();
                for (std::size_t i = 0; i < k; ++i) vals[cc.cells[i]] = ((*blocks[j].w[i]) * u[j]).norm();
                if ((vals <= 0.0).any()) ok = false;
                fields[j] = ScalarField(weights[j]->layout, vals);
                field_ptrs[j] = &fields[j];
            }
            if (ok) best = std::max(best, scalar_characteristic(field_ptrs, p, q));
        }
    }

    // Alternating ascent over Hoelder-aligned fields.
    Rng rng(opts.seed);
    for (int restart = 0; restart < opts.restarts; ++restart) {
        std::vector<Eigen::VectorXd> u(m);
        std::vector<double> nu(m, 1.0);
        for (int j = 0; j < m; ++j) {
            auto [uj, nuj] = blocks[j].aligned(rng.unit_vector(blocks[j].n));
            u[j] = uj;
            nu[j] = nuj;
        }
        auto value = [&]() {
            double denom = 1.0;
            for (int j = 0; j < m; ++j) denom *= nu[j];
            return numerator(u) / denom;
        };
        double cur = value();
        for (int sweep = 0; sweep < 8; ++sweep) {
            bool improved = false;
            for (int j = 0; j < m; ++j) {
                // candidate dual directions: net + random + p=2 top pair
                std::vector<Eigen::VectorXd> lambdas = direction_net(blocks[j].n, 16);
                for (int t = 0; t < 8; ++t) lambdas.push_back(rng.unit_vector(blocks[j].n));
                for (const auto& lambda : lambdas) {
                    auto [uj, nuj] = blocks[j].aligned(lambda);
                    if (!(nuj > 0) || !uj.allFinite()) continue;
                    Eigen::VectorXd old_u = u[j];
                    double old_nu = nu[j];
                    u[j] = uj;
                    nu[j] = nuj;
                    double cand = value();
                    if (cand > cur * (1 + 1e-12)) {
                        cur = cand;
                        improved = true;
                    } else {
                        u[j] = old_u;
                        nu[j] = old_nu;
                    }
                }
            }
            if (!improved) break;
        }
        best = std::max(best, cur);
    }

    // m = 1, p = 2 has an exact optimum (generalized singular pair), attained
    // by the aligned field of the top eigenvector.
    if (m == 1 && p[0] == 2.0) best = std::max(best, averaging_norm_p2(*weights[0], q));
    return best;
}

double fujii_wilson(const ScalarField& w, const Cube& q0) {
    const GridLayout& layout = w.layout;
    if (!layout.aligned(q0)) throw std::invalid_argument("fujii_wilson: cube not grid-aligned");
    double wq = cube_integral(w, q0);
    if (!(wq > 0)) throw std::domain_error("fujii_wilson: weight has zero mass on the cube");

    // Bottom-up dyadic sweep of D(Q0) down to grid resolution: every cell
    // carries the maximum of the averages of its dyadic ancestors within Q0.
    double integral = 0.0;
    double cellvol = layout.cell_volume_d();
    struct Frame {
        Cube cube;
        double running_max;
    };
    std::vector<Frame> stack{{q0, 0.0}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        double avg = cube_average(w, f.cube);
        double running = std::max(f.running_max, avg);
        if (f.cube.side == layout.cell_side()) {
            integral += running * cellvol;
        } else {
            for (auto& child : f.cube.children()) stack.push_back({child, running});
        }
    }
    return integral / wq;
}

}  // namespace mwh
