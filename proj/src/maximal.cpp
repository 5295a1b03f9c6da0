#include "mwh/maximal.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace mwh {

FamilyIncidence::FamilyIncidence(const GridLayout& layout, std::vector<Cube> family)
    : cubes(std::move(family)), containing(layout.ncells()) {
    for (int qi = 0; qi < int(cubes.size()); ++qi) {
        for (std::int64_t cell : layout.cells_in(cubes[qi])) containing[cell].push_back(qi);
    }
}

namespace {

struct CubeAverages {
    std::vector<std::int64_t> cells;
    std::vector<double> weights;  // normalized fractions of |Q| covered
};

CubeAverages cube_support(const GridLayout& layout, const Cube& q) {
    CubeAverages out;
    Rational covered(0);
    for (const auto& [cell, vol] : layout.cells_meeting(q)) covered = covered + vol;
    for (const auto& [cell, vol] : layout.cells_meeting(q)) {
        out.cells.push_back(cell);
        out.weights.push_back((vol / covered).value());
    }
    return out;
}

}  // namespace

ScalarField eta_maximal(const ScalarField& f, double eta, const std::vector<Cube>& cubes) {
    if (!(eta > 0)) throw std::invalid_argument("eta_maximal: eta must be positive");
    if (cubes.empty()) throw std::invalid_argument("eta_maximal: empty cube family");
    FamilyIncidence inc(f.layout, cubes);
    ScalarField out = ScalarField::zero(f.layout);
    std::vector<CubeAverages> per_cube;
    std::vector<double> averages(cubes.size());
    for (std::size_t qi = 0; qi < cubes.size(); ++qi) {
        auto cc = cube_support(f.layout, cubes[qi]);
        std::vector<double> vals(cc.cells.size());
        for (std::size_t i = 0; i < cc.cells.size(); ++i) vals[i] = std::abs(f.at(cc.cells[i]));
        averages[qi] = power_average(vals, cc.weights, eta);
    }
    for (std::int64_t cell = 0; cell < f.layout.ncells(); ++cell) {
        double m = 0.0;
        for (int qi : inc.containing[cell]) m = std::max(m, averages[qi]);
        out.values[cell] = m;
    }
    return out;
}

ScalarField multilinear_maximal(const std::vector<const ScalarField*>& f, const std::vector<Cube>& cubes) {
    if (f.empty()) throw std::invalid_argument("multilinear_maximal: empty tuple");
    if (cubes.empty()) throw std::invalid_argument("multilinear_maximal: empty cube family");
    const GridLayout& layout = f.front()->layout;
    FamilyIncidence inc(layout, cubes);
    std::vector<double> averages(cubes.size(), 1.0);
    for (std::size_t qi = 0; qi < cubes.size(); ++qi) {
        double prod = 1.0;
        for (const auto* fj : f) prod *= cube_integral(ScalarField(layout, fj->values.abs()), cubes[qi]) /
                                          cubes[qi].volume_d();
        averages[qi] = prod;
    }
    ScalarField out = ScalarField::zero(layout);
    for (std::int64_t cell = 0; cell < layout.ncells(); ++cell) {
        double m = 0.0;
        for (int qi : inc.containing[cell]) m = std::max(m, averages[qi]);
        out.values[cell] = m;
    }
    return out;
}

namespace {

// Shared sweep for the two Christ-Goldberg style operators: value_j(x, Q) =
// <h_j(x, y)^{r_j}>_{Q, y}^{1/r_j} where h_j(x, y) is supplied per cell pair.
template <typename PairNorm>
ScalarField weighted_sweep(const GridLayout& layout, int m, const std::vector<double>& r,
                           const std::vector<Cube>& cubes, PairNorm&& pair_norm) {
    FamilyIncidence inc(layout, cubes);
    std::vector<CubeAverages> support;
    support.reserve(cubes.size());
    for (const Cube& q : cubes) support.push_back(cube_support(layout, q));
    ScalarField out = ScalarField::zero(layout);
    std::vector<double> vals;
    for (std::int64_t x = 0; x < layout.ncells(); ++x) {
        double best = 0.0;
        for (int qi : inc.containing[x]) {
            const auto& cc = support[qi];
            double prod = 1.0;
            for (int j = 0; j < m; ++j) {
                vals.resize(cc.cells.size());
                for (std::size_t i = 0; i < cc.cells.size(); ++i) vals[i] = pair_norm(j, x, cc.cells[i]);
                prod *= power_average(vals, cc.weights, r[j]);
            }
            best = std::max(best, prod);
        }
        out.values[x] = best;
    }
    return out;
}

}  // namespace

ScalarField weighted_maximal(const std::vector<const VectorField*>& f,
                             const std::vector<const MatrixWeightField*>& w, const std::vector<double>& r,
                             const std::vector<Cube>& cubes) {
    const int m = int(f.size());
    if (m == 0 || w.size() != f.size() || r.size() != f.size())
        throw std::invalid_argument("weighted_maximal: arity mismatch");
    const GridLayout& layout = f.front()->layout;
    for (const auto* fj : f)
        if (!(fj->layout == layout)) throw std::invalid_argument("weighted_maximal: grid mismatch");
    return weighted_sweep(layout, m, r, cubes, [&](int j, std::int64_t x, std::int64_t y) {
        return (w[j]->at(x) * f[j]->at(y)).norm();
    });
}

ScalarField weighted_maximal_bodies(const std::vector<const BodyField*>& f,
                                    const std::vector<const MatrixWeightField*>& w,
                                    const std::vector<double>& r, const std::vector<Cube>& cubes) {
    const int m = int(f.size());
    if (m == 0 || w.size() != f.size() || r.size() != f.size())
        throw std::invalid_argument("weighted_maximal_bodies: arity mismatch");
    const GridLayout& layout = f.front()->layout;
    // |W F| = sup_{u in F} |W u| = norm of the image body W * F
    return weighted_sweep(layout, m, r, cubes, [&](int j, std::int64_t x, std::int64_t y) {
        const SymmetricConvexBody& body = f[j]->at(y);
        const Eigen::MatrixXd& wx = w[j]->at(x);
        if (body.tag == SymmetricConvexBody::Tag::Ellipsoid)
            return op_norm(Eigen::MatrixXd(wx * body.ellipsoid_a));
        if (auto verts = vertex_points(body)) {
            double m2 = 0.0;
            for (const auto& p : *verts) m2 = std::max(m2, (wx * p).norm());
            return m2;
        }
        double m2 = 0.0;
        for (const auto& v : direction_net(w[j]->n, default_net_size(w[j]->n)))
            m2 = std::max(m2, support(body, wx.transpose() * v));
        return m2;
    });
}

ScalarField auxiliary_maximal(const std::vector<const VectorField*>& f,
                              const std::vector<const MatrixWeightField*>& w, const std::vector<double>& r,
                              const std::vector<double>& t, const std::vector<Cube>& cubes) {
    const int m = int(f.size());
    if (m == 0 || w.size() != f.size() || r.size() != f.size() || t.size() != f.size())
        throw std::invalid_argument("auxiliary_maximal: arity mismatch");
    const GridLayout& layout = f.front()->layout;
    FamilyIncidence inc(layout, cubes);
    std::vector<CubeAverages> support;
    std::vector<std::vector<Eigen::MatrixXd>> inv_reducers(cubes.size());
    for (std::size_t qi = 0; qi < cubes.size(); ++qi) {
        support.push_back(cube_support(layout, cubes[qi]));
        for (int j = 0; j < m; ++j) {
            auto red = reducing_cache().get(w[j]->inverse(), cubes[qi], t[j]);
            inv_reducers[qi].push_back(red->inverse());
        }
    }
    ScalarField out = ScalarField::zero(layout);
    std::vector<double> vals;
    for (std::int64_t x = 0; x < layout.ncells(); ++x) {
        double best = 0.0;
        for (int qi : inc.containing[x]) {
            const auto& cc = support[qi];
            double prod = 1.0;
            for (int j = 0; j < m; ++j) {
                vals.resize(cc.cells.size());
                for (std::size_t i = 0; i < cc.cells.size(); ++i)
                    vals[i] = (inv_reducers[qi][j] * f[j]->at(cc.cells[i])).norm();
                prod *= power_average(vals, cc.weights, r[j]);
            }
            best = std::max(best, prod);
        }
        out.values[x] = best;
    }
    return out;
}

double ConvexBodyMaximal::support_at(std::int64_t cell, const Eigen::VectorXd& v) const {
    double h = 0.0;
    for (int gi : cell_generators_[std::size_t(cell)]) h = std::max(h, generators_[std::size_t(gi)].support(space_, v));
    return h;
}

SymmetricConvexBody ConvexBodyMaximal::hull_at(std::int64_t cell, int directions) const {
    const int n = space_.dim();
    if (directions <= 0) directions = default_net_size(n);
    std::vector<Eigen::VectorXd> points;
    if (cell_generators_[std::size_t(cell)].empty()) return make_point(Eigen::VectorXd::Zero(n));
    auto net = direction_net(n, directions);
    for (int gi : cell_generators_[std::size_t(cell)]) {
        const ProductGenerator& g = generators_[std::size_t(gi)];
        points.push_back(g.witness);
        for (const auto& v : net) {
            // boundary samples of the product body in the net directions
            double h = g.support(space_, v);
            if (h > 0) points.push_back(h * v / v.squaredNorm());
        }
    }
    return make_hull(std::move(points));
}

double ConvexBodyMaximal::norm_at(std::int64_t cell) const {
    double best = 0.0;
    for (int gi : cell_generators_[std::size_t(cell)]) {
        const ProductGenerator& g = generators_[std::size_t(gi)];
        double prod = 1.0;
        for (const auto& b : g.factors) prod *= body_norm(b);
        best = std::max(best, prod);
    }
    return best;
}

bool ConvexBodyMaximal::contains_at(std::int64_t cell, const Eigen::VectorXd& u, double tol) const {
    auto net = direction_net(space_.dim(), default_net_size(space_.dim()));
    double unorm = u.norm();
    if (unorm > 0) net.push_back(u / unorm);
    for (const auto& v : net) {
        if (u.dot(v) > support_at(cell, v) * (1.0 + tol) + 1e-14 * unorm) return false;
    }
    return true;
}

namespace {

ConvexBodyMaximal build_maximal(const GridLayout& layout, const std::vector<int>& dims,
                                const std::vector<Cube>& cubes,
                                const std::function<SymmetricConvexBody(int, const Cube&)>& average,
                                const std::function<Eigen::VectorXd(int, const Cube&)>& center) {
    const int m = int(dims.size());
    TensorSpace space(dims);
    std::vector<ProductGenerator> generators;
    generators.reserve(cubes.size());
    for (const Cube& q : cubes) {
        ProductGenerator gen;
        std::vector<Eigen::VectorXd> centers;
        for (int j = 0; j < m; ++j) {
            gen.factors.push_back(average(j, q));
            centers.push_back(center(j, q));
        }
        gen.witness = tensor_vector(centers);
        gen.cache_vertices();
        generators.push_back(std::move(gen));
    }
    FamilyIncidence inc(layout, cubes);
    std::vector<std::vector<int>> cell_generators(layout.ncells());
    for (std::int64_t cell = 0; cell < layout.ncells(); ++cell)
        cell_generators[cell] = inc.containing[cell];
    return ConvexBodyMaximal(layout, space, std::move(generators), std::move(cell_generators));
}

}  // namespace

ConvexBodyMaximal convex_body_maximal(const std::vector<const BodyField*>& f, const std::vector<Cube>& cubes) {
    if (f.empty() || cubes.empty()) throw std::invalid_argument("convex_body_maximal: empty input");
    const GridLayout& layout = f.front()->layout;
    std::vector<int> dims;
    for (const auto* fj : f) dims.push_back(fj->cells.front().n);
    return build_maximal(
        layout, dims, cubes, [&](int j, const Cube& q) { return aumann_average(*f[j], q); },
        [&](int j, const Cube& q) {
            // selection witness: cellwise support argmax along e_1, averaged
            auto cc = cube_support(layout, q);
            int nj = f[j]->cells.front().n;
            Eigen::VectorXd c = Eigen::VectorXd::Zero(nj);
            Eigen::VectorXd e1 = Eigen::VectorXd::Unit(nj, 0);
            for (std::size_t i = 0; i < cc.cells.size(); ++i)
                c += cc.weights[i] * support_argmax(f[j]->at(cc.cells[i]), e1);
            return c;
        });
}

ConvexBodyMaximal convex_body_maximal(const std::vector<const VectorField*>& f, const std::vector<Cube>& cubes) {
    if (f.empty() || cubes.empty()) throw std::invalid_argument("convex_body_maximal: empty input");
    const GridLayout& layout = f.front()->layout;
    std::vector<int> dims;
    for (const auto* fj : f) dims.push_back(fj->dim());
    return build_maximal(
        layout, dims, cubes,
        [&](int j, const Cube& q) {
            // <K(f_j)>_Q is the zonotope with generators w_x f_j(x)
            auto cc = cube_support(layout, q);
            std::vector<Eigen::VectorXd> gens;
            for (std::size_t i = 0; i < cc.cells.size(); ++i)
                gens.push_back(cc.weights[i] * f[j]->at(cc.cells[i]));
            return make_zonotope(gens);
        },
        [&](int j, const Cube& q) { return cube_average(*f[j], q); });
}

double weak_norm(const ConvexBodyMaximal& f, const MatrixWeightField& w, double p,
                 const std::vector<Eigen::VectorXd>& candidates, double tol) {
    std::vector<Eigen::VectorXd> all = candidates;
    // generator witnesses are selections of the maximal function
    std::vector<char> seen_gen;
    for (std::int64_t cell = 0; cell < f.layout().ncells(); ++cell) {
        for (int gi : f.generators_at(cell)) {
            if (int(seen_gen.size()) <= gi) seen_gen.resize(gi + 1, 0);
            if (!seen_gen[gi]) {
                seen_gen[gi] = 1;
                all.push_back(f.generator(gi).witness);
            }
        }
    }
    // shared net support table: support[cell][dir]
    const int n = f.space().dim();
    auto net = direction_net(n, default_net_size(n));
    std::vector<std::vector<double>> table(f.layout().ncells(), std::vector<double>(net.size()));
    for (std::int64_t cell = 0; cell < f.layout().ncells(); ++cell)
        for (std::size_t k = 0; k < net.size(); ++k) table[cell][k] = f.support_at(cell, net[k]);

    double vol = f.layout().cell_volume_d();
    double best = 0.0;
    for (const auto& u : all) {
        double unorm = u.norm();
        if (unorm == 0.0) continue;
        Eigen::VectorXd udir = u / unorm;
        double acc = 0.0;
        double sup = 0.0;
        for (std::int64_t cell = 0; cell < f.layout().ncells(); ++cell) {
            bool inside = u.dot(udir) <= f.support_at(cell, udir) * (1.0 + tol) + 1e-14 * unorm;
            for (std::size_t k = 0; inside && k < net.size(); ++k)
                inside = u.dot(net[k]) <= table[cell][k] * (1.0 + tol) + 1e-14 * unorm;
            if (!inside) continue;
            double wn = (w.at(cell) * u).norm();
            if (std::isinf(p)) sup = std::max(sup, wn);
            else acc += std::pow(wn, p) * vol;
        }
        best = std::max(best, std::isinf(p) ? sup : std::pow(acc, 1.0 / p));
    }
    return best;
}

double weak_norm(const BodyField& f, const MatrixWeightField& w, double p,
                 const std::vector<Eigen::VectorXd>& candidates, double tol) {
    double vol = f.layout.cell_volume_d();
    double best = 0.0;
    for (const auto& u : candidates) {
        if (u.norm() == 0.0) continue;
        double acc = 0.0;
        double sup = 0.0;
        for (std::int64_t cell = 0; cell < f.layout.ncells(); ++cell) {
            if (!contains(f.at(cell), u, tol)) continue;
            double wn = (w.at(cell) * u).norm();
            if (std::isinf(p)) sup = std::max(sup, wn);
            else acc += std::pow(wn, p) * vol;
        }
        best = std::max(best, std::isinf(p) ? sup : std::pow(acc, 1.0 / p));
    }
    return best;
}

MaximalSparseResult maximal_sparse_dominate(const std::vector<const VectorField*>& f,
                                            const std::vector<Cube>& family) {
    const int m = int(f.size());
    if (m == 0 || family.empty()) throw std::invalid_argument("maximal_sparse_dominate: empty input");
    const GridLayout& layout = f.front()->layout;
    int n = 1;
    for (const auto* fj : f) n *= fj->dim();
    const double threshold = std::pow(2.0 * n, m);

    // signed component averages <f_j, e>_Q and absolute averages <|<f_j, e>|>_Q
    auto signed_avg = [&](int j, const Cube& q, const Eigen::VectorXd& e) {
        return cube_average(*f[j], q).dot(e);
    };
    auto abs_avg = [&](int j, const Cube& q, const Eigen::VectorXd& e) {
        auto cc = cube_support(layout, q);
        double acc = 0.0;
        for (std::size_t i = 0; i < cc.cells.size(); ++i)
            acc += cc.weights[i] * std::abs(f[j]->at(cc.cells[i]).dot(e));
        return acc;
    };

    // maximal cubes of the family
    auto maximal_of = [&](const std::vector<int>& idx) {
        std::vector<int> out;
        for (int a : idx) {
            bool top = true;
            for (int b : idx) {
                if (a != b && family[b].contains(family[a]) && !(family[b] == family[a])) {
                    top = false;
                    break;
                }
            }
            if (top) out.push_back(a);
        }
        return out;
    };

    std::vector<int> all(family.size());
    for (int i = 0; i < int(family.size()); ++i) all[i] = i;
    std::vector<int> current = maximal_of(all);
    std::vector<int> selected;

    while (!current.empty()) {
        std::vector<int> next;
        for (int q0 : current) {
            selected.push_back(q0);
            // John basis of each factor average (zonotope)
            std::vector<std::vector<Eigen::VectorXd>> bases(m);
            for (int j = 0; j < m; ++j) {
                auto cc = cube_support(layout, family[q0]);
                std::vector<Eigen::VectorXd> gens;
                for (std::size_t i = 0; i < cc.cells.size(); ++i)
                    gens.push_back(cc.weights[i] * f[j]->at(cc.cells[i]));
                JohnEllipsoid je = john_ellipsoid(make_zonotope(gens));
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(je.a);
                for (int k = 0; k < f[j]->dim(); ++k) bases[j].push_back(es.eigenvectors().col(k));
            }
            // stopping children per tensor basis vector, then maximal union
            std::vector<int> inside;
            for (int qi : all) {
                if (qi != q0 && family[q0].contains(family[qi]) && !(family[qi] == family[q0]))
                    inside.push_back(qi);
            }
            std::vector<char> stopped(family.size(), 0);
            std::vector<int> combo(m, 0);
            while (true) {
                double base = 1.0;
                std::vector<Eigen::VectorXd> e(m);
                for (int j = 0; j < m; ++j) {
                    e[j] = bases[j][combo[j]];
                    base *= abs_avg(j, family[q0], e[j]);
                }
                for (int qi : inside) {
                    if (stopped[qi]) continue;
                    double prod = 1.0;
                    for (int j = 0; j < m; ++j) prod *= std::abs(signed_avg(j, family[qi], e[j]));
                    if (prod > threshold * base) stopped[qi] = 1;
                }
                int axis = m - 1;
                while (axis >= 0) {
                    if (++combo[axis] < int(bases[axis].size())) break;
                    combo[axis] = 0;
                    --axis;
                }
                if (axis < 0) break;
            }
            std::vector<int> hits;
            for (int qi : inside)
                if (stopped[qi]) hits.push_back(qi);
            for (int qi : maximal_of(hits)) next.push_back(qi);
        }
        current = std::move(next);
    }

    MaximalSparseResult out;
    for (int qi : selected) out.family.push_back(family[qi]);
    out.factor = std::pow(double(n), 1.5) * threshold;
    return out;
}

ScalarField auxiliary_n_operator(const Cube& q, const std::vector<Cube>& family,
                                 const std::vector<const MatrixWeightField*>& w,
                                 const std::vector<double>& t) {
    const GridLayout& layout = w.front()->layout;
    ScalarField out = ScalarField::zero(layout);
    std::vector<int> inside;
    for (int i = 0; i < int(family.size()); ++i)
        if (q.contains(family[i])) inside.push_back(i);
    for (int i : inside) {
        std::vector<Eigen::MatrixXd> reducers;
        for (std::size_t j = 0; j < w.size(); ++j)
            reducers.push_back(reducing_cache().get(w[j]->inverse(), family[i], t[j])->a);
        for (std::int64_t cell : layout.cells_in(family[i])) {
            double prod = 1.0;
            for (std::size_t j = 0; j < w.size(); ++j)
                prod *= op_norm(Eigen::MatrixXd(w[j]->at(cell) * reducers[j]));
            out.values[cell] = std::max(out.values[cell], prod);
        }
    }
    return out;
}

}  // namespace mwh
