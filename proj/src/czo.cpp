#include "mwh/czo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

#include "mwh/random.hpp"
#include "mwh/weights.hpp"

namespace mwh {

namespace {

double ipow(double base, int exp) {
    double out = 1.0;
    for (int i = 0; i < exp; ++i) out *= base;
    return out;
}

struct ScalarSupport {
    std::vector<std::int64_t> cells;
    std::vector<double> values;
    std::vector<std::vector<double>> centers;
};

ScalarSupport scalar_support(const ScalarField& f) {
    ScalarSupport out;
    for (std::int64_t c = 0; c < f.layout.ncells(); ++c) {
        if (f.values[c] != 0.0) {
            out.cells.push_back(c);
            out.values.push_back(f.values[c]);
            out.centers.push_back(f.layout.cell_center(c));
        }
    }
    return out;
}

// T(f_1,...,f_m)(x) for scalar fields: midpoint quadrature over support
// tuples, excluding tuples that touch the target cell.
double apply_scalar_at(const KernelSpec& k, const std::vector<const ScalarSupport*>& supp,
                       const GridLayout& layout, std::int64_t xcell) {
    const int m = k.m;
    const double vol = layout.cell_volume_d();
    std::vector<double> x = layout.cell_center(xcell);
    std::vector<std::size_t> idx(m, 0);
    for (int j = 0; j < m; ++j)
        if (supp[j]->cells.empty()) return 0.0;
    std::vector<std::vector<double>> y(m);
    double fullvol = ipow(vol, m);
    double acc = 0.0;
    while (true) {
        bool skip = false;
        double prod = 1.0;
        for (int j = 0; j < m; ++j) {
            if (supp[j]->cells[idx[j]] == xcell) {
                skip = true;
                break;
            }
            prod *= supp[j]->values[idx[j]];
        }
        if (!skip) {
            for (int j = 0; j < m; ++j) y[j] = supp[j]->centers[idx[j]];
            acc += k.eval(x, y) * prod;
        }
        int axis = m - 1;
        while (axis >= 0) {
            if (++idx[axis] < supp[axis]->cells.size()) break;
            idx[axis] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return acc * fullvol;
}

}  // namespace

double dini_integral(const std::function<double(double)>& omega, int level) {
    auto block = [&](int kblock, int lvl) {
        // integral of omega(e^{-x}) over [k ln2, (k+1) ln2], midpoint rule
        const int nodes = 1 << lvl;
        const double h = std::log(2.0) / nodes;
        double acc = 0.0;
        for (int j = 0; j < nodes; ++j) {
            double x = kblock * std::log(2.0) + (j + 0.5) * h;
            acc += omega(std::exp(-x)) * h;
        }
        return acc;
    };
    auto total = [&](int lvl) {
        // Divergence shows up as non-vanishing dyadic-window sums
        // sum_{k in [K, 2K)} block_k as K doubles; a Dini modulus drives
        // them to zero geometrically.
        double sum = 0.0;
        double prev_window = std::numeric_limits<double>::infinity();
        int slow = 0;
        double window = 0.0;
        int next_checkpoint = 16;
        for (int kb = 0; kb < 2048; ++kb) {
            double b = block(kb, lvl);
            sum += b;
            window += b;
            if (b < 1e-17 * std::max(sum, 1.0)) return sum;
            if (kb + 1 == next_checkpoint) {
                if (window > 0.6 * prev_window) ++slow;
                else slow = 0;
                if (slow >= 3) throw std::domain_error("dini_integral: modulus fails the Dini condition");
                prev_window = window;
                window = 0.0;
                next_checkpoint *= 2;
            }
        }
        throw std::domain_error("dini_integral: modulus fails the Dini condition");
    };
    double coarse = total(level);
    double fine = total(level + 1);
    // midpoint rule halves its O(h^2) error; extrapolate
    return fine + (fine - coarse) / 3.0;
}

double riesz_cmd(int m, int d) {
    return std::sqrt(double(d - 1) + double((2 * m + 1) * (2 * m + 1))) / double(m * (2 * m - 1));
}

KernelSpec riesz_kernel(int m, int d) {
    if (m < 1 || d < 1) throw std::invalid_argument("riesz_kernel: m, d >= 1 required");
    KernelSpec k;
    k.m = m;
    k.d = d;
    k.name = "riesz(m=" + std::to_string(m) + ",d=" + std::to_string(d) + ")";
    k.eval = [m, d](const std::vector<double>& x, const std::vector<std::vector<double>>& y) {
        double num = 0.0, den = 0.0;
        for (int j = 0; j < m; ++j) {
            num += x[0] - y[j][0];
            double dist2 = 0.0;
            for (int i = 0; i < d; ++i) dist2 += (x[i] - y[j][i]) * (x[i] - y[j][i]);
            den += std::sqrt(dist2);
        }
        return num / ipow(den, m * d + 1);
    };
    k.omega = [](double t) { return t; };
    k.doubling = 2.0;
    k.dini = 1.0;
    // gradient bound (md+2)/den^{md+1} against the pairwise-sum normalization
    k.c_k = (m * d + 2) * ipow(2.0 * (m + 1), m * d + 1);
    return k;
}

Eigen::VectorXd apply_czo(const KernelSpec& k, const std::vector<const VectorField*>& f, std::int64_t xcell) {
    const int m = k.m;
    if (int(f.size()) != m) throw std::invalid_argument("apply_czo: tuple arity mismatch");
    const GridLayout& layout = f.front()->layout;
    std::vector<int> dims;
    for (const auto* fj : f) dims.push_back(fj->dim());
    TensorSpace space(dims);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(space.dim());

    std::vector<std::vector<std::int64_t>> supp(m);
    for (int j = 0; j < m; ++j) {
        for (std::int64_t c = 0; c < layout.ncells(); ++c)
            if (f[j]->values.col(c).norm() != 0.0) supp[j].push_back(c);
        if (supp[j].empty()) return acc;
    }
    std::vector<double> x = layout.cell_center(xcell);
    std::vector<std::size_t> idx(m, 0);
    std::vector<std::vector<double>> y(m);
    std::vector<Eigen::VectorXd> vals(m);
    double fullvol = ipow(layout.cell_volume_d(), m);
    while (true) {
        bool skip = false;
        for (int j = 0; j < m; ++j) {
            if (supp[j][idx[j]] == xcell) {
                skip = true;
                break;
            }
        }
        if (!skip) {
            for (int j = 0; j < m; ++j) {
                y[j] = layout.cell_center(supp[j][idx[j]]);
                vals[j] = f[j]->at(supp[j][idx[j]]);
            }
            acc += k.eval(x, y) * tensor_vector(vals);
        }
        int axis = m - 1;
        while (axis >= 0) {
            if (++idx[axis] < supp[axis].size()) break;
            idx[axis] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return acc * fullvol;
}

VectorField apply_czo_field(const KernelSpec& k, const std::vector<const VectorField*>& f) {
    const GridLayout& layout = f.front()->layout;
    int n = 1;
    for (const auto* fj : f) n *= fj->dim();
    VectorField out = VectorField::zero(layout, n);
    for (std::int64_t c = 0; c < layout.ncells(); ++c) out.values.col(c) = apply_czo(k, f, c);
    return out;
}

double apply_czo_scalar(const KernelSpec& k, const std::vector<const ScalarField*>& f, std::int64_t xcell) {
    std::vector<ScalarSupport> supp;
    supp.reserve(f.size());
    for (const auto* fj : f) supp.push_back(scalar_support(*fj));
    std::vector<const ScalarSupport*> ptrs;
    for (const auto& s : supp) ptrs.push_back(&s);
    return apply_scalar_at(k, ptrs, f.front()->layout, xcell);
}

ScalarField apply_czo_scalar_field(const KernelSpec& k, const std::vector<const ScalarField*>& f) {
    const GridLayout& layout = f.front()->layout;
    std::vector<ScalarSupport> supp;
    supp.reserve(f.size());
    for (const auto* fj : f) supp.push_back(scalar_support(*fj));
    std::vector<const ScalarSupport*> ptrs;
    for (const auto& s : supp) ptrs.push_back(&s);
    ScalarField out = ScalarField::zero(layout);
    for (std::int64_t c = 0; c < layout.ncells(); ++c) out.values[c] = apply_scalar_at(k, ptrs, layout, c);
    return out;
}

ScalarField grand_maximal(const KernelSpec& k, const std::vector<const ScalarField*>& f,
                          const std::vector<Cube>& cubes, std::vector<int>* skipped) {
    const GridLayout& layout = f.front()->layout;
    ScalarField base = apply_czo_scalar_field(k, f);
    ScalarField out = ScalarField::zero(layout);
    for (int qi = 0; qi < int(cubes.size()); ++qi) {
        Cube triple = cubes[qi].tripled();
        if (!layout.box.contains(triple)) {
            if (skipped) skipped->push_back(qi);
            continue;
        }
        std::vector<ScalarField> restricted;
        std::vector<const ScalarField*> ptrs;
        for (const auto* fj : f) restricted.push_back(fj->restricted(triple));
        for (const auto& g : restricted) ptrs.push_back(&g);
        double val = 0.0;
        auto cells = layout.cells_in(cubes[qi]);
        for (std::int64_t xi : cells)
            val = std::max(val, std::abs(base.values[xi] - apply_czo_scalar(k, ptrs, xi)));
        for (std::int64_t xi : cells) out.values[xi] = std::max(out.values[xi], val);
    }
    return out;
}

ScalarField grand_maximal_localized(const KernelSpec& k, const std::vector<const ScalarField*>& f,
                                    const Cube& q0) {
    const GridLayout& layout = f.front()->layout;
    if (!layout.aligned(q0)) throw std::invalid_argument("grand_maximal_localized: cube not grid-aligned");
    // local truncation at 3Q0
    std::vector<ScalarField> f0;
    std::vector<const ScalarField*> f0p;
    for (const auto* fj : f) f0.push_back(fj->restricted(q0.tripled()));
    for (const auto& g : f0) f0p.push_back(&g);

    std::vector<ScalarSupport> base_supp;
    for (const auto& g : f0) base_supp.push_back(scalar_support(g));
    std::vector<const ScalarSupport*> base_ptrs;
    for (const auto& s : base_supp) base_ptrs.push_back(&s);

    ScalarField out = ScalarField::zero(layout);
    auto q0cells = layout.cells_in(q0);
    std::vector<double> base(layout.ncells(), 0.0);
    for (std::int64_t xi : q0cells) base[xi] = apply_scalar_at(k, base_ptrs, layout, xi);

    Rational ratio = q0.side / layout.cell_side();
    if (ratio.den() != 1 || (ratio.num() & (ratio.num() - 1)))
        throw std::invalid_argument("grand_maximal_localized: cube side not a binary multiple of cells");
    int sub_levels = 0;
    while ((std::int64_t(1) << sub_levels) < ratio.num()) ++sub_levels;
    for (const Cube& q : dyadic_subcubes(q0, sub_levels)) {
        std::vector<ScalarField> fq;
        std::vector<const ScalarField*> fqp;
        for (const auto& g : f0) fq.push_back(g.restricted(q.tripled()));
        for (const auto& g : fq) fqp.push_back(&g);
        std::vector<ScalarSupport> supp;
        for (const auto& g : fq) supp.push_back(scalar_support(g));
        std::vector<const ScalarSupport*> ptrs;
        for (const auto& s : supp) ptrs.push_back(&s);
        double val = 0.0;
        auto cells = layout.cells_in(q);
        for (std::int64_t xi : cells) val = std::max(val, std::abs(base[xi] - apply_scalar_at(k, ptrs, layout, xi)));
        for (std::int64_t xi : cells) out.values[xi] = std::max(out.values[xi], val);
    }
    return out;
}

ScalarField CzDecomposition::bad_sum() const {
    ScalarField out = ScalarField::zero(good.layout);
    for (const auto& b : bad) out.values += b.values;
    return out;
}

CzDecomposition cz_decompose(const ScalarField& f, double lambda) {
    if (!(lambda > 0)) throw std::invalid_argument("cz_decompose: lambda must be positive");
    const GridLayout& layout = f.layout;
    CzDecomposition out;
    out.lambda = lambda;
    out.good = f;

    ScalarField absf(layout, f.values.abs());
    std::deque<Cube> queue{layout.box};
    while (!queue.empty()) {
        Cube q = queue.front();
        queue.pop_front();
        double avg = cube_average(absf, q);
        if (avg > lambda) {
            out.cubes.push_back(q);
            continue;
        }
        if (q.side == layout.cell_side()) continue;
        for (auto& child : q.children()) queue.push_back(child);
    }
    for (const Cube& q : out.cubes) {
        double avg = cube_average(f, q);
        ScalarField b = ScalarField::zero(layout);
        for (std::int64_t c : layout.cells_in(q)) {
            b.values[c] = f.values[c] - avg;
            out.good.values[c] = avg;
        }
        out.bad.push_back(std::move(b));
    }
    return out;
}

namespace {

struct StoppingContext {
    const GridLayout* layout;
    double eps;
    int d;
    double density_threshold;  // 2^{-d-1}
    double measure_fraction;   // eps * 2^{-d-1}
};

// Exceptional set and stopping children for one scalar tuple on Q0: the
// least threshold constant meeting the measure budget is found by bisection,
// then the maximal dyadic subcubes with exceptional density > 2^{-d-1} are
// collected.
struct StoppingResult {
    std::vector<char> exceptional;  // cell mask over the layout
    double c1 = 0.0;
    bool aborted = false;
};

// Maximal dyadic strict subcubes of q0 whose exceptional density exceeds
// 2^{-d-1}.
void select_children(const GridLayout& layout, const Cube& q0, const std::vector<char>& mask,
                     double density_threshold, std::vector<Cube>& out) {
    if (q0.side == layout.cell_side()) return;
    double cellvol = layout.cell_volume_d();
    std::function<void(const Cube&)> walk = [&](const Cube& q) {
        double covered = 0.0;
        for (std::int64_t cell : layout.cells_in(q))
            if (mask[cell]) covered += cellvol;
        if (covered > density_threshold * q.volume_d()) {
            out.push_back(q);
            return;
        }
        if (q.side == layout.cell_side()) return;
        for (auto& child : q.children()) walk(child);
    };
    for (auto& child : q0.children()) walk(child);
}

StoppingResult stopping_set(const StoppingContext& ctx, const Cube& q0,
                            const std::vector<const ScalarField*>& f, const ScalarField& grand,
                            const std::vector<double>& avgs) {
    const GridLayout& layout = *ctx.layout;
    const int m = int(f.size());
    auto q0cells = layout.cells_in(q0);
    double prod_avg = 1.0;
    for (double a : avgs) prod_avg *= a;

    // Bisect the threshold constant against the stopping-children budget:
    // the selected children must keep the output family martingale
    // eps-sparse, so the lowest constant meeting sum |child| <= eps |Q0| is
    // used. (The per-node exceptional measure is reported alongside.)
    double budget = ctx.eps * q0.volume_d();
    double cellvol = layout.cell_volume_d();
    auto mask_for = [&](double c1, std::vector<char>& mask) {
        mask.assign(layout.ncells(), 0);
        for (std::int64_t cell : q0cells) {
            bool bad = grand.values[cell] > (c1 / ipow(ctx.eps, m)) * prod_avg;
            for (int j = 0; j < m && !bad; ++j)
                bad = std::abs(f[j]->values[cell]) > (c1 / ctx.eps) * avgs[j];
            if (bad) mask[cell] = 1;
        }
    };
    auto children_volume = [&](double c1) {
        std::vector<char> mask;
        mask_for(c1, mask);
        std::vector<Cube> children;
        select_children(layout, q0, mask, ctx.density_threshold, children);
        double total = 0.0;
        for (const Cube& q : children) total += q.volume_d();
        (void)cellvol;
        return total;
    };

    StoppingResult out;
    double hi = 1.0;
    int guard = 0;
    while (children_volume(hi) > budget) {
        hi *= 2.0;
        if (++guard > 80) {
            out.aborted = true;
            return out;
        }
    }
    double lo = 0.0;
    for (int it = 0; it < 40; ++it) {
        double mid = 0.5 * (lo + hi);
        if (children_volume(mid) > budget) lo = mid;
        else hi = mid;
    }
    out.c1 = hi;
    mask_for(hi, out.exceptional);
    return out;
}

}  // namespace

SparseDomination sparse_dominate(const KernelSpec& k, const std::vector<const ScalarField*>& f,
                                 const Cube& q0, double eps) {
    const int m = int(f.size());
    if (m != k.m) throw std::invalid_argument("sparse_dominate: tuple arity mismatch");
    const GridLayout& layout = f.front()->layout;
    const int d = layout.dim();
    StoppingContext ctx{&layout, eps, d, std::pow(2.0, -d - 1), eps * std::pow(2.0, -d - 1)};

    SparseDomination out;
    std::deque<std::pair<Cube, int>> queue{{q0, 0}};
    while (!queue.empty()) {
        auto [q, depth] = queue.front();
        queue.pop_front();
        out.base.push_back(q);
        out.depth = std::max(out.depth, depth);

        std::vector<ScalarField> fq;
        std::vector<const ScalarField*> fqp;
        for (const auto* fj : f) fq.push_back(fj->restricted(q.tripled()));
        for (const auto& g : fq) fqp.push_back(&g);
        std::vector<double> avgs;
        bool dead = false;
        for (const auto& g : fq) {
            double avg = cube_integral(ScalarField(layout, g.values.abs()), q.tripled()) / q.tripled().volume_d();
            avgs.push_back(avg);
            dead = dead || avg == 0.0;
        }
        if (dead) continue;

        ScalarField grand = grand_maximal_localized(k, fqp, q);
        StoppingResult stop = stopping_set(ctx, q, fqp, grand, avgs);
        out.threshold_c1 = std::max(out.threshold_c1, stop.c1);
        if (stop.aborted) {
            out.aborted = true;
            out.diagnostics = "measure budget not met on " + cube_key(q);
            break;
        }
        std::vector<Cube> children;
        select_children(layout, q, stop.exceptional, ctx.density_threshold, children);
        for (const Cube& child : children) queue.push_back({child, depth + 1});
    }

    for (const Cube& q : out.base) out.dilated.push_back(q.tripled());

    // Least scalar constant with pointwise domination on the grid.
    ScalarField tfull = apply_czo_scalar_field(k, f);
    double c = 0.0;
    for (std::int64_t cell : layout.cells_in(q0)) {
        double denom = 0.0;
        Cube cellcube = layout.cell(cell);
        for (const Cube& q : out.base) {
            Cube triple = q.tripled();
            if (!(Rational(0) < triple.intersection_volume(cellcube))) continue;
            if (!triple.contains(cellcube)) continue;
            double prod = 1.0;
            for (const auto* fj : f)
                prod *= cube_integral(ScalarField(layout, fj->values.abs()), triple) / triple.volume_d();
            denom += prod;
        }
        double num = std::abs(tfull.values[cell]);
        if (denom > 0) c = std::max(c, num / denom);
        else if (num > 1e-13) c = std::numeric_limits<double>::infinity();
    }
    out.constant = c;
    return out;
}

SparseDomination sparse_dominate_vector(const KernelSpec& k, const std::vector<const VectorField*>& f,
                                        const Cube& q0, double eps) {
    const int m = int(f.size());
    if (m != k.m) throw std::invalid_argument("sparse_dominate_vector: tuple arity mismatch");
    const GridLayout& layout = f.front()->layout;
    const int d = layout.dim();
    int n = 1;
    for (const auto* fj : f) n *= fj->dim();
    StoppingContext ctx{&layout, eps / n, d, std::pow(2.0, -d - 1), (eps / n) * std::pow(2.0, -d - 1)};

    SparseDomination out;
    std::deque<std::pair<Cube, int>> queue{{q0, 0}};
    while (!queue.empty()) {
        auto [q, depth] = queue.front();
        queue.pop_front();
        out.base.push_back(q);
        out.depth = std::max(out.depth, depth);

        Cube triple = q.tripled();
        std::vector<VectorField> fq;
        for (const auto* fj : f) fq.push_back(fj->restricted(triple));
        bool dead = true;
        for (const auto& g : fq) dead = dead && g.values.norm() == 0.0;
        if (dead) continue;

        // John basis of each factor average over 3Q
        std::vector<std::vector<Eigen::VectorXd>> bases(m);
        for (int j = 0; j < m; ++j) {
            std::vector<Eigen::VectorXd> gens;
            Rational covered(0);
            for (const auto& [cell, vol] : layout.cells_meeting(triple)) covered = covered + vol;
            for (const auto& [cell, vol] : layout.cells_meeting(triple))
                gens.push_back((vol / covered).value() * fq[j].at(cell));
            JohnEllipsoid je = john_ellipsoid(make_zonotope(gens));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(je.a);
            for (int a = 0; a < f[j]->dim(); ++a) bases[j].push_back(es.eigenvectors().col(a));
        }

        // union of per-component stopping families
        std::vector<Cube> children;
        std::vector<int> combo(m, 0);
        while (true) {
            std::vector<ScalarField> comp;
            std::vector<const ScalarField*> compp;
            std::vector<double> avgs;
            bool zero = false;
            for (int j = 0; j < m; ++j) {
                Eigen::ArrayXd vals(layout.ncells());
                for (std::int64_t c = 0; c < layout.ncells(); ++c)
                    vals[c] = fq[j].at(c).dot(bases[j][combo[j]]);
                comp.emplace_back(layout, vals);
                double avg = cube_integral(ScalarField(layout, vals.abs()), triple) / triple.volume_d();
                avgs.push_back(avg);
                zero = zero || avg == 0.0;
            }
            if (!zero) {
                for (const auto& g : comp) compp.push_back(&g);
                ScalarField grand = grand_maximal_localized(k, compp, q);
                StoppingResult stop = stopping_set(ctx, q, compp, grand, avgs);
                out.threshold_c1 = std::max(out.threshold_c1, stop.c1);
                if (stop.aborted) {
                    out.aborted = true;
                    out.diagnostics = "measure budget not met on " + cube_key(q);
                    break;
                }
                select_children(layout, q, stop.exceptional, ctx.density_threshold, children);
            }
            int axis = m - 1;
            while (axis >= 0) {
                if (++combo[axis] < int(bases[axis].size())) break;
                combo[axis] = 0;
                --axis;
            }
            if (axis < 0) break;
        }
        if (out.aborted) break;
        // keep maximal cubes of the union
        std::vector<Cube> maximal;
        for (const Cube& a : children) {
            bool top = true;
            for (const Cube& b : children) {
                if (!(a == b) && b.contains(a)) {
                    top = false;
                    break;
                }
            }
            bool dup = false;
            for (const Cube& b : maximal) dup = dup || (a == b);
            if (top && !dup) maximal.push_back(a);
        }
        for (const Cube& child : maximal) queue.push_back({child, depth + 1});
    }

    for (const Cube& q : out.base) out.dilated.push_back(q.tripled());

    // membership constant: gauge of T~(f)(x) in the convex sparse operator
    ConvexSparseOperator sparse_op = convex_sparse_operator(f, out.dilated);
    VectorField tfull = apply_czo_field(k, f);
    double c = 0.0;
    for (std::int64_t cell : layout.cells_in(q0)) {
        Eigen::VectorXd u = tfull.at(cell);
        if (u.norm() <= 1e-14) continue;
        c = std::max(c, sparse_op.gauge_at(cell, u));
    }
    out.constant = c;
    return out;
}

double ConvexSparseOperator::support_at(std::int64_t cell, const Eigen::VectorXd& v) const {
    double h = 0.0;
    for (int ti : cell_terms_[std::size_t(cell)]) h += terms_[std::size_t(ti)].support(space_, v);
    return h;
}

bool ConvexSparseOperator::contains_at(std::int64_t cell, const Eigen::VectorXd& u, double tol) const {
    auto net = direction_net(space_.dim(), default_net_size(space_.dim()));
    double unorm = u.norm();
    if (unorm > 0) net.push_back(u / unorm);
    for (const auto& v : net) {
        if (u.dot(v) > support_at(cell, v) * (1.0 + tol) + 1e-14 * unorm) return false;
    }
    return true;
}

double ConvexSparseOperator::gauge_at(std::int64_t cell, const Eigen::VectorXd& u) const {
    auto net = direction_net(space_.dim(), default_net_size(space_.dim()));
    double unorm = u.norm();
    if (unorm > 0) net.push_back(u / unorm);
    double gauge = 0.0;
    for (const auto& v : net) {
        double uv = u.dot(v);
        if (uv <= 0) continue;
        double h = support_at(cell, v);
        if (h <= 0) return std::numeric_limits<double>::infinity();
        gauge = std::max(gauge, uv / h);
    }
    return gauge;
}

ConvexSparseOperator convex_sparse_operator(const std::vector<const VectorField*>& f,
                                            const std::vector<Cube>& cubes) {
    const GridLayout& layout = f.front()->layout;
    std::vector<int> dims;
    for (const auto* fj : f) dims.push_back(fj->dim());
    TensorSpace space(dims);

    std::vector<ProductGenerator> terms;
    for (const Cube& q : cubes) {
        ProductGenerator gen;
        std::vector<Eigen::VectorXd> centers;
        for (std::size_t j = 0; j < f.size(); ++j) {
            std::vector<Eigen::VectorXd> gens;
            for (const auto& [cell, vol] : layout.cells_meeting(q))
                gens.push_back((vol.value() / q.volume_d()) * f[j]->at(cell));
            gen.factors.push_back(make_zonotope(gens));
            centers.push_back(cube_average(*f[j], q));
        }
        gen.witness = tensor_vector(centers);
        gen.cache_vertices();
        terms.push_back(std::move(gen));
    }

    std::vector<std::vector<int>> cell_terms(layout.ncells());
    for (int qi = 0; qi < int(cubes.size()); ++qi) {
        for (std::int64_t cell : layout.cells_in(cubes[qi])) cell_terms[cell].push_back(qi);
    }
    return ConvexSparseOperator(layout, space, std::move(terms), std::move(cell_terms));
}

NondegeneracyReport nondegeneracy_check(const KernelSpec& k, const GridLayout& layout, const Cube& q,
                                        double alpha, int trials, std::uint64_t seed) {
    const int m = k.m;
    const int d = k.d;
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("nondegeneracy_check: alpha in (0,1)");
    NondegeneracyReport out;
    out.c_md = riesz_cmd(m, d);
    Cube qprime = q;
    qprime.corner[0] = qprime.corner[0] + Rational(2 * m) * q.side;
    out.q_prime = qprime;
    if (!layout.box.contains(q) || !layout.box.contains(qprime))
        throw std::invalid_argument("nondegeneracy_check: cube geometry escapes the domain box");

    auto qcells = layout.cells_in(q);
    auto pcells = layout.cells_in(qprime);

    // (a) random factorizations h_1 ... h_m = 1_{Q'}
    Rng rng(seed);
    out.min_lower = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<ScalarField> h(m, ScalarField::zero(layout));
        for (std::int64_t cell : pcells) {
            std::vector<double> a(m);
            double mean = 0.0;
            for (int j = 0; j < m; ++j) {
                a[j] = (trial == 0) ? 0.0 : rng.uniform(-1.0, 1.0);
                mean += a[j];
            }
            mean /= m;
            for (int j = 0; j < m; ++j) h[j].values[cell] = std::exp(a[j] - mean);
        }
        std::vector<const ScalarField*> hp;
        for (const auto& g : h) hp.push_back(&g);
        for (std::int64_t cell : qcells) {
            double v = out.c_md * std::abs(apply_czo_scalar(k, hp, cell));
            out.min_lower = std::min(out.min_lower, v);
        }
    }

    // (b) residual kernel over all cell tuples
    double qvol_m = ipow(q.volume_d(), m);
    out.max_s_ratio = 0.0;
    std::vector<std::size_t> idx(m, 0);
    std::vector<std::vector<double>> y(m);
    for (std::int64_t x : pcells) {
        std::vector<double> xc = layout.cell_center(x);
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            for (int j = 0; j < m; ++j) y[j] = layout.cell_center(qcells[idx[j]]);
            double kv = k.eval(xc, y);
            double s = (1.0 / qvol_m - (1.0 - alpha) * out.c_md * kv) / alpha;
            out.max_s_ratio = std::max(out.max_s_ratio, std::abs(s) * qvol_m);
            int axis = m - 1;
            while (axis >= 0) {
                if (++idx[axis] < qcells.size()) break;
                idx[axis] = 0;
                --axis;
            }
            if (axis < 0) break;
        }
    }
    out.part_b_pass = out.max_s_ratio <= 1.0 + 1e-12;
    return out;
}

}  // namespace mwh
