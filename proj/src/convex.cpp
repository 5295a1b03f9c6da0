#include "mwh/convex.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mwh {

SymmetricConvexBody make_ellipsoid(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("make_ellipsoid: square matrix required");
    SymmetricConvexBody b;
    b.tag = SymmetricConvexBody::Tag::Ellipsoid;
    b.n = int(a.rows());
    b.ellipsoid_a = a;
    return b;
}

SymmetricConvexBody make_hull(std::vector<Eigen::VectorXd> points) {
    if (points.empty()) throw std::invalid_argument("make_hull: empty point list");
    SymmetricConvexBody b;
    b.tag = SymmetricConvexBody::Tag::Hull;
    b.n = int(points.front().size());
    for (const auto& p : points)
        if (int(p.size()) != b.n) throw std::invalid_argument("make_hull: dimension mismatch");
    b.hull_points = std::move(points);
    return b;
}

SymmetricConvexBody make_point(const Eigen::VectorXd& u) { return make_hull({u}); }

SymmetricConvexBody make_sum(std::vector<SymmetricConvexBody> bodies) {
    if (bodies.empty()) throw std::invalid_argument("make_sum: empty summand list");
    SymmetricConvexBody b;
    b.tag = SymmetricConvexBody::Tag::Sum;
    b.n = bodies.front().n;
    for (const auto& s : bodies)
        if (s.n != b.n) throw std::invalid_argument("make_sum: dimension mismatch");
    b.summands = std::move(bodies);
    return b;
}

SymmetricConvexBody make_scaled(double c, SymmetricConvexBody body) {
    if (c < 0) throw std::invalid_argument("make_scaled: negative factor");
    SymmetricConvexBody b;
    b.tag = SymmetricConvexBody::Tag::Scaled;
    b.n = body.n;
    b.scale = c;
    b.inner.push_back(std::move(body));
    return b;
}

SymmetricConvexBody make_zonotope(const std::vector<Eigen::VectorXd>& generators) {
    std::vector<SymmetricConvexBody> segments;
    segments.reserve(generators.size());
    for (const auto& g : generators) segments.push_back(make_point(g));
    if (segments.empty()) throw std::invalid_argument("make_zonotope: no generators");
    return segments.size() == 1 ? segments.front() : make_sum(std::move(segments));
}

SymmetricConvexBody unit_ball(int n) { return make_ellipsoid(Eigen::MatrixXd::Identity(n, n)); }

double support(const SymmetricConvexBody& body, const Eigen::VectorXd& v) {
    if (int(v.size()) != body.n) throw std::invalid_argument("support: dimension mismatch");
    switch (body.tag) {
        case SymmetricConvexBody::Tag::Ellipsoid:
            return (body.ellipsoid_a * v).norm();
        case SymmetricConvexBody::Tag::Hull: {
            double h = 0.0;
            for (const auto& p : body.hull_points) h = std::max(h, std::abs(p.dot(v)));
            return h;
        }
        case SymmetricConvexBody::Tag::Sum: {
            double h = 0.0;
            for (const auto& s : body.summands) h += support(s, v);
            return h;
        }
        case SymmetricConvexBody::Tag::Scaled:
            return body.scale * support(body.inner.front(), v);
    }
    return 0.0;
}

Eigen::VectorXd support_argmax(const SymmetricConvexBody& body, const Eigen::VectorXd& v) {
    switch (body.tag) {
        case SymmetricConvexBody::Tag::Ellipsoid: {
            Eigen::VectorXd av = body.ellipsoid_a * v;
            double norm = av.norm();
            if (norm < 1e-300) return Eigen::VectorXd::Zero(body.n);
            return body.ellipsoid_a * (av / norm);
        }
        case SymmetricConvexBody::Tag::Hull: {
            double best = -1.0;
            Eigen::VectorXd arg = Eigen::VectorXd::Zero(body.n);
            for (const auto& p : body.hull_points) {
                double d = p.dot(v);
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    arg = (d >= 0) ? p : Eigen::VectorXd(-p);
                }
            }
            return arg;
        }
        case SymmetricConvexBody::Tag::Sum: {
            Eigen::VectorXd arg = Eigen::VectorXd::Zero(body.n);
            for (const auto& s : body.summands) arg += support_argmax(s, v);
            return arg;
        }
        case SymmetricConvexBody::Tag::Scaled:
            return body.scale * support_argmax(body.inner.front(), v);
    }
    return Eigen::VectorXd::Zero(body.n);
}

int default_net_size(int n) { return std::max(200, 40 * n * n); }

std::vector<Eigen::VectorXd> direction_net(int n, int count) {
    std::vector<Eigen::VectorXd> net;
    if (n == 1) {
        net.push_back(Eigen::VectorXd::Ones(1));
        return net;
    }
    if (n == 2) {
        for (int k = 0; k < count; ++k) {
            double theta = M_PI * double(k) / double(count);
            Eigen::VectorXd v(2);
            v << std::cos(theta), std::sin(theta);
            net.push_back(v);
        }
    } else if (n == 3) {
        const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
        for (int k = 0; k < count; ++k) {
            double z = (k + 0.5) / double(count);  // hemisphere suffices by symmetry
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            double phi = 2.0 * M_PI * double(k) / golden;
            Eigen::VectorXd v(3);
            v << r * std::cos(phi), r * std::sin(phi), z;
            net.push_back(v);
        }
    } else {
        Rng rng(0x5eedbeefULL + std::uint64_t(n));
        for (int k = 0; k < count; ++k) net.push_back(rng.unit_vector(n));
    }
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[i] = 1.0;
        net.push_back(e);
    }
    return net;
}

namespace {

// ---- 2d polygon machinery (exact vertex enumeration) ----

std::vector<Eigen::Vector2d> hull2d(std::vector<Eigen::Vector2d> pts) {
    std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a == b; }),
              pts.end());
    if (pts.size() <= 2) return pts;
    auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Eigen::Vector2d> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

std::vector<Eigen::Vector2d> polygon_sum(const std::vector<Eigen::Vector2d>& a,
                                         const std::vector<Eigen::Vector2d>& b) {
    // Vertices of A+B lie among pairwise vertex sums.
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(a.size() * b.size());
    for (const auto& p : a)
        for (const auto& q : b) pts.push_back(p + q);
    return hull2d(std::move(pts));
}

}  // namespace

std::optional<std::vector<Eigen::Vector2d>> polygon2d(const SymmetricConvexBody& body) {
    if (body.n != 2) return std::nullopt;
    switch (body.tag) {
        case SymmetricConvexBody::Tag::Ellipsoid:
            return std::nullopt;
        case SymmetricConvexBody::Tag::Hull: {
            std::vector<Eigen::Vector2d> pts;
            for (const auto& p : body.hull_points) {
                pts.emplace_back(p[0], p[1]);
                pts.emplace_back(-p[0], -p[1]);
            }
            return hull2d(std::move(pts));
        }
        case SymmetricConvexBody::Tag::Sum: {
            std::optional<std::vector<Eigen::Vector2d>> acc;
            for (const auto& s : body.summands) {
                auto poly = polygon2d(s);
                if (!poly) return std::nullopt;
                acc = acc ? polygon_sum(*acc, *poly) : *poly;
            }
            return acc;
        }
        case SymmetricConvexBody::Tag::Scaled: {
            auto poly = polygon2d(body.inner.front());
            if (!poly) return std::nullopt;
            for (auto& p : *poly) p *= body.scale;
            return poly;
        }
    }
    return std::nullopt;
}

std::optional<std::vector<Eigen::VectorXd>> vertex_points(const SymmetricConvexBody& body, int cap) {
    if (body.n == 2) {
        auto poly = polygon2d(body);
        if (!poly) return std::nullopt;
        std::vector<Eigen::VectorXd> out;
        for (const auto& p : *poly) out.push_back(Eigen::Vector2d(p));
        if (out.empty()) out.push_back(Eigen::VectorXd::Zero(2));
        return out;
    }
    switch (body.tag) {
        case SymmetricConvexBody::Tag::Ellipsoid:
            return std::nullopt;
        case SymmetricConvexBody::Tag::Hull: {
            std::vector<Eigen::VectorXd> out;
            for (const auto& p : body.hull_points) {
                out.push_back(p);
                out.push_back(-p);
            }
            return out;
        }
        case SymmetricConvexBody::Tag::Scaled: {
            auto pts = vertex_points(body.inner.front(), cap);
            if (!pts) return std::nullopt;
            for (auto& p : *pts) p *= body.scale;
            return pts;
        }
        case SymmetricConvexBody::Tag::Sum: {
            std::vector<Eigen::VectorXd> acc{Eigen::VectorXd::Zero(body.n)};
            for (const auto& s : body.summands) {
                auto pts = vertex_points(s, cap);
                if (!pts) return std::nullopt;
                if (acc.size() * pts->size() > std::size_t(cap)) return std::nullopt;
                std::vector<Eigen::VectorXd> next;
                next.reserve(acc.size() * pts->size());
                for (const auto& a : acc)
                    for (const auto& p : *pts) next.push_back(a + p);
                acc = std::move(next);
            }
            return acc;
        }
    }
    return std::nullopt;
}

double body_norm(const SymmetricConvexBody& body, int* used_directions) {
    if (used_directions) *used_directions = 0;
    switch (body.tag) {
        case SymmetricConvexBody::Tag::Ellipsoid:
            return op_norm(body.ellipsoid_a);
        case SymmetricConvexBody::Tag::Hull: {
            double m = 0.0;
            for (const auto& p : body.hull_points) m = std::max(m, p.norm());
            return m;
        }
        case SymmetricConvexBody::Tag::Scaled:
            return body.scale * body_norm(body.inner.front(), used_directions);
        case SymmetricConvexBody::Tag::Sum: {
            if (auto verts = vertex_points(body)) {
                double m = 0.0;
                for (const auto& p : *verts) m = std::max(m, p.norm());
                return m;
            }
            // Sampled supremum. The net is augmented with each summand's own
            // norm-attaining direction, which is exact for ellipsoid parts.
            auto net = direction_net(body.n, default_net_size(body.n));
            for (const auto& s : body.summands) {
                if (s.tag == SymmetricConvexBody::Tag::Ellipsoid) {
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.ellipsoid_a);
                    net.push_back(es.eigenvectors().col(body.n - 1));
                }
            }
            double m = 0.0;
            for (const auto& v : net) m = std::max(m, support(body, v) / v.norm());
            if (used_directions) *used_directions = int(net.size());
            return m;
        }
    }
    return 0.0;
}

namespace {
MveeResult mvee_core(const std::vector<Eigen::VectorXd>& points, double tol, int max_iter);
}

MveeResult mvee(const std::vector<Eigen::VectorXd>& points, double tol, int max_iter) {
    if (points.empty()) throw std::invalid_argument("mvee: empty point set");
    const int n = int(points.front().size());
    const int N = int(points.size());
    const int core_cap = std::max(64, 24 * n * n);
    if (N <= 2 * core_cap) return mvee_core(points, tol, max_iter);

    // Column generation: solve on a working subset, then pull in the worst
    // leverage violators from the full cloud until the enclosing certificate
    // holds globally.
    std::vector<int> working;
    for (int i = 0; i < core_cap; ++i) working.push_back(std::int64_t(i) * N / core_cap);
    Eigen::MatrixXd x(n, N);
    for (int i = 0; i < N; ++i) x.col(i) = points[i];

    MveeResult res;
    int iterations_left = max_iter;
    for (int round = 0; round < 24; ++round) {
        std::vector<Eigen::VectorXd> subset;
        subset.reserve(working.size());
        for (int i : working) subset.push_back(points[i]);
        res = mvee_core(subset, tol, std::min(iterations_left, 20000));
        iterations_left -= res.iterations;
        Eigen::VectorXd g = ((res.lambda_inv * x).cwiseProduct(x)).colwise().sum();
        res.kappa = g.maxCoeff();
        if (res.kappa <= n * (1.0 + tol)) {
            res.converged = true;
            return res;
        }
        if (iterations_left <= 0) break;
        // add the worst violators, skipping near-duplicates of working atoms
        std::vector<int> order(N);
        for (int i = 0; i < N; ++i) order[i] = i;
        std::partial_sort(order.begin(), order.begin() + std::min(32, N), order.end(),
                          [&](int a, int b) { return g[a] > g[b]; });
        int added = 0;
        for (int k = 0; k < std::min(32, N) && added < 8; ++k) {
            int cand = order[k];
            if (g[cand] <= n * (1.0 + tol)) break;
            bool dup = false;
            for (int i : working) {
                if ((points[i] - points[cand]).norm() < 1e-9) {
                    dup = true;
                    break;
                }
            }
            if (!dup) {
                working.push_back(cand);
                ++added;
            }
        }
        if (added == 0) break;
    }
    res.converged = false;
    return res;
}

namespace {

MveeResult mvee_core(const std::vector<Eigen::VectorXd>& points, double tol, int max_iter) {
    const int n = int(points.front().size());
    const int N = int(points.size());
    Eigen::MatrixXd x(n, N);
    for (int i = 0; i < N; ++i) x.col(i) = points[i];

    Eigen::VectorXd w = Eigen::VectorXd::Constant(N, 1.0 / N);
    MveeResult res;
    res.lambda = Eigen::MatrixXd::Zero(n, n);

    Eigen::MatrixXd inv;
    Eigen::VectorXd g;
    auto recompute = [&]() {
        res.lambda = x * w.asDiagonal() * x.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(res.lambda);
        double floor = std::max(es.eigenvalues().maxCoeff(), 1e-300) * 1e-14;
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
        inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
        g = ((inv * x).cwiseProduct(x)).colwise().sum();
    };
    recompute();

    // Weight updates w' = a w + b e_i change Lambda by a rank-one term, so
    // the leverages refresh in O(N n) via Sherman-Morrison; a full recompute
    // every so often bounds the drift.
    auto rank_one_update = [&](int i, double a, double b) {
        // Lambda' = a Lambda + b x_i x_i^T
        Eigen::VectorXd mx = inv * x.col(i);
        double quad = x.col(i).dot(mx);
        double c = (b / a) / (1.0 + (b / a) * quad);
        Eigen::VectorXd s = x.transpose() * mx;
        g = (g.array() - c * s.array().square()).matrix() / a;
        inv = (inv - c * (mx * mx.transpose())) / a;
        res.lambda = a * res.lambda + b * (x.col(i) * x.col(i).transpose());
    };

    int it = 0;
    for (; it < max_iter; ++it) {
        if (it % 512 == 511) recompute();
        int iplus;
        double kappa = g.maxCoeff(&iplus);
        if (kappa <= n * (1.0 + tol)) {
            recompute();
            kappa = g.maxCoeff(&iplus);
            if (kappa <= n * (1.0 + tol)) {
                res.converged = true;
                break;
            }
        }
        // Away candidate: smallest leverage among active atoms.
        int iminus = -1;
        double gmin = std::numeric_limits<double>::infinity();
        for (int i = 0; i < N; ++i) {
            if (w[i] > 1e-300 && g[i] < gmin) {
                gmin = g[i];
                iminus = i;
            }
        }
        bool plus = (kappa - n) >= (n - gmin) || iminus < 0;
        if (plus) {
            double beta = (kappa - n) / (n * (kappa - 1.0));
            rank_one_update(iplus, 1.0 - beta, beta);
            w *= (1.0 - beta);
            w[iplus] += beta;
        } else {
            double tmax = w[iminus] / std::max(1.0 - w[iminus], 1e-300);
            double tstar = (gmin > 1.0) ? (n - gmin) / (n * (gmin - 1.0)) : tmax;
            double t = std::min(std::max(tstar, 0.0), tmax);
            if (t <= 0) {
                double beta = (kappa - n) / (n * (kappa - 1.0));
                rank_one_update(iplus, 1.0 - beta, beta);
                w *= (1.0 - beta);
                w[iplus] += beta;
            } else {
                rank_one_update(iminus, 1.0 + t, -t);
                w *= (1.0 + t);
                w[iminus] -= t;
                if (w[iminus] < 0) w[iminus] = 0;
            }
        }
    }
    recompute();
    res.iterations = it;
    res.kappa = g.maxCoeff();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(res.lambda);
    double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
    for (int i = 0; i < n; ++i) {
        if (es.eigenvalues()[i] < 1e-12 * std::max(top, 1e-300)) res.null_directions.push_back(i);
    }
    double ridge = std::max(top, 1e-300) * 1e-12;
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(ridge);
    res.lambda_inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    return res;
}

}  // namespace

JohnEllipsoid john_ellipsoid(const SymmetricConvexBody& body) {
    JohnEllipsoid out;
    if (body.tag == SymmetricConvexBody::Tag::Ellipsoid) {
        out.a = body.ellipsoid_a;
        out.c_in = out.c_out = 1.0;
        out.exact_outer = true;
        return out;
    }
    if (body.tag == SymmetricConvexBody::Tag::Scaled) {
        JohnEllipsoid in = john_ellipsoid(body.inner.front());
        in.a *= body.scale;
        return in;
    }
    std::vector<Eigen::VectorXd> pts;
    bool exact = false;
    if (auto verts = vertex_points(body)) {
        pts = std::move(*verts);
        exact = true;
    } else {
        auto net = direction_net(body.n, default_net_size(body.n));
        pts.reserve(net.size());
        for (const auto& v : net) pts.push_back(support_argmax(body, v));
    }
    // Drop near-zero points (they carry no information and break leverage).
    double scale = 0.0;
    for (const auto& p : pts) scale = std::max(scale, p.norm());
    if (scale == 0.0) {
        out.a = Eigen::MatrixXd::Zero(body.n, body.n);
        for (int i = 0; i < body.n; ++i) out.null_directions.push_back(i);
        return out;
    }
    std::vector<Eigen::VectorXd> kept;
    for (const auto& p : pts)
        if (p.norm() > 1e-14 * scale) kept.push_back(p);

    MveeResult m = mvee(kept, 1e-6, 100000);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.lambda);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    out.a = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    out.c_in = 1.0;
    out.c_out = std::sqrt(std::max(m.kappa, 1.0));
    out.exact_outer = exact;
    out.sample_count = int(kept.size());
    out.null_directions = m.null_directions;
    return out;
}

HullProjection project_to_hull(const std::vector<Eigen::VectorXd>& atoms, const Eigen::VectorXd& target,
                               double tol, int max_iter) {
    if (atoms.empty()) throw std::invalid_argument("project_to_hull: no atoms");
    const int K = int(atoms.size());
    double scale = target.norm();
    for (const auto& a : atoms) scale = std::max(scale, a.norm());
    if (scale == 0.0) scale = 1.0;

    std::vector<double> theta(K, 0.0);
    // Start from the atom closest in inner product to the target.
    int best = 0;
    double bestdot = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < K; ++i) {
        double d = atoms[i].dot(target);
        if (d > bestdot) {
            bestdot = d;
            best = i;
        }
    }
    theta[best] = 1.0;
    Eigen::VectorXd xcur = atoms[best];

    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd r = xcur - target;
        if (r.norm() <= tol * scale) break;
        // Frank-Wolfe atom (most aligned with -r) and away atom.
        int s = 0, a = -1;
        double sdot = std::numeric_limits<double>::infinity();
        double adot = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < K; ++i) {
            double d = atoms[i].dot(r);
            if (d < sdot) {
                sdot = d;
                s = i;
            }
            if (theta[i] > 0 && d > adot) {
                adot = d;
                a = i;
            }
        }
        double gap_fw = r.dot(xcur) - sdot;        // improvement toward atom s
        double gap_aw = adot - r.dot(xcur);        // improvement away from atom a
        if (gap_fw <= tol * tol * scale * scale && gap_aw <= tol * tol * scale * scale) break;
        if (gap_fw >= gap_aw || a < 0) {
            Eigen::VectorXd d = atoms[s] - xcur;
            double denom = d.squaredNorm();
            if (denom <= 0) break;
            double gamma = std::clamp(-r.dot(d) / denom, 0.0, 1.0);
            for (auto& t : theta) t *= (1.0 - gamma);
            theta[s] += gamma;
            xcur += gamma * d;
        } else {
            Eigen::VectorXd d = xcur - atoms[a];
            double denom = d.squaredNorm();
            if (denom <= 0) break;
            double gmax = theta[a] / std::max(1.0 - theta[a], 1e-300);
            double gamma = std::clamp(-r.dot(d) / denom, 0.0, gmax);
            if (gamma <= 0) break;
            for (auto& t : theta) t *= (1.0 + gamma);
            theta[a] -= gamma;
            if (theta[a] < 0) theta[a] = 0;
            xcur += gamma * d;
        }
    }

    // Active-set polish: unconstrained affine least squares on the support,
    // kept only when it stays (numerically) in the simplex.
    {
        std::vector<int> supp;
        for (int i = 0; i < K; ++i)
            if (theta[i] > 1e-12) supp.push_back(i);
        const int s = int(supp.size());
        const int n = int(target.size());
        if (s >= 1 && s <= n + 1) {
            Eigen::MatrixXd a(n + 1, s);
            for (int k = 0; k < s; ++k) {
                a.block(0, k, n, 1) = atoms[supp[k]];
                a(n, k) = 1.0;
            }
            Eigen::VectorXd b(n + 1);
            b.head(n) = target;
            b[n] = 1.0;
            Eigen::VectorXd th = a.colPivHouseholderQr().solve(b);
            if (th.minCoeff() >= -1e-10) {
                th = th.cwiseMax(0.0);
                th /= th.sum();
                Eigen::VectorXd xnew = Eigen::VectorXd::Zero(n);
                for (int k = 0; k < s; ++k) xnew += th[k] * atoms[supp[k]];
                if ((xnew - target).norm() <= (xcur - target).norm()) {
                    std::fill(theta.begin(), theta.end(), 0.0);
                    for (int k = 0; k < s; ++k) theta[supp[k]] = th[k];
                    xcur = xnew;
                }
            }
        }
    }

    HullProjection out;
    out.theta = theta;
    out.point = xcur;
    out.distance = (xcur - target).norm();
    if (out.distance > 0) out.separating = (xcur - target) / std::max(out.distance, 1e-300);
    else out.separating = Eigen::VectorXd::Zero(target.size());
    return out;
}

std::vector<CaratheodoryTerm> caratheodory_decompose(const std::vector<Eigen::VectorXd>& points,
                                                     const Eigen::VectorXd& target, double tol) {
    const int n = int(target.size());
    HullProjection proj = project_to_hull(points, target, 1e-13, 50000);
    double scale = 1.0 + target.norm();
    if (proj.distance > tol * scale) {
        std::ostringstream msg;
        msg << "caratheodory_decompose: target outside hull (distance " << proj.distance
            << ", separating direction [" << proj.separating.transpose() << "])";
        throw std::domain_error(msg.str());
    }

    std::vector<int> supp;
    std::vector<double> theta;
    for (int i = 0; i < int(points.size()); ++i) {
        if (proj.theta[i] > 1e-15) {
            supp.push_back(i);
            theta.push_back(proj.theta[i]);
        }
    }
    if (supp.empty()) {
        supp.push_back(0);
        theta.push_back(1.0);
    }

    auto polish = [&]() {
        // Nearest coefficients satisfying the affine constraints exactly.
        const int s = int(supp.size());
        Eigen::MatrixXd a(n + 1, s);
        for (int k = 0; k < s; ++k) {
            a.block(0, k, n, 1) = points[supp[k]];
            a(n, k) = 1.0;
        }
        Eigen::VectorXd b(n + 1);
        b.head(n) = target;
        b[n] = 1.0;
        Eigen::VectorXd th = Eigen::Map<Eigen::VectorXd>(theta.data(), s);
        Eigen::VectorXd resid = a * th - b;
        Eigen::VectorXd corr = a.transpose() * (a * a.transpose())
                                                   .ldlt()
                                                   .solve(resid);
        th -= corr;
        for (int k = 0; k < s; ++k) theta[k] = th[k];
    };
    polish();

    // Carathéodory reduction: remove atoms while the support is affinely
    // dependent (always possible above n+1 atoms).
    while (int(supp.size()) > n + 1) {
        const int s = int(supp.size());
        Eigen::MatrixXd a(n + 1, s);
        for (int k = 0; k < s; ++k) {
            a.block(0, k, n, 1) = points[supp[k]];
            a(n, k) = 1.0;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        Eigen::MatrixXd kernel = lu.kernel();
        if (kernel.cols() == 0 || kernel.col(0).norm() < 1e-14) break;
        Eigen::VectorXd gamma = kernel.col(0);
        if (gamma.maxCoeff() <= 0) gamma = -gamma;
        double tstep = std::numeric_limits<double>::infinity();
        for (int k = 0; k < s; ++k) {
            if (gamma[k] > 1e-15) tstep = std::min(tstep, theta[k] / gamma[k]);
        }
        if (!std::isfinite(tstep)) break;
        std::vector<int> nsupp;
        std::vector<double> ntheta;
        for (int k = 0; k < s; ++k) {
            double v = theta[k] - tstep * gamma[k];
            if (v > 1e-14) {
                nsupp.push_back(supp[k]);
                ntheta.push_back(v);
            }
        }
        supp = std::move(nsupp);
        theta = std::move(ntheta);
        polish();
    }

    // Clean up and verify.
    double sum = 0.0;
    for (double& t : theta) {
        t = std::max(t, 0.0);
        sum += t;
    }
    Eigen::VectorXd recon = Eigen::VectorXd::Zero(n);
    std::vector<CaratheodoryTerm> out;
    for (std::size_t k = 0; k < supp.size(); ++k) {
        out.push_back({theta[k] / sum, points[supp[k]]});
        recon += out.back().theta * out.back().point;
    }
    if ((recon - target).norm() > tol * scale)
        throw std::domain_error("caratheodory_decompose: reconstruction tolerance not met");
    return out;
}

bool contains(const SymmetricConvexBody& body, const Eigen::VectorXd& u, double tol) {
    if (tol < 0) throw std::invalid_argument("contains: negative tolerance");
    if (int(u.size()) != body.n) throw std::invalid_argument("contains: dimension mismatch");
    // Exact path for (scaled) ellipsoids.
    const SymmetricConvexBody* b = &body;
    double factor = 1.0;
    while (b->tag == SymmetricConvexBody::Tag::Scaled) {
        factor *= b->scale;
        b = &b->inner.front();
    }
    if (b->tag == SymmetricConvexBody::Tag::Ellipsoid) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(factor * b->ellipsoid_a);
        double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
        Eigen::VectorXd y = es.eigenvectors().transpose() * u;
        double gauge2 = 0.0;
        for (int i = 0; i < body.n; ++i) {
            double lam = es.eigenvalues()[i];
            if (lam <= 1e-12 * std::max(top, 1e-300)) {
                if (std::abs(y[i]) > 1e-12 * (1.0 + u.norm())) return false;
            } else {
                gauge2 += (y[i] / lam) * (y[i] / lam);
            }
        }
        return std::sqrt(gauge2) <= 1.0 + tol;
    }
    auto net = direction_net(body.n, default_net_size(body.n));
    double unorm = u.norm();
    if (unorm > 0) net.push_back(u / unorm);
    for (const auto& v : net) {
        double h = support(body, v);
        if (u.dot(v) > h * (1.0 + tol) + 1e-14 * unorm) return false;
    }
    return true;
}

SymmetricConvexBody aumann_average(const BodyField& field, const Cube& q) {
    auto cells = field.layout.cells_meeting(q);
    if (cells.empty()) {
        int n = field.cells.empty() ? 1 : field.cells.front().n;
        return make_point(Eigen::VectorXd::Zero(n));
    }
    Rational qvol = q.volume();
    std::vector<SymmetricConvexBody> parts;
    parts.reserve(cells.size());
    for (const auto& [cell, vol] : cells) {
        double weight = (vol / qvol).value();
        parts.push_back(make_scaled(weight, field.at(cell)));
    }
    return parts.size() == 1 ? parts.front() : make_sum(std::move(parts));
}

namespace {

Eigen::VectorXd contract_except(const TensorSpace& space, const Eigen::VectorXd& v, int j,
                                const std::vector<Eigen::VectorXd>& us) {
    const int m = space.factors();
    Eigen::VectorXd cur = v;
    TensorSpace s = space;
    for (int f = m; f > j + 1; --f) {
        cur = contract_last(s, cur, us[f - 1]);
        s.dims.pop_back();
    }
    for (int f = 1; f <= j; ++f) {
        cur = contract_first(s, cur, us[f - 1]);
        s.dims.erase(s.dims.begin());
    }
    return cur;
}

}  // namespace

void ProductGenerator::cache_vertices(int cap) {
    factor_vertices.clear();
    for (const auto& b : factors) factor_vertices.push_back(vertex_points(b, cap));
}

double ProductGenerator::support(const TensorSpace& space, const Eigen::VectorXd& v) const {
    double best = std::abs(witness.dot(v));
    if (factors.size() == 2 && factor_vertices.size() == 2) {
        if (factor_vertices[0]) {
            double h = 0.0;
            for (const auto& u : *factor_vertices[0])
                h = std::max(h, mwh::support(factors[1], contract_first(space, v, u)));
            return std::max(best, h);
        }
        if (factor_vertices[1]) {
            double h = 0.0;
            for (const auto& u : *factor_vertices[1])
                h = std::max(h, mwh::support(factors[0], contract_last(space, v, u)));
            return std::max(best, h);
        }
    }
    std::vector<Eigen::VectorXd> w{witness};
    return product_support(factors, space, v, 4, &w);
}

double product_support(const std::vector<SymmetricConvexBody>& factors, const TensorSpace& space,
                       const Eigen::VectorXd& v, int restarts,
                       const std::vector<Eigen::VectorXd>* witnesses) {
    const int m = int(factors.size());
    if (m != space.factors()) throw std::invalid_argument("product_support: factor mismatch");
    double best = 0.0;
    if (witnesses) {
        for (const auto& w : *witnesses) best = std::max(best, std::abs(w.dot(v)));
    }
    if (m == 1) return std::max(best, support(factors[0], v));

    // Exact bilinear path: enumerate one polytopal factor.
    if (m == 2) {
        auto try_exact = [&](int enumerate_idx) -> std::optional<double> {
            auto verts = vertex_points(factors[enumerate_idx], 2048);
            if (!verts) return std::nullopt;
            double h = 0.0;
            const int other = 1 - enumerate_idx;
            for (const auto& u : *verts) {
                Eigen::VectorXd c = (enumerate_idx == 0) ? contract_first(space, v, u)
                                                         : contract_last(space, v, u);
                h = std::max(h, support(factors[other], c));
            }
            return h;
        };
        if (auto h = try_exact(0)) return std::max(best, *h);
        if (auto h = try_exact(1)) return std::max(best, *h);
    }

    // Alternating ascent over the factors with deterministic restarts.
    Rng rng(0xa17e12a7ULL ^ std::uint64_t(space.dim()));
    for (int r = 0; r < restarts; ++r) {
        std::vector<Eigen::VectorXd> us(m);
        for (int j = 0; j < m; ++j) {
            Eigen::VectorXd dir = (r == 0) ? Eigen::VectorXd(Eigen::VectorXd::Ones(space.dims[j]).normalized())
                                           : rng.unit_vector(space.dims[j]);
            us[j] = support_argmax(factors[j], dir);
        }
        double val = 0.0;
        for (int sweep = 0; sweep < 60; ++sweep) {
            double prev = val;
            for (int j = 0; j < m; ++j) {
                Eigen::VectorXd c = contract_except(space, v, j, us);
                us[j] = support_argmax(factors[j], c);
                val = std::abs(us[j].dot(c));
            }
            if (val <= prev * (1.0 + 1e-13) && sweep > 0) break;
        }
        best = std::max(best, val);
    }
    return best;
}

}  // namespace mwh
