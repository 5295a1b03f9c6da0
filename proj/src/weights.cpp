#include "mwh/weights.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mwh/convex.hpp"
#include "mwh/random.hpp"

namespace mwh {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPdFloor = 1e-10;
constexpr double kRidge = 1e-12;

Eigen::MatrixXd sym_inverse(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    double top = std::max(es.eigenvalues().maxCoeff(), 1e-300);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(top * kRidge);
    return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

MatrixWeightField make_weight_field(const GridLayout& layout, std::vector<Eigen::MatrixXd> cells,
                                    std::string id) {
    if (std::int64_t(cells.size()) != layout.ncells())
        throw std::invalid_argument("make_weight_field: cell count mismatch");
    MatrixWeightField w;
    w.layout = layout;
    w.n = int(cells.front().rows());
    w.id = std::move(id);
    w.inverses.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const Eigen::MatrixXd& m = cells[c];
        if (m.rows() != w.n || m.cols() != w.n)
            throw std::invalid_argument("make_weight_field: inconsistent matrix size");
        if ((m - m.transpose()).norm() > kSymmetryTol * std::max(1.0, m.norm()))
            throw std::invalid_argument("make_weight_field: cell " + std::to_string(c) + " not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        if (es.eigenvalues().minCoeff() < kPdFloor)
            throw std::invalid_argument("make_weight_field: cell " + std::to_string(c) +
                                        " not positive definite (min eigenvalue " +
                                        std::to_string(es.eigenvalues().minCoeff()) + ")");
        w.inverses.push_back(sym_inverse(m));
    }
    w.cells = std::move(cells);
    return w;
}

MatrixWeightField MatrixWeightField::inverse() const {
    MatrixWeightField out;
    out.layout = layout;
    out.n = n;
    out.cells = inverses;
    out.inverses = cells;
    out.id = id + "^-1";
    return out;
}

MatrixWeightField make_weight(const WeightSpec& spec, const GridLayout& layout) {
    const int d = layout.dim();
    std::vector<double> x0 = spec.center;
    if (x0.empty()) {
        for (int i = 0; i < d; ++i)
            x0.push_back(layout.box.corner[i].value() + 0.5 * layout.box.side.value());
    }
    auto dist = [&](const std::vector<double>& x) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += (x[i] - x0[i]) * (x[i] - x0[i]);
        return std::sqrt(s);
    };

    std::vector<Eigen::MatrixXd> cells;
    cells.reserve(layout.ncells());
    std::ostringstream id;
    switch (spec.kind) {
        case WeightSpec::Kind::Identity: {
            id << "id" << spec.n;
            for (std::int64_t c = 0; c < layout.ncells(); ++c)
                cells.push_back(Eigen::MatrixXd::Identity(spec.n, spec.n));
            break;
        }
        case WeightSpec::Kind::ScalarPower: {
            double a = spec.alpha.empty() ? 0.0 : spec.alpha[0];
            id << "pow" << spec.n << ":" << a;
            for (std::int64_t c = 0; c < layout.ncells(); ++c) {
                double r = dist(layout.cell_center(c));
                cells.push_back(std::pow(r, a) * Eigen::MatrixXd::Identity(spec.n, spec.n));
            }
            break;
        }
        case WeightSpec::Kind::DiagonalPower: {
            if (int(spec.alpha.size()) != spec.n)
                throw std::invalid_argument("make_weight: diagonal powers need one exponent per entry");
            id << "diag" << spec.n;
            for (double a : spec.alpha) id << ":" << a;
            for (std::int64_t c = 0; c < layout.ncells(); ++c) {
                double r = dist(layout.cell_center(c));
                Eigen::VectorXd diag(spec.n);
                for (int k = 0; k < spec.n; ++k) diag[k] = std::pow(r, spec.alpha[k]);
                cells.push_back(Eigen::MatrixXd(diag.asDiagonal()));
            }
            break;
        }
        case WeightSpec::Kind::Rotating: {
            if (spec.n != 2) throw std::invalid_argument("make_weight: rotating weights are 2x2");
            if (spec.alpha.size() < 2)
                throw std::invalid_argument("make_weight: rotating weights need two diagonal powers");
            id << "rot:" << spec.alpha[0] << ":" << spec.alpha[1] << ":" << spec.seed;
            for (std::int64_t c = 0; c < layout.ncells(); ++c) {
                auto x = layout.cell_center(c);
                double theta = 2.0 * M_PI * x[0] + 0.31 * double(spec.seed % 7);
                double r = dist(x);
                Eigen::Matrix2d rot;
                rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
                Eigen::Vector2d diag(std::pow(0.5 + r, spec.alpha[0]), std::pow(0.5 + r, spec.alpha[1]));
                cells.push_back(rot * diag.asDiagonal() * rot.transpose());
            }
            break;
        }
        case WeightSpec::Kind::RandomLogLipschitz: {
            id << "rand" << spec.n << ":" << spec.seed << ":" << spec.log_amplitude;
            Rng rng(spec.seed);
            // low-frequency random log-symbol S(x) = sum_k A_k cos(<w_k, x> + phi_k)
            const int modes = 3;
            std::vector<Eigen::MatrixXd> amp;
            std::vector<Eigen::VectorXd> freq;
            std::vector<double> phase;
            for (int k = 0; k < modes; ++k) {
                Eigen::MatrixXd s(spec.n, spec.n);
                for (int i = 0; i < spec.n; ++i)
                    for (int j = 0; j <= i; ++j) s(i, j) = s(j, i) = rng.normal() * spec.log_amplitude / modes;
                amp.push_back(s);
                Eigen::VectorXd wv(d);
                for (int i = 0; i < d; ++i) wv[i] = 2.0 * M_PI * double(1 + rng.uniform_int(2));
                freq.push_back(wv);
                phase.push_back(rng.uniform(0.0, 2.0 * M_PI));
            }
            for (std::int64_t c = 0; c < layout.ncells(); ++c) {
                auto x = layout.cell_center(c);
                Eigen::MatrixXd s = Eigen::MatrixXd::Zero(spec.n, spec.n);
                for (int k = 0; k < modes; ++k) {
                    double arg = phase[k];
                    for (int i = 0; i < d; ++i) arg += freq[k][i] * x[i];
                    s += amp[k] * std::cos(arg);
                }
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
                cells.push_back(es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
                                es.eigenvectors().transpose());
            }
            break;
        }
    }
    return make_weight_field(layout, std::move(cells), id.str());
}

MatrixWeightField tensor_weight(const std::vector<const MatrixWeightField*>& factors) {
    if (factors.empty()) throw std::invalid_argument("tensor_weight: empty factor list");
    const GridLayout& layout = factors.front()->layout;
    for (const auto* f : factors)
        if (!(f->layout == layout)) throw std::invalid_argument("tensor_weight: grid mismatch");
    std::vector<Eigen::MatrixXd> cells;
    cells.reserve(layout.ncells());
    std::ostringstream id;
    for (std::size_t j = 0; j < factors.size(); ++j) id << (j ? "x" : "") << "(" << factors[j]->id << ")";
    for (std::int64_t c = 0; c < layout.ncells(); ++c) {
        Eigen::MatrixXd m = factors.front()->at(c);
        for (std::size_t j = 1; j < factors.size(); ++j) m = kron(m, factors[j]->at(c));
        cells.push_back(std::move(m));
    }
    return make_weight_field(layout, std::move(cells), id.str());
}

CubeQuasinorm::CubeQuasinorm(const MatrixWeightField& w, const Cube& q, double p) : n_(w.n), p_(p) {
    if (!(p > 0)) throw std::invalid_argument("CubeQuasinorm: p must be positive (or infinite)");
    auto cells = w.layout.cells_meeting(q);
    Rational covered(0);
    for (const auto& [cell, vol] : cells) covered = covered + vol;
    for (const auto& [cell, vol] : cells) {
        mats_.push_back(&w.at(cell));
        weights_.push_back((vol / covered).value());
    }
}

double CubeQuasinorm::operator()(const Eigen::VectorXd& u) const {
    if (mats_.empty()) return 0.0;
    if (std::isinf(p_)) {
        double m = 0.0;
        for (const auto* w : mats_) m = std::max(m, ((*w) * u).norm());
        return m;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < mats_.size(); ++i) acc += weights_[i] * std::pow(((*mats_[i]) * u).norm(), p_);
    return std::pow(acc, 1.0 / p_);
}

Eigen::VectorXd CubeQuasinorm::gradient(const Eigen::VectorXd& u) const {
    if (std::isinf(p_)) {
        double best = -1.0;
        const Eigen::MatrixXd* active = nullptr;
        for (const auto* w : mats_) {
            double v = ((*w) * u).norm();
            if (v > best) {
                best = v;
                active = w;
            }
        }
        if (!active || best <= 0) return Eigen::VectorXd::Zero(n_);
        return ((*active).transpose() * ((*active) * u)) / best;
    }
    double q = (*this)(u);
    if (q <= 0) return Eigen::VectorXd::Zero(n_);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_);
    for (std::size_t i = 0; i < mats_.size(); ++i) {
        Eigen::VectorXd wu = (*mats_[i]) * u;
        double norm = wu.norm();
        if (norm <= 0) continue;
        grad += weights_[i] * std::pow(norm, p_ - 2.0) * (mats_[i]->transpose() * wu);
    }
    return std::pow(q, 1.0 - p_) * grad;
}

double quasinorm_constant(double p) {
    if (std::isinf(p)) return 1.0;
    return std::pow(2.0, std::max(1.0 / p - 1.0, 0.0));
}

int reducing_net_size(int n) {
    if (n <= 1) return 1;
    if (n == 2) return 4096;
    if (n == 3) return 12000;
    return std::max(200, 40 * n * n);
}

ReducingOperator reducing_operator(const MatrixWeightField& w, const Cube& q, double p) {
    ReducingOperator out;
    out.weight_id = w.id;
    out.cube = q;
    out.p = p;
    const int n = w.n;
    CubeQuasinorm quasi(w, q, p);
    if (quasi.empty()) throw std::invalid_argument("reducing_operator: cube does not meet the grid");

    if (n == 1) {
        double v = quasi(Eigen::VectorXd::Ones(1));
        out.a = Eigen::MatrixXd::Constant(1, 1, v);
        out.kappa = 1.0;
        out.upper_slack = 0.0;
        out.lower_margin = quasinorm_constant(p);
        return out;
    }

    auto net = direction_net(n, reducing_net_size(n));
    std::vector<Eigen::VectorXd> samples;
    samples.reserve(net.size());
    double qmax = 0.0;
    for (const auto& v : net) qmax = std::max(qmax, quasi(v));
    for (const auto& v : net) {
        double qv = quasi(v);
        if (qv > 1e-14 * qmax) samples.push_back(v / qv);
    }
    if (samples.size() < std::size_t(n)) {
        out.degenerate = true;
        out.a = Eigen::MatrixXd::Identity(n, n) * kRidge;
        return out;
    }

    MveeResult m = mvee(samples, 1e-6, 100000);
    out.degenerate = !m.null_directions.empty();
    out.kappa = m.kappa;
    out.solver_tol = 1e-6;
    // Normalize A to the gauge of the enclosing ellipsoid, so |Au| tracks the
    // gauge of conv{q <= 1} from below (identity weights give A = I).
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.lambda);
        double top = std::max(es.eigenvalues().maxCoeff(), 1e-300);
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(top * kRidge);
        out.a = es.eigenvectors() * ev.cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose() /
                std::sqrt(std::max(m.kappa, 1.0));
    }

    // Measure the gauge-ratio band |Au| / q(u) on a fresh verification net,
    // sharpened by projected-gradient extremization from the worst
    // candidates, then rescale A once so the sandwich holds on the stored
    // verification sample with the achieved slack reported.
    const double sqrtn = std::sqrt(double(n));
    const double kpow = std::pow(quasinorm_constant(p), n);
    auto fresh = direction_net(n, reducing_net_size(n) + 1 + reducing_net_size(n) / 3);
    auto ratio = [&](const Eigen::VectorXd& v) { return (out.a * v).norm() / quasi(v); };
    auto polish = [&](Eigen::VectorXd u, double val, double sign) {
        Eigen::MatrixXd ata = out.a.transpose() * out.a;
        double step = 0.1;
        for (int it = 0; it < 60 && step > 1e-12; ++it) {
            Eigen::VectorXd au = out.a * u;
            Eigen::VectorXd grad = (ata * u) / std::max(au.squaredNorm(), 1e-300) -
                                   quasi.gradient(u) / std::max(quasi(u), 1e-300);
            Eigen::VectorXd cand = (u + sign * step * grad).normalized();
            double cval = ratio(cand);
            if (sign * cval > sign * val) {
                u = cand;
                val = cval;
                step *= 1.3;
            } else {
                step *= 0.5;
            }
        }
        return val;
    };
    std::vector<std::pair<double, Eigen::VectorXd>> band;
    for (const auto& v : fresh) {
        double qv = quasi(v);
        if (qv <= 1e-14 * qmax) continue;
        band.emplace_back((out.a * v).norm() / qv, v);
    }
    std::sort(band.begin(), band.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    double hi = band.front().first;
    double lo = band.back().first;
    for (std::size_t k = 0; k < std::min<std::size_t>(6, band.size()); ++k) {
        hi = std::max(hi, polish(band[k].second, band[k].first, +1.0));
        lo = std::min(lo, polish(band[band.size() - 1 - k].second, band[band.size() - 1 - k].first, -1.0));
    }
    // One rescale: push the measured band inside [K^{-n}, sqrt(n)].
    double rho = 1.0;
    if (lo * kpow < 1.0) rho = (1.0 + 1e-4) / (lo * kpow);
    rho = std::min(rho, sqrtn / (hi * (1.0 + 1e-9)));
    out.a *= rho;

    double up = 0.0;
    double low = std::numeric_limits<double>::infinity();
    for (const auto& v : fresh) {
        double qv = quasi(v);
        if (qv <= 1e-14 * qmax) continue;
        double av = (out.a * v).norm();
        up = std::max(up, av / (sqrtn * qv) - 1.0);
        low = std::min(low, av * kpow / qv);
    }
    out.upper_slack = std::max(up, rho * hi / sqrtn - 1.0);
    out.lower_margin = std::min(low, rho * lo * kpow);
    return out;
}

std::string cube_key(const Cube& q) {
    std::ostringstream os;
    for (std::size_t i = 0; i < q.corner.size(); ++i) os << (i ? "_" : "") << q.corner[i].str();
    os << ":" << q.side.str();
    return os.str();
}

std::shared_ptr<const ReducingOperator> ReducingCache::get(const MatrixWeightField& w, const Cube& q,
                                                           double p) {
    std::ostringstream key;
    key << w.id << "|" << cube_key(q) << "|" << p;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = entries_.find(key.str());
        if (it != entries_.end()) return it->second;
    }
    auto value = std::make_shared<const ReducingOperator>(reducing_operator(w, q, p));
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = entries_.emplace(key.str(), value);
    return it->second;
}

void ReducingCache::clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.clear();
}

std::size_t ReducingCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

ReducingCache& reducing_cache() {
    static ReducingCache cache;
    return cache;
}

Eigen::MatrixXd ReducingOperator::inverse() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    double top = std::max(es.eigenvalues().maxCoeff(), 1e-300);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(top * kRidge);
    return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace mwh
