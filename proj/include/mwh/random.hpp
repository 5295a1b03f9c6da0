#pragma once

#include <cmath>
#include <cstdint>
#include <Eigen/Dense>

namespace mwh {

/// Deterministic RNG (splitmix64 core). Standard-library distributions are
/// implementation-defined, so all draws are derived from raw bits here to
/// keep results byte-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    std::int64_t uniform_int(std::int64_t n) { return std::int64_t(next() % std::uint64_t(n)); }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Eigen::VectorXd normal_vector(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    Eigen::VectorXd unit_vector(int n) {
        Eigen::VectorXd v = normal_vector(n);
        double norm = v.norm();
        while (norm < 1e-12) {
            v = normal_vector(n);
            norm = v.norm();
        }
        return v / norm;
    }

    /// Random SPD matrix with eigenvalues in [lo, hi].
    Eigen::MatrixXd spd_matrix(int n, double lo, double hi) {
        Eigen::MatrixXd g(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = normal();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ();
        Eigen::VectorXd ev(n);
        for (int i = 0; i < n; ++i) ev[i] = uniform(lo, hi);
        return q * ev.asDiagonal() * q.transpose();
    }

    /// Child generator with decorrelated stream.
    Rng fork(std::uint64_t salt) { return Rng(next() ^ (salt * 0x9e3779b97f4a7c15ull)); }

private:
    std::uint64_t state_;
};

}  // namespace mwh
