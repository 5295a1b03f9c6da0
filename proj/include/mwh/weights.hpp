#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mwh/fields.hpp"
#include "mwh/geometry.hpp"

namespace mwh {

/// Piecewise-constant SPD-matrix-valued weight on a grid, with cached
/// inverses. Cells are validated on construction: symmetric up to 1e-12 and
/// smallest eigenvalue >= 1e-10.
struct MatrixWeightField {
    GridLayout layout;
    int n = 1;
    std::vector<Eigen::MatrixXd> cells;
    std::vector<Eigen::MatrixXd> inverses;
    std::string id;

    const Eigen::MatrixXd& at(std::int64_t cell) const { return cells[std::size_t(cell)]; }
    const Eigen::MatrixXd& inv_at(std::int64_t cell) const { return inverses[std::size_t(cell)]; }

    /// The inverse weight as a field of its own.
    MatrixWeightField inverse() const;
};

MatrixWeightField make_weight_field(const GridLayout& layout, std::vector<Eigen::MatrixXd> cells,
                                    std::string id);

/// Test-weight generators.
struct WeightSpec {
    enum class Kind { Identity, ScalarPower, DiagonalPower, Rotating, RandomLogLipschitz };
    Kind kind = Kind::Identity;
    int n = 1;
    std::vector<double> alpha;     // powers (ScalarPower uses alpha[0])
    std::vector<double> center;    // x0, defaults to the box center
    std::uint64_t seed = 1;        // RandomLogLipschitz
    double log_amplitude = 0.7;    // RandomLogLipschitz
};

MatrixWeightField make_weight(const WeightSpec& spec, const GridLayout& layout);

/// Cellwise Kronecker product of the factors (common grid required).
MatrixWeightField tensor_weight(const std::vector<const MatrixWeightField*>& factors);

/// Quasinorm q(u) = (avg_Q |W(x) u|^p)^(1/p), an exact finite sum over cell
/// overlaps; p = inf is the max over covered cells.
class CubeQuasinorm {
public:
    CubeQuasinorm(const MatrixWeightField& w, const Cube& q, double p);
    double operator()(const Eigen::VectorXd& u) const;
    /// (Sub)gradient of q at u != 0.
    Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
    int dim() const { return n_; }
    bool empty() const { return mats_.empty(); }

private:
    int n_;
    double p_;
    std::vector<const Eigen::MatrixXd*> mats_;
    std::vector<double> weights_;  // normalized overlap fractions
};

/// K_p = 2^((1/p - 1)_+), the quasi-triangle constant of L^p.
double quasinorm_constant(double p);

/// SPD matrix A with K_p^{-n} q(u) <= |A u| <= sqrt(n) (1 + slack) q(u).
/// The lower bound is structural (it holds for every direction, up to
/// floating point); the upper bound is certified on a verification net
/// disjoint from the construction net, with the achieved slack reported.
struct ReducingOperator {
    Eigen::MatrixXd a;
    std::string weight_id;
    Cube cube;
    double p = 2.0;
    double solver_tol = 1e-6;
    double kappa = 0.0;         // achieved MVEE leverage bound
    double upper_slack = 0.0;   // max_net |Au| / (sqrt(n) q(u)) - 1
    double lower_margin = 0.0;  // min_net |Au| K_p^n / q(u)
    bool degenerate = false;

    Eigen::MatrixXd inverse() const;
};

/// Construction-net size for the reducing operator in dimension n.
int reducing_net_size(int n);

ReducingOperator reducing_operator(const MatrixWeightField& w, const Cube& q, double p);

/// Memoized variant; the cache key is (weight id, cube, p). Safe for
/// concurrent use, insertion is idempotent.
class ReducingCache {
public:
    std::shared_ptr<const ReducingOperator> get(const MatrixWeightField& w, const Cube& q, double p);
    void clear();
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const ReducingOperator>> entries_;
};

ReducingCache& reducing_cache();

/// Cache key helper (exact rational cube encoding).
std::string cube_key(const Cube& q);

}  // namespace mwh
