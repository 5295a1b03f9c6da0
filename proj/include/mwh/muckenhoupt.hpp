#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mwh/fields.hpp"
#include "mwh/weights.hpp"

namespace mwh {

/// Exponent stored through its reciprocal, so that infinity (reciprocal 0)
/// and the negative exponents appearing in derived quantities share one
/// arithmetic.
struct Exponent {
    double inv = 0.0;  // 1/value; 0 encodes infinity

    static Exponent from_value(double v) {
        Exponent e;
        e.inv = std::isinf(v) ? 0.0 : 1.0 / v;
        return e;
    }
    static Exponent from_reciprocal(double r) {
        Exponent e;
        e.inv = r;
        return e;
    }
    double value() const { return inv == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / inv; }
    bool is_infinite() const { return inv == 0.0; }
};

/// (p_vec, r_vec, s) together with every derived exponent of the two-sided
/// characteristic calculus. Construction validates p_vec >= r_vec and
/// 1/p >= 1/s and reports the violated constraint by name.
struct ExponentConfig {
    std::vector<Exponent> p;      // p_j in (0, inf]
    std::vector<Exponent> r;      // r_j in (0, inf)
    Exponent s;                   // s in (R \ {0}) U {inf}

    Exponent p_total;             // 1/p = sum 1/p_j
    Exponent r_total;             // 1/r = sum 1/r_j
    Exponent q;                   // 1/q = 1/p - 1/s
    std::vector<Exponent> t;      // 1/t_j = 1/r_j - 1/p_j
    std::vector<Exponent> sigma;  // 1/sigma_j = 1/r_j - (1/r - 1/s)
    std::vector<Exponent> p_hat;  // 1/p_hat_j = 1/r_j + 1/sigma_j - 1/p_j
    Exponent p_hat_total;         // 1/p_hat = 1/r + 1/s - 1/p
    Exponent kappa;               // 1/kappa = (1/p - 1/s) / (1/r - 1/s)
    Exponent rho;                 // 1/rho = 1/r - 1/s
    std::vector<double> lambda;   // lambda_j = t_j (1/r - 1/s)

    int m() const { return int(p.size()); }
};

ExponentConfig derived_exponents(const std::vector<double>& p, const std::vector<double>& r, double s);

/// Hoelder-dual exponents of the double-average characteristic with
/// parameters (p, (r, s)): q with 1/q = 1/p - 1/s and t with 1/t = 1/r - 1/p.
struct CharacteristicExponents {
    double q;
    double t;
};
CharacteristicExponents characteristic_exponents(double p, double r, double s);

/// Table of pairwise operator norms |W(x) W(y)^{-1}| over cells; the
/// characteristic evaluators share it across cubes.
Eigen::MatrixXd pairwise_norm_table(const MatrixWeightField& w);

/// Double-average characteristic of the tuple over a cube family:
/// sup_Q (avg_x prod_j (avg_y |W_j(x) W_j(y)^{-1}|^{t_j})^{q/t_j})^{1/q},
/// with essential suprema at infinite exponents. All averages are exact cell
/// sums.
double roudenko_characteristic(const std::vector<const MatrixWeightField*>& weights,
                               const ExponentConfig& cfg, const std::vector<Cube>& cubes);

/// Single-weight variant at parameters (p, (r, s)).
double roudenko_characteristic_single(const MatrixWeightField& w, double p, double r, double s,
                                      const std::vector<Cube>& cubes);

/// Reducing-operator characteristic sup_Q |A_{W,Q,q} (x)_j A_{W_j^{-1},Q,t_j}|,
/// with the per-cube upper slacks folded into `slack`.
struct ReducingCharacteristic {
    double value = 0.0;
    double slack = 0.0;  // worst certificate slack among the operators used
};
ReducingCharacteristic reducing_characteristic(const std::vector<const MatrixWeightField*>& weights,
                                               const ExponentConfig& cfg, const std::vector<Cube>& cubes);

/// Certified lower bound on |T_Q| between the weighted Lebesgue spaces of the
/// tuple: every reported value is attained by explicit piecewise-constant
/// inputs. Rank-one inputs (scalar profiles times fixed directions) are
/// scanned in closed form, then refined by alternating ascent over
/// Hoelder-aligned fields; extra direction tuples can be injected.
struct OracleOptions {
    int direction_samples = 48;
    int restarts = 16;
    std::uint64_t seed = 1;
    const std::vector<std::vector<Eigen::VectorXd>>* extra_directions = nullptr;
};
double averaging_norm_oracle(const std::vector<const MatrixWeightField*>& weights,
                             const std::vector<double>& p, const Cube& q, const OracleOptions& opts = {});

/// Exact closed form for m = 1, p = 2: |(avg_Q W^2)^{1/2} (avg_Q W^{-2})^{1/2}|.
double averaging_norm_p2(const MatrixWeightField& w, const Cube& q);

/// Scalar multilinear characteristic of scalar weights on one cube:
/// <w^p>_Q^{1/p} prod_j <w_j^{-p_j'}>_Q^{1/p_j'} (equivalently the exact
/// scalar T_Q norm), with the usual limit interpretations.
double scalar_characteristic(const std::vector<const ScalarField*>& w, const std::vector<double>& p,
                             const Cube& q);

/// Fujii-Wilson constant of a scalar weight over Q0: the dyadic-local
/// maximal function is computed exactly by a bottom-up sweep of the subtree.
double fujii_wilson(const ScalarField& w, const Cube& q0);

}  // namespace mwh
