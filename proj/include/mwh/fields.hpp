#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mwh/geometry.hpp"

namespace mwh {

/// Piecewise-constant scalar field on a grid layout.
struct ScalarField {
    GridLayout layout;
    Eigen::ArrayXd values;  // one entry per cell

    ScalarField() = default;
    ScalarField(GridLayout l, Eigen::ArrayXd v) : layout(std::move(l)), values(std::move(v)) {}
    static ScalarField zero(const GridLayout& l) { return ScalarField(l, Eigen::ArrayXd::Zero(l.ncells())); }
    static ScalarField constant(const GridLayout& l, double c) {
        return ScalarField(l, Eigen::ArrayXd::Constant(l.ncells(), c));
    }
    static ScalarField from_function(const GridLayout& l, const std::function<double(const std::vector<double>&)>& f);

    double at(std::int64_t cell) const { return values[cell]; }
    double l1_norm() const { return values.abs().sum() * layout.cell_volume_d(); }
    double lp_norm(double p) const;  // p in (0, inf]
    ScalarField restricted(const Cube& q) const;
};

/// Piecewise-constant vector field (one column per cell).
struct VectorField {
    GridLayout layout;
    Eigen::MatrixXd values;  // n x ncells

    VectorField() = default;
    VectorField(GridLayout l, Eigen::MatrixXd v) : layout(std::move(l)), values(std::move(v)) {}
    static VectorField zero(const GridLayout& l, int n) {
        return VectorField(l, Eigen::MatrixXd::Zero(n, l.ncells()));
    }

    int dim() const { return int(values.rows()); }
    Eigen::VectorXd at(std::int64_t cell) const { return values.col(cell); }
    ScalarField component(int k) const { return ScalarField(layout, values.row(k).transpose().array()); }
    ScalarField norms() const;

    /// Restriction to a cube (zero outside), exact on aligned cubes and by
    /// full-cell membership otherwise.
    VectorField restricted(const Cube& q) const;
};

/// Exact integral of f over Q (piecewise-constant fields integrate exactly
/// against rational cell overlaps).
double cube_integral(const ScalarField& f, const Cube& q);
/// (1/|Q|) * integral, with |Q| the full cube volume (zero extension).
double cube_average(const ScalarField& f, const Cube& q);

Eigen::VectorXd cube_integral(const VectorField& f, const Cube& q);
Eigen::VectorXd cube_average(const VectorField& f, const Cube& q);

/// Power mean (avg of v^t over weights)^(1/t); t=+inf -> max, t=-inf -> min.
/// Negative t requires strictly positive data.
double power_average(const std::vector<double>& values, const std::vector<double>& weights, double t);

}  // namespace mwh
