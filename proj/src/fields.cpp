#include "mwh/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace mwh {

ScalarField ScalarField::from_function(const GridLayout& l,
                                       const std::function<double(const std::vector<double>&)>& f) {
    Eigen::ArrayXd v(l.ncells());
    for (std::int64_t c = 0; c < l.ncells(); ++c) v[c] = f(l.cell_center(c));
    return ScalarField(l, std::move(v));
}

double ScalarField::lp_norm(double p) const {
    if (std::isinf(p)) return values.abs().maxCoeff();
    if (!(p > 0)) throw std::invalid_argument("lp_norm: p must be positive");
    double vol = layout.cell_volume_d();
    return std::pow((values.abs().pow(p) * vol).sum(), 1.0 / p);
}

ScalarField ScalarField::restricted(const Cube& q) const {
    ScalarField out = *this;
    for (std::int64_t c = 0; c < layout.ncells(); ++c) {
        if (!(Rational(0) < layout.cell(c).intersection_volume(q))) out.values[c] = 0.0;
    }
    return out;
}

ScalarField VectorField::norms() const {
    Eigen::ArrayXd v(layout.ncells());
    for (std::int64_t c = 0; c < layout.ncells(); ++c) v[c] = values.col(c).norm();
    return ScalarField(layout, std::move(v));
}

VectorField VectorField::restricted(const Cube& q) const {
    VectorField out = *this;
    for (std::int64_t c = 0; c < layout.ncells(); ++c) {
        if (!(Rational(0) < layout.cell(c).intersection_volume(q))) out.values.col(c).setZero();
    }
    return out;
}

double cube_integral(const ScalarField& f, const Cube& q) {
    double total = 0.0;
    for (const auto& [cell, vol] : f.layout.cells_meeting(q)) total += f.values[cell] * vol.value();
    return total;
}

double cube_average(const ScalarField& f, const Cube& q) { return cube_integral(f, q) / q.volume_d(); }

Eigen::VectorXd cube_integral(const VectorField& f, const Cube& q) {
    Eigen::VectorXd total = Eigen::VectorXd::Zero(f.dim());
    for (const auto& [cell, vol] : f.layout.cells_meeting(q)) total += f.values.col(cell) * vol.value();
    return total;
}

Eigen::VectorXd cube_average(const VectorField& f, const Cube& q) {
    return cube_integral(f, q) / q.volume_d();
}

double power_average(const std::vector<double>& values, const std::vector<double>& weights, double t) {
    if (values.empty()) throw std::invalid_argument("power_average: empty data");
    if (values.size() != weights.size()) throw std::invalid_argument("power_average: size mismatch");
    if (std::isinf(t)) {
        double ext = (t > 0) ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (weights[i] <= 0) continue;
            ext = (t > 0) ? std::max(ext, values[i]) : std::min(ext, values[i]);
        }
        return ext;
    }
    if (t == 0) throw std::invalid_argument("power_average: t must be nonzero");
    double wsum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (weights[i] <= 0) continue;
        if (t < 0 && values[i] <= 0) throw std::domain_error("power_average: negative exponent needs positive data");
        acc += weights[i] * std::pow(values[i], t);
        wsum += weights[i];
    }
    return std::pow(acc / wsum, 1.0 / t);
}

}  // namespace mwh
