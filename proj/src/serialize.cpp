#include "mwh/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mwh {

json rational_to_json(const Rational& r) {
    if (r.is_dyadic()) {
        std::int64_t mantissa = r.num();
        int exp = 0;
        std::int64_t den = r.den();
        while (den > 1) {
            den /= 2;
            --exp;
        }
        return json::array({mantissa, exp});
    }
    return json{{"num", r.num()}, {"den", r.den()}};
}

Rational rational_from_json(const json& j) {
    if (j.is_array()) {
        std::int64_t mantissa = j.at(0).get<std::int64_t>();
        int exp = j.at(1).get<int>();
        return Rational::dyadic(mantissa, exp);
    }
    return Rational(j.at("num").get<std::int64_t>(), j.at("den").get<std::int64_t>());
}

json cube_to_json(const Cube& q) {
    json corner = json::array();
    for (const auto& c : q.corner) corner.push_back(rational_to_json(c));
    return json{{"corner", corner}, {"side", rational_to_json(q.side)}};
}

Cube cube_from_json(const json& j) {
    std::vector<Rational> corner;
    for (const auto& c : j.at("corner")) corner.push_back(rational_from_json(c));
    return Cube(std::move(corner), rational_from_json(j.at("side")));
}

json sparse_family_to_json(const SparseFamily& fam) {
    json cubes = json::array();
    for (const Cube& q : fam.cubes) cubes.push_back(cube_to_json(q));
    json out{{"cubes", cubes}};
    if (fam.witness && fam.resolution) {
        json wit = json::array();
        for (const auto& entry : *fam.witness) {
            json cells = json::array();
            for (const auto& [cell, frac] : entry)
                cells.push_back(json{{"cell", cell}, {"fraction", rational_to_json(frac)}});
            wit.push_back(cells);
        }
        out["witness"] = wit;
        out["resolution"] = json{{"box", cube_to_json(fam.resolution->box)}, {"level", fam.resolution->level}};
    }
    return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const int rows = int(j.size());
    const int cols = rows > 0 ? int(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
    return m;
}

json body_to_json(const SymmetricConvexBody& body) {
    switch (body.tag) {
        case SymmetricConvexBody::Tag::Ellipsoid:
            return json{{"type", "ellipsoid"}, {"a", matrix_to_json(body.ellipsoid_a)}};
        case SymmetricConvexBody::Tag::Hull: {
            json pts = json::array();
            for (const auto& p : body.hull_points) {
                json v = json::array();
                for (Eigen::Index i = 0; i < p.size(); ++i) v.push_back(p[i]);
                pts.push_back(v);
            }
            return json{{"type", "hull"}, {"points", pts}};
        }
        case SymmetricConvexBody::Tag::Sum: {
            json parts = json::array();
            for (const auto& s : body.summands) parts.push_back(body_to_json(s));
            return json{{"type", "sum"}, {"summands", parts}};
        }
        case SymmetricConvexBody::Tag::Scaled:
            return json{{"type", "scaled"}, {"factor", body.scale}, {"body", body_to_json(body.inner.front())}};
    }
    throw std::logic_error("body_to_json: unknown tag");
}

SymmetricConvexBody body_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "ellipsoid") return make_ellipsoid(matrix_from_json(j.at("a")));
    if (type == "hull") {
        std::vector<Eigen::VectorXd> pts;
        for (const auto& v : j.at("points")) {
            Eigen::VectorXd p(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) p[i] = v.at(i).get<double>();
            pts.push_back(p);
        }
        return make_hull(std::move(pts));
    }
    if (type == "sum") {
        std::vector<SymmetricConvexBody> parts;
        for (const auto& s : j.at("summands")) parts.push_back(body_from_json(s));
        return make_sum(std::move(parts));
    }
    if (type == "scaled") return make_scaled(j.at("factor").get<double>(), body_from_json(j.at("body")));
    throw std::invalid_argument("body_from_json: unknown type '" + type + "'");
}

WeightSpec weight_spec_from_json(const json& j) {
    WeightSpec spec;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity") spec.kind = WeightSpec::Kind::Identity;
    else if (kind == "scalar_power") spec.kind = WeightSpec::Kind::ScalarPower;
    else if (kind == "diagonal_power") spec.kind = WeightSpec::Kind::DiagonalPower;
    else if (kind == "rotating") spec.kind = WeightSpec::Kind::Rotating;
    else if (kind == "random_log_lipschitz") spec.kind = WeightSpec::Kind::RandomLogLipschitz;
    else throw std::invalid_argument("weights[].kind: unknown kind '" + kind + "'");
    spec.n = j.value("n", 1);
    if (j.contains("alpha")) spec.alpha = j.at("alpha").get<std::vector<double>>();
    if (j.contains("center")) spec.center = j.at("center").get<std::vector<double>>();
    spec.seed = j.value("seed", std::uint64_t(1));
    spec.log_amplitude = j.value("log_amplitude", 0.7);
    return spec;
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvWriter::add_row(const std::vector<std::string>& row) {
    if (row.size() != columns_.size()) throw std::invalid_argument("CsvWriter: column count mismatch");
    rows_.push_back(row);
}

void CsvWriter::add_row_values(const std::vector<double>& values) {
    std::vector<std::string> row;
    row.reserve(values.size());
    for (double v : values) row.push_back(format_value(v));
    add_row(row);
}

std::string CsvWriter::str() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
        out += "\n";
    }
    return out;
}

void CsvWriter::write(const std::string& path) const {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("CsvWriter: cannot open " + path);
    file << str();
}

CsvWriter weight_field_csv(const MatrixWeightField& w) {
    std::vector<std::string> columns{"cell"};
    for (int i = 0; i < w.n; ++i)
        for (int j = 0; j < w.n; ++j) columns.push_back("w" + std::to_string(i) + std::to_string(j));
    CsvWriter csv(std::move(columns));
    for (std::int64_t c = 0; c < w.layout.ncells(); ++c) {
        std::vector<std::string> row{std::to_string(c)};
        for (int i = 0; i < w.n; ++i)
            for (int j = 0; j < w.n; ++j) row.push_back(format_value(w.at(c)(i, j)));
        csv.add_row(row);
    }
    return csv;
}

}  // namespace mwh
