#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mwh/convex.hpp"
#include "mwh/geometry.hpp"
#include "mwh/muckenhoupt.hpp"
#include "mwh/weights.hpp"

namespace mwh {

using nlohmann::json;

/// Rational coordinates serialize as [mantissa, exp] (value = mantissa 2^exp)
/// when dyadic and as {"num":..., "den":...} otherwise.
json rational_to_json(const Rational& r);
Rational rational_from_json(const json& j);

json cube_to_json(const Cube& q);
Cube cube_from_json(const json& j);

json sparse_family_to_json(const SparseFamily& fam);

/// Bodies as tagged unions; matrices as row-major arrays of decimal floats.
json body_to_json(const SymmetricConvexBody& body);
SymmetricConvexBody body_from_json(const json& j);

json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);

WeightSpec weight_spec_from_json(const json& j);

/// 12-significant-digit decimal rendering used by every CSV emitter.
std::string format_value(double v);

/// CSV with a fixed column order; values rendered via format_value.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> columns);
    void add_row(const std::vector<std::string>& row);
    void add_row_values(const std::vector<double>& values);
    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Weight field export: one row per cell with the row-major matrix entries.
CsvWriter weight_field_csv(const MatrixWeightField& w);

}  // namespace mwh
