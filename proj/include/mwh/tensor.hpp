#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace mwh {

/// H = H_1 (x) ... (x) H_m with the row-major flattening convention
/// (k_1,...,k_m) -> ((k_1 n_2 + k_2) n_3 + ...) used by every module.
struct TensorSpace {
    std::vector<int> dims;

    TensorSpace() = default;
    explicit TensorSpace(std::vector<int> d) : dims(std::move(d)) {}

    int factors() const { return int(dims.size()); }
    int dim() const {
        int n = 1;
        for (int d : dims) n *= d;
        return n;
    }
    int flatten(const std::vector<int>& idx) const {
        int f = 0;
        for (std::size_t j = 0; j < dims.size(); ++j) f = f * dims[j] + idx[j];
        return f;
    }
    std::vector<int> unflatten(int flat) const {
        std::vector<int> idx(dims.size());
        for (int j = factors() - 1; j >= 0; --j) {
            idx[j] = flat % dims[j];
            flat /= dims[j];
        }
        return idx;
    }
};

/// Kronecker product of two dense matrices, consistent with the row-major
/// flattening above.
template <typename DerivedA, typename DerivedB>
Eigen::MatrixXd kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b.derived();
    return out;
}

/// (x)_j A_j acting on H, i.e. the unique matrix with
/// (tensor_matrix(A))(u_1 (x) ... (x) u_m) = (A_1 u_1) (x) ... (x) (A_m u_m).
inline Eigen::MatrixXd tensor_matrix(const std::vector<Eigen::MatrixXd>& factors) {
    if (factors.empty()) throw std::invalid_argument("tensor_matrix: empty factor list");
    Eigen::MatrixXd out = factors.front();
    for (std::size_t j = 1; j < factors.size(); ++j) out = kron(out, factors[j]);
    return out;
}

/// Elementary tensor u_1 (x) ... (x) u_m as a flat vector.
inline Eigen::VectorXd tensor_vector(const std::vector<Eigen::VectorXd>& factors) {
    if (factors.empty()) throw std::invalid_argument("tensor_vector: empty factor list");
    Eigen::VectorXd out = factors.front();
    for (std::size_t j = 1; j < factors.size(); ++j) {
        Eigen::VectorXd next(out.size() * factors[j].size());
        for (Eigen::Index i = 0; i < out.size(); ++i)
            next.segment(i * factors[j].size(), factors[j].size()) = out[i] * factors[j];
        out = std::move(next);
    }
    return out;
}

/// Operator norm (largest singular value).
template <typename Derived>
double op_norm(const Eigen::MatrixBase<Derived>& a) {
    if (a.rows() == 1 && a.cols() == 1) return std::abs(a(0, 0));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.derived());
    return svd.singularValues()(0);
}

/// Contracts u against v in the LAST factor: the result lives on the leading
/// factors, out[k_1..k_{m-1}] = sum_k u[k_1..k_{m-1},k] v[k].
Eigen::VectorXd contract_last(const TensorSpace& space, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Contracts u against v in the FIRST factor.
Eigen::VectorXd contract_first(const TensorSpace& space, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Contracts a contiguous suffix block {i..m} (1-based i) of factors against
/// the vectors vs (vs[0] pairs with factor i). Satisfies the adjunction
/// <u (x)suffix, (x)prefix> = <u, (x)all>.
Eigen::VectorXd contract_suffix(const TensorSpace& space, const Eigen::VectorXd& u, int i,
                                const std::vector<Eigen::VectorXd>& vs);

/// Contracts a contiguous prefix block {1..i}.
Eigen::VectorXd contract_prefix(const TensorSpace& space, const Eigen::VectorXd& u, int i,
                                const std::vector<Eigen::VectorXd>& vs);

}  // namespace mwh
