#include "mwh/tensor.hpp"

namespace mwh {

Eigen::VectorXd contract_last(const TensorSpace& space, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    const int m = space.factors();
    const int nk = space.dims[m - 1];
    if (v.size() != nk) throw std::invalid_argument("contract_last: size mismatch");
    const int rows = space.dim() / nk;
    Eigen::VectorXd out(rows);
    for (int r = 0; r < rows; ++r) out[r] = u.segment(std::int64_t(r) * nk, nk).dot(v);
    return out;
}

Eigen::VectorXd contract_first(const TensorSpace& space, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    const int n1 = space.dims[0];
    if (v.size() != n1) throw std::invalid_argument("contract_first: size mismatch");
    const int cols = space.dim() / n1;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(cols);
    for (int r = 0; r < n1; ++r) out += v[r] * u.segment(std::int64_t(r) * cols, cols);
    return out;
}

Eigen::VectorXd contract_suffix(const TensorSpace& space, const Eigen::VectorXd& u, int i,
                                const std::vector<Eigen::VectorXd>& vs) {
    const int m = space.factors();
    if (i < 1 || i > m + 1 || int(vs.size()) != m - i + 1)
        throw std::invalid_argument("contract_suffix: block must be a contiguous suffix");
    Eigen::VectorXd cur = u;
    TensorSpace s = space;
    for (int j = m; j >= i; --j) {
        cur = contract_last(s, cur, vs[j - i]);
        s.dims.pop_back();
    }
    return cur;
}

Eigen::VectorXd contract_prefix(const TensorSpace& space, const Eigen::VectorXd& u, int i,
                                const std::vector<Eigen::VectorXd>& vs) {
    const int m = space.factors();
    if (i < 0 || i > m || int(vs.size()) != i)
        throw std::invalid_argument("contract_prefix: block must be a contiguous prefix");
    Eigen::VectorXd cur = u;
    TensorSpace s = space;
    for (int j = 1; j <= i; ++j) {
        cur = contract_first(s, cur, vs[j - 1]);
        s.dims.erase(s.dims.begin());
    }
    return cur;
}

}  // namespace mwh
