#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mwh/convex.hpp"
#include "mwh/fields.hpp"
#include "mwh/geometry.hpp"
#include "mwh/tensor.hpp"

namespace mwh {

/// Multilinear kernel with a doubling modulus of continuity. The size bound
/// |K| <= C_K / (sum of pairwise distances)^{md} and the monotone doubling
/// behaviour of omega are spot-checked by generators/tests, not assumed.
struct KernelSpec {
    int m = 1;
    int d = 1;
    std::function<double(const std::vector<double>&, const std::vector<std::vector<double>>&)> eval;
    std::function<double(double)> omega;
    double doubling = 1.0;
    double c_k = 1.0;
    double dini = 0.0;
    std::string name;
};

/// Integral of omega(t)/t over (0, 1] by geometric-dyadic quadrature with a
/// Richardson consistency check; throws std::domain_error when the dyadic
/// block sums fail to decay (divergent modulus).
double dini_integral(const std::function<double(double)>& omega, int level = 12);

/// m-linear Riesz transform kernel of the first coordinate, with its
/// modulus omega(t) = t and the analytic size/smoothness constant.
KernelSpec riesz_kernel(int m, int d);

/// C_{m,d} of the Riesz non-degeneracy example.
double riesz_cmd(int m, int d);

/// Discrete principal-value application: cell-midpoint quadrature over all
/// support tuples, skipping tuples that touch the target cell.
Eigen::VectorXd apply_czo(const KernelSpec& k, const std::vector<const VectorField*>& f, std::int64_t xcell);

/// Full field of values (rows indexed by the tensor space of the inputs).
VectorField apply_czo_field(const KernelSpec& k, const std::vector<const VectorField*>& f);

/// Scalar convenience wrappers.
double apply_czo_scalar(const KernelSpec& k, const std::vector<const ScalarField*>& f, std::int64_t xcell);
ScalarField apply_czo_scalar_field(const KernelSpec& k, const std::vector<const ScalarField*>& f);

/// Grand maximal operator over an explicit family: per cell x the maximum
/// over family cubes Q containing x of ess sup_{xi in Q} |T(f)(xi) -
/// T(f 1_{3Q})(xi)|. Cubes whose triple leaves the domain box are skipped
/// and reported through `skipped`.
ScalarField grand_maximal(const KernelSpec& k, const std::vector<const ScalarField*>& f,
                          const std::vector<Cube>& cubes, std::vector<int>* skipped = nullptr);

/// Localized variant at Q0 over the dyadic subcubes of Q0 down to grid
/// resolution: sup_{Q ⊆ Q0, Q ∋ x} ess sup_{xi in Q} |T(f 1_{3Q0})(xi) -
/// T(f 1_{3Q})(xi)|.
ScalarField grand_maximal_localized(const KernelSpec& k, const std::vector<const ScalarField*>& f,
                                    const Cube& q0);

/// Calderon-Zygmund decomposition at height lambda over the maximal dyadic
/// cubes with <|f|>_Q > lambda.
struct CzDecomposition {
    ScalarField good;
    std::vector<Cube> cubes;
    std::vector<ScalarField> bad;  // one b_Q per cube, supported in it
    double lambda = 0.0;

    ScalarField bad_sum() const;
};
CzDecomposition cz_decompose(const ScalarField& f, double lambda);

/// Pointwise sparse domination of the (extended) operator. The stopping
/// family `base` is a martingale 1/2-sparse subfamily of the dyadic tree of
/// q0; `dilated` carries the tripled cubes with the inherited witnesses
/// (eta = 1/(2 3^d)); `constant` is the least scalar constant with
/// |T(f)(x)| <= C sum_{Q in base} prod_j <|f_j|>_{3Q} 1_{3Q}(x) on every
/// grid cell of q0.
struct SparseDomination {
    std::vector<Cube> base;
    std::vector<Cube> dilated;
    double constant = 0.0;
    double threshold_c1 = 0.0;  // largest bisected threshold constant used
    int depth = 0;
    bool aborted = false;
    std::string diagnostics;
};

SparseDomination sparse_dominate(const KernelSpec& k, const std::vector<const ScalarField*>& f,
                                 const Cube& q0, double eps = 0.5);

/// Vector-valued variant: the scalar algorithm runs per John-basis component
/// of the factor averages; `constant` is fitted from net-certified
/// membership T~(f)(x) in C * A_S(f)(x).
SparseDomination sparse_dominate_vector(const KernelSpec& k, const std::vector<const VectorField*>& f,
                                        const Cube& q0, double eps = 0.5);

/// Convex-body sparse operator A_S(F)(x): Minkowski sum over the cubes
/// containing x of K((x)_j <F_j>_Q); supports are exact finite sums.
class ConvexSparseOperator {
public:
    ConvexSparseOperator(GridLayout layout, TensorSpace space, std::vector<ProductGenerator> terms,
                         std::vector<std::vector<int>> cell_terms)
        : layout_(std::move(layout)),
          space_(std::move(space)),
          terms_(std::move(terms)),
          cell_terms_(std::move(cell_terms)) {}

    const GridLayout& layout() const { return layout_; }
    double support_at(std::int64_t cell, const Eigen::VectorXd& v) const;
    bool contains_at(std::int64_t cell, const Eigen::VectorXd& u, double tol) const;
    /// Least C with u in C * body(cell), certified over the net.
    double gauge_at(std::int64_t cell, const Eigen::VectorXd& u) const;

private:
    GridLayout layout_;
    TensorSpace space_;
    std::vector<ProductGenerator> terms_;
    std::vector<std::vector<int>> cell_terms_;
};

ConvexSparseOperator convex_sparse_operator(const std::vector<const VectorField*>& f,
                                            const std::vector<Cube>& cubes);

/// Directional non-degeneracy report for the Riesz example on a concrete
/// grid: (a) the unit lower bound over random factorizations of 1_{Q'},
/// (b) the residual-kernel bound |S| <= |Q|^{-m} over all cell tuples.
struct NondegeneracyReport {
    double c_md = 0.0;
    Cube q_prime;
    double min_lower = 0.0;   // min over x cells and trials of C_{m,d} |T(h)(x)|
    double max_s_ratio = 0.0; // max |S(x,y)| |Q|^m
    bool part_b_pass = false;
};
NondegeneracyReport nondegeneracy_check(const KernelSpec& k, const GridLayout& layout, const Cube& q,
                                        double alpha, int trials = 8, std::uint64_t seed = 7);

}  // namespace mwh
