#pragma once

#include <vector>

#include "mwh/convex.hpp"
#include "mwh/fields.hpp"
#include "mwh/tensor.hpp"
#include "mwh/weights.hpp"

namespace mwh {

/// Cube-family incidence: which family cubes contain each cell. All maximal
/// operators range over explicit finite families.
struct FamilyIncidence {
    std::vector<Cube> cubes;
    std::vector<std::vector<int>> containing;  // per cell, indices into cubes

    FamilyIncidence(const GridLayout& layout, std::vector<Cube> family);
};

/// Hardy-Littlewood eta-maximal function over the family:
/// M_eta f(x) = max_{Q ∋ x} <|f|^eta>_Q^{1/eta}.
ScalarField eta_maximal(const ScalarField& f, double eta, const std::vector<Cube>& cubes);

/// m-(sub)linear maximal function max_{Q ∋ x} prod_j <|f_j|>_Q.
ScalarField multilinear_maximal(const std::vector<const ScalarField*>& f, const std::vector<Cube>& cubes);

/// Christ-Goldberg style weighted maximal operator on vector fields:
/// per cell x the supremum over containing cubes of
/// prod_j <|W_j(x) f_j(y)|^{r_j}>_{Q,y}^{1/r_j}.
ScalarField weighted_maximal(const std::vector<const VectorField*>& f,
                             const std::vector<const MatrixWeightField*>& w, const std::vector<double>& r,
                             const std::vector<Cube>& cubes);

/// Body-field variant, using |W_j(x) F_j(y)| = sup_{u in F_j(y)} |W_j(x) u|.
ScalarField weighted_maximal_bodies(const std::vector<const BodyField*>& f,
                                    const std::vector<const MatrixWeightField*>& w,
                                    const std::vector<double>& r, const std::vector<Cube>& cubes);

/// Auxiliary maximal operator with the inverse reducing matrices in place of
/// W_j(x): prod_j <|(A_{W_j^{-1},Q,t_j})^{-1} f_j|^{r_j}>_Q^{1/r_j}.
ScalarField auxiliary_maximal(const std::vector<const VectorField*>& f,
                              const std::vector<const MatrixWeightField*>& w, const std::vector<double>& r,
                              const std::vector<double>& t, const std::vector<Cube>& cubes);

/// Lazily-convexified value of M^K: per cell, the symmetric hull of the
/// union of the generators of the containing cubes.
class ConvexBodyMaximal {
public:
    ConvexBodyMaximal(GridLayout layout, TensorSpace space, std::vector<ProductGenerator> generators,
                      std::vector<std::vector<int>> cell_generators)
        : layout_(std::move(layout)),
          space_(std::move(space)),
          generators_(std::move(generators)),
          cell_generators_(std::move(cell_generators)) {}

    const GridLayout& layout() const { return layout_; }
    const TensorSpace& space() const { return space_; }
    const std::vector<int>& generators_at(std::int64_t cell) const {
        return cell_generators_[std::size_t(cell)];
    }
    const ProductGenerator& generator(int idx) const { return generators_[std::size_t(idx)]; }

    /// Exact support function of the cell body (max over generators).
    double support_at(std::int64_t cell, const Eigen::VectorXd& v) const;

    /// Sampled symmetric-hull representation of the cell body.
    SymmetricConvexBody hull_at(std::int64_t cell, int directions = 0) const;

    /// sup over generators of the product of factor norms (equals the body
    /// norm of the cell value up to the Aumann dimensional factor).
    double norm_at(std::int64_t cell) const;

    /// Net-certified membership of u in the cell body.
    bool contains_at(std::int64_t cell, const Eigen::VectorXd& u, double tol) const;

private:
    GridLayout layout_;
    TensorSpace space_;
    std::vector<ProductGenerator> generators_;
    std::vector<std::vector<int>> cell_generators_;
};

ConvexBodyMaximal convex_body_maximal(const std::vector<const BodyField*>& f, const std::vector<Cube>& cubes);
ConvexBodyMaximal convex_body_maximal(const std::vector<const VectorField*>& f, const std::vector<Cube>& cubes);

/// Weak norm sup_u |1_{{x : u in F(x)}} u|_{L^p_W} over the candidate
/// vectors (generator witnesses and their scalings are always included).
double weak_norm(const ConvexBodyMaximal& f, const MatrixWeightField& w, double p,
                 const std::vector<Eigen::VectorXd>& candidates = {}, double tol = 1e-9);

/// Plain body-field weak norm over explicit candidates.
double weak_norm(const BodyField& f, const MatrixWeightField& w, double p,
                 const std::vector<Eigen::VectorXd>& candidates, double tol = 1e-9);

/// Stopping-time sparsification of M^K along the John bases of the factor
/// averages, threshold (2n)^m. The returned family is martingale 1/2-sparse
/// and dominates the input family's maximal function with the stated factor.
struct MaximalSparseResult {
    std::vector<Cube> family;
    double factor;  // n^{3/2} (2n)^m
};
MaximalSparseResult maximal_sparse_dominate(const std::vector<const VectorField*>& f,
                                            const std::vector<Cube>& family);

/// Auxiliary operator N_{Q,F}(x): sup over R in F(Q) containing x of
/// prod_j |W_j(x) A_{W_j^{-1},R,t_j}|.
ScalarField auxiliary_n_operator(const Cube& q, const std::vector<Cube>& family,
                                 const std::vector<const MatrixWeightField*>& w,
                                 const std::vector<double>& t);

}  // namespace mwh
