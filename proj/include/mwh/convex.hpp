#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mwh/geometry.hpp"
#include "mwh/random.hpp"
#include "mwh/tensor.hpp"

namespace mwh {

/// Compact symmetric convex body, tagged by construction:
///   Ellipsoid  A * (closed unit ball), A symmetric PSD
///   Hull       conv(±points)
///   Sum        Minkowski sum of bodies
///   Scaled     c * body, c >= 0
/// Support functions are exact for every tag; only suprema over directions
/// (norms, memberships of composite bodies) are net-sampled.
struct SymmetricConvexBody {
    enum class Tag { Ellipsoid, Hull, Sum, Scaled };

    Tag tag = Tag::Hull;
    int n = 0;                                  // ambient dimension
    Eigen::MatrixXd ellipsoid_a;                // Ellipsoid
    std::vector<Eigen::VectorXd> hull_points;   // Hull
    std::vector<SymmetricConvexBody> summands;  // Sum
    double scale = 1.0;                         // Scaled
    std::vector<SymmetricConvexBody> inner;     // Scaled (exactly one entry)
};

SymmetricConvexBody make_ellipsoid(const Eigen::MatrixXd& a);
SymmetricConvexBody make_hull(std::vector<Eigen::VectorXd> points);
SymmetricConvexBody make_point(const Eigen::VectorXd& u);  // conv{±u}
SymmetricConvexBody make_sum(std::vector<SymmetricConvexBody> bodies);
SymmetricConvexBody make_scaled(double c, SymmetricConvexBody body);
SymmetricConvexBody make_zonotope(const std::vector<Eigen::VectorXd>& generators);
SymmetricConvexBody unit_ball(int n);

/// Exact support function h_B(v) = sup_{u in B} <u, v>.
double support(const SymmetricConvexBody& body, const Eigen::VectorXd& v);

/// A point of B attaining the support in direction v.
Eigen::VectorXd support_argmax(const SymmetricConvexBody& body, const Eigen::VectorXd& v);

/// Deterministic symmetric direction net containing the standard basis.
/// Exact coverage in 1d, uniform angles in 2d, Fibonacci sphere in 3d,
/// seed-reproducible low-discrepancy vectors beyond.
std::vector<Eigen::VectorXd> direction_net(int n, int count);

/// Default net size per dimension (shared by membership and norm sampling).
int default_net_size(int n);

/// sup_{u in B} |u|: exact for ellipsoids, hulls, scaled copies and 2d
/// bodies; direction-sampled for other Minkowski sums. `used_directions`
/// reports the sampling effort (0 when exact).
double body_norm(const SymmetricConvexBody& body, int* used_directions = nullptr);

/// Convex polygon vertices (ccw) of a 2d body; nullopt when the body has an
/// ellipsoidal component.
std::optional<std::vector<Eigen::Vector2d>> polygon2d(const SymmetricConvexBody& body);

/// Finite symmetric point set whose hull equals the body, when available.
std::optional<std::vector<Eigen::VectorXd>> vertex_points(const SymmetricConvexBody& body, int cap = 4096);

/// Minimum volume enclosing ellipsoid {x : x^T lambda^{-1} x <= kappa} of a
/// symmetric point cloud, by Khachiyan coordinate ascent with away steps.
/// The inner inclusion {x : x^T lambda^{-1} x <= 1} ⊆ conv(±points) holds for
/// every barycentric weight vector, so only the outer factor depends on the
/// achieved kappa.
struct MveeResult {
    Eigen::MatrixXd lambda;      // sum_i w_i x_i x_i^T
    Eigen::MatrixXd lambda_inv;  // ridge-regularized inverse
    double kappa = 0.0;          // max_i x_i^T lambda_inv x_i at termination
    int iterations = 0;
    bool converged = false;
    std::vector<int> null_directions;  // eigen directions below the floor
};

MveeResult mvee(const std::vector<Eigen::VectorXd>& points, double tol = 1e-6, int max_iter = 100000);

/// John-type two-sided ellipsoid: c_in * A * ball ⊆ B ⊆ c_out * A * ball,
/// with c_in = 1 certified exactly and c_out = sqrt(kappa) certified on the
/// body's vertices (exact_outer) or on sampled boundary points.
struct JohnEllipsoid {
    Eigen::MatrixXd a;
    double c_in = 1.0;
    double c_out = 1.0;
    bool exact_outer = false;
    int sample_count = 0;
    std::vector<int> null_directions;
};

JohnEllipsoid john_ellipsoid(const SymmetricConvexBody& body);

/// Distance from target to conv(atoms) together with the optimal convex
/// coefficients, by away-step Frank-Wolfe on the simplex.
struct HullProjection {
    double distance = 0.0;
    std::vector<double> theta;        // convex coefficients over atoms
    Eigen::VectorXd point;            // sum theta_k atoms_k
    Eigen::VectorXd separating;       // outward normal when distance > 0
};

HullProjection project_to_hull(const std::vector<Eigen::VectorXd>& atoms, const Eigen::VectorXd& target,
                               double tol = 1e-12, int max_iter = 20000);

/// Writes target as sum theta_k u_k with theta on the simplex and at most
/// n+1 terms. Throws std::domain_error (with a separating direction in the
/// message) when target lies outside conv(points).
struct CaratheodoryTerm {
    double theta;
    Eigen::VectorXd point;
};
std::vector<CaratheodoryTerm> caratheodory_decompose(const std::vector<Eigen::VectorXd>& points,
                                                     const Eigen::VectorXd& target, double tol = 1e-10);

/// Net-certified membership: <u, v> <= h_B(v) (1+tol) over a deterministic
/// net plus the direction of u itself; exact for single ellipsoids.
bool contains(const SymmetricConvexBody& body, const Eigen::VectorXd& u, double tol);

/// Piecewise-constant body-valued field on a grid.
struct BodyField {
    GridLayout layout;
    std::vector<SymmetricConvexBody> cells;

    const SymmetricConvexBody& at(std::int64_t cell) const { return cells[std::size_t(cell)]; }
};

/// Aumann average <F>_Q: for piecewise-constant fields this is exactly the
/// Minkowski combination (1/|Q|) sum_cells |cell ∩ Q| F(cell).
SymmetricConvexBody aumann_average(const BodyField& field, const Cube& q);

/// Support of K( B_1 (x) ... (x) B_m ) at v in the tensor space: the maximum
/// of |<u_1 (x) ... (x) u_m, v>| over u_j in B_j. Exact via vertex
/// enumeration for bilinear polytopal factors, alternating ascent with
/// restarts otherwise. Optional witnesses w in H contribute |<w, v>| lower
/// bounds (used to certify membership of known selections).
double product_support(const std::vector<SymmetricConvexBody>& factors, const TensorSpace& space,
                       const Eigen::VectorXd& v, int restarts = 4,
                       const std::vector<Eigen::VectorXd>* witnesses = nullptr);

/// One tensor-product body K( B_1 (x) ... (x) B_m ) with cached factor
/// vertices (bilinear supports become exact finite maxima) and a membership
/// witness, the tensor of factor selections.
struct ProductGenerator {
    std::vector<SymmetricConvexBody> factors;
    Eigen::VectorXd witness;
    std::vector<std::optional<std::vector<Eigen::VectorXd>>> factor_vertices;

    void cache_vertices(int cap = 512);
    double support(const TensorSpace& space, const Eigen::VectorXd& v) const;
};

}  // namespace mwh
