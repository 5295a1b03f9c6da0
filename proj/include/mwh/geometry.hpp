#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mwh/rational.hpp"

namespace mwh {

/// Axis-parallel half-open cube [corner, corner + side)^d with exact
/// rational coordinates.
struct Cube {
    std::vector<Rational> corner;
    Rational side;

    Cube() = default;
    Cube(std::vector<Rational> c, Rational s) : corner(std::move(c)), side(std::move(s)) {}

    int dim() const { return int(corner.size()); }
    Rational upper(int axis) const { return corner[axis] + side; }
    Rational volume() const { return side.pow(dim()); }
    double volume_d() const { return volume().value(); }

    /// Dilation about the center: side -> lambda * side.
    Cube dilated(const Rational& lambda) const;
    Cube tripled() const { return dilated(Rational(3)); }

    bool contains(const Cube& q) const;
    bool contains_point(const std::vector<Rational>& x) const;
    bool disjoint_from(const Cube& q) const;
    bool operator==(const Cube& q) const { return corner == q.corner && side == q.side; }

    /// |this ∩ q| as an exact rational.
    Rational intersection_volume(const Cube& q) const;

    /// The 2^d dyadic children.
    std::vector<Cube> children() const;
};

/// Returns true if the cubes are nested (either way) or disjoint.
bool nested_or_disjoint(const Cube& a, const Cube& b);

/// One of the 3^d shifted dyadic grids on R^d. Level-k cubes have side 2^-k
/// and corners 2^-k (n + sigma_k * shift/3), n in Z^d, where sigma_k
/// alternates sign with the level so that consecutive levels nest.
struct DyadicGrid {
    int d = 1;
    std::vector<int> shift_thirds;  // entries in {-1, 0, +1}

    DyadicGrid() = default;
    DyadicGrid(int dim, std::vector<int> shifts) : d(dim), shift_thirds(std::move(shifts)) {}
    static DyadicGrid standard(int dim) { return DyadicGrid(dim, std::vector<int>(dim, 0)); }

    Rational shift_at(int axis, int level) const {
        int sigma = (level % 2 == 0) ? 1 : -1;
        return Rational(sigma * shift_thirds[axis], 3);
    }

    Cube cube_at(int level, const std::vector<std::int64_t>& index) const;

    /// The level-`level` grid cube containing x (levels may be negative).
    Cube cube_containing(const std::vector<Rational>& x, int level) const;

    /// True if q is a cube of this grid; fills *level when requested.
    bool member(const Cube& q, int* level = nullptr) const;
};

/// All 3^d shifted grids in dimension d.
std::vector<DyadicGrid> all_shifted_grids(int d);

/// 3^d-lattice cover: a grid cube R with Q ⊆ R and |R| <= 6^d |Q|.
std::pair<DyadicGrid, Cube> cover_dyadic(const Cube& q);

/// Uniform subdivision of a box into 2^level cells per axis. Provides the
/// cell indexing used by every discretized field.
struct GridLayout {
    Cube box;
    int level = 0;

    GridLayout() = default;
    GridLayout(Cube b, int lvl) : box(std::move(b)), level(lvl) {}

    int dim() const { return box.dim(); }
    std::int64_t cells_per_axis() const { return std::int64_t(1) << level; }
    std::int64_t ncells() const;
    Rational cell_side() const { return box.side / Rational(cells_per_axis()); }
    Rational cell_volume() const { return cell_side().pow(dim()); }
    double cell_volume_d() const { return cell_volume().value(); }

    std::int64_t flat_index(const std::vector<std::int64_t>& idx) const;
    std::vector<std::int64_t> multi_index(std::int64_t flat) const;
    Cube cell(std::int64_t flat) const;
    std::vector<double> cell_center(std::int64_t flat) const;
    std::optional<std::int64_t> cell_of(const std::vector<Rational>& x) const;

    /// Cells entirely contained in q.
    std::vector<std::int64_t> cells_in(const Cube& q) const;
    /// Cells meeting q, with exact overlap volumes.
    std::vector<std::pair<std::int64_t, Rational>> cells_meeting(const Cube& q) const;
    /// True if q is a union of cells of this layout (lattice-aligned).
    bool aligned(const Cube& q) const;

    bool operator==(const GridLayout& o) const { return box == o.box && level == o.level; }
};

/// All dyadic subcubes of `box` with level in [0, max_level].
std::vector<Cube> dyadic_subcubes(const Cube& box, int max_level);

/// Dyadic subcubes of `box` plus, for each of the 3^d shifted grids, the grid
/// cubes at matching levels that meet the box.
std::vector<Cube> dyadic_subcubes_with_shifts(const Cube& box, int max_level);

/// Finite cube family with optional sparseness witnesses stored as per-cube
/// cell masks (fractions of cells, exact rationals) at a fixed resolution.
struct SparseFamily {
    std::vector<Cube> cubes;
    std::optional<GridLayout> resolution;
    // witness[i] lists (cell, fraction of the cell assigned to cubes[i]).
    std::optional<std::vector<std::vector<std::pair<std::int64_t, Rational>>>> witness;
};

/// Decides eta-sparseness over the given resolution and constructs a witness
/// when one exists. Nested dyadic families get the canonical martingale
/// witness E_Q = Q minus its maximal proper subcubes; the general case runs
/// an exact max-flow feasibility over (cube, cell) incidences.
std::optional<SparseFamily> is_eta_sparse(const std::vector<Cube>& cubes, const Rational& eta,
                                          const GridLayout& resolution);

/// Checks a stored witness: containment, pairwise disjointness, and
/// |E_Q| >= eta |Q| for every cube. Exact.
bool verify_eta_witness(const SparseFamily& family, const Rational& eta);

/// Martingale condition: sum of maximal strict subcubes' volumes <= eps |Q|
/// for every Q. Throws std::invalid_argument if the family is not a
/// duplicate-free subset of a single dyadic structure.
bool is_martingale_sparse(const std::vector<Cube>& cubes, const Rational& eps);

}  // namespace mwh
