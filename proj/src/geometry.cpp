#include "mwh/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>

namespace mwh {

Cube Cube::dilated(const Rational& lambda) const {
    // center c + lambda*(x - c): corner' = corner - (lambda-1)/2 * side.
    Cube r = *this;
    Rational off = (lambda - Rational(1)) / Rational(2) * side;
    for (auto& c : r.corner) c = c - off;
    r.side = side * lambda;
    return r;
}

bool Cube::contains(const Cube& q) const {
    for (int i = 0; i < dim(); ++i) {
        if (q.corner[i] < corner[i] || q.upper(i) > upper(i)) return false;
    }
    return true;
}

bool Cube::contains_point(const std::vector<Rational>& x) const {
    for (int i = 0; i < dim(); ++i) {
        if (x[i] < corner[i] || !(x[i] < upper(i))) return false;
    }
    return true;
}

bool Cube::disjoint_from(const Cube& q) const {
    for (int i = 0; i < dim(); ++i) {
        if (!(corner[i] < q.upper(i)) || !(q.corner[i] < upper(i))) return true;
    }
    return false;
}

Rational Cube::intersection_volume(const Cube& q) const {
    Rational vol(1);
    for (int i = 0; i < dim(); ++i) {
        Rational lo = std::max(corner[i], q.corner[i]);
        Rational hi = std::min(upper(i), q.upper(i));
        if (!(lo < hi)) return Rational(0);
        vol = vol * (hi - lo);
    }
    return vol;
}

std::vector<Cube> Cube::children() const {
    Rational h = side / Rational(2);
    std::vector<Cube> out;
    std::int64_t count = std::int64_t(1) << dim();
    for (std::int64_t mask = 0; mask < count; ++mask) {
        Cube c(corner, h);
        for (int i = 0; i < dim(); ++i) {
            if ((mask >> i) & 1) c.corner[i] = c.corner[i] + h;
        }
        out.push_back(std::move(c));
    }
    return out;
}

bool nested_or_disjoint(const Cube& a, const Cube& b) {
    return a.contains(b) || b.contains(a) || a.disjoint_from(b);
}

static Rational pow2(int level) {
    // 2^-level as an exact rational (level may be negative).
    if (level >= 0) return Rational(1, std::int64_t(1) << level);
    return Rational(std::int64_t(1) << (-level), 1);
}

Cube DyadicGrid::cube_at(int level, const std::vector<std::int64_t>& index) const {
    Rational h = pow2(level);
    std::vector<Rational> corner(d);
    for (int i = 0; i < d; ++i) corner[i] = (Rational(index[i]) + shift_at(i, level)) * h;
    return Cube(std::move(corner), h);
}

Cube DyadicGrid::cube_containing(const std::vector<Rational>& x, int level) const {
    Rational h = pow2(level);
    std::vector<std::int64_t> idx(d);
    for (int i = 0; i < d; ++i) idx[i] = (x[i] / h - shift_at(i, level)).floor();
    return cube_at(level, idx);
}

bool DyadicGrid::member(const Cube& q, int* level) const {
    // Side must be a power of two.
    Rational s = q.side;
    int lvl;
    if (s.num() == 1) {
        std::int64_t den = s.den();
        if (den & (den - 1)) return false;
        lvl = 0;
        while ((std::int64_t(1) << lvl) < den) ++lvl;
    } else if (s.den() == 1) {
        std::int64_t num = s.num();
        if (num <= 0 || (num & (num - 1))) return false;
        lvl = 0;
        while ((std::int64_t(1) << lvl) < num) ++lvl;
        lvl = -lvl;
    } else {
        return false;
    }
    for (int i = 0; i < d; ++i) {
        Rational n = q.corner[i] / q.side - shift_at(i, lvl);
        if (n.den() != 1) return false;
    }
    if (level) *level = lvl;
    return true;
}

std::vector<DyadicGrid> all_shifted_grids(int d) {
    std::vector<DyadicGrid> grids;
    std::int64_t count = 1;
    for (int i = 0; i < d; ++i) count *= 3;
    for (std::int64_t code = 0; code < count; ++code) {
        std::vector<int> shifts(d);
        std::int64_t c = code;
        for (int i = 0; i < d; ++i) {
            shifts[i] = int(c % 3) - 1;
            c /= 3;
        }
        grids.emplace_back(d, std::move(shifts));
    }
    return grids;
}

std::pair<DyadicGrid, Cube> cover_dyadic(const Cube& q) {
    const int d = q.dim();
    // Candidate levels k with side(Q) <= 2^-k <= 6 side(Q); search coarse to
    // fine so the first hit has the best ratio bound.
    double s = q.side.value();
    int k_lo = int(std::floor(-std::log2(6.0 * s))) - 1;
    int k_hi = int(std::ceil(-std::log2(s))) + 1;
    for (int k = k_hi; k >= k_lo; --k) {
        Rational h = pow2(k);
        if (h < q.side) continue;
        if (Rational(6) * q.side < h) continue;
        for (const DyadicGrid& g : all_shifted_grids(d)) {
            Cube r = g.cube_containing(q.corner, k);
            if (r.contains(q)) return {g, r};
        }
    }
    throw std::logic_error("cover_dyadic: no cover found (unreachable by construction)");
}

std::int64_t GridLayout::ncells() const {
    std::int64_t n = 1;
    for (int i = 0; i < dim(); ++i) n *= cells_per_axis();
    return n;
}

std::int64_t GridLayout::flat_index(const std::vector<std::int64_t>& idx) const {
    std::int64_t f = 0;
    for (int i = 0; i < dim(); ++i) f = f * cells_per_axis() + idx[i];
    return f;
}

std::vector<std::int64_t> GridLayout::multi_index(std::int64_t flat) const {
    std::vector<std::int64_t> idx(dim());
    for (int i = dim() - 1; i >= 0; --i) {
        idx[i] = flat % cells_per_axis();
        flat /= cells_per_axis();
    }
    return idx;
}

Cube GridLayout::cell(std::int64_t flat) const {
    auto idx = multi_index(flat);
    Rational h = cell_side();
    std::vector<Rational> corner(dim());
    for (int i = 0; i < dim(); ++i) corner[i] = box.corner[i] + Rational(idx[i]) * h;
    return Cube(std::move(corner), h);
}

std::vector<double> GridLayout::cell_center(std::int64_t flat) const {
    auto idx = multi_index(flat);
    double h = cell_side().value();
    std::vector<double> c(dim());
    for (int i = 0; i < dim(); ++i) c[i] = box.corner[i].value() + (double(idx[i]) + 0.5) * h;
    return c;
}

std::optional<std::int64_t> GridLayout::cell_of(const std::vector<Rational>& x) const {
    if (!box.contains_point(x)) return std::nullopt;
    Rational h = cell_side();
    std::vector<std::int64_t> idx(dim());
    for (int i = 0; i < dim(); ++i) idx[i] = ((x[i] - box.corner[i]) / h).floor();
    return flat_index(idx);
}

std::vector<std::int64_t> GridLayout::cells_in(const Cube& q) const {
    Rational h = cell_side();
    std::vector<std::int64_t> lo(dim()), hi(dim());
    for (int i = 0; i < dim(); ++i) {
        // smallest j with box.corner + j h >= q.corner, largest j with (j+1) h <= q.upper
        Rational a = (q.corner[i] - box.corner[i]) / h;
        Rational b = (q.upper(i) - box.corner[i]) / h;
        std::int64_t ja = a.floor();
        if (Rational(ja) < a) ++ja;
        std::int64_t jb = b.floor();
        if (Rational(jb) < b) { /* partial top cell excluded */ }
        lo[i] = std::max<std::int64_t>(ja, 0);
        hi[i] = std::min<std::int64_t>(jb, cells_per_axis());
        if (lo[i] >= hi[i]) return {};
    }
    std::vector<std::int64_t> out;
    std::vector<std::int64_t> idx(lo);
    while (true) {
        out.push_back(flat_index(idx));
        int axis = dim() - 1;
        while (axis >= 0) {
            if (++idx[axis] < hi[axis]) break;
            idx[axis] = lo[axis];
            --axis;
        }
        if (axis < 0) break;
    }
    return out;
}

std::vector<std::pair<std::int64_t, Rational>> GridLayout::cells_meeting(const Cube& q) const {
    Rational h = cell_side();
    std::vector<std::int64_t> lo(dim()), hi(dim());
    for (int i = 0; i < dim(); ++i) {
        Rational a = (q.corner[i] - box.corner[i]) / h;
        Rational b = (q.upper(i) - box.corner[i]) / h;
        lo[i] = std::max<std::int64_t>(a.floor(), 0);
        std::int64_t jb = b.floor();
        if (Rational(jb) == b) --jb;  // upper face is exclusive
        hi[i] = std::min<std::int64_t>(jb + 1, cells_per_axis());
        if (lo[i] >= hi[i]) return {};
    }
    std::vector<std::pair<std::int64_t, Rational>> out;
    std::vector<std::int64_t> idx(lo);
    while (true) {
        std::int64_t f = flat_index(idx);
        Rational v = cell(f).intersection_volume(q);
        if (Rational(0) < v) out.emplace_back(f, v);
        int axis = dim() - 1;
        while (axis >= 0) {
            if (++idx[axis] < hi[axis]) break;
            idx[axis] = lo[axis];
            --axis;
        }
        if (axis < 0) break;
    }
    return out;
}

bool GridLayout::aligned(const Cube& q) const {
    Rational h = cell_side();
    if ((q.side / h).den() != 1) return false;
    for (int i = 0; i < dim(); ++i) {
        if (((q.corner[i] - box.corner[i]) / h).den() != 1) return false;
    }
    return true;
}

std::vector<Cube> dyadic_subcubes(const Cube& box, int max_level) {
    std::vector<Cube> out{box};
    std::size_t begin = 0;
    for (int lvl = 1; lvl <= max_level; ++lvl) {
        std::size_t end = out.size();
        for (std::size_t i = begin; i < end; ++i) {
            for (auto& c : out[i].children()) out.push_back(c);
        }
        begin = end;
    }
    return out;
}

std::vector<Cube> dyadic_subcubes_with_shifts(const Cube& box, int max_level) {
    std::vector<Cube> out = dyadic_subcubes(box, max_level);
    // Grid cubes of each shifted lattice, at the box's own scales, that meet
    // the box interior. Levels are relative to the box side.
    for (const DyadicGrid& g : all_shifted_grids(box.dim())) {
        bool zero = true;
        for (int si : g.shift_thirds) zero = zero && si == 0;
        if (zero) continue;
        double s = box.side.value();
        int base = int(std::llround(-std::log2(s)));
        for (int lvl = 0; lvl <= max_level; ++lvl) {
            int k = base + lvl;
            if (std::abs(pow2(k).value() * double(std::int64_t(1) << lvl) - s) > 1e-12) continue;
            // enumerate grid cubes at level k meeting the box
            std::vector<std::int64_t> lo(box.dim()), hi(box.dim());
            Rational h = pow2(k);
            for (int i = 0; i < box.dim(); ++i) {
                lo[i] = (box.corner[i] / h - g.shift_at(i, k)).floor();
                hi[i] = ((box.upper(i)) / h - g.shift_at(i, k)).floor() + 1;
            }
            std::vector<std::int64_t> idx(lo);
            while (true) {
                Cube c = g.cube_at(k, idx);
                if (Rational(0) < c.intersection_volume(box)) out.push_back(c);
                int axis = box.dim() - 1;
                while (axis >= 0) {
                    if (++idx[axis] < hi[axis]) break;
                    idx[axis] = lo[axis];
                    --axis;
                }
                if (axis < 0) break;
            }
        }
    }
    return out;
}

namespace {

// Exact max-flow (Dinic) with int64 capacities.
struct FlowNetwork {
    struct Edge {
        int to;
        std::int64_t cap;
        int rev;
    };
    std::vector<std::vector<Edge>> adj;
    explicit FlowNetwork(int n) : adj(n) {}

    void add_edge(int u, int v, std::int64_t cap) {
        adj[u].push_back({v, cap, int(adj[v].size())});
        adj[v].push_back({u, 0, int(adj[u].size()) - 1});
    }

    std::int64_t max_flow(int s, int t) {
        std::int64_t flow = 0;
        std::vector<int> level(adj.size()), iter(adj.size());
        while (true) {
            std::fill(level.begin(), level.end(), -1);
            std::queue<int> q;
            q.push(s);
            level[s] = 0;
            while (!q.empty()) {
                int u = q.front();
                q.pop();
                for (auto& e : adj[u]) {
                    if (e.cap > 0 && level[e.to] < 0) {
                        level[e.to] = level[u] + 1;
                        q.push(e.to);
                    }
                }
            }
            if (level[t] < 0) return flow;
            std::fill(iter.begin(), iter.end(), 0);
            while (std::int64_t f = dfs(s, t, INT64_MAX, level, iter)) flow += f;
        }
    }

private:
    std::int64_t dfs(int u, int t, std::int64_t limit, std::vector<int>& level, std::vector<int>& iter) {
        if (u == t) return limit;
        for (int& i = iter[u]; i < int(adj[u].size()); ++i) {
            Edge& e = adj[u][i];
            if (e.cap > 0 && level[e.to] == level[u] + 1) {
                std::int64_t f = dfs(e.to, t, std::min(limit, e.cap), level, iter);
                if (f > 0) {
                    e.cap -= f;
                    adj[e.to][e.rev].cap += f;
                    return f;
                }
            }
        }
        return 0;
    }
};

std::int64_t lcm64(std::int64_t a, std::int64_t b) { return a / std::gcd(a, b) * b; }

// Canonical martingale witness for a nested family: E_Q = Q minus the maximal
// proper members contained in Q. Returns nullopt if masks are not integral.
std::optional<SparseFamily> greedy_nested_witness(const std::vector<Cube>& cubes, const Rational& eta,
                                                  const GridLayout& res) {
    const int n = int(cubes.size());
    for (int i = 0; i < n; ++i) {
        if (!res.aligned(cubes[i])) return std::nullopt;
        for (int j = i + 1; j < n; ++j) {
            if (cubes[i] == cubes[j]) return std::nullopt;
            if (!nested_or_disjoint(cubes[i], cubes[j])) return std::nullopt;
        }
    }
    std::vector<std::vector<std::pair<std::int64_t, Rational>>> witness(n);
    Rational cellvol = res.cell_volume();
    for (int i = 0; i < n; ++i) {
        auto cells = res.cells_in(cubes[i]);
        std::vector<char> keep(cells.size(), 1);
        std::map<std::int64_t, std::size_t> pos;
        for (std::size_t k = 0; k < cells.size(); ++k) pos[cells[k]] = k;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (cubes[i].contains(cubes[j]) && !(cubes[j] == cubes[i])) {
                for (auto c : res.cells_in(cubes[j])) {
                    auto it = pos.find(c);
                    if (it != pos.end()) keep[it->second] = 0;
                }
            }
        }
        Rational measure(0);
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (keep[k]) {
                witness[i].emplace_back(cells[k], Rational(1));
                measure = measure + cellvol;
            }
        }
        if (measure < eta * cubes[i].volume()) return std::nullopt;
    }
    SparseFamily fam;
    fam.cubes = cubes;
    fam.resolution = res;
    fam.witness = std::move(witness);
    return fam;
}

}  // namespace

std::optional<SparseFamily> is_eta_sparse(const std::vector<Cube>& cubes, const Rational& eta,
                                          const GridLayout& res) {
    if (!(Rational(0) < eta) || !(eta < Rational(1)))
        throw std::invalid_argument("is_eta_sparse: eta must lie in (0,1)");
    for (const Cube& q : cubes) {
        if (!res.aligned(q))
            throw std::invalid_argument("is_eta_sparse: cube not aligned with the witness resolution");
    }
    // A sparse collection is a set of cubes; a repeated cube cannot carry two
    // disjoint witnesses of its own.
    for (std::size_t i = 0; i < cubes.size(); ++i)
        for (std::size_t j = i + 1; j < cubes.size(); ++j)
            if (cubes[i] == cubes[j]) return std::nullopt;
    if (cubes.empty()) {
        SparseFamily fam;
        fam.resolution = res;
        fam.witness = std::vector<std::vector<std::pair<std::int64_t, Rational>>>{};
        return fam;
    }
    if (auto greedy = greedy_nested_witness(cubes, eta, res)) return greedy;

    // Exact feasibility as a transportation problem: each cube demands
    // eta |Q| of witness mass, each cell supplies its volume, a cube may only
    // draw mass from cells it contains.
    const int n = int(cubes.size());
    std::vector<std::vector<std::int64_t>> incident(n);
    std::vector<std::int64_t> used_cells;
    std::map<std::int64_t, int> cell_node;
    for (int i = 0; i < n; ++i) {
        incident[i] = res.cells_in(cubes[i]);
        for (auto c : incident[i]) {
            if (!cell_node.count(c)) {
                cell_node[c] = int(used_cells.size());
                used_cells.push_back(c);
            }
        }
    }
    Rational cellvol = res.cell_volume();
    std::int64_t denom = cellvol.den();
    std::vector<Rational> demand(n);
    for (int i = 0; i < n; ++i) {
        demand[i] = eta * cubes[i].volume();
        denom = lcm64(denom, demand[i].den());
    }
    auto scaled = [&](const Rational& r) { return r.num() * (denom / r.den()); };

    const int ncell = int(used_cells.size());
    const int source = 0, sink = 1 + n + ncell;
    FlowNetwork net(sink + 1);
    std::int64_t total = 0;
    for (int i = 0; i < n; ++i) {
        std::int64_t dem = scaled(demand[i]);
        net.add_edge(source, 1 + i, dem);
        total += dem;
        for (auto c : incident[i]) net.add_edge(1 + i, 1 + n + cell_node[c], scaled(cellvol));
    }
    for (int k = 0; k < ncell; ++k) net.add_edge(1 + n + k, sink, scaled(cellvol));

    // Keep a copy of the cube->cell edges to read the flow back.
    std::int64_t flow = net.max_flow(source, sink);
    if (flow < total) return std::nullopt;

    std::vector<std::vector<std::pair<std::int64_t, Rational>>> witness(n);
    for (int i = 0; i < n; ++i) {
        for (const auto& e : net.adj[1 + i]) {
            if (e.to >= 1 + n && e.to < 1 + n + ncell) {
                std::int64_t sent = scaled(cellvol) - e.cap;
                if (sent > 0) {
                    Rational frac = Rational(sent, denom) / cellvol;
                    witness[i].emplace_back(used_cells[e.to - 1 - n], frac);
                }
            }
        }
    }
    SparseFamily fam;
    fam.cubes = cubes;
    fam.resolution = res;
    fam.witness = std::move(witness);
    return fam;
}

bool verify_eta_witness(const SparseFamily& family, const Rational& eta) {
    if (!family.witness || !family.resolution) return false;
    const auto& res = *family.resolution;
    const auto& wit = *family.witness;
    if (wit.size() != family.cubes.size()) return false;
    Rational cellvol = res.cell_volume();
    std::map<std::int64_t, Rational> load;
    for (std::size_t i = 0; i < wit.size(); ++i) {
        Rational measure(0);
        for (const auto& [cell, frac] : wit[i]) {
            if (frac < Rational(0) || Rational(1) < frac) return false;
            if (!(Rational(0) < res.cell(cell).intersection_volume(family.cubes[i])))
                return false;  // witness cell outside its cube
            measure = measure + frac * cellvol;
            auto it = load.emplace(cell, Rational(0)).first;
            it->second = it->second + frac;
            if (Rational(1) < it->second) return false;  // overlap
        }
        if (measure < eta * family.cubes[i].volume()) return false;
    }
    return true;
}

bool is_martingale_sparse(const std::vector<Cube>& cubes, const Rational& eps) {
    const int n = int(cubes.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (cubes[i] == cubes[j])
                throw std::invalid_argument("is_martingale_sparse: duplicate cube");
            if (!nested_or_disjoint(cubes[i], cubes[j]))
                throw std::invalid_argument("is_martingale_sparse: cubes not from one dyadic grid");
        }
    }
    // Dyadic alignment of each cube within its minimal strict ancestor.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j || !cubes[j].contains(cubes[i]) || cubes[j] == cubes[i]) continue;
            Rational ratio = cubes[j].side / cubes[i].side;
            if (ratio.den() != 1 || (ratio.num() & (ratio.num() - 1)))
                throw std::invalid_argument("is_martingale_sparse: side ratio not a power of two");
            for (int a = 0; a < cubes[i].dim(); ++a) {
                if (((cubes[i].corner[a] - cubes[j].corner[a]) / cubes[i].side).den() != 1)
                    throw std::invalid_argument("is_martingale_sparse: cube misaligned in ancestor");
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        // ch(Q) = maximal members strictly inside Q.
        Rational child_volume(0);
        for (int j = 0; j < n; ++j) {
            if (j == i || !cubes[i].contains(cubes[j]) || cubes[j] == cubes[i]) continue;
            bool maximal = true;
            for (int k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                if (cubes[i].contains(cubes[k]) && !(cubes[k] == cubes[i]) && cubes[k].contains(cubes[j]) &&
                    !(cubes[k] == cubes[j])) {
                    maximal = false;
                    break;
                }
            }
            if (maximal) child_volume = child_volume + cubes[j].volume();
        }
        if (eps * cubes[i].volume() < child_volume) return false;
    }
    return true;
}

}  // namespace mwh
