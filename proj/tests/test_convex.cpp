#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mwh/convex.hpp"
#include "mwh/random.hpp"

using namespace mwh;

namespace {

SymmetricConvexBody random_hull(Rng& rng, int n, int npoints) {
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < npoints; ++i) pts.push_back(rng.normal_vector(n));
    return make_hull(std::move(pts));
}

Cube unit_interval() { return Cube({Rational(0)}, Rational(1)); }

}  // namespace

TEST_CASE("support values on simple bodies") {
    Eigen::MatrixXd d21 = Eigen::Vector2d(2, 1).asDiagonal();
    CHECK(support(make_ellipsoid(d21), Eigen::Vector2d(1, 0)) == doctest::Approx(2.0));
    CHECK(support(make_hull({Eigen::Vector2d(1, 1)}), Eigen::Vector2d(1, 0)) == doctest::Approx(1.0));
    auto two_balls = make_sum({unit_ball(2), unit_ball(2)});
    CHECK(support(two_balls, Eigen::Vector2d(0, 1)) == doctest::Approx(2.0));
}

TEST_CASE("support is even and subadditive") {
    Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        SymmetricConvexBody body;
        switch (trial % 3) {
            case 0: body = make_ellipsoid(rng.spd_matrix(3, 0.2, 2.0)); break;
            case 1: body = random_hull(rng, 3, 5); break;
            default:
                body = make_sum({make_ellipsoid(rng.spd_matrix(3, 0.2, 2.0)), random_hull(rng, 3, 4)});
        }
        Eigen::VectorXd v = rng.normal_vector(3), w = rng.normal_vector(3);
        double hv = support(body, v);
        CHECK(support(body, -v) == doctest::Approx(hv).epsilon(1e-9));
        CHECK(support(body, v + w) <= hv + support(body, w) + 1e-9);
        // the reported argmax attains the support
        Eigen::VectorXd arg = support_argmax(body, v);
        CHECK(arg.dot(v) == doctest::Approx(hv).epsilon(1e-9));
    }
}

TEST_CASE("body_norm exact cases") {
    CHECK(body_norm(make_ellipsoid(Eigen::Vector2d(2, 1).asDiagonal())) == doctest::Approx(2.0));
    CHECK(body_norm(make_hull({Eigen::Vector2d(3, 4)})) == doctest::Approx(5.0));
    int dirs = 0;
    double v = body_norm(make_sum({unit_ball(2), make_point(Eigen::Vector2d(1, 0))}), &dirs);
    // dense direction sweep oracle: sup_theta (1 + |cos theta|) = 2
    CHECK(v == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("polygon2d matches support functions on zonotopes") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Eigen::VectorXd> gens;
        int k = 2 + int(rng.uniform_int(6));
        for (int i = 0; i < k; ++i) gens.push_back(rng.normal_vector(2));
        auto z = make_zonotope(gens);
        auto poly = polygon2d(z);
        REQUIRE(poly.has_value());
        for (int t = 0; t < 20; ++t) {
            Eigen::VectorXd v = rng.unit_vector(2);
            double hp = 0.0;
            for (const auto& p : *poly) hp = std::max(hp, std::abs(p.dot(v)));
            CHECK(hp == doctest::Approx(support(z, v)).epsilon(1e-10));
        }
    }
}

TEST_CASE("john ellipsoid of the cross polytope is a disk") {
    auto cross = make_hull({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)});
    JohnEllipsoid j = john_ellipsoid(cross);
    // symmetry forces a disk; the inscribed disk has radius 1/sqrt(2)
    double r = j.a(0, 0);
    CHECK(j.a(1, 1) == doctest::Approx(r).epsilon(1e-6));
    CHECK(std::abs(j.a(0, 1)) <= 1e-8);
    CHECK(r == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
    CHECK(j.c_in == doctest::Approx(1.0));
    CHECK(j.c_out <= std::sqrt(2.0) * (1 + 1e-3));
    CHECK(j.exact_outer);
    // two-sided containment: r*ball inside the cross, vertices inside c_out*A*ball
    CHECK(r <= support(cross, Eigen::Vector2d(1, 1).normalized()) + 1e-9);
    CHECK((j.a.inverse() * Eigen::Vector2d(1, 0)).norm() <= j.c_out * (1 + 1e-9));
}

TEST_CASE("john ellipsoid of the square") {
    auto square = make_hull({Eigen::Vector2d(1, 1), Eigen::Vector2d(1, -1)});
    JohnEllipsoid j = john_ellipsoid(square);
    CHECK(j.c_out <= std::sqrt(2.0) * (1 + 1e-3));
    // inner ellipsoid contains the unit disk direction-wise: A approx sqrt(2) rotation-free
    for (int k = 0; k < 8; ++k) {
        double th = M_PI * k / 8.0;
        Eigen::VectorXd v(2);
        v << std::cos(th), std::sin(th);
        CHECK((j.a * v).norm() <= support(square, v) + 1e-6);
    }
}

TEST_CASE("john certificates on random hulls") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 2 + int(rng.uniform_int(2));
        auto body = random_hull(rng, n, 4 + int(rng.uniform_int(5)));
        JohnEllipsoid j = john_ellipsoid(body);
        REQUIRE(j.null_directions.empty());
        CHECK(j.c_out / j.c_in <= std::sqrt(double(n)) * (1 + 1e-3));

        // every hull vertex lies in c_out * A * ball (exact membership oracle)
        Eigen::MatrixXd inv = j.a.inverse();
        auto verts = vertex_points(body);
        REQUIRE(verts.has_value());
        for (const auto& p : *verts) CHECK((inv * p).norm() <= j.c_out * (1 + 1e-9));

        // c_in * A * (sampled unit vectors) lies in the body: hull membership
        for (const auto& v : direction_net(n, 40)) {
            Eigen::VectorXd u = j.c_in * (j.a * v);
            auto proj = project_to_hull(*verts, u);
            CHECK(proj.distance <= 1e-7 * (1.0 + u.norm()));
        }
    }
}

TEST_CASE("caratheodory on the square") {
    std::vector<Eigen::VectorXd> pts{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 1),
                                     Eigen::Vector2d(0, 0)};
    auto terms = caratheodory_decompose(pts, Eigen::Vector2d(0.5, 0.5));
    CHECK(terms.size() <= 3);
    Eigen::VectorXd recon = Eigen::VectorXd::Zero(2);
    double total = 0.0;
    for (const auto& t : terms) {
        recon += t.theta * t.point;
        total += t.theta;
        CHECK(t.theta >= 0.0);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((recon - Eigen::Vector2d(0.5, 0.5)).norm() <= 1e-10);

    // a vertex decomposes as itself
    auto vertex = caratheodory_decompose(pts, Eigen::Vector2d(1, 1));
    CHECK(vertex.size() == 1);
    CHECK(vertex.front().theta == doctest::Approx(1.0));
}

TEST_CASE("caratheodory on random interior targets") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + int(rng.uniform_int(3));  // up to R^4
        int k = n + 2 + int(rng.uniform_int(4));
        std::vector<Eigen::VectorXd> pts;
        for (int i = 0; i < k; ++i) pts.push_back(rng.normal_vector(n));
        // random convex combination as target
        Eigen::VectorXd weights(k);
        for (int i = 0; i < k; ++i) weights[i] = rng.uniform();
        weights /= weights.sum();
        Eigen::VectorXd target = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < k; ++i) target += weights[i] * pts[i];

        auto terms = caratheodory_decompose(pts, target);
        CHECK(int(terms.size()) <= n + 1);
        Eigen::VectorXd recon = Eigen::VectorXd::Zero(n);
        double total = 0.0;
        for (const auto& t : terms) {
            CHECK(t.theta >= 0.0);
            recon += t.theta * t.point;
            total += t.theta;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
        CHECK((recon - target).norm() <= 1e-10 * (1.0 + target.norm()));
    }
}

TEST_CASE("caratheodory rejects outside targets with a separator") {
    std::vector<Eigen::VectorXd> pts{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)};
    CHECK_THROWS_AS(caratheodory_decompose(pts, Eigen::Vector2d(2, 2)), std::domain_error);
}

TEST_CASE("membership certificates") {
    CHECK(contains(unit_ball(2), Eigen::Vector2d(0.5, 0), 0.0));
    CHECK(!contains(unit_ball(2), Eigen::Vector2d(1.1, 0), 0.0));
    CHECK_THROWS_AS(contains(unit_ball(2), Eigen::Vector2d(0, 0), -1.0), std::invalid_argument);

    // boundary point of a Minkowski sum of two ellipsoids
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        auto e1 = make_ellipsoid(rng.spd_matrix(2, 0.3, 2.0));
        auto e2 = make_ellipsoid(rng.spd_matrix(2, 0.3, 2.0));
        auto sum = make_sum({e1, e2});
        Eigen::VectorXd v = rng.unit_vector(2);
        Eigen::VectorXd u = support_argmax(sum, v);
        CHECK(contains(sum, u, 1e-6));
        CHECK(!contains(sum, 1.5 * u, 1e-6));
    }
}

TEST_CASE("aumann average of simple fields") {
    GridLayout layout(unit_interval(), 1);  // two cells
    // constant field: average is the body itself
    BodyField constant{layout, {unit_ball(2), unit_ball(2)}};
    auto avg = aumann_average(constant, unit_interval());
    for (const auto& v : direction_net(2, 64))
        CHECK(support(avg, v) == doctest::Approx(1.0).epsilon(1e-12));

    // ball on the left half, origin on the right half: half a ball
    BodyField halved{layout, {unit_ball(2), make_point(Eigen::Vector2d(0, 0))}};
    auto half = aumann_average(halved, unit_interval());
    for (const auto& v : direction_net(2, 64))
        CHECK(support(half, v) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("aumann two-cell average equals the midpoint Minkowski sum") {
    Rng rng(41);
    GridLayout layout(unit_interval(), 1);
    for (int trial = 0; trial < 20; ++trial) {
        auto b0 = make_ellipsoid(rng.spd_matrix(2, 0.3, 2.0));
        auto b1 = random_hull(rng, 2, 4);
        BodyField field{layout, {b0, b1}};
        auto avg = aumann_average(field, unit_interval());
        auto expected = make_sum({make_scaled(0.5, b0), make_scaled(0.5, b1)});
        for (const auto& v : direction_net(2, 128))
            CHECK(support(avg, v) == doctest::Approx(support(expected, v)).epsilon(1e-12));
    }
}

TEST_CASE("aumann norm bound holds on random body fields") {
    Rng rng(59);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + int(rng.uniform_int(2));
        int level = 2;
        GridLayout layout(unit_interval(), level);
        std::vector<SymmetricConvexBody> cells;
        for (std::int64_t c = 0; c < layout.ncells(); ++c) {
            if (rng.uniform() < 0.5) cells.push_back(make_ellipsoid(rng.spd_matrix(n, 0.1, 2.0)));
            else cells.push_back(random_hull(rng, n, 3));
        }
        BodyField field{layout, cells};
        auto avg = aumann_average(field, unit_interval());

        double avg_of_norms = 0.0;
        for (std::int64_t c = 0; c < layout.ncells(); ++c)
            avg_of_norms += body_norm(field.at(c)) * layout.cell_volume_d();
        double norm_of_avg = body_norm(avg);
        CHECK(norm_of_avg <= avg_of_norms * (1 + 1e-9));
        CHECK(avg_of_norms <= n * norm_of_avg * (1 + 1e-9));
    }
}

TEST_CASE("product support agrees with exact bilinear enumeration") {
    Rng rng(67);
    TensorSpace space({2, 2});
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Eigen::VectorXd> g1, g2;
        for (int i = 0; i < 3; ++i) g1.push_back(rng.normal_vector(2));
        for (int i = 0; i < 3; ++i) g2.push_back(rng.normal_vector(2));
        auto z1 = make_zonotope(g1), z2 = make_zonotope(g2);
        Eigen::VectorXd v = rng.normal_vector(4);
        double h = product_support({z1, z2}, space, v);
        // brute force over polygon vertices of both factors
        auto p1 = vertex_points(z1), p2 = vertex_points(z2);
        REQUIRE(p1.has_value());
        REQUIRE(p2.has_value());
        double brute = 0.0;
        for (const auto& a : *p1)
            for (const auto& b : *p2) brute = std::max(brute, std::abs(tensor_vector({a, b}).dot(v)));
        CHECK(h == doctest::Approx(brute).epsilon(1e-10));
    }
}
