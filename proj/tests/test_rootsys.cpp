#include "todacert/rootsys.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <map>

using namespace todacert;

namespace {

RootSystem make(char type, int rank) { return build_root_system(RootSystemSpec::named(type, rank)); }

// classification counts for the named types
const std::map<std::pair<char, int>, std::size_t> kRootCounts = {
    {{'A', 1}, 2},  {{'A', 2}, 6},  {{'A', 3}, 12}, {{'A', 4}, 20},
    {{'B', 2}, 8},  {{'B', 3}, 18}, {{'B', 4}, 32},
    {{'C', 2}, 8},  {{'C', 3}, 18}, {{'C', 4}, 32},
    {{'D', 3}, 12}, {{'D', 4}, 24},
    {{'G', 2}, 12}, {{'F', 4}, 48}, {{'E', 6}, 72},
};

// type A_{r-1} on traceless diagonal matrices: h_{alpha_k} = e_k - e_{k+1}
RatVec coroot_to_diagonal(const CartanVector& v) {
    const std::size_t l = v.coords.size();
    RatVec diag(l + 1, 0);
    for (std::size_t k = 0; k < l; ++k) {
        diag[k] += v.coords[k];
        diag[k + 1] -= v.coords[k];
    }
    return diag;
}

}  // namespace

TEST_CASE("root counts match the classification") {
    for (const auto& [key, count] : kRootCounts) {
        const auto rs = make(key.first, key.second);
        INFO(key.first << key.second);
        CHECK(rs.root_count() == count);
    }
    CHECK(make('E', 8).root_count() == 240);
}

TEST_CASE("rank one is forced") {
    const auto rs = make('A', 1);
    REQUIRE(rs.root_count() == 2);
    const Root a = rs.simple_root(0);
    CHECK(rs.contains(a.coords));
    CHECK(rs.contains((-a).coords));
    CHECK(pairing(rs.functional_of(a), rs.coroot_of(a)) == 2);
}

TEST_CASE("coroot normalization and negation") {
    for (const auto& [key, count] : kRootCounts) {
        const auto rs = make(key.first, key.second);
        INFO(key.first << key.second);
        for (const auto& alpha : rs.roots()) {
            REQUIRE(pairing(rs.functional_of(alpha), rs.coroot_of(alpha)) == 2);
            REQUIRE(rs.coroot_of(-alpha) == -rs.coroot_of(alpha));
        }
        (void)count;
    }
}

TEST_CASE("killing form properties") {
    const auto a2 = make('A', 2);
    const auto h1 = a2.coroot_of(a2.simple_root(0));
    const auto h2 = a2.coroot_of(a2.simple_root(1));

    SECTION("symmetry and positive definiteness") {
        CHECK(a2.killing(h1, h2) == a2.killing(h2, h1));
        CHECK(is_positive_definite(a2.killing_matrix()));
        CHECK(is_positive_definite(make('G', 2).killing_matrix()));
        CHECK(is_positive_definite(make('F', 4).killing_matrix()));
    }
    SECTION("obtuse simple-root angle in A2") { CHECK(a2.killing(h1, h2) < 0); }
    SECTION("zero vector") {
        const CartanVector zero{RatVec{0, 0}};
        CHECK(killing_cartan(a2, zero, h1) == 0);
    }
    SECTION("A1 diagonal value: B(diag(1,-1), diag(1,-1)) = 8") {
        const auto a1 = make('A', 1);
        const auto h = a1.coroot_of(a1.simple_root(0));
        CHECK(killing_cartan(a1, h, h) == 8);
    }
}

TEST_CASE("type A killing form equals 2rTr on a coroot basis") {
    for (int l = 1; l <= 4; ++l) {
        const auto rs = make('A', l);
        const long r = l + 1;
        for (std::size_t i = 0; i < rs.rank(); ++i) {
            for (std::size_t j = 0; j < rs.rank(); ++j) {
                const auto u = rs.coroot_of(rs.simple_root(i));
                const auto v = rs.coroot_of(rs.simple_root(j));
                const RatVec du = coroot_to_diagonal(u), dv = coroot_to_diagonal(v);
                Rational trace = 0;
                for (std::size_t k = 0; k < du.size(); ++k) trace += du[k] * dv[k];
                REQUIRE(rs.killing(u, v) == Rational(2) * r * trace);
            }
        }
    }
}

TEST_CASE("highest root") {
    const auto a2 = make('A', 2);
    CHECK(a2.highest_root().coords == std::vector<int>{1, 1});
    SECTION("simply-laced coroot additivity: h_delta = h_1 + h_2") {
        const auto h = a2.coroot_of(a2.highest_root());
        CHECK(h == a2.coroot_of(a2.simple_root(0)) + a2.coroot_of(a2.simple_root(1)));
    }
    SECTION("A_l highest root is the all-ones vector") {
        for (int l = 2; l <= 4; ++l)
            CHECK(make('A', l).highest_root().coords == std::vector<int>(static_cast<std::size_t>(l), 1));
    }
    SECTION("G2 height") { CHECK(make('G', 2).highest_root().height() == 5); }
    SECTION("reducible systems have none") {
        const auto rs = build_root_system(RootSystemSpec::from_cartan({{2, 0}, {0, 2}}));
        CHECK(rs.root_count() == 4);
        CHECK_FALSE(rs.irreducible());
        CHECK_THROWS_AS(rs.highest_root(), std::logic_error);
    }
}

TEST_CASE("root membership lookup") {
    const auto a2 = make('A', 2);
    CHECK(is_root(a2, std::vector<int>{1, 1}));
    CHECK_FALSE(is_root(a2, std::vector<int>{1, -1}));
    CHECK_FALSE(is_root(a2, std::vector<int>{0, 0}));
    CHECK_THROWS_AS(is_root(a2, std::vector<int>{1}), std::invalid_argument);
}

TEST_CASE("deterministic ordering by height then coordinates") {
    const auto a2 = make('A', 2);
    REQUIRE(a2.roots().front().coords == std::vector<int>{-1, -1});
    REQUIRE(a2.roots().back().coords == std::vector<int>{1, 1});
    for (std::size_t i = 0; i + 1 < a2.root_count(); ++i) {
        const auto& a = a2.roots()[i];
        const auto& b = a2.roots()[i + 1];
        const bool ordered = a.height() < b.height() || (a.height() == b.height() && a.coords < b.coords);
        REQUIRE(ordered);
    }
}

TEST_CASE("explicit Cartan matrices") {
    const auto rs = build_root_system(RootSystemSpec::from_cartan({{2, -1}, {-1, 2}}));
    CHECK(rs.root_count() == 6);
    CHECK(rs.irreducible());
}

TEST_CASE("coroots lie in the integral coroot lattice") {
    for (const auto& [key, count] : kRootCounts) {
        const auto rs = make(key.first, key.second);
        INFO(key.first << key.second);
        for (const auto& alpha : rs.roots())
            for (const auto& c : rs.coroot_of(alpha).coords) {
                REQUIRE(boost::multiprecision::denominator(c) == 1);
            }
        (void)count;
    }
}

TEST_CASE("B and C are dual: coroots of one are roots of the other") {
    for (int l = 2; l <= 4; ++l) {
        const auto b = make('B', l);
        const auto c = make('C', l);
        for (const auto& alpha : b.roots()) {
            std::vector<int> co;
            for (const auto& x : b.coroot_of(alpha).coords)
                co.push_back(static_cast<int>(x.convert_to<long>()));
            REQUIRE(c.contains(co));
        }
    }
}

TEST_CASE("construction failures") {
    SECTION("invalid named ranks") {
        CHECK_THROWS_AS(make('G', 3), std::invalid_argument);
        CHECK_THROWS_AS(make('F', 5), std::invalid_argument);
        CHECK_THROWS_AS(make('E', 5), std::invalid_argument);
        CHECK_THROWS_AS(make('D', 2), std::invalid_argument);
        CHECK_THROWS_AS(make('B', 1), std::invalid_argument);
        CHECK_THROWS_AS(make('X', 2), std::invalid_argument);
        CHECK_THROWS_AS(make('A', 0), std::invalid_argument);
    }
    SECTION("malformed Cartan matrices") {
        CHECK_THROWS_AS(build_root_system(RootSystemSpec::from_cartan({{2, 1}, {1, 2}})),
                        std::invalid_argument);  // positive off-diagonal
        CHECK_THROWS_AS(build_root_system(RootSystemSpec::from_cartan({{2, -1}, {0, 2}})),
                        std::invalid_argument);  // asymmetric zero pattern
        CHECK_THROWS_AS(build_root_system(RootSystemSpec::from_cartan({{1, 0}, {0, 2}})),
                        std::invalid_argument);  // diagonal != 2
        CHECK_THROWS_AS(build_root_system(RootSystemSpec::from_cartan({{2}, {0, 2}})),
                        std::invalid_argument);  // ragged
    }
    SECTION("affine matrix: reflection closure does not terminate") {
        CHECK_THROWS_AS(build_root_system(RootSystemSpec::from_cartan({{2, -2}, {-2, 2}})),
                        std::invalid_argument);
    }
    SECTION("closure bound is honored") {
        auto spec = RootSystemSpec::named('A', 3);
        spec.closure_bound = 4;  // A3 has 12 roots
        CHECK_THROWS_AS(build_root_system(spec), std::invalid_argument);
    }
}
