#include "todacert/todasolver.hpp"

#include "support/toda_suite.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace todacert;
using testing::suite_const;
using testing::suite_coroot_source;
using testing::suite_sin2x;

namespace {

std::shared_ptr<RootSystem> a1() {
    static auto rs = std::make_shared<RootSystem>(RootSystemSpec::named('A', 1));
    return rs;
}
std::shared_ptr<RootSystem> a2() {
    static auto rs = std::make_shared<RootSystem>(RootSystemSpec::named('A', 2));
    return rs;
}

const Root kP1{{1}}, kM1{{-1}};
const Root kR1{{1, 0}}, kR2{{0, 1}}, kDelta{{1, 1}};

TodaProblem symmetric_a1(int n = 16) {
    const TorusGrid g{n, n, 1.0, 1.0};
    return assemble_problem(a1(), g, {kP1, kM1}, {suite_const(g, 1.0), suite_const(g, 1.0)},
                            Field::Zero(1, g.cells()));
}

Field random_field(const TodaProblem& p, std::mt19937& rng, double scale = 0.5) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Field f(p.rank(), p.grid().cells());
    for (Eigen::Index j = 0; j < f.cols(); ++j)
        for (Eigen::Index i = 0; i < f.rows(); ++i) f(i, j) = dist(rng);
    return f;
}

double field_norm(const TodaProblem& p, const Field& f) { return std::sqrt(p.inner(f, f)); }

}  // namespace

TEST_CASE("problem assembly validation") {
    const TorusGrid g{16, 16, 1.0, 1.0};
    SECTION("valid symmetric problem has zero mean source") {
        const auto p = symmetric_a1();
        CHECK(p.mean_source().norm() == 0.0);
    }
    SECTION("coefficient field vanishing on a line is admissible") {
        CHECK_NOTHROW(assemble_problem(a1(), g, {kP1}, {suite_sin2x(g, 0.0, 1.0)}, Field::Zero(1, g.cells())));
    }
    SECTION("identically zero coefficient field is rejected") {
        CHECK_THROWS_AS(assemble_problem(a1(), g, {kP1}, {suite_const(g, 0.0)}, Field::Zero(1, g.cells())),
                        std::invalid_argument);
    }
    SECTION("negative coefficients are rejected") {
        CHECK_THROWS_AS(assemble_problem(a1(), g, {kP1}, {suite_const(g, -1.0)}, Field::Zero(1, g.cells())),
                        std::invalid_argument);
    }
    SECTION("shape and root checks") {
        CHECK_THROWS_AS(assemble_problem(a1(), g, {kP1}, {suite_const(g, 1.0)}, Field::Zero(2, g.cells())),
                        std::invalid_argument);
        CHECK_THROWS_AS(assemble_problem(a1(), g, {Root{{2}}}, {suite_const(g, 1.0)}, Field::Zero(1, g.cells())),
                        std::invalid_argument);
        CHECK_THROWS_AS(assemble_problem(a1(), TorusGrid{2, 16, 1.0, 1.0}, {kP1}, {ScalarField::Ones(32)},
                                         Field::Zero(1, 32)),
                        std::invalid_argument);
        CHECK_THROWS_AS(assemble_problem(a1(), g, {kP1, kM1}, {suite_const(g, 1.0)}, Field::Zero(1, g.cells())),
                        std::invalid_argument);
    }
}

TEST_CASE("energy values and structure") {
    const auto p = symmetric_a1();
    const TodaState zero{p.zero_state()};
    SECTION("at the origin the exponentials contribute c/B*(a,a) per cell") {
        // B*(alpha,alpha) = 1/2 in A1, two active roots with c = 1
        const double expected = 2.0 * (1.0 / 0.5) * p.grid().cell_area() * p.grid().cells();
        CHECK(energy(p, zero) == Catch::Approx(expected).epsilon(1e-14));
    }
    SECTION("convexity along random segments") {
        std::mt19937 rng(17);
        for (int k = 0; k < 20; ++k) {
            const Field u = random_field(p, rng), v = random_field(p, rng);
            const TodaState su{u}, sv{v}, mid{0.5 * (u + v)};
            CHECK(energy(p, mid) <= 0.5 * energy(p, su) + 0.5 * energy(p, sv) + 1e-12);
        }
    }
    SECTION("kernel directions leave the energy unchanged") {
        const TorusGrid g{16, 16, 1.0, 1.0};
        const auto single = assemble_problem(a2(), g, {kR1}, {suite_const(g, 1.0)}, Field::Zero(2, g.cells()));
        REQUIRE(single.kernel_basis().cols() == 1);
        std::mt19937 rng(3);
        const Field omega = random_field(single, rng);
        Field shifted = omega;
        shifted.colwise() += Eigen::VectorXd(single.kernel_basis().col(0));
        CHECK(energy(single, TodaState{omega}) ==
              Catch::Approx(energy(single, TodaState{shifted})).epsilon(1e-12));
    }
    SECTION("exponent overflow aborts with a diagnostic") {
        const Field big = Field::Constant(1, p.grid().cells(), 400.0);
        CHECK_THROWS_AS(energy(p, TodaState{big}), std::overflow_error);
    }
}

TEST_CASE("gradient") {
    SECTION("symmetric A1 at zero: coroots cancel") {
        const auto p = symmetric_a1();
        CHECK(gradient(p, TodaState{p.zero_state()}).norm() == 0.0);
    }
    SECTION("constant data gives the constant algebraic gradient") {
        const TorusGrid g{16, 16, 1.0, 1.0};
        const auto p = assemble_problem(a1(), g, {kP1}, {suite_const(g, 2.0)},
                                        suite_coroot_source(*a1(), g, kP1, suite_const(g, 0.5)));
        const Field omega = Field::Constant(1, g.cells(), 0.25);
        const Field grad = gradient(p, TodaState{omega});
        // c e^{4u} h - F with u = 0.25: (2 e^1 - 0.5) h, h = 1 in coroot coords
        const double expected = 2.0 * std::exp(1.0) - 0.5;
        CHECK(grad.row(0).minCoeff() == Catch::Approx(expected).epsilon(1e-13));
        CHECK(grad.row(0).maxCoeff() == Catch::Approx(expected).epsilon(1e-13));
    }
    SECTION("finite differences of the energy") {
        std::mt19937 rng(29);
        const auto problems = {symmetric_a1(12),
                               assemble_problem(a2(), TorusGrid{12, 12, 1.0, 2.0}, {kR1, kR2, kDelta},
                                                {suite_const({12, 12, 1.0, 2.0}, 1.0),
                                                 suite_sin2x({12, 12, 1.0, 2.0}, 0.5, 0.5),
                                                 suite_const({12, 12, 1.0, 2.0}, 2.0)},
                                                suite_coroot_source(*a2(), {12, 12, 1.0, 2.0}, kR1,
                                                                    suite_const({12, 12, 1.0, 2.0}, 0.3)))};
        for (const auto& p : problems) {
            for (int k = 0; k < 5; ++k) {
                const Field omega = random_field(p, rng);
                const Field v = random_field(p, rng);
                const double eps = 1e-5;
                const double fd = (detail::energy_impl(p, omega + eps * v, nullptr) -
                                   detail::energy_impl(p, omega - eps * v, nullptr)) /
                                  (2 * eps);
                const double dg = p.inner(gradient(p, TodaState{omega}), v);
                REQUIRE(fd == Catch::Approx(dg).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("hessian") {
    const TorusGrid g{12, 12, 1.0, 1.0};
    const auto p = assemble_problem(a2(), g, {kR1, kR2}, {suite_const(g, 1.0), suite_sin2x(g, 0.3, 1.0)},
                                    Field::Zero(2, g.cells()));
    std::mt19937 rng(31);
    const Field omega = random_field(p, rng);
    const TodaState st{omega};

    SECTION("kernel constants map to zero") {
        REQUIRE(p.kernel_basis().cols() == 0);  // two independent roots in rank 2
        const TorusGrid g1{12, 12, 1.0, 1.0};
        const auto single = assemble_problem(a2(), g1, {kR1}, {suite_const(g1, 1.0)}, Field::Zero(2, g1.cells()));
        Field v = Field::Zero(2, g1.cells());
        v.colwise() += Eigen::VectorXd(single.kernel_basis().col(0));
        CHECK(hessian_apply(single, TodaState{single.zero_state()}, v).norm() < 1e-14);
    }
    SECTION("symmetry in the B-inner product") {
        for (int k = 0; k < 10; ++k) {
            const Field v = random_field(p, rng), w = random_field(p, rng);
            const double a = p.inner(hessian_apply(p, st, v), w);
            const double b = p.inner(v, hessian_apply(p, st, w));
            REQUIRE(std::abs(a - b) <= 1e-10 * (1.0 + std::abs(a)));
        }
    }
    SECTION("positive semidefiniteness") {
        for (int k = 0; k < 10; ++k) {
            const Field v = random_field(p, rng);
            REQUIRE(p.inner(hessian_apply(p, st, v), v) >= -1e-10 * p.inner(v, v));
        }
    }
    SECTION("matches finite differences of the gradient") {
        for (int k = 0; k < 5; ++k) {
            const Field v = random_field(p, rng);
            const double eps = 1e-5;
            const Field fd = (gradient(p, TodaState{omega + eps * v}) - gradient(p, TodaState{omega - eps * v})) /
                             (2 * eps);
            const Field hv = hessian_apply(p, st, v);
            REQUIRE(field_norm(p, fd - hv) <= 1e-6 * (1.0 + field_norm(p, hv)));
        }
    }
}

TEST_CASE("feasibility precheck") {
    const TorusGrid g{16, 16, 1.0, 1.0};
    SECTION("symmetric problem is feasible") {
        CHECK(feasibility_precheck(symmetric_a1()).answer);
    }
    SECTION("single root with negative mean source is separated") {
        const auto p = assemble_problem(a1(), g, {kP1}, {suite_const(g, 1.0)},
                                        suite_coroot_source(*a1(), g, kP1, suite_const(g, -0.4)));
        const auto v = feasibility_precheck(p);
        REQUIRE_FALSE(v.answer);
        CHECK(verify_certificate(ConeProblem{1, p.exact_coroots(), {rationalize(-0.4 * 1.0)}}, v));
    }
    SECTION("single root with positive mean source is feasible") {
        const auto p = assemble_problem(a1(), g, {kP1}, {suite_const(g, 1.0)},
                                        suite_coroot_source(*a1(), g, kP1, suite_const(g, 0.4)));
        CHECK(feasibility_precheck(p).answer);
    }
}

TEST_CASE("solver exactness") {
    SECTION("symmetric A1 returns the zero solution immediately") {
        const auto p = symmetric_a1();
        const auto [st, rep] = solve(p);
        CHECK(rep.verdict == SolveVerdict::Converged);
        CHECK(rep.iterations == 0);
        CHECK(rep.residual < 1e-12);
        CHECK(st.omega.norm() == 0.0);
    }
    SECTION("constant-coefficient closed form u* = 1") {
        const TorusGrid g{32, 32, 1.0, 1.0};
        const auto p = assemble_problem(a1(), g, {kP1, kM1},
                                        {suite_const(g, 1.0), suite_const(g, std::exp(8.0))},
                                        Field::Zero(1, g.cells()));
        const auto [st, rep] = solve(p);
        REQUIRE(rep.verdict == SolveVerdict::Converged);
        CHECK(std::abs(st.omega.maxCoeff() - 1.0) < 1e-10);
        CHECK(std::abs(st.omega.minCoeff() - 1.0) < 1e-10);
        CHECK(residual(p, st) < 1e-8);
        CHECK(mean_balance_check(p, st) < 1e-8);
    }
    SECTION("residual grows under perturbation") {
        const auto p = symmetric_a1();
        auto [st, rep] = solve(p);
        std::mt19937 rng(5);
        const Field noise = random_field(p, rng, 0.01);
        CHECK(residual(p, TodaState{st.omega + noise}) > residual(p, st));
    }
}

TEST_CASE("dichotomy between precheck and convergence") {
    const auto suite = testing::dichotomy_suite(24);
    REQUIRE(suite.size() >= 20);
    for (const auto& item : suite) {
        INFO(item.name);
        const auto pre = feasibility_precheck(item.problem);
        REQUIRE(pre.answer == item.feasible);
        const auto [st, rep] = solve(item.problem);
        if (item.feasible) {
            REQUIRE(rep.verdict == SolveVerdict::Converged);
            REQUIRE(rep.residual <= 1e-8);
            REQUIRE(mean_balance_check(item.problem, st) <= 1e-8);
        } else {
            REQUIRE(rep.verdict == SolveVerdict::Infeasible);
            REQUIRE(rep.recession.has_value());
        }
    }
}

TEST_CASE("energy decreases monotonically along accepted steps") {
    const TorusGrid g{24, 24, 1.0, 1.0};
    const auto p = assemble_problem(a2(), g, {Root{{-1, 0}}, Root{{0, -1}}, kDelta},
                                    {suite_const(g, 1.0), suite_const(g, 2.0), suite_const(g, 3.0)},
                                    Field::Zero(2, g.cells()));
    const auto [st, rep] = solve(p);
    REQUIRE(rep.verdict == SolveVerdict::Converged);
    for (std::size_t i = 0; i + 1 < rep.energy_trace.size(); ++i)
        REQUIRE(rep.energy_trace[i + 1] <= rep.energy_trace[i] + 1e-12);
}

TEST_CASE("forced iteration on an infeasible problem") {
    const TorusGrid g{16, 16, 1.0, 1.0};
    const auto p = assemble_problem(a1(), g, {kP1}, {suite_const(g, 1.0)},
                                    suite_coroot_source(*a1(), g, kP1, suite_const(g, -0.3)));
    SolveOptions opts;
    opts.force_iterate = true;
    const auto [st, rep] = solve(p, opts);
    CHECK(rep.verdict == SolveVerdict::IterationLimit);
    CHECK(rep.residual > opts.tol);
    for (std::size_t i = 0; i + 1 < rep.energy_trace.size(); ++i)
        REQUIRE(rep.energy_trace[i + 1] <= rep.energy_trace[i]);
    REQUIRE(rep.energy_trace.back() < rep.energy_trace.front());
    // the mean of omega drifts along the recession direction
    const Eigen::VectorXd mean = st.omega.rowwise().mean();
    CHECK(mean.norm() > 1.0);
    REQUIRE(rep.recession.has_value());

    SECTION("the recession direction verifies") {
        const Eigen::VectorXd d = *rep.recession;
        for (const auto& root : p.active_roots()) {
            const auto f = p.root_system().functional_of(root);
            double pair = 0;
            for (Eigen::Index k = 0; k < d.size(); ++k)
                pair += to_double(f.coords[static_cast<std::size_t>(k)]) * d(k);
            CHECK(pair <= 1e-12);
        }
        CHECK(p.mean_source().dot(p.killing() * d) > 0.0);
        // the energy decreases without bound along t*d
        Field along = p.zero_state();
        along.colwise() += Eigen::VectorXd(10.0 * d);
        const double e_far = energy(p, TodaState{along});
        CHECK(e_far < rep.energy_trace.front());
    }
}

TEST_CASE("boundary sources are flagged as undetermined") {
    const TorusGrid g{16, 16, 1.0, 1.0};
    // exact zero mean with a single active root: on the boundary of the ray
    const auto p = assemble_problem(a1(), g, {kP1}, {suite_const(g, 1.0)}, Field::Zero(1, g.cells()));
    const auto [st, rep] = solve(p);
    CHECK(rep.verdict == SolveVerdict::Infeasible);
    CHECK(rep.boundary_undetermined);
    CHECK(rep.precheck_margin == 0.0);
}

TEST_CASE("translation equivariance") {
    const TorusGrid g{16, 16, 1.0, 1.0};
    const int sx = 3, sy = 5;
    auto shifted_coeff = [&](const ScalarField& c) {
        ScalarField out(g.cells());
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix)
                out(g.index(ix, iy)) = c(g.index((ix + g.nx - sx) % g.nx, (iy + g.ny - sy) % g.ny));
        return out;
    };
    const ScalarField c1 = suite_sin2x(g, 1.0, 0.5);
    SolveOptions opts;
    opts.tol = 1e-11;
    const auto pa = assemble_problem(a1(), g, {kP1, kM1}, {c1, suite_const(g, 1.0)}, Field::Zero(1, g.cells()));
    const auto pb = assemble_problem(a1(), g, {kP1, kM1}, {shifted_coeff(c1), suite_const(g, 1.0)},
                                     Field::Zero(1, g.cells()));
    const auto [sa, ra] = solve(pa, opts);
    const auto [sb, rb] = solve(pb, opts);
    REQUIRE(ra.verdict == SolveVerdict::Converged);
    REQUIRE(rb.verdict == SolveVerdict::Converged);
    double max_diff = 0;
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const double a = sa.omega(0, g.index((ix + g.nx - sx) % g.nx, (iy + g.ny - sy) % g.ny));
            const double b = sb.omega(0, g.index(ix, iy));
            max_diff = std::max(max_diff, std::abs(a - b));
        }
    CHECK(max_diff < 1e-7);
}
