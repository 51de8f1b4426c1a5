#include <doctest.h>

#include <random>

#include "hsfem/adaptive_loop.hpp"
#include "hsfem/oscillation.hpp"
#include "hsfem/rate_fit.hpp"
#include "oracles.hpp"

using namespace hsfem;

namespace {

EllipticProblem bubble_problem() {
    auto u = [](const Eigen::Vector2d& x) {
        return x[0] * (1 - x[0]) * x[1] * (1 - x[1]);
    };
    auto grad = [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d((1 - 2 * x[0]) * x[1] * (1 - x[1]),
                               x[0] * (1 - x[0]) * (1 - 2 * x[1]));
    };
    auto f = [](const Eigen::Vector2d& x) {
        return 2 * x[1] * (1 - x[1]) + 2 * x[0] * (1 - x[0]);
    };
    return EllipticProblem::poisson(f, u, grad);
}

EllipticProblem sine_problem() {
    auto u = [](const Eigen::Vector2d& x) {
        return std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
    };
    auto grad = [u](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(M_PI * std::cos(M_PI * x[0]) * std::sin(M_PI * x[1]),
                               M_PI * std::sin(M_PI * x[0]) * std::cos(M_PI * x[1]));
    };
    auto f = [u](const Eigen::Vector2d& x) { return 2 * M_PI * M_PI * u(x); };
    return EllipticProblem::poisson(f, u, grad);
}

Solution galerkin(std::shared_ptr<const HierBasis> basis, const NurbsGeometry& geom,
                  const EllipticProblem& prob) {
    const LinearSystem sys = assemble(*basis, geom, prob);
    return expand_solution(basis, sys.dofs, solve_system(sys));
}

}  // namespace

TEST_CASE("estimator vanishes on recovered representable solutions") {
    const NurbsGeometry geom = NurbsGeometry::identity_square();
    const EllipticProblem prob = bubble_problem();
    std::mt19937_64 rng(3);

    SUBCASE("C1 space (m <= p-1): volume and jumps both vanish") {
        auto levels = oracles::square_levels(2, 4, 1);
        auto mesh = std::make_shared<HierMesh>(
            oracles::random_admissible_mesh(rng, levels, 2, Admissibility::T, 2));
        auto basis = std::make_shared<HierBasis>(mesh, BasisFlavor::THB);
        const Solution sol = galerkin(basis, geom, prob);
        const EstimatorResult eta = estimate(*basis, geom, prob, sol);
        CHECK(eta.total() <= 1e-8);
        for (std::size_t i = 0; i < eta.jump2.size(); ++i) CHECK(eta.jump2[i] <= 1e-18);
    }

    SUBCASE("C0 space (m == p): continuous flux still kills the jumps") {
        auto levels = oracles::square_levels(2, 4, 2);
        auto mesh = std::make_shared<HierMesh>(HierMesh::initial(levels));
        auto basis = std::make_shared<HierBasis>(mesh, BasisFlavor::THB);
        const Solution sol = galerkin(basis, geom, prob);
        const EstimatorResult eta = estimate(*basis, geom, prob, sol);
        CHECK(eta.total() <= 1e-8);
    }
}

TEST_CASE("estimator additivity and fragment bookkeeping") {
    std::mt19937_64 rng(11);
    auto levels = oracles::square_levels(2, 4, 1);
    auto mesh = std::make_shared<HierMesh>(
        oracles::random_admissible_mesh(rng, levels, 2, Admissibility::T, 3));
    auto basis = std::make_shared<HierBasis>(mesh, BasisFlavor::THB);
    const NurbsGeometry geom = NurbsGeometry::identity_square();
    const EllipticProblem prob = EllipticProblem::poisson(
        [](const Eigen::Vector2d& x) { return std::exp(x[0]) * std::sin(4 * x[1]); });
    const Solution sol = galerkin(basis, geom, prob);
    const EstimatorResult eta = estimate(*basis, geom, prob, sol);

    // eta(S)^2 is additive by construction: the per-element indicators sum
    // to the total.
    double sum = 0.0;
    for (std::size_t i = 0; i < eta.volume2.size(); ++i) sum += eta.indicator2(i);
    CHECK(sum == doctest::Approx(eta.total2).epsilon(1e-13));

    // Fragment partition oracle: per-side interior lengths counted once per
    // element equal the recorded fragment measure.
    double want = 0.0;
    for (const Cell& q : mesh->active_cells()) {
        for (int d = 0; d < 2; ++d) {
            const double len =
                (mesh->levels().breakpoint(q.level, 1 - d, q.idx[1 - d] + 1) -
                 mesh->levels().breakpoint(q.level, 1 - d, q.idx[1 - d]))
                    .to_double();
            if (q.idx[d] > 0) want += len;
            if (q.idx[d] + 1 < mesh->levels().num_elements(q.level, d)) want += len;
        }
    }
    CHECK(eta.fragment_measure == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("estimator tracks the error under uniform refinement") {
    const NurbsGeometry geom = NurbsGeometry::identity_square();
    const EllipticProblem prob = sine_problem();
    auto levels = oracles::square_levels(2, 4, 1);
    auto mesh = std::make_shared<HierMesh>(HierMesh::initial(levels));
    std::vector<double> dofs, etas, errs;
    for (int step = 0; step < 4; ++step) {
        auto basis = std::make_shared<HierBasis>(mesh, BasisFlavor::THB);
        const LinearSystem sys = assemble(*basis, geom, prob);
        const Solution sol = expand_solution(basis, sys.dofs, solve_system(sys));
        etas.push_back(estimate(*basis, geom, prob, sol).total());
        errs.push_back(h1_error(sol, geom, prob).h1_semi);
        dofs.push_back(static_cast<double>(sys.dofs.num_free()));
        mesh = std::make_shared<HierMesh>(
            mesh->refine(mesh->active_cells(), 2, Admissibility::T));
    }
    const double slope_eta = rate_fit(dofs, etas, 3);
    const double slope_err = rate_fit(dofs, errs, 3);
    CHECK(std::abs(slope_eta - slope_err) <= 0.1);
    CHECK(slope_err == doctest::Approx(-1.0).epsilon(0.1));  // p/2 with p=2
}

TEST_CASE("oscillations") {
    const NurbsGeometry geom = NurbsGeometry::identity_square();

    SUBCASE("residual already polynomial of degree <= p': volume part vanishes") {
        auto levels = oracles::square_levels(2, 2, 1);
        auto mesh = std::make_shared<HierMesh>(HierMesh::initial(levels));
        auto basis = std::make_shared<HierBasis>(mesh, BasisFlavor::THB);
        EllipticProblem prob;
        prob.A = [](const Eigen::Vector2d&) { return Eigen::Matrix2d::Identity().eval(); };
        prob.f = [](const Eigen::Vector2d& x) { return 1.0 + 2 * x[0] - x[1]; };
        Solution zero;
        zero.basis = basis;
        zero.coeffs.assign(static_cast<std::size_t>(basis->size()), 0.0);
        const OscillationResult osc = oscillations(*basis, geom, prob, zero, 1);
        for (double v : osc.volume2) CHECK(v <= 1e-10);
    }

    SUBCASE("p' = 0 against f = x on the unit element: h^2 * 1/12") {
        auto levels = oracles::square_levels(1, 1, 1);
        auto mesh = std::make_shared<HierMesh>(HierMesh::initial(levels));
        auto basis = std::make_shared<HierBasis>(mesh, BasisFlavor::THB);
        EllipticProblem prob;
        prob.A = [](const Eigen::Vector2d&) { return Eigen::Matrix2d::Identity().eval(); };
        prob.f = [](const Eigen::Vector2d& x) { return x[0]; };
        Solution zero;
        zero.basis = basis;
        zero.coeffs.assign(static_cast<std::size_t>(basis->size()), 0.0);
        const OscillationResult osc = oscillations(*basis, geom, prob, zero, 0);
        REQUIRE(osc.volume2.size() == 1);
        CHECK(osc.volume2[0] == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
        CHECK(osc.edge2[0] == 0.0);
    }

    SUBCASE("osc(Q) <= eta(Q) for random configurations") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> amp(0.5, 2.0);
        for (int rep = 0; rep < 4; ++rep) {
            auto levels = oracles::square_levels(2, 4, 1);
            auto mesh = std::make_shared<HierMesh>(
                oracles::random_admissible_mesh(rng, levels, 2, Admissibility::T, 2));
            auto basis = std::make_shared<HierBasis>(mesh, BasisFlavor::THB);
            const double a = amp(rng), b = amp(rng);
            const EllipticProblem prob = EllipticProblem::poisson(
                [a, b](const Eigen::Vector2d& x) {
                    return std::sin(a * 4 * x[0]) * std::cos(b * 3 * x[1]);
                });
            const Solution sol = galerkin(basis, geom, prob);
            const EstimatorResult eta = estimate(*basis, geom, prob, sol);
            const OscillationResult osc =
                oscillations(*basis, geom, prob, sol, levels->degree(0));
            for (std::size_t i = 0; i < eta.volume2.size(); ++i) {
                CHECK(osc.osc2(i) <= eta.indicator2(i) * (1.0 + 1e-9) + 1e-13);
            }
        }
    }
}

TEST_CASE("Dörfler marking") {
    SUBCASE("theta = 1 returns exactly the support") {
        const std::vector<double> ind{0.0, 4.0, 0.0, 1.0, 2.25};
        const auto marked = dorfler_mark(ind, {1.0, 1.0});
        CHECK(marked == std::vector<std::int64_t>{1, 3, 4});
    }

    SUBCASE("dominant first indicator") {
        const std::vector<double> ind{16.0, 1.0, 1.0, 1.0, 1.0};
        const auto marked = dorfler_mark(ind, {0.5, 1.0});
        CHECK(marked == std::vector<std::int64_t>{0});
    }

    SUBCASE("c_min = infinity marks everything") {
        const std::vector<double> ind{1.0, 0.0, 2.0};
        const auto marked =
            dorfler_mark(ind, {0.3, std::numeric_limits<double>::infinity()});
        CHECK(marked == std::vector<std::int64_t>{0, 1, 2});
    }

    SUBCASE("exhaustive minimality oracle on small instances") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> vals(0.0, 1.0);
        std::uniform_int_distribution<int> sizes(1, 12);
        std::uniform_real_distribution<double> thetas(0.05, 1.0);
        for (int rep = 0; rep < 120; ++rep) {
            const int n = sizes(rng);
            std::vector<double> ind(static_cast<std::size_t>(n));
            for (auto& v : ind) v = vals(rng) < 0.15 ? 0.0 : vals(rng);
            const double theta = thetas(rng);
            const auto marked = dorfler_mark(ind, {theta, 1.0});
            double total = 0.0;
            for (double v : ind) total += v;
            double got = 0.0;
            for (auto id : marked) got += ind[static_cast<std::size_t>(id)];
            CHECK(got >= theta * total - 1e-12 * std::max(1.0, total));
            // Oracle: no subset smaller than |marked| satisfies the bound.
            std::size_t best = ind.size() + 1;
            for (unsigned mask = 0; mask < (1u << n); ++mask) {
                double s = 0.0;
                std::size_t count = 0;
                for (int i = 0; i < n; ++i) {
                    if (mask & (1u << i)) {
                        s += ind[static_cast<std::size_t>(i)];
                        ++count;
                    }
                }
                if (s >= theta * total - 1e-12 * std::max(1.0, total))
                    best = std::min(best, count);
            }
            CHECK(marked.size() == best);
        }
    }

    SUBCASE("argument errors") {
        CHECK_THROWS_AS(dorfler_mark({}, {0.5, 1.0}), std::invalid_argument);
        CHECK_THROWS_AS(dorfler_mark({1.0}, {0.0, 1.0}), std::invalid_argument);
        CHECK_THROWS_AS(dorfler_mark({1.0}, {1.5, 1.0}), std::invalid_argument);
        CHECK_THROWS_AS(dorfler_mark({-1.0}, {0.5, 1.0}), std::invalid_argument);
    }
}

TEST_CASE("rate fitting") {
    std::vector<double> x{10, 100, 1000, 10000};
    std::vector<double> y{1.0, 0.1, 0.01, 0.001};
    CHECK(rate_fit(x, y, 4) == doctest::Approx(-1.0).epsilon(1e-12));

    std::vector<double> c{2.0, 2.0, 2.0, 2.0};
    CHECK(rate_fit(x, c, 4) == doctest::Approx(0.0));

    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    std::vector<double> yn;
    for (double xi : x) yn.push_back(3.0 * std::pow(xi, -0.9) * (1.0 + noise(rng)));
    CHECK(rate_fit(x, yn, 4) == doctest::Approx(-0.9).epsilon(0.025));

    CHECK_THROWS_AS(rate_fit(x, y, 5), std::invalid_argument);
    CHECK_THROWS_AS(rate_fit(x, y, 1), std::invalid_argument);
    std::vector<double> bad{1.0, -1.0, 1.0, 1.0};
    CHECK_THROWS_AS(rate_fit(x, bad, 4), std::invalid_argument);
}

TEST_CASE("adaptive loop") {
    AdaptiveConfig cfg;
    cfg.levels = oracles::square_levels(2, 4, 1);
    cfg.problem = sine_problem();
    cfg.solver.kind = SolveOptions::Kind::Direct;

    SUBCASE("c_min = infinity reproduces uniform refinement") {
        cfg.mark = {0.9, std::numeric_limits<double>::infinity()};
        cfg.max_iterations = 3;
        const AdaptiveResult res = adaptive_loop(cfg);
        REQUIRE(res.records.size() == 3);
        CHECK(res.records[0].n_elements == 16);
        CHECK(res.records[1].n_elements == 64);
        CHECK(res.records[2].n_elements == 256);
        for (const auto& r : res.records) CHECK(r.n_marked >= 0);
    }

    SUBCASE("eta tolerance halts the loop at the first satisfying iteration") {
        cfg.mark = {0.5, 1.0};
        cfg.max_iterations = 50;
        const AdaptiveResult first = adaptive_loop([&] {
            AdaptiveConfig c = cfg;
            c.max_iterations = 6;
            return c;
        }());
        const double tol = first.records.back().eta * 1.05;
        AdaptiveConfig c2 = cfg;
        c2.eta_tol = tol;
        const AdaptiveResult res = adaptive_loop(c2);
        CHECK(res.records.back().eta <= tol);
        for (std::size_t k = 0; k + 1 < res.records.size(); ++k)
            CHECK(res.records[k].eta > tol);
    }

    SUBCASE("records grow monotonically and the loop is deterministic") {
        cfg.mark = {0.5, 1.0};
        cfg.max_iterations = 5;
        cfg.measure_wall_time = false;
        const AdaptiveResult a = adaptive_loop(cfg);
        const AdaptiveResult b = adaptive_loop(cfg);
        REQUIRE(a.records.size() == b.records.size());
        for (std::size_t k = 0; k < a.records.size(); ++k) {
            CHECK(a.records[k].n_dofs == b.records[k].n_dofs);
            CHECK(a.records[k].eta == b.records[k].eta);
            if (k > 0) CHECK(a.records[k].n_elements > a.records[k - 1].n_elements);
        }
        CHECK(a.mesh->check_admissible(cfg.mu, cfg.kind).admissible);
    }
}
