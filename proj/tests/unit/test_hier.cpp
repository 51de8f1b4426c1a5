#include <doctest.h>

#include <random>
#include <set>

#include "hsfem/hier_basis.hpp"
#include "hsfem/hier_mesh.hpp"
#include "hsfem/knot_insertion.hpp"
#include "oracles.hpp"

using namespace hsfem;

namespace {

// Brute-force active-function scan straight from the selection definition:
// supp inside Omega^l, not inside Omega^{l+1}.
std::vector<HierFun> active_scan(const HierMesh& mesh) {
    std::vector<HierFun> out;
    const auto& levels = mesh.levels();
    for (int l = 0; l < mesh.num_levels(); ++l) {
        const Idx n = levels.funs_per_dir(l);
        IndexBox all{{0, 0, 0}, {n[0] - 1, n[1] - 1, n[2] - 1}};
        all.for_each(mesh.dim(), [&](const Idx& f) {
            const IndexBox supp = levels.support_box(l, f);
            bool in_l = true, in_next = true;
            supp.for_each(mesh.dim(), [&](const Idx& e) {
                if (!mesh.in_domain({l, e})) in_l = false;
            });
            if (!in_l) return;
            if (l + 1 >= mesh.num_levels()) {
                in_next = false;
            } else {
                IndexBox fine;
                for (int d = 0; d < mesh.dim(); ++d) {
                    fine.lo[d] = 2 * supp.lo[d];
                    fine.hi[d] = 2 * supp.hi[d] + 1;
                }
                fine.for_each(mesh.dim(), [&](const Idx& e) {
                    if (!mesh.in_domain({l + 1, e})) in_next = false;
                });
            }
            if (!in_next) out.push_back({l, f});
        });
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::array<double, 2> cell_interval(const LevelSequence& levels, const Cell& c, int d) {
    return {levels.breakpoint(c.level, d, c.idx[d]).to_double(),
            levels.breakpoint(c.level, d, c.idx[d] + 1).to_double()};
}

}  // namespace

TEST_CASE("initial mesh: counts, dimension, tensor equivalence") {
    auto levels = oracles::square_levels(2, 4, 1);
    auto mesh = std::make_shared<HierMesh>(HierMesh::initial(levels));
    CHECK(mesh->num_active() == 16);
    CHECK(mesh->num_levels() == 1);  // Omega^1 is empty

    HierBasis basis(mesh, BasisFlavor::HB);
    CHECK(basis.size() == 36);  // (4 + p)^2

    // Pointwise equality with the level-0 tensor space.
    TensorSpace tensor({KnotVector::uniform(2, 4), KnotVector::uniform(2, 4)});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> cs(-1.0, 1.0), xs(0.0, 1.0);
    std::vector<double> hier_coeffs(static_cast<std::size_t>(basis.size()));
    std::vector<double> tensor_coeffs(static_cast<std::size_t>(tensor.dimension()));
    for (std::size_t i = 0; i < hier_coeffs.size(); ++i) {
        const HierFun& f = basis.functions()[i];
        hier_coeffs[i] = cs(rng);
        tensor_coeffs[static_cast<std::size_t>(tensor.linear_index(f.idx))] = hier_coeffs[i];
    }
    for (int k = 0; k < 20; ++k) {
        const std::array<double, 3> x{xs(rng), xs(rng), 0.0};
        CHECK(basis.eval(hier_coeffs, x).value ==
              doctest::Approx(tensor.eval(tensor_coeffs, x)).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("active functions match the brute-force support scan") {
    auto levels = oracles::square_levels(2, 4, 1);
    HierMesh mesh = HierMesh::initial(levels);

    SUBCASE("unrefined: all level-0 ids") {
        CHECK(active_functions(mesh).size() == 36);
        for (const auto& f : active_functions(mesh)) CHECK(f.level == 0);
    }

    SUBCASE("fully refined to level 1") {
        HierMesh fine = mesh.refine(mesh.active_cells(), 2, Admissibility::T);
        const auto funs = active_functions(fine);
        for (const auto& f : funs) CHECK(f.level == 1);
        CHECK(funs.size() == static_cast<std::size_t>((8 + 2) * (8 + 2)));
        const auto scan = active_scan(fine);
        CHECK(funs == scan);
    }

    SUBCASE("three-level mesh equals the scan") {
        HierMesh m1 = mesh.refine({{0, {1, 1, 0}}, {0, {2, 1, 0}}, {0, {1, 2, 0}}}, 2,
                                  Admissibility::T);
        HierMesh m2 = m1.refine({{1, {3, 3, 0}}, {1, {4, 3, 0}}}, 2, Admissibility::T);
        const auto funs = active_functions(m2);
        const auto scan = active_scan(m2);
        REQUIRE(funs.size() == scan.size());
        CHECK(funs == scan);
        CHECK(m2.num_levels() >= 3);
    }
}

TEST_CASE("truncation: identity, full-domain, and the subdivide-and-zero oracle") {
    // 1D cubic, four base elements.
    std::vector<KnotVector> kv1{KnotVector::uniform(3, 4)};
    auto levels = std::make_shared<LevelSequence>(TensorSpace(std::move(kv1)), 1);
    HierMesh mesh0 = HierMesh::initial(levels);

    SUBCASE("empty Omega^1 leaves coefficients alone") {
        std::vector<double> c(static_cast<std::size_t>(levels->num_funs(1, 0)), 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.1 * static_cast<double>(i + 1);
        auto copy = c;
        truncate_coefficients(mesh0, 1, copy);
        CHECK(copy == c);
    }

    // Omega^1 = [1/4, 1]: refine base elements 1..3.
    HierMesh mesh = mesh0.refine({{0, {1, 0, 0}}, {0, {2, 0, 0}}, {0, {3, 0, 0}}}, 2,
                                 Admissibility::T);

    const KnotVector coarse = oracles::materialize_level(*levels, 0, 0);
    const KnotVector fine = oracles::materialize_level(*levels, 1, 0);
    const auto m = knot_insertion_matrix(coarse, fine);

    SUBCASE("level-1 functions supported in [1/4,1] are zeroed") {
        for (int i = 0; i < coarse.n(); ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Unit(coarse.n(), i);
            Eigen::VectorXd cf = m * e;
            std::vector<double> lib(cf.data(), cf.data() + cf.size());
            truncate_coefficients(mesh, 1, lib);
            // Oracle: zero exactly the functions whose support box lies in
            // elements 2.. of level 1 (breakpoint 1/4 onward).
            std::vector<double> want(cf.data(), cf.data() + cf.size());
            for (int j = 0; j < fine.n(); ++j) {
                const auto supp = fine.support_elements(j);
                if (fine.breakpoint(supp[0]).to_double() >= 0.25) want[j] = 0.0;
            }
            CHECK(lib == want);
        }
    }

    SUBCASE("THB evaluation matches the oracle pointwise") {
        auto mesh_ptr = std::make_shared<HierMesh>(mesh);
        HierBasis thb(mesh_ptr, BasisFlavor::THB);
        const std::vector<double> tf(fine.knots().begin(), fine.knots().end());
        for (std::size_t fi = 0; fi < thb.functions().size(); ++fi) {
            const HierFun fun = thb.functions()[fi];
            if (fun.level != 0) continue;
            Eigen::VectorXd e = Eigen::VectorXd::Unit(coarse.n(), fun.idx[0]);
            Eigen::VectorXd cf = m * e;
            std::vector<double> trunc(cf.data(), cf.data() + cf.size());
            truncate_coefficients(mesh, 1, trunc);
            std::vector<double> unit(static_cast<std::size_t>(thb.size()), 0.0);
            unit[fi] = 1.0;
            for (int k = 0; k <= 100; ++k) {
                const double x = k / 100.0;
                const double lib = thb.eval(unit, {x, 0.0, 0.0}).value;
                const double want = oracles::spline_eval(tf, 3, trunc, x);
                CHECK(lib == doctest::Approx(want).epsilon(1e-12).scale(1.0));
            }
        }
    }
}

TEST_CASE("extraction: unit selection, insertion-product oracle, THB partition of unity") {
    auto levels = oracles::square_levels(2, 4, 1);
    auto mesh0 = std::make_shared<HierMesh>(HierMesh::initial(levels));

    SUBCASE("level-0 element on the unrefined mesh selects unit weights") {
        HierBasis basis(mesh0, BasisFlavor::HB);
        const ElementExtraction ex = basis.extraction({0, {1, 2, 0}});
        REQUIRE(ex.global.size() == 9);
        CHECK(ex.coeffs.isIdentity(0.0));
    }

    auto mesh = std::make_shared<HierMesh>(
        mesh0->refine({{0, {0, 0, 0}}, {0, {1, 0, 0}}, {0, {0, 1, 0}}}, 2, Admissibility::T));

    SUBCASE("HB entries are products of knot-insertion coefficients") {
        HierBasis basis(mesh, BasisFlavor::HB);
        const KnotVector c0 = oracles::materialize_level(*levels, 0, 0);
        const KnotVector f0 = oracles::materialize_level(*levels, 1, 0);
        const auto m0 = knot_insertion_matrix(c0, f0);  // same in both directions
        const Cell q{1, {1, 1, 0}};
        REQUIRE(mesh->is_active(q));
        const ElementExtraction ex = basis.extraction(q);
        const auto first0 = levels->first_fun_on_element(1, 0, q.idx[0]);
        const auto first1 = levels->first_fun_on_element(1, 1, q.idx[1]);
        for (std::size_t col = 0; col < ex.global.size(); ++col) {
            const HierFun fun = basis.functions()[static_cast<std::size_t>(ex.global[col])];
            for (int r1 = 0; r1 <= 2; ++r1) {
                for (int r0 = 0; r0 <= 2; ++r0) {
                    const double got = ex.coeffs(r0 + 3 * r1, static_cast<Eigen::Index>(col));
                    double want;
                    if (fun.level == 1) {
                        want = (fun.idx[0] == first0 + r0 && fun.idx[1] == first1 + r1) ? 1.0
                                                                                        : 0.0;
                    } else {
                        want = m0.coeff(static_cast<int>(first0) + r0, fun.idx[0]) *
                               m0.coeff(static_cast<int>(first1) + r1, fun.idx[1]);
                    }
                    CHECK(got == doctest::Approx(want).epsilon(1e-13).scale(1.0));
                }
            }
        }
    }

    SUBCASE("THB extraction rows sum to one") {
        HierBasis basis(mesh, BasisFlavor::THB);
        for (const Cell& q : mesh->active_cells()) {
            const ElementExtraction ex = basis.extraction(q);
            const Eigen::VectorXd row_sum = ex.coeffs.rowwise().sum();
            for (Eigen::Index r = 0; r < row_sum.size(); ++r) {
                CHECK(row_sum[r] == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }

    SUBCASE("HB and THB columns span the same local space") {
        HierBasis hb(mesh, BasisFlavor::HB);
        HierBasis thb(mesh, BasisFlavor::THB);
        for (const Cell& q : mesh->active_cells()) {
            const auto eh = hb.extraction(q);
            const auto et = thb.extraction(q);
            Eigen::MatrixXd both(eh.coeffs.rows(), eh.coeffs.cols() + et.coeffs.cols());
            both << eh.coeffs, et.coeffs;
            const auto rank = [](const Eigen::MatrixXd& m) {
                Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
                qr.setThreshold(1e-10);
                return qr.rank();
            };
            const auto rh = rank(eh.coeffs);
            CHECK(rh == rank(et.coeffs));
            CHECK(rh == rank(both));
        }
    }
}

TEST_CASE("multilevel support extension") {
    auto levels = oracles::square_levels(2, 4, 1);
    HierMesh mesh = HierMesh::initial(levels).refine({{0, {0, 0, 0}}}, 2, Admissibility::T);

    SUBCASE("k == level reduces to the ordinary extension") {
        const Cell q{1, {1, 1, 0}};
        const IndexBox a = mesh.multilevel_support_extension(q, 1);
        const IndexBox b = levels->support_extension(1, q.idx);
        CHECK(a.lo == b.lo);
        CHECK(a.hi == b.hi);
    }

    SUBCASE("single-element base grid extends to the whole domain") {
        auto levels1 = oracles::square_levels(3, 1, 1);
        HierMesh m1 = HierMesh::initial(levels1).refine({{0, {0, 0, 0}}}, 2, Admissibility::T);
        for (int k = 0; k <= 1; ++k) {
            const IndexBox box = m1.multilevel_support_extension({1, {0, 1, 0}}, k);
            CHECK(box.lo[0] == 0);
            CHECK(box.lo[1] == 0);
            CHECK(box.hi[0] == (1 << k) - 1);
            CHECK(box.hi[1] == (1 << k) - 1);
        }
    }

    SUBCASE("ancestor-then-extend oracle") {
        const Cell q{1, {1, 0, 0}};
        const IndexBox got = mesh.multilevel_support_extension(q, 0);
        Idx anc{q.idx[0] >> 1, q.idx[1] >> 1, 0};
        const IndexBox want = levels->support_extension(0, anc);
        CHECK(got.lo == want.lo);
        CHECK(got.hi == want.hi);
        CHECK_THROWS_AS(mesh.multilevel_support_extension({0, {2, 2, 0}}, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("neighborhoods: empty cases, the two-kind figure, brute-force scan") {
    SUBCASE("level below mu-1 has empty neighborhoods") {
        auto levels = oracles::square_levels(2, 4, 1);
        HierMesh mesh = HierMesh::initial(levels);
        CHECK(mesh.neighborhood({0, {1, 1, 0}}, 2, Admissibility::H).empty());
        CHECK(mesh.neighborhood({0, {1, 1, 0}}, 2, Admissibility::T).empty());
    }

    SUBCASE("p=(2,2), mu=2: T-neighborhood strictly inside H-neighborhood") {
        // Corner element of a 4x4 grid refined once; the finest corner child
        // drives the comparison between the two neighborhood kinds.
        auto levels = oracles::square_levels(2, 4, 1);
        HierMesh mesh = HierMesh::initial(levels).refine({{0, {0, 0, 0}}}, 2, Admissibility::T);
        const Cell q{1, {0, 0, 0}};
        const auto nh = mesh.neighborhood(q, 2, Admissibility::H);
        const auto nt = mesh.neighborhood(q, 2, Admissibility::T);
        std::set<Cell> hs(nh.begin(), nh.end()), ts(nt.begin(), nt.end());
        CHECK(ts.size() < hs.size());
        for (const Cell& c : ts) CHECK(hs.count(c) == 1);
        // T-neighborhood: the three active cells meeting S_ext(q, 1) =
        // [0, 3/4]^2; the corner (0,0) itself is inactive.
        CHECK(ts == std::set<Cell>{{0, {1, 0, 0}}, {0, {0, 1, 0}}, {0, {1, 1, 0}}});
        // H-neighborhood: every active level-0 cell inside [0,1]^2 support
        // extension of the level-0 ancestor.
        CHECK(hs.size() == 8);
    }

    SUBCASE("random admissible meshes match the geometric scan") {
        std::mt19937_64 rng(17);
        for (int rep = 0; rep < 6; ++rep) {
            const int mu = 2 + static_cast<int>(rng() % 2);
            const auto kind = (rng() % 2) ? Admissibility::H : Admissibility::T;
            auto levels = oracles::square_levels(2, 4, 1);
            HierMesh mesh = oracles::random_admissible_mesh(rng, levels, mu, kind, 4);
            for (const Cell& q : mesh.active_cells()) {
                const auto got = mesh.neighborhood(q, mu, kind);
                std::set<Cell> got_set(got.begin(), got.end());
                // Oracle: scan every active cell of level l-mu+1 against the
                // closed extension box with open-cell semantics.
                std::set<Cell> want;
                const int k = q.level - mu + 1;
                if (k >= 0) {
                    const int ext_level = kind == Admissibility::H ? k : k + 1;
                    const IndexBox ext = mesh.multilevel_support_extension(q, ext_level);
                    const double blo0 =
                        levels->breakpoint(ext_level, 0, ext.lo[0]).to_double();
                    const double bhi0 =
                        levels->breakpoint(ext_level, 0, ext.hi[0] + 1).to_double();
                    const double blo1 =
                        levels->breakpoint(ext_level, 1, ext.lo[1]).to_double();
                    const double bhi1 =
                        levels->breakpoint(ext_level, 1, ext.hi[1] + 1).to_double();
                    for (const Idx& idx : mesh.active(k)) {
                        const Cell c{k, idx};
                        const auto ix = cell_interval(*levels, c, 0);
                        const auto iy = cell_interval(*levels, c, 1);
                        if (ix[0] < bhi0 && ix[1] > blo0 && iy[0] < bhi1 && iy[1] > blo1)
                            want.insert(c);
                    }
                }
                CHECK(got_set == want);
            }
        }
    }
}

TEST_CASE("refine: corner scenario, determinism, argument checks") {
    auto levels = oracles::square_levels(1, 2, 1);

    SUBCASE("T-admissible: only the marked element is bisected (+3 per step)") {
        HierMesh mesh = HierMesh::initial(levels);
        std::int64_t count = 4;
        for (int step = 0; step < 3; ++step) {
            const int l = mesh.max_active_level();
            const Cell corner{l, {0, 0, 0}};
            REQUIRE(mesh.is_active(corner));
            mesh = mesh.refine({corner}, 2, Admissibility::T);
            count += 3;
            CHECK(mesh.num_active() == count);
            CHECK(mesh.check_admissible(2, Admissibility::T).admissible);
        }
        CHECK(mesh.max_active_level() == 3);
    }

    SUBCASE("H-admissible: coarse neighbors are co-refined") {
        HierMesh mesh = HierMesh::initial(levels);
        const std::int64_t counts[3] = {7, 19, 31};
        for (int step = 0; step < 3; ++step) {
            const int l = mesh.max_active_level();
            mesh = mesh.refine({{l, {0, 0, 0}}}, 2, Admissibility::H);
            CHECK(mesh.num_active() == counts[step]);
            CHECK(mesh.check_admissible(2, Admissibility::H).admissible);
        }
    }

    SUBCASE("empty marked set leaves the mesh unchanged") {
        HierMesh mesh = HierMesh::initial(levels);
        CHECK(mesh.refine({}, 2, Admissibility::T) == mesh);
    }

    SUBCASE("inactive marked element and mu < 2 are rejected") {
        HierMesh mesh = HierMesh::initial(levels);
        CHECK_THROWS_AS(mesh.refine({{1, {0, 0, 0}}}, 2, Admissibility::T),
                        std::invalid_argument);
        CHECK_THROWS_AS(mesh.refine({{0, {0, 0, 0}}}, 1, Admissibility::T),
                        std::invalid_argument);
    }

    SUBCASE("refine is a pure function of its arguments") {
        HierMesh mesh = HierMesh::initial(levels).refine({{0, {0, 0, 0}}}, 2, Admissibility::H);
        const std::vector<Cell> marked{{1, {1, 1, 0}}, {0, {1, 1, 0}}};
        const HierMesh a = mesh.refine(marked, 2, Admissibility::H);
        const HierMesh b = mesh.refine(marked, 2, Admissibility::H);
        CHECK(a == b);
        CHECK(a.serialize() == b.serialize());
    }
}

TEST_CASE("admissibility checker") {
    auto levels = oracles::square_levels(2, 4, 1);

    SUBCASE("level-0 mesh is admissible for every class") {
        HierMesh mesh = HierMesh::initial(levels);
        for (int mu = 2; mu <= 5; ++mu) {
            CHECK(mesh.check_admissible(mu, Admissibility::H).admissible);
            CHECK(mesh.check_admissible(mu, Admissibility::T).admissible);
        }
    }

    SUBCASE("hand-built violation is caught with a witness") {
        // Raw bisections bypassing refine: deactivate (0,(0,0)) then its
        // child (1,(0,0)); the level-2 elements' level-0 extension escapes
        // Omega^1.
        HierMesh good = HierMesh::initial(levels);
        std::ostringstream os;
        os << "hmesh 2 2 2 1 3\n";
        const auto& kv = levels->base().kv(0);
        for (int d = 0; d < 2; ++d) {
            os << "knots " << kv.num_breakpoints();
            for (int j = 0; j < kv.num_breakpoints(); ++j)
                os << ' ' << kv.breakpoint(j).str() << ' ' << kv.multiplicity(j);
            os << '\n';
        }
        os << "0 0 0\n1 0 0\n";
        const HierMesh bad = HierMesh::deserialize(os.str());
        const auto check_h = bad.check_admissible(2, Admissibility::H);
        CHECK_FALSE(check_h.admissible);
        REQUIRE(check_h.witness.has_value());
        CHECK(check_h.witness->level == 2);
        const auto check_t = bad.check_admissible(2, Admissibility::T);
        CHECK_FALSE(check_t.admissible);
        // A wider class tolerates the same mesh.
        CHECK(bad.check_admissible(3, Admissibility::T).admissible);
    }
}

TEST_CASE("overlay") {
    std::mt19937_64 rng(29);
    auto levels = oracles::square_levels(2, 4, 1);
    const HierMesh base = HierMesh::initial(levels);

    HierMesh a = oracles::random_admissible_mesh(rng, levels, 2, Admissibility::T, 4);
    HierMesh b = oracles::random_admissible_mesh(rng, levels, 2, Admissibility::T, 4);

    CHECK(overlay(a, a) == a);
    CHECK(overlay(a, base) == a);

    const HierMesh o = overlay(a, b);
    CHECK(o.num_active() <= a.num_active() + b.num_active() - base.num_active());
    CHECK(o.check_admissible(2, Admissibility::T).admissible);

    // Common refinement: every active cell of the overlay sits inside an
    // active cell of both inputs.
    for (const Cell& c : o.active_cells()) {
        std::array<double, 3> center{0.0, 0.0, 0.0};
        for (int d = 0; d < 2; ++d) {
            const auto iv = cell_interval(o.levels(), c, d);
            center[d] = 0.5 * (iv[0] + iv[1]);
        }
        CHECK(a.active_cell_at(center).level <= c.level);
        CHECK(b.active_cell_at(center).level <= c.level);
    }

    auto other = oracles::square_levels(2, 2, 1);
    CHECK_THROWS_AS(overlay(a, HierMesh::initial(other)), std::invalid_argument);
}

TEST_CASE("hierarchical quasi-interpolant: unity, projector, locality") {
    std::mt19937_64 rng(41);
    auto levels = oracles::square_levels(2, 4, 1);
    auto mesh = std::make_shared<HierMesh>(oracles::random_admissible_mesh(
        rng, levels, 2, Admissibility::T, 3));
    HierBasis thb(mesh, BasisFlavor::THB);

    SUBCASE("constant one gives all-ones coefficients") {
        const auto c = hier_quasi_interpolant(thb, [](const std::array<double, 3>&) {
            return 1.0;
        });
        for (double v : c) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
    }

    SUBCASE("random members of the space are reproduced") {
        std::uniform_real_distribution<double> cs(-1.0, 1.0), xs(0.0, 1.0);
        std::vector<double> c(static_cast<std::size_t>(thb.size()));
        for (auto& v : c) v = cs(rng);
        const auto proj = hier_quasi_interpolant(thb, [&](const std::array<double, 3>& x) {
            return thb.eval(c, x).value;
        });
        for (int k = 0; k < 50; ++k) {
            const std::array<double, 3> x{xs(rng), xs(rng), 0.0};
            CHECK(thb.eval(proj, x).value ==
                  doctest::Approx(thb.eval(c, x).value).epsilon(1e-10).scale(1.0));
        }
    }

    SUBCASE("perturbations outside the locality region do not touch Q") {
        const Cell q = mesh->active_cells()[mesh->active_cells().size() / 2];
        const auto region = qi_locality_region(thb, q, LocalityRegion::ExtendedSupport);
        CHECK(!region.empty());
        // The tight variant is never larger.
        const auto tight = qi_locality_region(thb, q, LocalityRegion::TightSupport);
        auto f1 = [](const std::array<double, 3>& x) {
            return std::sin(3.0 * x[0]) * (1.0 + x[1]);
        };
        auto f2 = [&](const std::array<double, 3>& x) {
            return f1(x) + (region_contains(*mesh, region, x) ? 0.0 : 5.0);
        };
        const auto c1 = hier_quasi_interpolant(thb, f1);
        const auto c2 = hier_quasi_interpolant(thb, f2);
        std::uniform_real_distribution<double> us(0.0, 1.0);
        const auto lo0 = cell_interval(*levels, q, 0);
        const auto lo1 = cell_interval(*levels, q, 1);
        for (int k = 0; k < 20; ++k) {
            const std::array<double, 3> x{lo0[0] + (lo0[1] - lo0[0]) * us(rng),
                                          lo1[0] + (lo1[1] - lo1[0]) * us(rng), 0.0};
            CHECK(thb.eval(c1, x).value ==
                  doctest::Approx(thb.eval(c2, x).value).epsilon(1e-12).scale(1.0));
        }
        // Tight region is contained in the extended one on this mesh.
        for (const Cell& c : tight) {
            std::array<double, 3> center{0.0, 0.0, 0.0};
            for (int d = 0; d < 2; ++d) {
                const auto iv = cell_interval(*levels, c, d);
                center[d] = 0.5 * (iv[0] + iv[1]);
            }
            CHECK(region_contains(*mesh, region, center));
        }
    }
}

TEST_CASE("level spans, neighbor levels, closure bookkeeping, nestedness") {
    std::mt19937_64 rng(59);
    for (int rep = 0; rep < 4; ++rep) {
        const int mu = 2 + static_cast<int>(rng() % 3);
        const auto kind = (rng() % 2) ? Admissibility::H : Admissibility::T;
        const auto flavor = kind == Admissibility::H ? BasisFlavor::HB : BasisFlavor::THB;
        auto levels = oracles::square_levels(2 + static_cast<int>(rng() % 2), 4, 1);
        auto mesh = std::make_shared<HierMesh>(
            oracles::random_admissible_mesh(rng, levels, mu, kind, 5));
        CHECK(mesh->check_admissible(mu, kind).admissible);
        HierBasis basis(mesh, flavor);

        // Level-span bound: functions with nonzero restriction span at most
        // mu successive levels per element.
        for (const Cell& q : mesh->active_cells()) {
            const auto ex = basis.extraction(q);
            std::set<int> lvls;
            for (std::size_t col = 0; col < ex.global.size(); ++col) {
                if (ex.coeffs.col(static_cast<Eigen::Index>(col)).norm() > 1e-13) {
                    lvls.insert(basis.functions()[static_cast<std::size_t>(ex.global[col])].level);
                }
            }
            CHECK(static_cast<int>(lvls.size()) <= mu);
            if (!lvls.empty()) CHECK(*lvls.rbegin() - *lvls.begin() < mu);
        }

        // Adjacent active elements differ in level by < mu.
        const auto cells = mesh->active_cells();
        for (std::size_t i = 0; i < cells.size(); ++i) {
            for (std::size_t j = i + 1; j < cells.size(); ++j) {
                bool touch = true;
                for (int d = 0; d < 2 && touch; ++d) {
                    const auto a = cell_interval(*levels, cells[i], d);
                    const auto b = cell_interval(*levels, cells[j], d);
                    if (a[1] < b[0] || b[1] < a[0]) touch = false;
                }
                if (touch) CHECK(std::abs(cells[i].level - cells[j].level) < mu);
            }
        }

        // Closure bookkeeping gives a bounded ratio.
        CHECK(mesh->closure_ratio() >= 0.0);
        CHECK(mesh->closure_ratio() <= 32.0);

        // Nestedness: a member of the coarse space is reproduced after
        // refining (re-expansion through the fine quasi-interpolant).
        std::uniform_real_distribution<double> cs(-1.0, 1.0), xs(0.0, 1.0);
        std::vector<double> c(static_cast<std::size_t>(basis.size()));
        for (auto& v : c) v = cs(rng);
        auto fine_mesh = std::make_shared<HierMesh>(
            mesh->refine({cells[cells.size() / 2]}, mu, kind));
        HierBasis fine(fine_mesh, BasisFlavor::THB);
        const auto cf = hier_quasi_interpolant(fine, [&](const std::array<double, 3>& x) {
            return basis.eval(c, x).value;
        });
        for (int k = 0; k < 25; ++k) {
            const std::array<double, 3> x{xs(rng), xs(rng), 0.0};
            CHECK(fine.eval(cf, x).value ==
                  doctest::Approx(basis.eval(c, x).value).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("serialization round-trips bit-exactly; SVG renders") {
    std::mt19937_64 rng(67);
    auto levels = oracles::square_levels(3, 4, 2);
    const HierMesh mesh = oracles::random_admissible_mesh(rng, levels, 3, Admissibility::H, 4);
    const std::string text = mesh.serialize();
    const HierMesh back = HierMesh::deserialize(text);
    CHECK(back == mesh);
    CHECK(back.serialize() == text);

    const std::string svg = mesh_to_svg(mesh);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("rect") != std::string::npos);
}
