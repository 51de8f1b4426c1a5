// Command-line driver: experiment presets around the adaptive
// solve -> estimate -> mark -> refine loop, refinement demos, a quick
// self-check, and mesh-file inspection.
//
// Exit codes: 0 success, 2 usage/configuration, 3 numerical failure.

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "hsfem/adaptive_loop.hpp"
#include "hsfem/knot_insertion.hpp"
#include "hsfem/oscillation.hpp"
#include "hsfem/rate_fit.hpp"

using namespace hsfem;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
    std::string preset;
    std::string geometry = "identity";
    std::string problem = "sine";
    int p = 2;
    int m = 1;
    int mu = 2;
    std::string kind = "T";
    std::string flavor = "thb";
    double theta = 0.25;
    std::string cmin = "1";
    int base_elements = 4;
    int max_iters = 60;
    std::int64_t max_dofs = 200000;
    double eta_tol = 0.0;
    std::string out = "out";
    std::uint64_t seed = 0;
    int svg_every = 0;
    std::string solver = "direct";
    int quad_boost = 0;
    std::string timing = "wall";
    std::string align = "aligned";
    std::string dump_matrix_path;
};

[[noreturn]] void usage_error(const std::string& what) {
    std::cerr << "error: " << what << "\n";
    std::exit(2);
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto to_int = [&](const std::string& v) { return std::stoi(v); };
    if (key == "preset") cfg.preset = value;
    else if (key == "geometry") cfg.geometry = value;
    else if (key == "problem") cfg.problem = value;
    else if (key == "p") cfg.p = to_int(value);
    else if (key == "m") cfg.m = to_int(value);
    else if (key == "mu") cfg.mu = to_int(value);
    else if (key == "kind") cfg.kind = value;
    else if (key == "flavor") cfg.flavor = value;
    else if (key == "theta") cfg.theta = std::stod(value);
    else if (key == "cmin") cfg.cmin = value;
    else if (key == "base_elements") cfg.base_elements = to_int(value);
    else if (key == "max_iters") cfg.max_iters = to_int(value);
    else if (key == "max_dofs") cfg.max_dofs = std::stoll(value);
    else if (key == "eta_tol") cfg.eta_tol = std::stod(value);
    else if (key == "out") cfg.out = value;
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "svg_every") cfg.svg_every = to_int(value);
    else if (key == "solver") cfg.solver = value;
    else if (key == "quad_boost") cfg.quad_boost = to_int(value);
    else if (key == "timing") cfg.timing = value;
    else if (key == "align") cfg.align = value;
    else if (key == "dump_matrix") cfg.dump_matrix_path = value;
    else usage_error("unknown config key '" + key + "'");
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) usage_error("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                usage_error(path + ":" + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void apply_preset(RunConfig& cfg) {
    if (cfg.preset.empty()) return;
    if (cfg.preset == "edge-singularity") {
        cfg.problem = "edge-singularity";
        cfg.geometry = "identity";
        if (cfg.base_elements == 0) cfg.base_elements = 4;
    } else if (cfg.preset == "approx-class") {
        cfg.problem = "approx-class";
        cfg.geometry = "identity";
        cfg.p = cfg.p < 2 ? 4 : cfg.p;
        cfg.base_elements = 2;
        if (cfg.align == "nonaligned" && cfg.quad_boost == 0) cfg.quad_boost = 4;
    } else {
        usage_error("unknown preset '" + cfg.preset + "'");
    }
}

EllipticProblem make_problem(const RunConfig& cfg) {
    if (cfg.problem == "sine") {
        auto u = [](const Eigen::Vector2d& x) {
            return std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
        };
        auto grad = [](const Eigen::Vector2d& x) {
            return Eigen::Vector2d(M_PI * std::cos(M_PI * x[0]) * std::sin(M_PI * x[1]),
                                   M_PI * std::sin(M_PI * x[0]) * std::cos(M_PI * x[1]));
        };
        return EllipticProblem::poisson(
            [u](const Eigen::Vector2d& x) { return 2 * M_PI * M_PI * u(x); }, u, grad);
    }
    if (cfg.problem == "bubble") {
        auto u = [](const Eigen::Vector2d& x) {
            return x[0] * (1 - x[0]) * x[1] * (1 - x[1]);
        };
        auto grad = [](const Eigen::Vector2d& x) {
            return Eigen::Vector2d((1 - 2 * x[0]) * x[1] * (1 - x[1]),
                                   x[0] * (1 - x[0]) * (1 - 2 * x[1]));
        };
        return EllipticProblem::poisson(
            [](const Eigen::Vector2d& x) {
                return 2 * x[1] * (1 - x[1]) + 2 * x[0] * (1 - x[0]);
            },
            u, grad);
    }
    if (cfg.problem == "edge-singularity") {
        // u = x^2.3 (1-x) y^2.9 (1-y), singular along x = 0 and y = 0.
        constexpr double a = 2.3, b = 2.9;
        auto g = [](double x, double e) { return std::pow(x, e) - std::pow(x, e + 1); };
        auto dg = [](double x, double e) {
            return e * std::pow(x, e - 1) - (e + 1) * std::pow(x, e);
        };
        auto ddg = [](double x, double e) {
            return e * (e - 1) * std::pow(x, e - 2) - (e + 1) * e * std::pow(x, e - 1);
        };
        auto u = [=](const Eigen::Vector2d& x) { return g(x[0], a) * g(x[1], b); };
        auto grad = [=](const Eigen::Vector2d& x) {
            return Eigen::Vector2d(dg(x[0], a) * g(x[1], b), g(x[0], a) * dg(x[1], b));
        };
        auto f = [=](const Eigen::Vector2d& x) {
            return -(ddg(x[0], a) * g(x[1], b) + g(x[0], a) * ddg(x[1], b));
        };
        return EllipticProblem::poisson(f, u, grad);
    }
    if (cfg.problem == "approx-class") {
        const double a = cfg.align == "nonaligned" ? 0.2 : 0.25;
        const double b = cfg.align == "nonaligned" ? 0.8 : 0.75;
        const double w = M_PI / (b - a);
        auto s = [=](double x) {
            if (x < a || x > b) return 0.0;
            const double v = std::sin(w * (x - a));
            return v * v;
        };
        auto ds = [=](double x) {
            if (x < a || x > b) return 0.0;
            return w * std::sin(2 * w * (x - a));
        };
        auto dds = [=](double x) {
            if (x < a || x > b) return 0.0;
            return 2 * w * w * std::cos(2 * w * (x - a));
        };
        auto u = [=](const Eigen::Vector2d& x) { return s(x[0]) * std::sin(M_PI * x[1]); };
        auto grad = [=](const Eigen::Vector2d& x) {
            return Eigen::Vector2d(ds(x[0]) * std::sin(M_PI * x[1]),
                                   M_PI * s(x[0]) * std::cos(M_PI * x[1]));
        };
        auto f = [=](const Eigen::Vector2d& x) {
            return (M_PI * M_PI * s(x[0]) - dds(x[0])) * std::sin(M_PI * x[1]);
        };
        return EllipticProblem::poisson(f, u, grad);
    }
    usage_error("unknown problem id '" + cfg.problem + "'");
}

NurbsGeometry make_geometry(const RunConfig& cfg) {
    if (cfg.geometry == "identity") return NurbsGeometry::identity_square();
    if (cfg.geometry == "quarter-annulus") return NurbsGeometry::quarter_annulus();
    return NurbsGeometry::load_file(cfg.geometry);
}

AdaptiveConfig to_adaptive(const RunConfig& cfg) {
    if (cfg.mu < 2) usage_error("mu must be >= 2");
    if (!(cfg.theta > 0.0) || cfg.theta > 1.0) usage_error("theta must be in (0,1]");
    if (cfg.m < 1 || cfg.m > cfg.p) usage_error("m must be in [1, p]");
    AdaptiveConfig a;
    std::vector<KnotVector> kvs{KnotVector::uniform(cfg.p, cfg.base_elements, cfg.m),
                                KnotVector::uniform(cfg.p, cfg.base_elements, cfg.m)};
    a.levels = std::make_shared<LevelSequence>(TensorSpace(std::move(kvs)), cfg.m);
    a.geometry = make_geometry(cfg);
    a.problem = make_problem(cfg);
    a.flavor = cfg.flavor == "hb" ? BasisFlavor::HB : BasisFlavor::THB;
    if (cfg.kind != "H" && cfg.kind != "T") usage_error("kind must be H or T");
    a.kind = cfg.kind == "H" ? Admissibility::H : Admissibility::T;
    a.mu = cfg.mu;
    a.mark.theta = cfg.theta;
    a.mark.c_min = cfg.cmin == "inf" ? std::numeric_limits<double>::infinity()
                                     : std::stod(cfg.cmin);
    a.max_iterations = cfg.max_iters;
    a.max_dofs = cfg.max_dofs;
    a.eta_tol = cfg.eta_tol;
    if (cfg.solver == "auto") a.solver.kind = SolveOptions::Kind::Auto;
    else if (cfg.solver == "pcg") a.solver.kind = SolveOptions::Kind::PCG;
    else if (cfg.solver == "direct") a.solver.kind = SolveOptions::Kind::Direct;
    else usage_error("solver must be auto|pcg|direct");
    a.quad_boost = cfg.quad_boost;
    if (cfg.problem == "approx-class") {
        // The load is defined in pieces; split element quadrature at the
        // strip boundaries.
        const double lo = cfg.align == "nonaligned" ? 0.2 : 0.25;
        const double hi = cfg.align == "nonaligned" ? 0.8 : 0.75;
        a.split_lines[0] = {lo, hi};
    }
    a.measure_wall_time = cfg.timing != "off";
    return a;
}

int cmd_run(const RunConfig& cfg) {
    const AdaptiveConfig base = to_adaptive(cfg);
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    const fs::path csv_path = fs::path(cfg.out) / "records.csv";
    std::FILE* csv = std::fopen(csv_path.string().c_str(), "w");
    if (!csv) {
        std::cerr << "error: cannot open " << csv_path << " for writing\n";
        return 2;
    }
    std::fprintf(csv, "iter,n_elements,n_dofs,eta,err_h1,err_l2,n_marked,max_level,wall_ms\n");
    std::fflush(csv);

    AdaptiveConfig acfg = base;
    acfg.on_iteration = [&](const AdaptRecord& r, const HierMesh& mesh) {
        std::fprintf(csv, "%d,%" PRId64 ",%" PRId64 ",%.12e,%.12e,%.12e,%" PRId64 ",%d,%.3f\n",
                     r.iter, r.n_elements, r.n_dofs, r.eta, r.err_h1, r.err_l2, r.n_marked,
                     r.max_level, r.wall_ms);
        std::fflush(csv);
        if (cfg.svg_every > 0 && r.iter % cfg.svg_every == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "mesh_%04d.svg", r.iter);
            std::ofstream svg(fs::path(cfg.out) / name);
            svg << mesh_to_svg(mesh);
        }
        std::printf("iter %3d  elements %8" PRId64 "  dofs %8" PRId64
                    "  eta %.6e  err_h1 %.6e  marked %" PRId64 "  levels %d\n",
                    r.iter, r.n_elements, r.n_dofs, r.eta, r.err_h1, r.n_marked,
                    r.max_level + 1);
    };

    try {
        const AdaptiveResult res = adaptive_loop(acfg);
        if (!cfg.dump_matrix_path.empty()) {
            const HierBasis basis(res.mesh, acfg.flavor);
            const LinearSystem sys = assemble(basis, acfg.geometry, acfg.problem);
            std::ofstream dump(cfg.dump_matrix_path);
            dump << dump_matrix(sys.matrix);
        }
        // Fitted tail slopes for quick inspection.
        std::vector<double> dofs, eta, err;
        for (const auto& r : res.records) {
            dofs.push_back(static_cast<double>(r.n_dofs));
            eta.push_back(r.eta);
            if (std::isfinite(r.err_h1)) err.push_back(r.err_h1);
        }
        const int tail = std::min<int>(5, static_cast<int>(dofs.size()));
        if (tail >= 2) {
            std::printf("eta slope (last %d): %.3f\n", tail, rate_fit(dofs, eta, tail));
            if (err.size() == dofs.size())
                std::printf("err slope (last %d): %.3f\n", tail, rate_fit(dofs, err, tail));
        }
        std::printf("closure ratio: %.3f\n", res.closure_ratio);
        std::fclose(csv);
        return 0;
    } catch (const std::exception& e) {
        std::fclose(csv);
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}

int cmd_refine_demo(const std::string& kind_str, int mu, int p, int steps,
                    const std::string& out) {
    if (steps < 1) usage_error("steps must be >= 1");
    if (mu < 2) usage_error("mu must be >= 2");
    const Admissibility kind = kind_str == "H" ? Admissibility::H : Admissibility::T;
    std::vector<KnotVector> kvs{KnotVector::uniform(p, 2), KnotVector::uniform(p, 2)};
    auto levels = std::make_shared<LevelSequence>(TensorSpace(std::move(kvs)), 1);
    HierMesh mesh = HierMesh::initial(levels);

    std::error_code ec;
    fs::create_directories(out, ec);
    std::printf("step 0: %" PRId64 " elements\n", mesh.num_active());
    {
        std::ofstream svg(fs::path(out) / "demo_0000.svg");
        svg << mesh_to_svg(mesh);
    }
    for (int s = 1; s <= steps; ++s) {
        const Cell corner{mesh.max_active_level(), {0, 0, 0}};
        if (!mesh.is_active(corner)) usage_error("demo invariant broken: corner inactive");
        const std::int64_t before = mesh.num_active();
        mesh = mesh.refine({corner}, mu, kind);
        std::printf("step %d: %" PRId64 " elements (+%" PRId64 ")\n", s, mesh.num_active(),
                    mesh.num_active() - before);
        char name[32];
        std::snprintf(name, sizeof name, "demo_%04d.svg", s);
        std::ofstream svg(fs::path(out) / name);
        svg << mesh_to_svg(mesh);
    }
    const auto check = mesh.check_admissible(mu, kind);
    std::printf("admissible: %s\n", check.admissible ? "yes" : "NO");
    return check.admissible ? 0 : 3;
}

int cmd_check(std::uint64_t seed) {
    int failures = 0;
    auto report = [&](const std::string& name, bool ok) {
        std::printf("%s %s\n", ok ? "ok  " : "FAIL", name.c_str());
        if (!ok) ++failures;
    };
    std::mt19937_64 rng(seed);

    {  // partition of unity on random evaluation points
        bool ok = true;
        const KnotVector kv = KnotVector::uniform(3, 8);
        std::uniform_real_distribution<double> xs(0.0, 1.0);
        for (int k = 0; k < 200 && ok; ++k) {
            const SpanBasis sb = kv.eval(xs(rng));
            double sum = 0.0;
            for (int r = 0; r <= 3; ++r) sum += sb.value[r];
            ok = std::abs(sum - 1.0) <= 1e-12;
        }
        report("spline partition of unity", ok);
    }
    {  // two-scale exactness
        bool ok = true;
        const KnotVector coarse = KnotVector::uniform(2, 4);
        std::vector<Dyadic> z;
        std::vector<int> m;
        for (int j = 0; j < coarse.num_breakpoints(); ++j) {
            z.push_back(coarse.breakpoint(j));
            m.push_back(coarse.multiplicity(j));
            if (j + 1 < coarse.num_breakpoints()) {
                z.push_back(midpoint(coarse.breakpoint(j), coarse.breakpoint(j + 1)));
                m.push_back(1);
            }
        }
        const KnotVector fine(2, std::move(z), std::move(m));
        const auto mat = knot_insertion_matrix(coarse, fine);
        Eigen::VectorXd c(coarse.n());
        std::uniform_real_distribution<double> cs(-1.0, 1.0);
        for (int i = 0; i < coarse.n(); ++i) c[i] = cs(rng);
        const Eigen::VectorXd cf = mat * c;
        TensorSpace sc({coarse}), sf({fine});
        std::uniform_real_distribution<double> xs(0.0, 1.0);
        for (int k = 0; k < 100 && ok; ++k) {
            const std::array<double, 3> x{xs(rng), 0.0, 0.0};
            const double a = sc.eval({c.data(), c.data() + c.size()}, x);
            const double b = sf.eval({cf.data(), cf.data() + cf.size()}, x);
            ok = std::abs(a - b) <= 1e-12;
        }
        report("knot insertion exactness", ok);
    }
    {  // corner refinement scenario
        std::vector<KnotVector> kvs{KnotVector::uniform(1, 2), KnotVector::uniform(1, 2)};
        auto levels = std::make_shared<LevelSequence>(TensorSpace(std::move(kvs)), 1);
        HierMesh mesh = HierMesh::initial(levels);
        bool ok = true;
        for (int s = 0; s < 3 && ok; ++s) {
            const std::int64_t before = mesh.num_active();
            mesh = mesh.refine({{mesh.max_active_level(), {0, 0, 0}}}, 2, Admissibility::T);
            ok = mesh.num_active() == before + 3;
        }
        report("T-admissible corner refinement adds 3 elements per step", ok);
    }
    {  // randomized admissibility + THB partition of unity
        bool ok = true;
        std::vector<KnotVector> kvs{KnotVector::uniform(2, 4), KnotVector::uniform(2, 4)};
        auto levels = std::make_shared<LevelSequence>(TensorSpace(std::move(kvs)), 1);
        auto mesh = std::make_shared<HierMesh>(HierMesh::initial(levels));
        for (int s = 0; s < 4; ++s) {
            const auto cells = mesh->active_cells();
            std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
            std::vector<Cell> marked{cells[pick(rng)], cells[pick(rng)]};
            std::sort(marked.begin(), marked.end());
            marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
            mesh = std::make_shared<HierMesh>(mesh->refine(marked, 2, Admissibility::T));
            ok = ok && mesh->check_admissible(2, Admissibility::T).admissible;
        }
        HierBasis thb(mesh, BasisFlavor::THB);
        for (const Cell& q : mesh->active_cells()) {
            const auto ex = thb.extraction(q);
            const Eigen::VectorXd sums = ex.coeffs.rowwise().sum();
            for (Eigen::Index r = 0; r < sums.size() && ok; ++r)
                ok = std::abs(sums[r] - 1.0) <= 1e-12;
        }
        report("randomized refinement stays admissible; THB partition of unity", ok);
    }
    {  // Dörfler minimality on a tiny instance
        std::uniform_real_distribution<double> vals(0.0, 1.0);
        std::vector<double> ind(10);
        for (auto& v : ind) v = vals(rng);
        const auto marked = dorfler_mark(ind, {0.4, 1.0});
        double total = 0.0, got = 0.0;
        for (double v : ind) total += v;
        for (auto id : marked) got += ind[static_cast<std::size_t>(id)];
        bool ok = got >= 0.4 * total - 1e-12;
        if (!marked.empty()) {
            double smallest = std::numeric_limits<double>::infinity();
            for (auto id : marked) smallest = std::min(smallest, ind[static_cast<std::size_t>(id)]);
            ok = ok && (got - smallest < 0.4 * total);
        }
        report("Doerfler marking minimal and sufficient", ok);
    }
    return failures == 0 ? 0 : 3;
}

int cmd_dump_mesh(const std::string& input, const std::string& svg_path) {
    std::ifstream in(input);
    if (!in) usage_error("cannot open mesh file " + input);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        const HierMesh mesh = HierMesh::deserialize(ss.str());
        std::cout << mesh.serialize();
        if (!svg_path.empty()) {
            std::ofstream svg(svg_path);
            svg << mesh_to_svg(mesh);
        }
        std::cerr << "elements: " << mesh.num_active() << ", levels: " << mesh.num_levels()
                  << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "invalid mesh file: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive isogeometric FEM on hierarchical spline spaces"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_file;
    auto* run = app.add_subcommand("run", "Run an adaptive experiment, writing CSV and SVG");
    run->add_option("--config", config_file, "key = value configuration file");
    run->add_option("--preset", cfg.preset, "edge-singularity | approx-class");
    run->add_option("--geometry", cfg.geometry, "identity | quarter-annulus | file path");
    run->add_option("--problem", cfg.problem, "sine | bubble | edge-singularity | approx-class");
    run->add_option("--p", cfg.p, "spline degree");
    run->add_option("--m", cfg.m, "interior knot multiplicity (continuity C^(p-m))");
    run->add_option("--mu", cfg.mu, "admissibility class (>= 2)");
    run->add_option("--kind", cfg.kind, "H | T");
    run->add_option("--flavor", cfg.flavor, "hb | thb");
    run->add_option("--theta", cfg.theta, "Doerfler parameter in (0,1]");
    run->add_option("--cmin", cfg.cmin, "1 (minimal marking) or inf (uniform)");
    run->add_option("--base-elements", cfg.base_elements, "level-0 grid size per direction");
    run->add_option("--max-iters", cfg.max_iters, "iteration cap");
    run->add_option("--max-dofs", cfg.max_dofs, "dof cap (0: none)");
    run->add_option("--eta-tol", cfg.eta_tol, "estimator stopping tolerance (0: none)");
    run->add_option("--out", cfg.out, "output directory");
    run->add_option("--seed", cfg.seed, "random seed (property demos)");
    run->add_option("--svg-every", cfg.svg_every, "mesh snapshot every s iterations (0: off)");
    run->add_option("--solver", cfg.solver, "auto | pcg | direct");
    run->add_option("--quad-boost", cfg.quad_boost, "extra Gauss points per direction");
    run->add_option("--timing", cfg.timing, "wall | off (off: deterministic CSV)");
    run->add_option("--align", cfg.align, "approx-class: aligned | nonaligned");
    run->add_option("--dump-matrix", cfg.dump_matrix_path, "write final stiffness matrix");

    std::string demo_kind = "T";
    int demo_mu = 2, demo_p = 1, demo_steps = 3;
    std::string demo_out = "out";
    auto* demo = app.add_subcommand("refine-demo", "Corner refinement demo with SVG sequence");
    demo->add_option("--kind", demo_kind, "H | T");
    demo->add_option("--mu", demo_mu, "admissibility class");
    demo->add_option("--p", demo_p, "degree");
    demo->add_option("--steps", demo_steps, "number of refinement steps");
    demo->add_option("--out", demo_out, "output directory");

    std::uint64_t check_seed = 1;
    auto* check = app.add_subcommand("check", "Deterministic property self-check");
    check->add_option("--seed", check_seed, "random seed");

    std::string mesh_in, mesh_svg;
    auto* dump = app.add_subcommand("dump-mesh", "Validate and echo a serialized mesh file");
    dump->add_option("input", mesh_in, "mesh file")->required();
    dump->add_option("--svg", mesh_svg, "also render to SVG");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            if (!config_file.empty()) {
                // The file provides the base values; explicitly passed flags
                // win over it.
                RunConfig flags = cfg;
                cfg = RunConfig{};
                load_config_file(cfg, config_file);
                auto keep = [&](const char* name, auto RunConfig::* field) {
                    if (run->count(name) > 0) cfg.*field = flags.*field;
                };
                keep("--preset", &RunConfig::preset);
                keep("--geometry", &RunConfig::geometry);
                keep("--problem", &RunConfig::problem);
                keep("--p", &RunConfig::p);
                keep("--m", &RunConfig::m);
                keep("--mu", &RunConfig::mu);
                keep("--kind", &RunConfig::kind);
                keep("--flavor", &RunConfig::flavor);
                keep("--theta", &RunConfig::theta);
                keep("--cmin", &RunConfig::cmin);
                keep("--base-elements", &RunConfig::base_elements);
                keep("--max-iters", &RunConfig::max_iters);
                keep("--max-dofs", &RunConfig::max_dofs);
                keep("--eta-tol", &RunConfig::eta_tol);
                keep("--out", &RunConfig::out);
                keep("--seed", &RunConfig::seed);
                keep("--svg-every", &RunConfig::svg_every);
                keep("--solver", &RunConfig::solver);
                keep("--quad-boost", &RunConfig::quad_boost);
                keep("--timing", &RunConfig::timing);
                keep("--align", &RunConfig::align);
                keep("--dump-matrix", &RunConfig::dump_matrix_path);
            }
            apply_preset(cfg);
            return cmd_run(cfg);
        }
        if (demo->parsed()) return cmd_refine_demo(demo_kind, demo_mu, demo_p, demo_steps, demo_out);
        if (check->parsed()) return cmd_check(check_seed);
        if (dump->parsed()) return cmd_dump_mesh(mesh_in, mesh_svg);
    } catch (const SolverError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const GeometryError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
