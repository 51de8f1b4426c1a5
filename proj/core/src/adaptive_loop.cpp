#include "hsfem/adaptive_loop.hpp"

#include <chrono>

namespace hsfem {

AdaptiveResult adaptive_loop(const AdaptiveConfig& config) {
    if (!config.levels) throw ConfigError("adaptive_loop: no level sequence configured");
    if (config.mu < 2) throw ConfigError("adaptive_loop: admissibility class must be >= 2");
    if (!(config.mark.theta > 0.0) || config.mark.theta > 1.0)
        throw ConfigError("adaptive_loop: theta must be in (0,1]");

    AdaptiveResult result;
    auto mesh = std::make_shared<HierMesh>(HierMesh::initial(config.levels));

    for (int iter = 0;; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        auto basis = std::make_shared<HierBasis>(mesh, config.flavor);

        LinearSystem system;
        Solution solution;
        EstimatorResult eta;
        try {
            AssembleOptions aopts;
            aopts.quad_boost = config.quad_boost;
            aopts.split_lines = config.split_lines;
            system = assemble(*basis, config.geometry, config.problem, aopts);
            const Eigen::VectorXd x = solve_system(system, config.solver);
            solution = expand_solution(basis, system.dofs, x);

            EstimateOptions eopts;
            eopts.quad_boost = config.quad_boost;
            eopts.split_lines = config.split_lines;
            eta = estimate(*basis, config.geometry, config.problem, solution, eopts);
        } catch (const std::exception& err) {
            throw std::runtime_error("adaptive_loop: iteration " + std::to_string(iter) + ": " +
                                     err.what());
        }

        AdaptRecord rec;
        rec.iter = iter;
        rec.n_elements = mesh->num_active();
        rec.n_dofs = system.dofs.num_free();
        rec.eta = eta.total();
        rec.max_level = mesh->max_active_level();
        if (config.problem.exact_u && config.problem.exact_grad_u) {
            const ErrorNorms norms = h1_error(solution, config.geometry, config.problem,
                                              config.quad_boost, config.split_lines);
            rec.err_h1 = norms.h1_semi;
            rec.err_l2 = norms.l2;
        }

        const bool stop_eta = config.eta_tol > 0.0 && rec.eta <= config.eta_tol;
        const bool stop_iters = iter + 1 >= config.max_iterations;
        const bool stop_dofs = config.max_dofs > 0 && rec.n_dofs >= config.max_dofs;

        std::vector<std::int64_t> marked_ids;
        if (!(stop_eta || stop_iters || stop_dofs)) {
            marked_ids = dorfler_mark(eta.indicators2(), config.mark);
        }
        rec.n_marked = static_cast<std::int64_t>(marked_ids.size());

        const auto t1 = std::chrono::steady_clock::now();
        rec.wall_ms = config.measure_wall_time
                          ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                          : 0.0;
        result.records.push_back(rec);
        if (config.on_iteration) config.on_iteration(rec, *mesh);

        if (stop_eta || stop_iters || stop_dofs) {
            result.mesh = mesh;
            result.solution = std::move(solution);
            result.closure_ratio = mesh->closure_ratio();
            return result;
        }

        const std::vector<Cell> cells = mesh->active_cells();
        std::vector<Cell> marked;
        marked.reserve(marked_ids.size());
        for (std::int64_t id : marked_ids) marked.push_back(cells[static_cast<std::size_t>(id)]);
        mesh = std::make_shared<HierMesh>(mesh->refine(marked, config.mu, config.kind));
    }
}

}  // namespace hsfem
