#include "hsfem/hier_basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "hsfem/detail/local_projection.hpp"

namespace hsfem {

namespace {

bool support_in_domain(const HierMesh& mesh, int level, const Idx& f) {
    return mesh.box_in_domain(level, mesh.levels().support_box(level, f));
}

}  // namespace

std::vector<HierFun> active_functions(const HierMesh& mesh) {
    const auto& levels = mesh.levels();
    const int dim = mesh.dim();
    std::vector<HierFun> out;
    for (int l = 0; l < mesh.num_levels(); ++l) {
        std::set<Idx> candidates;
        for (const auto& cell : mesh.active(l)) {
            IndexBox window;
            for (int d = 0; d < dim; ++d) {
                window.lo[d] = static_cast<int>(levels.first_fun_on_element(l, d, cell[d]));
                window.hi[d] = window.lo[d] + levels.degree(d);
            }
            window.for_each(dim, [&](const Idx& f) { candidates.insert(f); });
        }
        for (const Idx& f : candidates) {
            if (support_in_domain(mesh, l, f)) out.push_back({l, f});
        }
    }
    return out;
}

void truncate_coefficients(const HierMesh& mesh, int stage, std::vector<double>& coeffs) {
    const auto& levels = mesh.levels();
    const int dim = mesh.dim();
    const Idx n = levels.funs_per_dir(stage);
    std::int64_t expected = 1;
    for (int d = 0; d < dim; ++d) expected *= n[d];
    if (static_cast<std::int64_t>(coeffs.size()) != expected)
        throw std::invalid_argument("truncate_coefficients: coefficient size mismatch");
    IndexBox all{{0, 0, 0}, {n[0] - 1, n[1] - 1, n[2] - 1}};
    std::int64_t lin = 0;
    all.for_each(dim, [&](const Idx& f) {
        if (coeffs[lin] != 0.0 && support_in_domain(mesh, stage, f)) coeffs[lin] = 0.0;
        ++lin;
    });
}

HierBasis::HierBasis(std::shared_ptr<const HierMesh> mesh, BasisFlavor flavor)
    : mesh_(std::move(mesh)), flavor_(flavor) {
    funs_ = active_functions(*mesh_);
    const int nl = mesh_->num_levels();
    level_offset_.assign(nl + 1, 0);
    funs_by_level_.resize(nl);
    for (const auto& f : funs_) funs_by_level_[f.level].push_back(f.idx);
    std::int64_t off = 0;
    for (int l = 0; l < nl; ++l) {
        level_offset_[l] = off;
        off += static_cast<std::int64_t>(funs_by_level_[l].size());
    }
    level_offset_[nl] = off;
}

std::int64_t HierBasis::index_of(const HierFun& f) const {
    if (f.level < 0 || f.level >= static_cast<int>(funs_by_level_.size())) return -1;
    const auto& lvl = funs_by_level_[f.level];
    auto it = std::lower_bound(lvl.begin(), lvl.end(), f.idx);
    if (it == lvl.end() || *it != f.idx) return -1;
    return level_offset_[f.level] + (it - lvl.begin());
}

bool HierBasis::vanishes_on_boundary(const HierFun& f) const {
    const auto& levels = mesh_->levels();
    for (int d = 0; d < mesh_->dim(); ++d) {
        const std::int64_t n = levels.num_funs(f.level, d);
        if (f.idx[d] == 0 || f.idx[d] == n - 1) return false;
    }
    return true;
}

bool HierBasis::in_truncation_set(int level, const Idx& f) const {
    const auto key = std::make_pair(level, f);
    {
        std::lock_guard<std::mutex> lock(trunc_mutex_);
        auto it = trunc_cache_.find(key);
        if (it != trunc_cache_.end()) return it->second;
    }
    const bool result = support_in_domain(*mesh_, level, f);
    std::lock_guard<std::mutex> lock(trunc_mutex_);
    trunc_cache_.emplace(key, result);
    return result;
}

ElementExtraction HierBasis::extraction(const Cell& q) const {
    if (!mesh_->is_active(q)) throw std::invalid_argument("extraction: element not active");
    const auto& levels = mesh_->levels();
    const int dim = mesh_->dim();
    const int L = q.level;

    ElementExtraction ex;
    ex.element = q;
    Idx np{1, 1, 1};
    int nloc = 1;
    for (int d = 0; d < dim; ++d) {
        np[d] = levels.degree(d) + 1;
        nloc *= np[d];
        ex.first_fun[d] = static_cast<int>(levels.first_fun_on_element(L, d, q.idx[d]));
    }

    // Ancestors and their local function windows per level.
    std::vector<Idx> anc(L + 1), anc_first(L + 1);
    for (int k = 0; k <= L; ++k) {
        for (int d = 0; d < dim; ++d) {
            anc[k][d] = q.idx[d] >> (L - k);
            anc_first[k][d] = static_cast<int>(levels.first_fun_on_element(k, d, anc[k][d]));
        }
    }

    // Candidate active functions: window functions of each ancestor.
    struct Candidate {
        std::int64_t ordinal;
        int level;
        Idx offset;  // position inside the level-k window
    };
    std::vector<Candidate> cands;
    int k_min = L;
    for (int k = 0; k <= L; ++k) {
        if (k >= static_cast<int>(funs_by_level_.size()) || funs_by_level_[k].empty()) continue;
        IndexBox window;
        for (int d = 0; d < dim; ++d) {
            window.lo[d] = anc_first[k][d];
            window.hi[d] = anc_first[k][d] + np[d] - 1;
        }
        window.for_each(dim, [&](const Idx& f) {
            const std::int64_t ord = index_of({k, f});
            if (ord < 0) return;
            Idx off;
            for (int d = 0; d < dim; ++d) off[d] = f[d] - anc_first[k][d];
            cands.push_back({ord, k, off});
            k_min = std::min(k_min, k);
        });
    }

    ex.global.reserve(cands.size());
    for (const auto& c : cands) ex.global.push_back(static_cast<std::int32_t>(c.ordinal));
    ex.coeffs.setZero(nloc, static_cast<Eigen::Index>(cands.size()));
    if (cands.empty()) return ex;

    // Per-stage window two-scale operators (shared by all candidates) and,
    // for THB, the rows to zero at each stage.
    const int nstages = L - k_min;
    std::vector<std::array<Eigen::MatrixXd, 3>> w(static_cast<std::size_t>(nstages));
    std::vector<std::vector<char>> zero_row(static_cast<std::size_t>(nstages));
    for (int s = k_min; s < L; ++s) {
        const int si = s - k_min;
        for (int d = 0; d < dim; ++d) {
            auto& wd = w[si][d];
            wd.setZero(np[d], np[d]);
            for (int c = 0; c < np[d]; ++c) {
                const std::int64_t g = anc_first[s][d] + c;
                const auto& row = levels.two_scale_row(s, d, g);
                for (int r = 0; r < np[d]; ++r) {
                    const std::int64_t gt = anc_first[s + 1][d] + r;
                    if (gt >= row.first &&
                        gt < row.first + static_cast<std::int64_t>(row.coeff.size())) {
                        wd(r, c) = row.coeff[static_cast<std::size_t>(gt - row.first)];
                    }
                }
            }
        }
        if (flavor_ == BasisFlavor::THB) {
            auto& zr = zero_row[si];
            zr.assign(static_cast<std::size_t>(nloc), 0);
            IndexBox rows{{0, 0, 0}, {np[0] - 1, np[1] - 1, np[2] - 1}};
            std::int64_t lin = 0;
            rows.for_each(dim, [&](const Idx& r) {
                Idx f;
                for (int d = 0; d < dim; ++d) f[d] = anc_first[s + 1][d] + r[d];
                if (in_truncation_set(s + 1, f)) zr[lin] = 1;
                ++lin;
            });
        }
    }

    // Column assembly: start from the unit vector at the candidate's window
    // offset and push it through the stages.
    Eigen::VectorXd v(nloc), tmp(nloc);
    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
        const auto& cand = cands[ci];
        v.setZero();
        {
            std::int64_t lin = 0, mul = 1;
            for (int d = 0; d < dim; ++d) {
                lin += cand.offset[d] * mul;
                mul *= np[d];
            }
            v[lin] = 1.0;
        }
        for (int s = cand.level; s < L; ++s) {
            const int si = s - k_min;
            // Contract direction by direction.
            for (int d = 0; d < dim; ++d) {
                const auto& wd = w[si][d];
                std::int64_t stride = 1;
                for (int dd = 0; dd < d; ++dd) stride *= np[dd];
                const std::int64_t nd = np[d];
                const std::int64_t outer = nloc / (stride * nd);
                tmp.setZero();
                for (std::int64_t o = 0; o < outer; ++o) {
                    for (std::int64_t ss = 0; ss < stride; ++ss) {
                        const std::int64_t base = o * stride * nd + ss;
                        for (std::int64_t r = 0; r < nd; ++r) {
                            double acc = 0.0;
                            for (std::int64_t c = 0; c < nd; ++c) {
                                acc += wd(r, c) * v[base + c * stride];
                            }
                            tmp[base + r * stride] = acc;
                        }
                    }
                }
                v.swap(tmp);
            }
            if (flavor_ == BasisFlavor::THB) {
                const auto& zr = zero_row[si];
                for (int lin = 0; lin < nloc; ++lin) {
                    if (zr[lin]) v[lin] = 0.0;
                }
            }
        }
        ex.coeffs.col(static_cast<Eigen::Index>(ci)) = v;
    }
    return ex;
}

Eigen::VectorXd HierBasis::local_coeffs(const ElementExtraction& ex,
                                        const std::vector<double>& coeffs) const {
    if (static_cast<std::int64_t>(coeffs.size()) != size())
        throw std::invalid_argument("local_coeffs: coefficient size mismatch");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(ex.coeffs.rows());
    for (Eigen::Index j = 0; j < ex.coeffs.cols(); ++j) {
        c.noalias() += coeffs[static_cast<std::size_t>(ex.global[j])] * ex.coeffs.col(j);
    }
    return c;
}

HierBasis::Eval HierBasis::eval(const std::vector<double>& coeffs,
                                const std::array<double, 3>& x, int order) const {
    const Cell q = mesh_->active_cell_at(x);
    const ElementExtraction ex = extraction(q);
    const Eigen::VectorXd c = local_coeffs(ex, coeffs);

    const auto& levels = mesh_->levels();
    const int dim = mesh_->dim();
    std::array<SpanBasis, 3> sb;
    for (int d = 0; d < dim; ++d) {
        sb[d] = levels.eval_on_element(q.level, d, q.idx[d], x[d], order);
    }
    Eval out;
    Idx np{1, 1, 1};
    for (int d = 0; d < dim; ++d) np[d] = levels.degree(d) + 1;
    IndexBox box{{0, 0, 0}, {np[0] - 1, np[1] - 1, np[2] - 1}};
    std::int64_t lin = 0;
    box.for_each(dim, [&](const Idx& r) {
        const double coeff = c[lin++];
        if (coeff == 0.0) return;
        double val = coeff;
        for (int d = 0; d < dim; ++d) val *= sb[d].value[r[d]];
        out.value += val;
        if (order >= 1) {
            for (int g = 0; g < dim; ++g) {
                double t = coeff;
                for (int d = 0; d < dim; ++d)
                    t *= (d == g) ? sb[d].d1[r[d]] : sb[d].value[r[d]];
                out.grad[g] += t;
            }
        }
        if (order >= 2) {
            for (int g = 0; g < dim; ++g) {
                for (int h = g; h < dim; ++h) {
                    double t = coeff;
                    for (int d = 0; d < dim; ++d) {
                        if (d == g && d == h) t *= sb[d].d2[r[d]];
                        else if (d == g) t *= sb[d].d1[r[d]];
                        else if (d == h) t *= sb[d].d1[r[d]];
                        else t *= sb[d].value[r[d]];
                    }
                    out.hess[g][h] += t;
                }
            }
        }
    });
    for (int g = 0; g < dim; ++g)
        for (int h = 0; h < g; ++h) out.hess[g][h] = out.hess[h][g];
    return out;
}

std::vector<double> hier_quasi_interpolant(const HierBasis& basis, const ScalarField& f) {
    const auto& mesh = basis.mesh();
    const auto& levels = mesh.levels();
    const int dim = mesh.dim();
    std::vector<double> out(static_cast<std::size_t>(basis.size()));

    for (std::size_t i = 0; i < basis.functions().size(); ++i) {
        const HierFun& fun = basis.functions()[i];
        const IndexBox box = levels.support_box(fun.level, fun.idx);

        // Active element of the same level inside the mother support,
        // center closest to the support midpoint, ties to the lowest index.
        std::array<double, 3> mid{0.0, 0.0, 0.0};
        for (int d = 0; d < dim; ++d)
            mid[d] = levels.support_midpoint(fun.level, d, fun.idx[d]);
        bool found = false;
        Idx best{0, 0, 0};
        double best_dist = std::numeric_limits<double>::infinity();
        box.for_each(dim, [&](const Idx& e) {
            if (!mesh.is_active({fun.level, e})) return;
            double dist = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double c =
                    0.5 * (levels.breakpoint(fun.level, d, e[d]).to_double() +
                           levels.breakpoint(fun.level, d, e[d] + 1).to_double());
                dist += (c - mid[d]) * (c - mid[d]);
            }
            // for_each visits direction 0 fastest, not lexicographic order,
            // so ties are broken explicitly.
            if (!found || dist < best_dist - 1e-15 ||
                (dist <= best_dist + 1e-15 && e < best)) {
                found = true;
                best_dist = std::min(best_dist, dist);
                best = e;
            }
        });
        if (!found)
            throw std::logic_error(
                "hier_quasi_interpolant: no active element of the function's level inside its "
                "support");

        std::array<detail::DirElement, 3> dirs;
        for (int d = 0; d < dim; ++d) {
            const int lvl = fun.level;
            const std::int64_t e = best[d];
            dirs[d].a = levels.breakpoint(lvl, d, e).to_double();
            dirs[d].b = levels.breakpoint(lvl, d, e + 1).to_double();
            dirs[d].p = levels.degree(d);
            dirs[d].eval = [&levels, lvl, d, e](double x, double* buf) {
                const SpanBasis sb = levels.eval_on_element(lvl, d, e, x, 0);
                for (int r = 0; r <= levels.degree(d); ++r) buf[r] = sb.value[r];
            };
        }
        const std::vector<double> lambda = detail::local_l2_projection(dim, dirs, f);
        std::int64_t loc = 0, mul = 1;
        for (int d = 0; d < dim; ++d) {
            const std::int64_t off =
                fun.idx[d] - levels.first_fun_on_element(fun.level, d, best[d]);
            loc += off * mul;
            mul *= levels.degree(d) + 1;
        }
        out[i] = lambda[static_cast<std::size_t>(loc)];
    }
    return out;
}

namespace {

// Support cells (at level+1) of the one-step truncation of B^level_f.
std::vector<Cell> first_truncation_support(const HierBasis& basis, const HierFun& fun) {
    const auto& mesh = basis.mesh();
    const auto& levels = mesh.levels();
    const int dim = mesh.dim();
    std::set<Idx> cells;

    // Tensor expansion of the mother to level+1 over the whole support box.
    std::array<const LevelSequence::TwoScaleRow*, 3> rows{};
    for (int d = 0; d < dim; ++d) rows[d] = &levels.two_scale_row(fun.level, d, fun.idx[d]);
    IndexBox targets;
    for (int d = 0; d < dim; ++d) {
        targets.lo[d] = static_cast<int>(rows[d]->first);
        targets.hi[d] = static_cast<int>(rows[d]->first + rows[d]->coeff.size() - 1);
    }
    targets.for_each(dim, [&](const Idx& j) {
        double c = 1.0;
        for (int d = 0; d < dim; ++d) c *= rows[d]->coeff[j[d] - rows[d]->first];
        if (c == 0.0) return;
        if (basis.in_truncation_set(fun.level + 1, j)) return;
        const IndexBox supp = levels.support_box(fun.level + 1, j);
        supp.for_each(dim, [&](const Idx& e) { cells.insert(e); });
    });
    std::vector<Cell> out;
    out.reserve(cells.size());
    for (const auto& e : cells) out.push_back({fun.level + 1, e});
    return out;
}

// Support cells of the fully truncated THB function, expressed at the
// deepest mesh level. Test-support path; expands dense maps per stage.
std::vector<Cell> tight_truncation_support(const HierBasis& basis, const HierFun& fun) {
    const auto& mesh = basis.mesh();
    const auto& levels = mesh.levels();
    const int dim = mesh.dim();
    const int last = mesh.num_levels() - 1;

    std::map<Idx, double> comp;
    comp[fun.idx] = 1.0;
    int lvl = fun.level;
    while (lvl < last) {
        std::map<Idx, double> next;
        for (const auto& [j, c] : comp) {
            std::array<const LevelSequence::TwoScaleRow*, 3> rows{};
            for (int d = 0; d < dim; ++d) rows[d] = &levels.two_scale_row(lvl, d, j[d]);
            IndexBox targets;
            for (int d = 0; d < dim; ++d) {
                targets.lo[d] = static_cast<int>(rows[d]->first);
                targets.hi[d] = static_cast<int>(rows[d]->first + rows[d]->coeff.size() - 1);
            }
            targets.for_each(dim, [&](const Idx& t) {
                double w = c;
                for (int d = 0; d < dim; ++d) w *= rows[d]->coeff[t[d] - rows[d]->first];
                if (w != 0.0) next[t] += w;
            });
        }
        ++lvl;
        for (auto it = next.begin(); it != next.end();) {
            if (std::abs(it->second) < 1e-14 || basis.in_truncation_set(lvl, it->first)) {
                it = next.erase(it);
            } else {
                ++it;
            }
        }
        comp = std::move(next);
    }
    std::set<Idx> cells;
    for (const auto& [j, c] : comp) {
        const IndexBox supp = levels.support_box(lvl, j);
        supp.for_each(dim, [&](const Idx& e) { cells.insert(e); });
    }
    std::vector<Cell> out;
    for (const auto& e : cells) out.push_back({lvl, e});
    return out;
}

}  // namespace

std::vector<Cell> qi_locality_region(const HierBasis& basis, const Cell& q, LocalityRegion kind) {
    const auto& mesh = basis.mesh();
    const auto& levels = mesh.levels();
    const int dim = mesh.dim();
    std::vector<Cell> region;

    // Candidate active functions: those whose mother support meets q.
    for (const HierFun& fun : basis.functions()) {
        if (fun.level > q.level) continue;
        Idx anc = q.idx;
        for (int d = 0; d < dim; ++d) anc[d] >>= (q.level - fun.level);
        if (!levels.support_box(fun.level, fun.idx).contains(dim, anc)) continue;

        const std::vector<Cell> supp = kind == LocalityRegion::ExtendedSupport
                                           ? first_truncation_support(basis, fun)
                                           : tight_truncation_support(basis, fun);
        // Keep only functions whose (possibly truncated) support still
        // meets q; then their support joins the region.
        bool meets = false;
        for (const Cell& c : supp) {
            if (c.level < q.level) continue;
            Idx a = c.idx;
            for (int d = 0; d < dim; ++d) a[d] >>= (c.level - q.level);
            if (a == q.idx) {
                meets = true;
                break;
            }
        }
        if (!meets) continue;
        region.insert(region.end(), supp.begin(), supp.end());
    }
    std::sort(region.begin(), region.end());
    region.erase(std::unique(region.begin(), region.end()), region.end());
    return region;
}

bool region_contains(const HierMesh& mesh, const std::vector<Cell>& region,
                     const std::array<double, 3>& x) {
    const auto& levels = mesh.levels();
    for (const Cell& c : region) {
        bool inside = true;
        for (int d = 0; d < mesh.dim() && inside; ++d) {
            const double lo = levels.breakpoint(c.level, d, c.idx[d]).to_double();
            const double hi = levels.breakpoint(c.level, d, c.idx[d] + 1).to_double();
            if (x[d] < lo || x[d] > hi) inside = false;
        }
        if (inside) return true;
    }
    return false;
}

}  // namespace hsfem
