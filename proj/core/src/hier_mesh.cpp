#include "hsfem/hier_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hsfem {

namespace {

bool contains_sorted(const std::vector<Idx>& v, const Idx& x) {
    return std::binary_search(v.begin(), v.end(), x);
}

void insert_sorted(std::vector<Idx>& v, const Idx& x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
}

}  // namespace

HierMesh HierMesh::initial(std::shared_ptr<const LevelSequence> levels) {
    HierMesh mesh;
    mesh.levels_ = std::move(levels);
    const int dim = mesh.levels_->dim();
    const Idx nel = mesh.levels_->elements_per_dir(0);
    IndexBox all{{0, 0, 0}, {nel[0] - 1, nel[1] - 1, nel[2] - 1}};
    mesh.active_.emplace_back();
    mesh.deact_.emplace_back();
    all.for_each(dim, [&](const Idx& e) { mesh.active_[0].push_back(e); });
    std::sort(mesh.active_[0].begin(), mesh.active_[0].end());
    mesh.initial_count_ = static_cast<std::int64_t>(mesh.active_[0].size());
    return mesh;
}

const std::vector<Idx>& HierMesh::active(int level) const {
    static const std::vector<Idx> kEmpty;
    if (level < 0 || level >= static_cast<int>(active_.size())) return kEmpty;
    return active_[level];
}

const std::vector<Idx>& HierMesh::deactivated(int level) const {
    static const std::vector<Idx> kEmpty;
    if (level < 0 || level >= static_cast<int>(deact_.size())) return kEmpty;
    return deact_[level];
}

bool HierMesh::is_active(const Cell& c) const { return contains_sorted(active(c.level), c.idx); }

bool HierMesh::is_deactivated(const Cell& c) const {
    return contains_sorted(deactivated(c.level), c.idx);
}

bool HierMesh::in_domain(const Cell& c) const {
    if (c.level == 0) {
        const Idx nel = levels_->elements_per_dir(0);
        for (int d = 0; d < dim(); ++d)
            if (c.idx[d] < 0 || c.idx[d] >= nel[d]) return false;
        return true;
    }
    Idx parent = c.idx;
    for (int d = 0; d < dim(); ++d) parent[d] >>= 1;
    return contains_sorted(deactivated(c.level - 1), parent);
}

bool HierMesh::box_in_domain(int level, const IndexBox& box) const {
    if (level == 0) return true;  // Omega^0 is the whole domain
    bool ok = true;
    // Walk parents: the box at level `level` is inside Omega^level iff every
    // level-1 parent cell it touches is deactivated.
    IndexBox parents;
    for (int d = 0; d < dim(); ++d) {
        parents.lo[d] = box.lo[d] >> 1;
        parents.hi[d] = box.hi[d] >> 1;
    }
    parents.for_each(dim(), [&](const Idx& q) {
        if (ok && !contains_sorted(deactivated(level - 1), q)) ok = false;
    });
    return ok;
}

std::int64_t HierMesh::num_active() const {
    std::int64_t n = 0;
    for (const auto& lvl : active_) n += static_cast<std::int64_t>(lvl.size());
    return n;
}

std::vector<Cell> HierMesh::active_cells() const {
    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(num_active()));
    for (int l = 0; l < num_levels(); ++l) {
        for (const auto& idx : active_[l]) cells.push_back({l, idx});
    }
    return cells;
}

int HierMesh::max_active_level() const {
    for (int l = num_levels() - 1; l >= 0; --l) {
        if (!active_[l].empty()) return l;
    }
    return 0;
}

Cell HierMesh::active_cell_at(const std::array<double, 3>& x) const {
    Cell c{0, {0, 0, 0}};
    for (int l = 0; l < num_levels(); ++l) {
        for (int d = 0; d < dim(); ++d) {
            c.idx[d] = static_cast<int>(levels_->element_of(l, d, x[d]));
        }
        c.level = l;
        if (is_active(c)) return c;
        if (!is_deactivated(c)) break;
    }
    throw std::logic_error("active_cell_at: point not covered by an active element");
}

IndexBox HierMesh::multilevel_support_extension(const Cell& q, int k) const {
    if (k > q.level) throw std::invalid_argument("multilevel_support_extension: k > lev(Q)");
    Idx anc = q.idx;
    for (int d = 0; d < dim(); ++d) anc[d] >>= (q.level - k);
    return levels_->support_extension(k, anc);
}

std::vector<Cell> HierMesh::neighborhood(const Cell& q, int mu, Admissibility kind) const {
    std::vector<Cell> out;
    const int k = q.level - mu + 1;
    if (k < 0) return out;

    if (kind == Admissibility::H) {
        // Box aligned with the level-k grid: open cell meets the closed box
        // iff its index lies inside the box.
        const IndexBox box = multilevel_support_extension(q, k);
        box.for_each(dim(), [&](const Idx& idx) {
            if (contains_sorted(active(k), idx)) out.push_back({k, idx});
        });
    } else {
        // Box aligned with the level-(k+1) grid; a level-k cell (open) meets
        // the closed box iff one of its level-(k+1) subcells lies inside.
        const IndexBox fine = multilevel_support_extension(q, k + 1);
        IndexBox coarse;
        for (int d = 0; d < dim(); ++d) {
            // cells c with 2c <= fine.hi and 2c+1 >= fine.lo
            coarse.lo[d] = (fine.lo[d] - 1) >> 1;
            if (coarse.lo[d] < 0) coarse.lo[d] = 0;
            coarse.hi[d] = fine.hi[d] >> 1;
        }
        coarse.for_each(dim(), [&](const Idx& idx) {
            for (int d = 0; d < dim(); ++d) {
                if (2 * idx[d] > fine.hi[d] || 2 * idx[d] + 1 < fine.lo[d]) return;
            }
            if (contains_sorted(active(k), idx)) out.push_back({k, idx});
        });
    }
    return out;
}

HierMesh HierMesh::refine(const std::vector<Cell>& marked, int mu, Admissibility kind) const {
    if (mu < 2) throw std::invalid_argument("refine: admissibility class must be >= 2");
    for (const auto& c : marked) {
        if (!is_active(c)) throw std::invalid_argument("refine: marked cell is not active");
    }
    if (marked.empty()) return *this;

    // Close the marked set under neighborhoods of the *input* mesh. The
    // fixed point is order independent; the worklist is processed by
    // descending level then index for reproducible traversal.
    std::set<Cell> closed(marked.begin(), marked.end());
    auto by_level_desc = [](const Cell& a, const Cell& b) {
        if (a.level != b.level) return a.level > b.level;
        return a.idx < b.idx;
    };
    std::vector<Cell> work(closed.begin(), closed.end());
    std::sort(work.begin(), work.end(), by_level_desc);
    std::deque<Cell> queue(work.begin(), work.end());
    while (!queue.empty()) {
        const Cell q = queue.front();
        queue.pop_front();
        for (const Cell& nb : neighborhood(q, mu, kind)) {
            if (closed.insert(nb).second) queue.push_back(nb);
        }
    }

    HierMesh out(*this);
    const int deepest = std::max_element(closed.begin(), closed.end())->level;
    if (deepest + 1 >= kMaxLevel) throw std::runtime_error("refine: level limit reached");
    while (static_cast<int>(out.active_.size()) <= deepest + 1) {
        out.active_.emplace_back();
        out.deact_.emplace_back();
    }
    for (const Cell& c : closed) {
        auto& act = out.active_[c.level];
        auto it = std::lower_bound(act.begin(), act.end(), c.idx);
        act.erase(it);
        insert_sorted(out.deact_[c.level], c.idx);
        IndexBox children;
        for (int d = 0; d < dim(); ++d) {
            children.lo[d] = 2 * c.idx[d];
            children.hi[d] = 2 * c.idx[d] + 1;
        }
        children.for_each(dim(), [&](const Idx& ch) {
            insert_sorted(out.active_[c.level + 1], ch);
        });
    }
    out.cum_marked_ += static_cast<std::int64_t>(marked.size());
    return out;
}

HierMesh::AdmissibilityCheck HierMesh::check_admissible(int mu, Admissibility kind) const {
    AdmissibilityCheck result;
    if (mu < 2) throw std::invalid_argument("check_admissible: admissibility class must be >= 2");
    for (int l = mu; l < num_levels() && result.admissible; ++l) {
        // Omega^l as level-l cells: children of deactivated level-(l-1) cells.
        for (const auto& parent : deact_[l - 1]) {
            IndexBox children;
            for (int d = 0; d < dim(); ++d) {
                children.lo[d] = 2 * parent[d];
                children.hi[d] = 2 * parent[d] + 1;
            }
            bool done = false;
            children.for_each(dim(), [&](const Idx& idx) {
                if (done) return;
                const Cell c{l, idx};
                const int k = l - mu + 1;
                const IndexBox ext = kind == Admissibility::H
                                         ? multilevel_support_extension(c, k - 1)
                                         : multilevel_support_extension(c, k);
                const int ext_level = kind == Admissibility::H ? k - 1 : k;
                // Containment in Omega^k: every ext cell, re-expressed at
                // level k-1 (the generators of Omega^k), must be deactivated.
                bool ok;
                if (k == 0) {
                    ok = true;
                } else if (ext_level == k - 1) {
                    ok = true;
                    ext.for_each(dim(), [&](const Idx& e) {
                        if (ok && !contains_sorted(deactivated(k - 1), e)) ok = false;
                    });
                } else {
                    ok = box_in_domain(k, ext);
                }
                if (!ok) {
                    result.admissible = false;
                    result.witness = c;
                    done = true;
                }
            });
            if (done) break;
        }
    }
    return result;
}

HierMesh overlay(const HierMesh& a, const HierMesh& b) {
    if (!(*a.levels_ == *b.levels_))
        throw std::invalid_argument("overlay: meshes built on different level sequences");
    HierMesh out;
    out.levels_ = a.levels_;
    const int nl = std::max(a.num_levels(), b.num_levels());
    out.active_.resize(nl);
    out.deact_.resize(nl);
    for (int l = 0; l < nl; ++l) {
        std::set_union(a.deactivated(l).begin(), a.deactivated(l).end(),
                       b.deactivated(l).begin(), b.deactivated(l).end(),
                       std::back_inserter(out.deact_[l]));
    }
    // Active cells: domain cells of level l that are not deactivated.
    for (int l = 0; l < nl; ++l) {
        std::vector<Idx> domain;
        if (l == 0) {
            domain = a.active(0);
            for (const auto& c : a.deactivated(0)) insert_sorted(domain, c);
            // a's level-0 domain is the full grid, identical to b's.
        } else {
            for (const auto& parent : out.deact_[l - 1]) {
                IndexBox children;
                for (int d = 0; d < out.dim(); ++d) {
                    children.lo[d] = 2 * parent[d];
                    children.hi[d] = 2 * parent[d] + 1;
                }
                children.for_each(out.dim(), [&](const Idx& ch) { domain.push_back(ch); });
            }
            std::sort(domain.begin(), domain.end());
        }
        std::set_difference(domain.begin(), domain.end(), out.deact_[l].begin(),
                            out.deact_[l].end(), std::back_inserter(out.active_[l]));
    }
    while (out.active_.size() > 1 && out.active_.back().empty() && out.deact_.back().empty()) {
        out.active_.pop_back();
        out.deact_.pop_back();
    }
    out.initial_count_ = a.initial_count_;
    out.cum_marked_ = std::max(a.cum_marked_, b.cum_marked_);
    return out;
}

double HierMesh::closure_ratio() const {
    if (cum_marked_ == 0) return 0.0;
    return static_cast<double>(num_active() - initial_count_) / static_cast<double>(cum_marked_);
}

std::string HierMesh::serialize() const {
    std::ostringstream os;
    const int d = dim();
    os << "hmesh " << d;
    for (int k = 0; k < d; ++k) os << ' ' << levels_->degree(k);
    os << ' ' << levels_->mult() << ' ' << num_levels() << '\n';
    for (int k = 0; k < d; ++k) {
        const auto& kv = levels_->base().kv(k);
        os << "knots " << kv.num_breakpoints();
        for (int j = 0; j < kv.num_breakpoints(); ++j) {
            os << ' ' << kv.breakpoint(j).str() << ' ' << kv.multiplicity(j);
        }
        os << '\n';
    }
    for (int l = 0; l < num_levels(); ++l) {
        for (const auto& idx : deact_[l]) {
            os << l;
            for (int k = 0; k < d; ++k) os << ' ' << idx[k];
            os << '\n';
        }
    }
    return os.str();
}

HierMesh HierMesh::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string tag;
    int d = 0;
    if (!(is >> tag >> d) || tag != "hmesh" || d < 1 || d > 3)
        throw std::invalid_argument("HierMesh::deserialize: bad header");
    std::vector<int> degrees(d);
    for (int k = 0; k < d; ++k) is >> degrees[k];
    int m = 0, nlevels = 0;
    is >> m >> nlevels;
    std::vector<KnotVector> kvs;
    for (int k = 0; k < d; ++k) {
        int nb = 0;
        if (!(is >> tag >> nb) || tag != "knots")
            throw std::invalid_argument("HierMesh::deserialize: bad knots line");
        std::vector<Dyadic> z;
        std::vector<int> mults;
        for (int j = 0; j < nb; ++j) {
            std::string ztok;
            int mj;
            is >> ztok >> mj;
            z.push_back(parse_dyadic(ztok));
            mults.push_back(mj);
        }
        kvs.emplace_back(degrees[k], std::move(z), std::move(mults));
    }
    auto levels = std::make_shared<LevelSequence>(TensorSpace(std::move(kvs)), m);
    HierMesh mesh = HierMesh::initial(levels);

    // Deactivated cells, grouped by level; replay in level order.
    std::vector<std::vector<Idx>> deact(std::max(nlevels, 1));
    int level;
    while (is >> level) {
        Idx idx{0, 0, 0};
        for (int k = 0; k < d; ++k) is >> idx[k];
        if (level < 0 || level >= nlevels)
            throw std::invalid_argument("HierMesh::deserialize: level out of range");
        deact[level].push_back(idx);
    }
    for (int l = 0; l < static_cast<int>(deact.size()); ++l) {
        if (deact[l].empty()) continue;
        std::vector<Cell> cells;
        cells.reserve(deact[l].size());
        for (const auto& idx : deact[l]) cells.push_back({l, idx});
        // Bypass neighborhood closure: replay the exact deactivation set.
        HierMesh next(mesh);
        while (static_cast<int>(next.active_.size()) <= l + 1) {
            next.active_.emplace_back();
            next.deact_.emplace_back();
        }
        for (const Cell& c : cells) {
            auto& act = next.active_[c.level];
            auto it = std::lower_bound(act.begin(), act.end(), c.idx);
            if (it == act.end() || *it != c.idx)
                throw std::invalid_argument("HierMesh::deserialize: cell not refinable");
            act.erase(it);
            insert_sorted(next.deact_[c.level], c.idx);
            IndexBox children;
            for (int k = 0; k < d; ++k) {
                children.lo[k] = 2 * c.idx[k];
                children.hi[k] = 2 * c.idx[k] + 1;
            }
            children.for_each(d, [&](const Idx& ch) { insert_sorted(next.active_[c.level + 1], ch); });
        }
        mesh = std::move(next);
    }
    return mesh;
}

std::string mesh_to_svg(const HierMesh& mesh, int pixels) {
    if (mesh.dim() != 2) throw std::invalid_argument("mesh_to_svg: 2D meshes only");
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pixels << "\" height=\""
       << pixels << "\" viewBox=\"0 0 " << pixels << ' ' << pixels << "\">\n";
    const int nmax = std::max(1, mesh.max_active_level());
    for (int l = 0; l < mesh.num_levels(); ++l) {
        for (const auto& idx : mesh.active(l)) {
            const auto lo = mesh.levels().element_lo(l, idx);
            const auto hi = mesh.levels().element_hi(l, idx);
            const double x = lo[0].to_double() * pixels;
            const double y = (1.0 - hi[1].to_double()) * pixels;
            const double w = (hi[0] - lo[0]).to_double() * pixels;
            const double h = (hi[1] - lo[1]).to_double() * pixels;
            // Grayscale band by level, deepest darkest.
            const int shade = 255 - static_cast<int>(140.0 * l / nmax);
            os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\""
               << h << "\" fill=\"rgb(" << shade << ',' << shade << ',' << shade
               << ")\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace hsfem
