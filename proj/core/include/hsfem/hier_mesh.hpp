#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hsfem/level_sequence.hpp"

namespace hsfem {

inline constexpr int kMaxLevel = 48;  // keeps dyadic breakpoints inside int64

/// Reference to one element of the hierarchy.
struct Cell {
    int level = 0;
    Idx idx{0, 0, 0};

    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell& a, const Cell& b) {
        if (a.level != b.level) return a.level <=> b.level;
        return a.idx <=> b.idx;
    }
};

enum class Admissibility { H, T };

/// Leveled hierarchical mesh: per-level active and deactivated element
/// sets. The nested domains Omega^l are implicit: a level-l cell belongs to
/// Omega^l iff l == 0 or its parent is deactivated at level l-1.
///
/// Immutable value type: refinement returns a new mesh.
class HierMesh {
public:
    /// Level-0 mesh with every element of the base grid active.
    static HierMesh initial(std::shared_ptr<const LevelSequence> levels);

    const LevelSequence& levels() const { return *levels_; }
    std::shared_ptr<const LevelSequence> levels_ptr() const { return levels_; }
    int dim() const { return levels_->dim(); }
    /// Number of levels N: active cells live on levels 0..N-1.
    int num_levels() const { return static_cast<int>(active_.size()); }

    const std::vector<Idx>& active(int level) const;
    const std::vector<Idx>& deactivated(int level) const;
    bool is_active(const Cell& c) const;
    bool is_deactivated(const Cell& c) const;
    /// Cell lies inside Omega^level (union of closures of deactivated
    /// level-1 parents; all of the domain at level 0).
    bool in_domain(const Cell& c) const;
    /// Box of cells at the box's level entirely inside Omega^level.
    bool box_in_domain(int level, const IndexBox& box) const;

    std::int64_t num_active() const;
    /// Active elements ordered by (level, lexicographic index); the position
    /// in this list is the element id used for marking ties.
    std::vector<Cell> active_cells() const;
    int max_active_level() const;

    /// Active element whose closure contains the parametric point (the one
    /// whose half-open cell [lo,hi) contains it; domain boundary clamped).
    Cell active_cell_at(const std::array<double, 3>& x) const;

    // -- refinement ------------------------------------------------------
    /// Support extension at level k <= lev(Q) of the level-k ancestor of Q,
    /// as an element-index box at level k.
    IndexBox multilevel_support_extension(const Cell& q, int k) const;

    /// Active elements that must be refined together with q to preserve
    /// admissibility of class mu (empty when lev(q) - mu + 1 < 0).
    std::vector<Cell> neighborhood(const Cell& q, int mu, Admissibility kind) const;

    /// Admissible refinement: closes `marked` under neighborhoods, then
    /// replaces every closed-marked element by its 2^d children. Requires
    /// mu >= 2 and marked elements active.
    HierMesh refine(const std::vector<Cell>& marked, int mu, Admissibility kind) const;

    struct AdmissibilityCheck {
        bool admissible = true;
        std::optional<Cell> witness;  // offending element on failure
    };
    AdmissibilityCheck check_admissible(int mu, Admissibility kind) const;

    /// Coarsest common refinement of two meshes over the same LevelSequence.
    friend HierMesh overlay(const HierMesh& a, const HierMesh& b);

    friend bool operator==(const HierMesh& a, const HierMesh& b) {
        return a.active_ == b.active_ && a.deact_ == b.deact_;
    }

    // Closure-estimate bookkeeping along refine chains.
    std::int64_t initial_cell_count() const { return initial_count_; }
    std::int64_t cumulative_marked() const { return cum_marked_; }
    /// (#Q_k - #Q_0) / sum_j #M_j, the monitored closure ratio.
    double closure_ratio() const;

    // -- serialization -----------------------------------------------------
    /// Line-oriented text format; bit-exact round-trip.
    std::string serialize() const;
    static HierMesh deserialize(const std::string& text);

private:
    HierMesh() = default;

    std::shared_ptr<const LevelSequence> levels_;
    std::vector<std::vector<Idx>> active_;  // per level, sorted
    std::vector<std::vector<Idx>> deact_;   // per level, sorted
    std::int64_t initial_count_ = 0;
    std::int64_t cum_marked_ = 0;
};

/// SVG rendering of a 2D hierarchical mesh, elements shaded by level.
std::string mesh_to_svg(const HierMesh& mesh, int pixels = 640);

}  // namespace hsfem
