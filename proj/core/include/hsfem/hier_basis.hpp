#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>

#include "hsfem/hier_mesh.hpp"

namespace hsfem {

/// (level, multi-index) id of a hierarchical basis function; for THB the id
/// names the mother B-spline.
struct HierFun {
    int level = 0;
    Idx idx{0, 0, 0};

    friend bool operator==(const HierFun&, const HierFun&) = default;
    friend auto operator<=>(const HierFun& a, const HierFun& b) {
        if (a.level != b.level) return a.level <=> b.level;
        return a.idx <=> b.idx;
    }
};

enum class BasisFlavor { HB, THB };

/// Active ids: level-l functions with supp inside Omega^l but not inside
/// Omega^{l+1}, ordered by (level, lexicographic index). HB and THB share
/// this id set.
std::vector<HierFun> active_functions(const HierMesh& mesh);

/// Zeroes the coefficients (over the full level-`stage` tensor basis,
/// linear-index order) of the functions whose support lies inside
/// Omega^stage. This is the single truncation step applied between levels
/// stage-1 and stage.
void truncate_coefficients(const HierMesh& mesh, int stage, std::vector<double>& coeffs);

/// Per-element representation: restriction of every hierarchical function
/// touching Q to Q, expressed in the level-lev(Q) tensor functions that are
/// nonzero on Q.
struct ElementExtraction {
    Cell element;
    Idx first_fun{0, 0, 0};           ///< first local tensor function per direction
    std::vector<std::int32_t> global; ///< basis ordinals with support meeting Q
    /// nloc x #global; column j holds the local coefficients of basis
    /// function global[j]. Local order: direction 0 fastest.
    Eigen::MatrixXd coeffs;
};

/// Selected (T)HB basis over one mesh. Immutable; queries are pure and
/// internally synchronized.
class HierBasis {
public:
    HierBasis(std::shared_ptr<const HierMesh> mesh, BasisFlavor flavor);

    const HierMesh& mesh() const { return *mesh_; }
    BasisFlavor flavor() const { return flavor_; }
    const std::vector<HierFun>& functions() const { return funs_; }
    std::int64_t size() const { return static_cast<std::int64_t>(funs_.size()); }
    /// Ordinal of an active id, or -1.
    std::int64_t index_of(const HierFun& f) const;

    /// True when the mother B-spline has zero trace on the domain boundary
    /// (none of its univariate factors is the first/last one of its level).
    bool vanishes_on_boundary(const HierFun& f) const;

    /// Extraction matrix of an active element.
    ElementExtraction extraction(const Cell& q) const;

    /// Value (+gradient, +hessian per `order`) of the spline with the given
    /// coefficients at a parametric point.
    struct Eval {
        double value = 0.0;
        std::array<double, 3> grad{};
        std::array<std::array<double, 3>, 3> hess{};
    };
    Eval eval(const std::vector<double>& coeffs, const std::array<double, 3>& x,
              int order = 0) const;

    /// Local coefficients E_Q c on one element (length = nloc).
    Eigen::VectorXd local_coeffs(const ElementExtraction& ex,
                                 const std::vector<double>& coeffs) const;

    /// Is the level-`level` tensor function f in the truncation set H_B^level
    /// (supp inside Omega^level)? Memoized.
    bool in_truncation_set(int level, const Idx& f) const;

private:
    std::shared_ptr<const HierMesh> mesh_;
    BasisFlavor flavor_;
    std::vector<HierFun> funs_;
    std::vector<std::int64_t> level_offset_;          // ordinal of first id per level
    std::vector<std::vector<Idx>> funs_by_level_;     // sorted ids per level

    mutable std::mutex trunc_mutex_;
    mutable std::map<std::pair<int, Idx>, bool> trunc_cache_;
};

/// Coefficients (over the active THB functions of `basis`) of the
/// hierarchical quasi-interpolant of f: each functional is the Bezier
/// projection at the function's own level, evaluated on an active element of
/// that level inside the mother support.
std::vector<double> hier_quasi_interpolant(const HierBasis& basis, const ScalarField& f);

enum class LocalityRegion { ExtendedSupport, TightSupport };

/// Cells (at level lev(Q)+...) covering the locality region of the
/// quasi-interpolant around element Q: union of extended supports (first
/// truncation only) of the THB functions meeting Q, or of the fully
/// truncated supports for the tight variant.
std::vector<Cell> qi_locality_region(const HierBasis& basis, const Cell& q, LocalityRegion kind);

/// True when the parametric point lies in the closure of one of the cells.
bool region_contains(const HierMesh& mesh, const std::vector<Cell>& region,
                     const std::array<double, 3>& x);

}  // namespace hsfem
