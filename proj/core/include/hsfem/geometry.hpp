#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>

#include "hsfem/tensor_space.hpp"

namespace hsfem {

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Map, Jacobian and (optionally) second derivatives of F at one point.
struct GeomEval {
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    Eigen::Matrix2d jac = Eigen::Matrix2d::Identity();
    /// hess[c](i,j) = d^2 F_c / dt_i dt_j
    std::array<Eigen::Matrix2d, 2> hess{Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()};
};

/// Health check of a parametrization, sampled on a grid: the bi-Lipschitz
/// assumption is spot-checked, not certified.
struct GeometryReport {
    double min_det = 0.0;
    double max_det = 0.0;
    double max_condition = 0.0;
    bool orientation_ok = false;  // det > 0 at every sample
};

/// Single-patch NURBS parametrization F : (0,1)^2 -> Omega in R^2.
class NurbsGeometry {
public:
    NurbsGeometry(TensorSpace space, std::vector<Eigen::Vector2d> control_points,
                  std::vector<double> weights);

    static NurbsGeometry identity_square();
    /// Quarter annulus in the first quadrant; direction 0 is radial
    /// (linear), direction 1 circumferential (quadratic, weights
    /// {1, sqrt(2)/2, 1}).
    static NurbsGeometry quarter_annulus(double inner_radius = 1.0, double outer_radius = 2.0);

    static NurbsGeometry parse(const std::string& text);
    static NurbsGeometry load_file(const std::string& path);
    std::string save() const;

    const TensorSpace& space() const { return space_; }
    bool is_identity() const { return identity_; }

    Eigen::Vector2d map(const std::array<double, 3>& t) const;
    Eigen::Matrix2d jacobian(const std::array<double, 3>& t) const;
    GeomEval eval(const std::array<double, 3>& t, int order = 1) const;

    /// Newton inversion F^{-1}(x), seeded on a coarse grid; GeometryError
    /// when the point cannot be matched.
    std::array<double, 3> invert(const Eigen::Vector2d& x, double tol = 1e-13) const;

    /// Physical measure int_Q |det DF| of a parametric box, Gauss rule with
    /// max(p_F)+1 points per direction.
    double element_measure(const std::array<double, 2>& lo, const std::array<double, 2>& hi) const;
    /// h_Q = measure^(1/2); GeometryError on non-positive measure.
    double element_size(const std::array<double, 2>& lo, const std::array<double, 2>& hi) const;

    GeometryReport sample_report(int points_per_dir = 16) const;

private:
    TensorSpace space_;
    std::vector<Eigen::Vector2d> cp_;
    std::vector<double> w_;
    bool identity_ = false;
};

}  // namespace hsfem
