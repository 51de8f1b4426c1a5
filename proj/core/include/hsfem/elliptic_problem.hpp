#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>

namespace hsfem {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Second-order linear elliptic problem
///   -div(A grad u) + b . grad u + c u = f   in Omega,   u = 0 on the boundary,
/// described by physical-space coefficient callbacks. `dA` supplies the
/// first derivatives of A (dA[k] = dA/dx_k), required by the residual
/// estimator whenever A is not constant.
struct EllipticProblem {
    using ScalarFn = std::function<double(const Eigen::Vector2d&)>;
    using VectorFn = std::function<Eigen::Vector2d(const Eigen::Vector2d&)>;
    using MatrixFn = std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>;
    using MatrixDerivFn = std::function<std::array<Eigen::Matrix2d, 2>(const Eigen::Vector2d&)>;

    MatrixFn A;                ///< symmetric diffusion matrix (required)
    bool A_constant = true;    ///< true lets the estimator use dA = 0
    MatrixDerivFn dA;          ///< derivatives of A; required if !A_constant
    VectorFn b;                ///< advection (empty means 0)
    ScalarFn c;                ///< reaction (empty means 0)
    ScalarFn f;                ///< load (required)

    ScalarFn exact_u;          ///< optional, for error measurement
    VectorFn exact_grad_u;

    bool has_advection() const { return static_cast<bool>(b); }

    /// -Laplace u = f with optional exact solution.
    static EllipticProblem poisson(ScalarFn f, ScalarFn exact = nullptr,
                                   VectorFn exact_grad = nullptr);
};

}  // namespace hsfem
