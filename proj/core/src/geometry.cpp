#include "hsfem/geometry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hsfem/quadrature.hpp"

namespace hsfem {

NurbsGeometry::NurbsGeometry(TensorSpace space, std::vector<Eigen::Vector2d> control_points,
                             std::vector<double> weights)
    : space_(std::move(space)), cp_(std::move(control_points)), w_(std::move(weights)) {
    if (space_.dim() != 2) throw GeometryError("NurbsGeometry: 2D parametrizations only");
    const auto n = static_cast<std::size_t>(space_.dimension());
    if (cp_.size() != n || w_.size() != n)
        throw GeometryError("NurbsGeometry: control net size mismatch");
    for (double w : w_) {
        if (!(w > 0.0)) throw GeometryError("NurbsGeometry: weights must be positive");
    }
}

NurbsGeometry NurbsGeometry::identity_square() {
    std::vector<KnotVector> kvs{KnotVector::uniform(1, 1), KnotVector::uniform(1, 1)};
    TensorSpace space(std::move(kvs));
    std::vector<Eigen::Vector2d> cp{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    std::vector<double> w(4, 1.0);
    NurbsGeometry g(std::move(space), std::move(cp), std::move(w));
    g.identity_ = true;
    return g;
}

NurbsGeometry NurbsGeometry::quarter_annulus(double inner_radius, double outer_radius) {
    std::vector<KnotVector> kvs{KnotVector::uniform(1, 1), KnotVector::uniform(2, 1)};
    TensorSpace space(std::move(kvs));
    const double s = std::sqrt(2.0) / 2.0;
    std::vector<Eigen::Vector2d> cp;
    std::vector<double> w;
    // Direction 0 fastest: i0 = radius index, i1 = angular index.
    const double radii[2] = {inner_radius, outer_radius};
    const Eigen::Vector2d arc[3] = {{1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    const double arc_w[3] = {1.0, s, 1.0};
    for (int i1 = 0; i1 < 3; ++i1) {
        for (int i0 = 0; i0 < 2; ++i0) {
            cp.emplace_back(radii[i0] * arc[i1]);
            w.push_back(arc_w[i1]);
        }
    }
    return NurbsGeometry(std::move(space), std::move(cp), std::move(w));
}

GeomEval NurbsGeometry::eval(const std::array<double, 3>& t, int order) const {
    GeomEval out;
    if (identity_) {
        out.x = Eigen::Vector2d(t[0], t[1]);
        return out;  // jac = I, hess = 0 by construction
    }
    std::array<SpanBasis, 2> sb;
    for (int d = 0; d < 2; ++d) sb[d] = space_.kv(d).eval_derivs(t[d], std::min(order + 1, 2));

    // Weighted numerator N = sum C_i w_i B_i and weight W = sum w_i B_i,
    // with parametric derivatives up to second order.
    Eigen::Vector2d N = Eigen::Vector2d::Zero();
    Eigen::Vector2d dN[2] = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
    Eigen::Vector2d ddN[2][2];
    for (auto& row : ddN)
        for (auto& v : row) v = Eigen::Vector2d::Zero();
    double W = 0.0, dW[2] = {0.0, 0.0}, ddW[2][2] = {{0.0, 0.0}, {0.0, 0.0}};

    const int p0 = space_.degree(0), p1 = space_.degree(1);
    for (int r1 = 0; r1 <= p1; ++r1) {
        for (int r0 = 0; r0 <= p0; ++r0) {
            const Idx f{sb[0].first + r0, sb[1].first + r1, 0};
            const auto lin = static_cast<std::size_t>(space_.linear_index(f));
            const double wb = w_[lin];
            const Eigen::Vector2d cw = cp_[lin] * wb;
            const double b0 = sb[0].value[r0], b1 = sb[1].value[r1];
            const double g0 = sb[0].d1[r0], g1 = sb[1].d1[r1];
            N += cw * (b0 * b1);
            W += wb * (b0 * b1);
            dN[0] += cw * (g0 * b1);
            dN[1] += cw * (b0 * g1);
            dW[0] += wb * (g0 * b1);
            dW[1] += wb * (b0 * g1);
            if (order >= 1) {
                const double h0 = sb[0].d2[r0], h1 = sb[1].d2[r1];
                ddN[0][0] += cw * (h0 * b1);
                ddN[1][1] += cw * (b0 * h1);
                ddN[0][1] += cw * (g0 * g1);
                ddW[0][0] += wb * (h0 * b1);
                ddW[1][1] += wb * (b0 * h1);
                ddW[0][1] += wb * (g0 * g1);
            }
        }
    }
    ddN[1][0] = ddN[0][1];
    ddW[1][0] = ddW[0][1];

    out.x = N / W;
    for (int j = 0; j < 2; ++j) out.jac.col(j) = (dN[j] - out.x * dW[j]) / W;
    if (order >= 1) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                const Eigen::Vector2d v = (ddN[i][j] - out.jac.col(i) * dW[j] -
                                           out.jac.col(j) * dW[i] - out.x * ddW[i][j]) /
                                          W;
                out.hess[0](i, j) = v[0];
                out.hess[1](i, j) = v[1];
            }
        }
    }
    return out;
}

Eigen::Vector2d NurbsGeometry::map(const std::array<double, 3>& t) const {
    return eval(t, 0).x;
}

Eigen::Matrix2d NurbsGeometry::jacobian(const std::array<double, 3>& t) const {
    return eval(t, 0).jac;
}

std::array<double, 3> NurbsGeometry::invert(const Eigen::Vector2d& x, double tol) const {
    if (identity_) return {x[0], x[1], 0.0};
    // Seed with the best point of a coarse sample grid.
    std::array<double, 3> t{0.5, 0.5, 0.0};
    double best = std::numeric_limits<double>::infinity();
    const int ng = 8;
    for (int i = 0; i <= ng; ++i) {
        for (int j = 0; j <= ng; ++j) {
            const std::array<double, 3> s{static_cast<double>(i) / ng,
                                          static_cast<double>(j) / ng, 0.0};
            const double d = (map(s) - x).squaredNorm();
            if (d < best) {
                best = d;
                t = s;
            }
        }
    }
    for (int it = 0; it < 60; ++it) {
        const GeomEval ge = eval(t, 0);
        const Eigen::Vector2d r = ge.x - x;
        if (r.norm() <= tol) return t;
        const Eigen::Vector2d dt = ge.jac.partialPivLu().solve(r);
        t[0] = std::clamp(t[0] - dt[0], 0.0, 1.0);
        t[1] = std::clamp(t[1] - dt[1], 0.0, 1.0);
    }
    if ((map(t) - x).norm() <= 1e-8) return t;
    throw GeometryError("invert: Newton iteration failed to match the point");
}

double NurbsGeometry::element_measure(const std::array<double, 2>& lo,
                                      const std::array<double, 2>& hi) const {
    if (identity_) return (hi[0] - lo[0]) * (hi[1] - lo[1]);
    const int np = std::max(space_.degree(0), space_.degree(1)) + 1;
    const GaussRule& rule = gauss_rule(np);
    double measure = 0.0;
    for (int q1 = 0; q1 < np; ++q1) {
        for (int q0 = 0; q0 < np; ++q0) {
            const std::array<double, 3> t{lo[0] + (hi[0] - lo[0]) * rule.nodes[q0],
                                          lo[1] + (hi[1] - lo[1]) * rule.nodes[q1], 0.0};
            const double w = rule.weights[q0] * rule.weights[q1] * (hi[0] - lo[0]) *
                             (hi[1] - lo[1]);
            measure += w * std::abs(eval(t, 0).jac.determinant());
        }
    }
    return measure;
}

double NurbsGeometry::element_size(const std::array<double, 2>& lo,
                                   const std::array<double, 2>& hi) const {
    const double measure = element_measure(lo, hi);
    if (!(measure > 0.0)) throw GeometryError("element_size: non-positive element measure");
    return std::sqrt(measure);
}

GeometryReport NurbsGeometry::sample_report(int points_per_dir) const {
    GeometryReport rep;
    rep.min_det = std::numeric_limits<double>::infinity();
    rep.max_det = -std::numeric_limits<double>::infinity();
    rep.max_condition = 0.0;
    for (int i = 0; i < points_per_dir; ++i) {
        for (int j = 0; j < points_per_dir; ++j) {
            const std::array<double, 3> t{(i + 0.5) / points_per_dir, (j + 0.5) / points_per_dir,
                                          0.0};
            const Eigen::Matrix2d jac = eval(t, 0).jac;
            const double det = jac.determinant();
            rep.min_det = std::min(rep.min_det, det);
            rep.max_det = std::max(rep.max_det, det);
            Eigen::JacobiSVD<Eigen::Matrix2d> svd(jac);
            const double smin = svd.singularValues()(1);
            if (smin > 0.0)
                rep.max_condition = std::max(rep.max_condition, svd.singularValues()(0) / smin);
        }
    }
    rep.orientation_ok = rep.min_det > 0.0;
    return rep;
}

std::string NurbsGeometry::save() const {
    std::ostringstream os;
    os << "geometry 2\n";
    for (int d = 0; d < 2; ++d) {
        const auto& kv = space_.kv(d);
        os << "knots " << kv.degree() << ' ' << kv.num_breakpoints();
        for (int j = 0; j < kv.num_breakpoints(); ++j)
            os << ' ' << kv.breakpoint(j).str() << ' ' << kv.multiplicity(j);
        os << '\n';
    }
    os.precision(17);
    for (std::size_t i = 0; i < cp_.size(); ++i) {
        os << cp_[i][0] << ' ' << cp_[i][1] << ' ' << w_[i] << '\n';
    }
    return os.str();
}

NurbsGeometry NurbsGeometry::parse(const std::string& text) {
    std::istringstream is(text);
    std::string tag;
    int d = 0;
    if (!(is >> tag >> d) || tag != "geometry" || d != 2)
        throw GeometryError("geometry parse: bad header (expected 'geometry 2')");
    std::vector<KnotVector> kvs;
    for (int k = 0; k < 2; ++k) {
        int p = 0, nb = 0;
        if (!(is >> tag >> p >> nb) || tag != "knots")
            throw GeometryError("geometry parse: bad knots line");
        std::vector<Dyadic> z;
        std::vector<int> mult;
        for (int j = 0; j < nb; ++j) {
            std::string ztok;
            int mj = 0;
            is >> ztok >> mj;
            z.push_back(parse_dyadic(ztok));
            mult.push_back(mj);
        }
        kvs.emplace_back(p, std::move(z), std::move(mult));
    }
    TensorSpace space(std::move(kvs));
    const auto n = static_cast<std::size_t>(space.dimension());
    std::vector<Eigen::Vector2d> cp(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(is >> cp[i][0] >> cp[i][1] >> w[i]))
            throw GeometryError("geometry parse: expected " + std::to_string(n) +
                                " control point rows 'x y w'");
    }
    return NurbsGeometry(std::move(space), std::move(cp), std::move(w));
}

NurbsGeometry NurbsGeometry::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GeometryError("geometry load: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace hsfem
