#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/SparseCore>

#include "shellopt/mesh/tri_mesh.hpp"

namespace shellopt {

using RowSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Symmetric 2x2 tensor stored as a = (A11 + A22)/2, b = (A11 - A22)/2, c = A12.
struct Sym2 {
    double a = 0.0, b = 0.0, c = 0.0;

    static Sym2 from_matrix(const Eigen::Matrix2d& m) {
        return {0.5 * (m(0, 0) + m(1, 1)), 0.5 * (m(0, 0) - m(1, 1)), 0.5 * (m(0, 1) + m(1, 0))};
    }
    Eigen::Matrix2d matrix() const {
        Eigen::Matrix2d m;
        m << a + b, c, c, a - b;
        return m;
    }
    double radius() const { return std::hypot(b, c); }
    double lambda_max() const { return a + radius(); }
    double lambda_min() const { return a - radius(); }
    /// |lambda_1| + |lambda_2| = 2 max(|a|, sqrt(b^2 + c^2)).
    double abs_eigen_sum() const { return 2.0 * std::max(std::abs(a), radius()); }
    /// max |lambda_i| = |a| + sqrt(b^2 + c^2).
    double spectral_norm() const { return std::abs(a) + radius(); }
    /// Direction of the larger eigenvalue in the frame, in [0, pi).
    double principal_angle() const {
        double t = 0.5 * std::atan2(c, b);
        return t < 0 ? t + M_PI : t;
    }

    Sym2 operator+(const Sym2& o) const { return {a + o.a, b + o.b, c + o.c}; }
    Sym2 operator*(double s) const { return {a * s, b * s, c * s}; }
};

namespace detail {

/// In-plane gradient of the hat function of corner i of triangle f.
inline Vec3 hat_gradient(const TriMesh& m, int f, int i) {
    return m.normals()[f].cross(m.edge_vector(f, i)) / (2.0 * m.areas()[f]);
}

inline void add_vertex_coef(std::vector<Eigen::Triplet<double>>& t, int row, int v, const Vec3& coef) {
    for (int k = 0; k < 3; ++k) {
        if (coef[k] != 0.0) t.emplace_back(row, 3 * v + k, coef[k]);
    }
}

/// Linearized change of triangle f's unit normal: -sum_i grad(phi_i) (n . du_i),
/// returned as a 3 x 9 block over the corner displacements.
inline Eigen::Matrix<double, 3, 9> normal_variation(const TriMesh& m, int f) {
    Eigen::Matrix<double, 3, 9> J = Eigen::Matrix<double, 3, 9>::Zero();
    const Vec3& n = m.normals()[f];
    for (int i = 0; i < 3; ++i) J.block<3, 3>(0, 3 * i) = -hat_gradient(m, f, i) * n.transpose();
    return J;
}

}  // namespace detail

/// Linear map from vertex displacements (3 per vertex) to the in-plane strain
/// (a, b, c) of every triangle, in the triangle frame (ref_dir, normal x ref_dir).
/// Rows 3f, 3f+1, 3f+2.
inline RowSparseMatrix tensile_strain_operator(const TriMesh& m) {
    std::vector<Eigen::Triplet<double>> t;
    const int nf = m.num_triangles();
    for (int f = 0; f < nf; ++f) {
        const Vec3& t1 = m.ref_dirs()[f];
        const Vec3 t2 = m.cotangent(f);
        for (int i = 0; i < 3; ++i) {
            const Vec3 g = detail::hat_gradient(m, f, i);
            const double g1 = g.dot(t1), g2 = g.dot(t2);
            const int v = m.triangles()[f][i];
            detail::add_vertex_coef(t, 3 * f, v, 0.5 * (g1 * t1 + g2 * t2));
            detail::add_vertex_coef(t, 3 * f + 1, v, 0.5 * (g1 * t1 - g2 * t2));
            detail::add_vertex_coef(t, 3 * f + 2, v, 0.5 * (g2 * t1 + g1 * t2));
        }
    }
    RowSparseMatrix B(3 * nf, 3 * m.num_vertices());
    B.setFromTriplets(t.begin(), t.end());
    return B;
}

/// Signed bend angle across an interior edge, seen from its first face f with
/// the edge directed counter-clockwise in f: atan2((n_f x n_g) . e, n_f . n_g).
inline double hinge_angle(const TriMesh& m, const std::vector<Vec3>& x, int edge) {
    const auto& e = m.edges()[edge];
    if (e.boundary()) return 0.0;
    auto normal = [&](int f) {
        const Tri& t = m.triangles()[f];
        return (x[t[1]] - x[t[0]]).cross(x[t[2]] - x[t[0]]).normalized();
    };
    const int f = e.faces[0], g = e.faces[1];
    auto [p, q] = local_edge_vertices(m.triangles()[f], e.local[0]);
    Vec3 dir = (x[q] - x[p]).normalized();
    Vec3 nf = normal(f), ng = normal(g);
    return std::atan2(nf.cross(ng).dot(dir), nf.dot(ng));
}

/// Linearization of hinge_angle at the rest shape: one row per edge (zero rows
/// on boundary edges), columns over vertex displacements.
inline RowSparseMatrix hinge_angle_operator(const TriMesh& m) {
    std::vector<Eigen::Triplet<double>> t;
    const int ne = static_cast<int>(m.edges().size());
    for (int k = 0; k < ne; ++k) {
        const auto& e = m.edges()[k];
        if (e.boundary()) continue;
        const int f = e.faces[0], g = e.faces[1];
        auto [p, q] = local_edge_vertices(m.triangles()[f], e.local[0]);
        const Vec3 dir = (m.vertices()[q] - m.vertices()[p]).normalized();
        const Vec3& nf = m.normals()[f];
        const Vec3& ng = m.normals()[g];
        const double psi = std::atan2(nf.cross(ng).dot(dir), nf.dot(ng));
        const double cs = std::cos(psi), sn = std::sin(psi);
        // d psi = cs (dnf x ng + nf x dng) . dir - sn (dnf . ng + nf . dng)
        const Vec3 wf = cs * ng.cross(dir) - sn * ng;  // coefficient of dnf
        const Vec3 wg = cs * dir.cross(nf) - sn * nf;  // coefficient of dng
        for (auto [face, w] : {std::pair{f, wf}, std::pair{g, wg}}) {
            Eigen::Matrix<double, 1, 9> row = w.transpose() * detail::normal_variation(m, face);
            for (int i = 0; i < 3; ++i) {
                detail::add_vertex_coef(t, k, m.triangles()[face][i], row.segment<3>(3 * i).transpose());
            }
        }
    }
    RowSparseMatrix H(ne, 3 * m.num_vertices());
    H.setFromTriplets(t.begin(), t.end());
    return H;
}

/// Linear map from vertex displacements to the bending strain (a, b, c) of every
/// triangle: sum over its edges of theta_i / (2 A l_i) e_i^perp (e_i^perp)^T, with
/// theta_i the linearized bend at edge i (positive when the surface curves
/// towards its normal) and |e_i^perp| = l_i. Boundary edges contribute nothing.
inline RowSparseMatrix bending_strain_operator(const TriMesh& m) {
    const RowSparseMatrix H = hinge_angle_operator(m);
    std::vector<Eigen::Triplet<double>> t;
    const int nf = m.num_triangles();
    for (int f = 0; f < nf; ++f) {
        const Vec3& t1 = m.ref_dirs()[f];
        const Vec3 t2 = m.cotangent(f);
        const double area = m.areas()[f];
        for (int i = 0; i < 3; ++i) {
            const int k = m.face_edges()[f][i];
            const auto& e = m.edges()[k];
            if (e.boundary()) continue;
            const Vec3 ev = m.edge_vector(f, i);
            const double l = ev.norm();
            const Vec3 perp = m.normals()[f].cross(ev);
            const double q1 = perp.dot(t1), q2 = perp.dot(t2);
            const double s = -1.0 / (2.0 * area * l);  // theta = -d(bend angle)
            const double coef[3] = {0.5 * (q1 * q1 + q2 * q2) * s, 0.5 * (q1 * q1 - q2 * q2) * s, q1 * q2 * s};
            for (RowSparseMatrix::InnerIterator it(H, k); it; ++it) {
                for (int r = 0; r < 3; ++r) t.emplace_back(3 * f + r, it.col(), coef[r] * it.value());
            }
        }
    }
    RowSparseMatrix B(3 * nf, 3 * m.num_vertices());
    B.setFromTriplets(t.begin(), t.end());
    return B;
}

/// Per-triangle tensors from an operator with (a, b, c) rows.
inline std::vector<Sym2> apply_strain(const RowSparseMatrix& B, const Eigen::VectorXd& u) {
    Eigen::VectorXd s = B * u;
    std::vector<Sym2> out(s.size() / 3);
    for (std::size_t f = 0; f < out.size(); ++f) out[f] = {s[3 * f], s[3 * f + 1], s[3 * f + 2]};
    return out;
}

}  // namespace shellopt
