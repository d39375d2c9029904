#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <vector>

#include <Eigen/SparseCholesky>

#include "shellopt/field/strain_operators.hpp"

namespace shellopt {

/// Strain regimes of an optimal field:
///   1 both eigenvalues critical, opposite signs (two beam families)
///   2 both critical with the same sign, or critical but nearly isotropic
///   3 one critical eigenvalue (one beam family)
///   4 none critical (no structure)
enum class Zone { Opposite = 1, Isotropic = 2, Single = 3, Slack = 4 };

inline bool is_salient(Zone z) { return z == Zone::Opposite || z == Zone::Single; }

struct ZoneTolerances {
    double crit = 0.05;   // |lambda| >= eps0 - crit * eps0 counts as critical
    double aniso = 0.1;   // salient only if lambda_1 - lambda_2 > aniso * eps0
};

inline Zone classify_strain(const Sym2& s, double eps0, const ZoneTolerances& tol = {}) {
    double l1 = s.lambda_max(), l2 = s.lambda_min();
    if (std::abs(l2) > std::abs(l1)) std::swap(l1, l2);
    const double crit = eps0 * (1.0 - tol.crit);
    const bool c1 = std::abs(l1) >= crit, c2 = std::abs(l2) >= crit;
    if (c1 && c2) return l1 * l2 < 0 ? Zone::Opposite : Zone::Isotropic;
    if (c1) return std::abs(l1 - l2) > tol.aniso * eps0 ? Zone::Single : Zone::Isotropic;
    return Zone::Slack;
}

/// Zone of a triangle from its two surface strains: the first of 1, 3, 2, 4
/// found on either surface.
inline Zone combine_zones(Zone top, Zone bottom) {
    for (Zone z : {Zone::Opposite, Zone::Single, Zone::Isotropic}) {
        if (top == z || bottom == z) return z;
    }
    return Zone::Slack;
}

/// Cross-field angle of a tensor (principal direction mod pi/2), in [0, pi/2).
inline double cross_angle(const Sym2& s) {
    double b = std::fmod(s.principal_angle(), std::numbers::pi / 2);
    return b < 0 ? b + std::numbers::pi / 2 : b;
}

/// Average of cross directions in the 4-beta representation, in [0, pi/2).
inline double average_cross_angle(const std::vector<double>& betas) {
    double x = 0.0, y = 0.0;
    for (double b : betas) {
        x += std::cos(4 * b);
        y += std::sin(4 * b);
    }
    double b = 0.25 * std::atan2(y, x);
    return b < 0 ? b + std::numbers::pi / 2 : b;
}

struct SingularVertex {
    int vertex = -1;
    double index = 0.0;  // multiple of 1/4
};

struct CrossField {
    std::vector<double> beta;      // per triangle, w.r.t. the triangle's ref_dir
    std::vector<int> k;            // per mesh edge, period jump from faces[0] to faces[1]
    std::vector<bool> salient;
    std::vector<Zone> zone;
    std::vector<SingularVertex> singular_vertices;
};

/// Angle taking the frame of faces[0] to the frame of faces[1] across an
/// interior edge: a direction at angle beta in faces[0] has angle beta + kappa
/// in faces[1] after unfolding.
inline double frame_transport_angle(const TriMesh& m, int edge) {
    const auto& e = m.edges()[edge];
    if (e.boundary()) return 0.0;
    const Vec3 d = m.vertices()[e.v1] - m.vertices()[e.v0];
    auto angle_in = [&](int f) {
        const Vec3& t1 = m.ref_dirs()[f];
        return std::atan2(d.dot(m.cotangent(f)), d.dot(t1));
    };
    double kappa = angle_in(e.faces[1]) - angle_in(e.faces[0]);
    kappa = std::remainder(kappa, 2 * std::numbers::pi);
    return kappa;
}

/// Smoothness energy sum over interior edges of (beta_i - beta_j + k pi/2 + kappa_ij)^2.
inline double cross_field_energy(const TriMesh& m, const std::vector<double>& beta, const std::vector<int>& k) {
    double E = 0.0;
    for (std::size_t e = 0; e < m.edges().size(); ++e) {
        const auto& ed = m.edges()[e];
        if (ed.boundary()) continue;
        // kappa transports faces[0] -> faces[1]; the residual compares in faces[1]
        double r = beta[ed.faces[0]] + frame_transport_angle(m, static_cast<int>(e)) + k[e] * std::numbers::pi / 2 -
                   beta[ed.faces[1]];
        E += r * r;
    }
    return E;
}

/// Per-vertex index of the field at interior vertices:
/// (angle defect - sum of matching residuals counter-clockwise) / 2 pi.
inline std::vector<double> vertex_indices(const TriMesh& m, const std::vector<double>& beta, const std::vector<int>& k) {
    const int nv = m.num_vertices();
    std::vector<double> index(nv, 0.0);
    std::vector<int> start(nv, -1), corner(nv, -1);
    for (int f = 0; f < m.num_triangles(); ++f) {
        for (int c = 0; c < 3; ++c) {
            int v = m.triangles()[f][c];
            if (start[v] < 0) start[v] = f, corner[v] = c;
        }
    }
    const auto boundary = m.boundary_vertices();
    for (int v = 0; v < nv; ++v) {
        if (start[v] < 0 || boundary[v]) continue;
        double angle_sum = 0.0, residual = 0.0;
        int f = start[v], c = corner[v];
        for (int guard = 0; guard < 1000; ++guard) {
            angle_sum += m.corner_angle(f, c);
            // next triangle counter-clockwise shares edge (v, corner c+2)
            const int e = m.face_edges()[f][(c + 1) % 3];
            const auto& ed = m.edges()[e];
            const int g = ed.faces[0] == f ? ed.faces[1] : ed.faces[0];
            const double sign = ed.faces[0] == f ? 1.0 : -1.0;
            residual += beta[f] + sign * (frame_transport_angle(m, e) + k[e] * std::numbers::pi / 2) - beta[g];
            f = g;
            for (c = 0; m.triangles()[f][c] != v; ++c) {
            }
            if (f == start[v]) break;
        }
        index[v] = (2 * std::numbers::pi - angle_sum - residual) / (2 * std::numbers::pi);
    }
    return index;
}

/// Rounded nonzero indices.
inline std::vector<SingularVertex> singularities(const std::vector<double>& index) {
    std::vector<SingularVertex> out;
    for (std::size_t v = 0; v < index.size(); ++v) {
        double q = std::round(4 * index[v]) / 4;
        if (q != 0.0) out.push_back({static_cast<int>(v), q});
    }
    return out;
}

/// Fills beta on non-salient triangles and all period jumps by minimizing the
/// smoothness energy with greedy rounding of the jumps: solve the relaxed
/// problem, fix the jump closest to an integer, repeat. Salient angles are kept.
/// Without any salient triangle the field is zero-angle.
inline CrossField complete_field(const CrossField& in, const TriMesh& m) {
    const int nf = m.num_triangles();
    const int ne = static_cast<int>(m.edges().size());
    if (static_cast<int>(in.beta.size()) != nf || static_cast<int>(in.salient.size()) != nf) {
        throw ParameterError("cross field size does not match the mesh");
    }
    CrossField out = in;
    out.k.assign(ne, 0);
    constexpr double quarter = std::numbers::pi / 2;
    std::vector<double> kappa(ne, 0.0);
    for (int e = 0; e < ne; ++e) kappa[e] = frame_transport_angle(m, e);

    std::vector<bool> fixed(in.salient);
    if (std::find(fixed.begin(), fixed.end(), true) == fixed.end()) {
        out.beta.assign(nf, 0.0);
        for (int e = 0; e < ne; ++e) out.k[e] = static_cast<int>(std::lround(-kappa[e] / quarter));
        out.singular_vertices = singularities(vertex_indices(m, out.beta, out.k));
        return out;
    }

    // Spanning forest grown from the fixed triangles; tree edges keep k = 0.
    // Components without a fixed triangle get their lowest triangle pinned at 0.
    std::vector<bool> tree_edge(ne, false), reached(fixed);
    std::vector<bool> pinned(nf, false);
    auto grow = [&](std::queue<int>& q) {
        while (!q.empty()) {
            int f = q.front();
            q.pop();
            for (int i = 0; i < 3; ++i) {
                const int e = m.face_edges()[f][i];
                const auto& ed = m.edges()[e];
                if (ed.boundary()) continue;
                const int g = ed.faces[0] == f ? ed.faces[1] : ed.faces[0];
                if (reached[g]) continue;
                reached[g] = true;
                tree_edge[e] = true;
                q.push(g);
            }
        }
    };
    std::queue<int> q;
    for (int f = 0; f < nf; ++f) {
        if (fixed[f]) q.push(f);
    }
    grow(q);
    for (int f = 0; f < nf; ++f) {
        if (reached[f]) continue;
        reached[f] = pinned[f] = true;
        out.beta[f] = 0.0;
        q.push(f);
        grow(q);
    }

    // unknowns
    std::vector<int> beta_var(nf, -1), k_var(ne, -1);
    int nvar = 0;
    for (int f = 0; f < nf; ++f) {
        if (!fixed[f] && !pinned[f]) beta_var[f] = nvar++;
    }
    for (int e = 0; e < ne; ++e) {
        const auto& ed = m.edges()[e];
        if (ed.boundary() || tree_edge[e]) continue;
        if (beta_var[ed.faces[0]] < 0 && beta_var[ed.faces[1]] < 0) {
            // both ends known: round directly
            double r = out.beta[ed.faces[0]] + kappa[e] - out.beta[ed.faces[1]];
            out.k[e] = static_cast<int>(std::lround(-r / quarter));
            continue;
        }
        k_var[e] = nvar++;
    }

    std::vector<double> k_real(ne, 0.0);
    std::vector<bool> k_fixed(ne, false);
    int remaining = 0;
    for (int e = 0; e < ne; ++e) remaining += k_var[e] >= 0;
    for (;;) {
        // least squares over the free betas and unfixed jumps
        std::vector<int> col(nvar, -1);
        int ncol = 0;
        for (int f = 0; f < nf; ++f) {
            if (beta_var[f] >= 0) col[beta_var[f]] = ncol++;
        }
        for (int e = 0; e < ne; ++e) {
            if (k_var[e] >= 0 && !k_fixed[e]) col[k_var[e]] = ncol++;
        }
        if (ncol > 0) {
            std::vector<Eigen::Triplet<double>> t;
            std::vector<double> rhs;
            int row = 0;
            for (int e = 0; e < ne; ++e) {
                const auto& ed = m.edges()[e];
                if (ed.boundary()) continue;
                const int i = ed.faces[0], j = ed.faces[1];
                double r = kappa[e];
                bool any = false;
                if (beta_var[i] >= 0) t.emplace_back(row, col[beta_var[i]], 1.0), any = true;
                else r += out.beta[i];
                if (beta_var[j] >= 0) t.emplace_back(row, col[beta_var[j]], -1.0), any = true;
                else r -= out.beta[j];
                if (k_var[e] >= 0 && !k_fixed[e]) t.emplace_back(row, col[k_var[e]], quarter), any = true;
                else r += out.k[e] * quarter;
                if (!any) continue;
                rhs.push_back(-r);
                ++row;
            }
            Eigen::SparseMatrix<double> A(row, ncol);
            A.setFromTriplets(t.begin(), t.end());
            Eigen::VectorXd b = Eigen::Map<Eigen::VectorXd>(rhs.data(), row);
            Eigen::SparseMatrix<double> N = A.transpose() * A;
            for (int c = 0; c < ncol; ++c) N.coeffRef(c, c) += 1e-12;
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(N);
            if (ldlt.info() != Eigen::Success) throw SolverError("field completion: normal equations failed");
            Eigen::VectorXd x = ldlt.solve(A.transpose() * b);
            for (int f = 0; f < nf; ++f) {
                if (beta_var[f] >= 0) out.beta[f] = x[col[beta_var[f]]];
            }
            for (int e = 0; e < ne; ++e) {
                if (k_var[e] >= 0 && !k_fixed[e]) k_real[e] = x[col[k_var[e]]];
            }
        }
        if (remaining == 0) break;
        int pick = -1;
        double best = 2.0;
        for (int e = 0; e < ne; ++e) {
            if (k_var[e] < 0 || k_fixed[e]) continue;
            double d = std::abs(k_real[e] - std::round(k_real[e]));
            if (d < best) best = d, pick = e;
        }
        out.k[pick] = static_cast<int>(std::lround(k_real[pick]));
        k_fixed[pick] = true;
        --remaining;
    }

    for (int f = 0; f < nf; ++f) {
        double b = std::fmod(out.beta[f], quarter);
        if (b < 0) b += quarter;
        // renormalizing beta shifts the jumps of its edges
        const double shift = (out.beta[f] - b) / quarter;
        const long s = std::lround(shift);
        if (s != 0) {
            for (int i = 0; i < 3; ++i) {
                const int e = m.face_edges()[f][i];
                const auto& ed = m.edges()[e];
                if (ed.boundary()) continue;
                out.k[e] += ed.faces[0] == f ? static_cast<int>(s) : -static_cast<int>(s);
            }
        }
        out.beta[f] = b;
    }
    out.singular_vertices = singularities(vertex_indices(m, out.beta, out.k));
    return out;
}

}  // namespace shellopt
