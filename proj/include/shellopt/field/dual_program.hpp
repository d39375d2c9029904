#pragma once

#include <vector>

#include "shellopt/field/strain_operators.hpp"
#include "shellopt/mesh/load_case.hpp"
#include "shellopt/socp/cone_program.hpp"

namespace shellopt {

/// Displacement-based field program on a triangle mesh:
///   maximize f^T u  s.t.  max |lambda_i(eps_t + z eps_b)| <= eps0 at z = +-offset.
/// Variables: free displacement components, then one auxiliary s >= |a| per
/// (triangle, surface), so each surface bound is one cone ||(b, c)|| <= eps0 - s
/// plus the two inequalities +-a <= s.
struct DualProgram {
    socp::ConeProgram program;
    DofMap dofs;
    int num_displacement_vars = 0;
    double fiber_offset = 0.0;
    RowSparseMatrix tensile;  // full operators over all 3V displacement components
    RowSparseMatrix bending;

    /// Aux variable of triangle f, surface 0 (+offset) or 1 (-offset).
    int aux_index(int f, int surface) const { return num_displacement_vars + 2 * f + surface; }

    /// Full 3V displacement vector from a program solution (supports are zero).
    Eigen::VectorXd displacements(const Eigen::VectorXd& x) const {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(dofs.index.size());
        for (std::size_t k = 0; k < dofs.index.size(); ++k) {
            if (dofs.index[k] >= 0) u[k] = x[dofs.index[k]];
        }
        return u;
    }
};

/// Builds the program for a shell of the given thickness with the strain bound
/// checked at +-fiber_ratio * thickness from the midsurface.
inline DualProgram assemble_dual_program(const TriMesh& mesh, const LoadCase& loads, double thickness,
                                         double fiber_ratio = 0.5) {
    loads.validate(mesh.num_vertices());
    if (!(thickness >= 0.0)) throw ParameterError("field thickness must be non-negative");
    if (!(fiber_ratio >= 0.0)) throw ParameterError("fiber ratio must be non-negative");
    DualProgram dp;
    dp.dofs = DofMap::build(mesh.num_vertices(), loads.supports);
    dp.num_displacement_vars = dp.dofs.num_free;
    dp.fiber_offset = fiber_ratio * thickness;
    dp.tensile = tensile_strain_operator(mesh);
    dp.bending = bending_strain_operator(mesh);

    const int nf = mesh.num_triangles();
    const int nu = dp.num_displacement_vars;
    const int n = nu + 2 * nf;
    socp::ConeProgram& p = dp.program;
    p = socp::ConeProgram(n);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        for (int c = 0; c < 3; ++c) {
            const int j = dp.dofs(v, c);
            if (j >= 0) p.objective[j] = loads.forces[v][c];
        }
    }

    // surface strain rows restricted to free columns
    auto surface_rows = [&](double z) {
        RowSparseMatrix S = dp.tensile + z * dp.bending;
        std::vector<Eigen::Triplet<double>> t;
        for (int r = 0; r < S.outerSize(); ++r) {
            for (RowSparseMatrix::InnerIterator it(S, r); it; ++it) {
                const int j = dp.dofs.index[it.col()];
                if (j >= 0 && it.value() != 0.0) t.emplace_back(r, j, it.value());
            }
        }
        RowSparseMatrix R(S.rows(), n);
        R.setFromTriplets(t.begin(), t.end());
        return R;
    };
    const RowSparseMatrix rows[2] = {surface_rows(dp.fiber_offset), surface_rows(-dp.fiber_offset)};

    std::vector<Eigen::Triplet<double>> ineq;
    int ineq_rows = 0;
    for (int f = 0; f < nf; ++f) {
        for (int s = 0; s < 2; ++s) {
            const RowSparseMatrix& R = rows[s];
            const int aux = dp.aux_index(f, s);
            socp::ConeBlock cb;
            cb.A = R.middleRows(3 * f + 1, 2);
            cb.b = Eigen::VectorXd::Zero(2);
            cb.c = socp::SparseVec(n);
            cb.c.insert(aux) = -1.0;
            cb.d = loads.eps0;
            cb.group = 2 * f + s;
            p.cones.push_back(std::move(cb));
            for (double sign : {1.0, -1.0}) {
                for (RowSparseMatrix::InnerIterator it(R, 3 * f); it; ++it) {
                    ineq.emplace_back(ineq_rows, it.col(), sign * it.value());
                }
                ineq.emplace_back(ineq_rows, aux, -1.0);
                ++ineq_rows;
            }
        }
    }
    p.ineq_A = RowSparseMatrix(ineq_rows, n);
    p.ineq_A.setFromTriplets(ineq.begin(), ineq.end());
    p.ineq_b = Eigen::VectorXd::Zero(ineq_rows);
    p.feasible_point = Eigen::VectorXd::Zero(n);
    return dp;
}

}  // namespace shellopt
