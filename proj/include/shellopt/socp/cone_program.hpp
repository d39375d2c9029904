#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "shellopt/error.hpp"

namespace shellopt::socp {

using Vector = Eigen::VectorXd;
using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseVec = Eigen::SparseVector<double>;

/// One second-order cone constraint  ||A x + b|| <= c^T x + d.
struct ConeBlock {
    RowSparse A;  // m x n
    Vector b;     // m
    SparseVec c;  // n
    double d = 0.0;
    int group = -1;  // caller-defined tag (e.g. triangle / surface id)
};

/// maximize f^T x  subject to cone blocks, L x <= r and E x = e.
struct ConeProgram {
    int n = 0;
    Vector objective;
    std::vector<ConeBlock> cones;
    RowSparse ineq_A;
    Vector ineq_b;
    RowSparse eq_A;
    Vector eq_b;
    std::optional<Vector> feasible_point;

    explicit ConeProgram(int num_vars = 0)
        : n(num_vars), objective(Vector::Zero(num_vars)), ineq_A(0, num_vars), eq_A(0, num_vars) {}

    int num_cone_rows() const {
        int m = 0;
        for (const auto& c : cones) m += 1 + static_cast<int>(c.b.size());
        return m;
    }

    void validate() const {
        if (objective.size() != n) throw ParameterError("objective size mismatch");
        for (std::size_t j = 0; j < cones.size(); ++j) {
            const auto& c = cones[j];
            if (c.A.cols() != n || c.c.size() != n || c.A.rows() != c.b.size()) {
                throw ParameterError("cone block " + std::to_string(j) + " has inconsistent dimensions");
            }
            if (!std::isfinite(c.d)) throw ParameterError("cone block " + std::to_string(j) + " has non-finite d");
        }
        if (ineq_A.cols() != n || ineq_A.rows() != ineq_b.size()) throw ParameterError("inequality size mismatch");
        if (eq_A.cols() != n || eq_A.rows() != eq_b.size()) throw ParameterError("equality size mismatch");
        if (feasible_point && feasible_point->size() != n) throw ParameterError("feasible point size mismatch");
    }

    /// Largest violation of any constraint at x (0 when feasible).
    double max_violation(const Vector& x) const {
        double v = 0.0;
        for (const auto& c : cones) {
            double lhs = (c.A * x + c.b).norm();
            double rhs = c.c.dot(x) + c.d;
            v = std::max(v, lhs - rhs);
        }
        if (ineq_A.rows() > 0) v = std::max(v, (ineq_A * x - ineq_b).maxCoeff());
        if (eq_A.rows() > 0) v = std::max(v, (eq_A * x - eq_b).cwiseAbs().maxCoeff());
        return v;
    }
};

enum class SolveStatus { Optimal, MaxIter, Infeasible, Unbounded };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::MaxIter: return "max-iter";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
    }
    return "?";
}

struct IterateRecord {
    int iteration = 0;
    double primal_objective = 0.0;  // f^T x / tau (maximization sense)
    double dual_objective = 0.0;
    double complementarity = 0.0;   // s^T z / tau^2, always >= 0
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double step = 0.0;
};

struct ConeSolution {
    Vector x;
    std::vector<Vector> cone_duals;  // one per cone block, ordered (t, u)
    Vector ineq_duals;
    Vector eq_duals;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;
    double relative_gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    SolveStatus status = SolveStatus::MaxIter;
    std::vector<IterateRecord> trace;
};

struct SocpSettings {
    double tol = 1e-7;
    int max_iter = 200;
    double step_fraction = 0.99;
    double static_reg = 1e-9;
    int refine_steps = 8;
};

// ---------------------------------------------------------------------------
// Plain-text dump, one token stream:
//   CONEPROG 1
//   N <n>
//   OBJ <nnz> { <j> <v> }
//   CONE <m> <d> <group>  C <nnz> { <j> <v> }  B { <b_i> }  A <nnz> { <i> <j> <v> }
//   INEQ <rows> <nnz> { <i> <j> <v> } RHS { <r_i> }
//   EQ   <rows> <nnz> { <i> <j> <v> } RHS { <e_i> }
//   END

namespace detail {

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_rows(std::ostream& out, const RowSparse& M) {
    out << M.nonZeros() << '\n';
    for (int i = 0; i < M.outerSize(); ++i) {
        for (RowSparse::InnerIterator it(M, i); it; ++it) out << it.row() << ' ' << it.col() << ' ' << num(it.value()) << '\n';
    }
}

inline RowSparse read_rows(std::istream& in, int rows, int cols) {
    long nnz = 0;
    in >> nnz;
    std::vector<Eigen::Triplet<double>> t;
    for (long k = 0; k < nnz; ++k) {
        int i, j;
        double v;
        in >> i >> j >> v;
        t.emplace_back(i, j, v);
    }
    RowSparse M(rows, cols);
    M.setFromTriplets(t.begin(), t.end());
    return M;
}

inline void expect(std::istream& in, const char* tag) {
    std::string tok;
    if (!(in >> tok) || tok != tag) throw ParseError(std::string("cone program dump: expected ") + tag, 0);
}

}  // namespace detail

inline void write_cone_program(std::ostream& out, const ConeProgram& p) {
    out << "CONEPROG 1\nN " << p.n << '\n';
    int nnz = 0;
    for (int j = 0; j < p.n; ++j) nnz += p.objective[j] != 0.0;
    out << "OBJ " << nnz << '\n';
    for (int j = 0; j < p.n; ++j) {
        if (p.objective[j] != 0.0) out << j << ' ' << detail::num(p.objective[j]) << '\n';
    }
    for (const auto& c : p.cones) {
        out << "CONE " << c.b.size() << ' ' << detail::num(c.d) << ' ' << c.group << "\nC " << c.c.nonZeros() << '\n';
        for (SparseVec::InnerIterator it(c.c); it; ++it) out << it.index() << ' ' << detail::num(it.value()) << '\n';
        out << "B";
        for (int i = 0; i < c.b.size(); ++i) out << ' ' << detail::num(c.b[i]);
        out << "\nA ";
        detail::write_rows(out, c.A);
    }
    out << "INEQ " << p.ineq_A.rows() << ' ';
    detail::write_rows(out, p.ineq_A);
    out << "RHS";
    for (int i = 0; i < p.ineq_b.size(); ++i) out << ' ' << detail::num(p.ineq_b[i]);
    out << "\nEQ " << p.eq_A.rows() << ' ';
    detail::write_rows(out, p.eq_A);
    out << "RHS";
    for (int i = 0; i < p.eq_b.size(); ++i) out << ' ' << detail::num(p.eq_b[i]);
    out << "\nEND\n";
}

inline ConeProgram read_cone_program(std::istream& in) {
    detail::expect(in, "CONEPROG");
    int version = 0;
    in >> version;
    detail::expect(in, "N");
    int n = 0;
    in >> n;
    ConeProgram p(n);
    detail::expect(in, "OBJ");
    int nnz = 0;
    in >> nnz;
    for (int k = 0; k < nnz; ++k) {
        int j;
        double v;
        in >> j >> v;
        p.objective[j] = v;
    }
    std::string tok;
    while (in >> tok && tok == "CONE") {
        ConeBlock c;
        int m = 0;
        in >> m >> c.d >> c.group;
        detail::expect(in, "C");
        in >> nnz;
        c.c.resize(n);
        for (int k = 0; k < nnz; ++k) {
            int j;
            double v;
            in >> j >> v;
            c.c.coeffRef(j) = v;
        }
        detail::expect(in, "B");
        c.b.resize(m);
        for (int i = 0; i < m; ++i) in >> c.b[i];
        detail::expect(in, "A");
        c.A = detail::read_rows(in, m, n);
        p.cones.push_back(std::move(c));
    }
    if (tok != "INEQ") throw ParseError("cone program dump: expected INEQ", 0);
    int rows = 0;
    in >> rows;
    p.ineq_A = detail::read_rows(in, rows, n);
    detail::expect(in, "RHS");
    p.ineq_b.resize(rows);
    for (int i = 0; i < rows; ++i) in >> p.ineq_b[i];
    detail::expect(in, "EQ");
    in >> rows;
    p.eq_A = detail::read_rows(in, rows, n);
    detail::expect(in, "RHS");
    p.eq_b.resize(rows);
    for (int i = 0; i < rows; ++i) in >> p.eq_b[i];
    detail::expect(in, "END");
    if (!in) throw ParseError("cone program dump truncated", 0);
    return p;
}

}  // namespace shellopt::socp
