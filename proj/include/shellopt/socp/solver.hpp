#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "shellopt/socp/cone_program.hpp"

namespace shellopt::socp {

namespace detail {

using ColSparse = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

/// Product cone R+^l x Q^{q_1} x ... ; rows are laid out in that order.
struct ConeLayout {
    int l = 0;
    std::vector<int> q;
    std::vector<int> offset;  // start row of each second-order block
    int m = 0;

    int degree() const { return l + static_cast<int>(q.size()); }
};

inline Vector unit_element(const ConeLayout& K) {
    Vector e = Vector::Zero(K.m);
    e.head(K.l).setOnes();
    for (int off : K.offset) e[off] = 1.0;
    return e;
}

/// Jordan product u o v.
inline Vector circ(const ConeLayout& K, const Vector& u, const Vector& v) {
    Vector r(K.m);
    r.head(K.l) = u.head(K.l).cwiseProduct(v.head(K.l));
    for (std::size_t j = 0; j < K.q.size(); ++j) {
        int o = K.offset[j], d = K.q[j];
        r[o] = u.segment(o, d).dot(v.segment(o, d));
        r.segment(o + 1, d - 1) = u[o] * v.segment(o + 1, d - 1) + v[o] * u.segment(o + 1, d - 1);
    }
    return r;
}

/// Solves u o x = w for x (u in the cone interior).
inline Vector circ_solve(const ConeLayout& K, const Vector& u, const Vector& w) {
    Vector x(K.m);
    x.head(K.l) = w.head(K.l).cwiseQuotient(u.head(K.l));
    for (std::size_t j = 0; j < K.q.size(); ++j) {
        int o = K.offset[j], d = K.q[j];
        auto u1 = u.segment(o + 1, d - 1);
        auto w1 = w.segment(o + 1, d - 1);
        double rho = u[o] * u[o] - u1.squaredNorm();
        double x0 = (u[o] * w[o] - u1.dot(w1)) / rho;
        x[o] = x0;
        x.segment(o + 1, d - 1) = (w1 - x0 * u1) / u[o];
    }
    return x;
}

/// inf { a : u + a e in K }.
inline double distance_to_cone(const ConeLayout& K, const Vector& u) {
    double a = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < K.l; ++i) a = std::max(a, -u[i]);
    for (std::size_t j = 0; j < K.q.size(); ++j) {
        int o = K.offset[j], d = K.q[j];
        a = std::max(a, u.segment(o + 1, d - 1).norm() - u[o]);
    }
    return a;
}

/// Largest a with u + a du in K (u interior); +inf when unbounded.
inline double max_step(const ConeLayout& K, const Vector& u, const Vector& du) {
    double alpha = std::numeric_limits<double>::infinity();
    for (int i = 0; i < K.l; ++i) {
        if (du[i] < 0.0) alpha = std::min(alpha, -u[i] / du[i]);
    }
    for (std::size_t j = 0; j < K.q.size(); ++j) {
        int o = K.offset[j], d = K.q[j];
        auto u1 = u.segment(o + 1, d - 1);
        auto d1 = du.segment(o + 1, d - 1);
        double n1 = u1.norm();
        double res = (u[o] - n1) * (u[o] + n1);
        if (!(res > 0.0)) return 0.0;
        double unorm = std::sqrt(res);
        double b0 = u[o] / unorm;
        Vector b1 = u1 / unorm;
        double bdot = b0 * du[o] - b1.dot(d1);
        double rho0 = bdot / unorm;
        double factor = (bdot + du[o]) / (b0 + 1.0);
        double rho1 = (d1 - factor * b1).norm() / unorm;
        double sigma = rho1 - rho0;
        if (sigma > 0.0) alpha = std::min(alpha, 1.0 / sigma);
    }
    return alpha;
}

/// Nesterov-Todd scaling W with W z = W^{-1} s = lambda.
struct NtScaling {
    Vector lin;  // sqrt(s/z) on the orthant
    std::vector<double> eta;
    std::vector<Vector> wbar;

    static NtScaling identity(const ConeLayout& K) {
        NtScaling W;
        W.lin = Vector::Ones(K.l);
        for (int d : K.q) {
            W.eta.push_back(1.0);
            Vector w = Vector::Zero(d);
            w[0] = 1.0;
            W.wbar.push_back(w);
        }
        return W;
    }

    static NtScaling compute(const ConeLayout& K, const Vector& s, const Vector& z) {
        NtScaling W;
        W.lin = s.head(K.l).cwiseQuotient(z.head(K.l)).cwiseSqrt();
        for (std::size_t j = 0; j < K.q.size(); ++j) {
            int o = K.offset[j], d = K.q[j];
            Vector sj = s.segment(o, d), zj = z.segment(o, d);
            double sn = sj.tail(d - 1).norm(), zn = zj.tail(d - 1).norm();
            double sres = std::sqrt((sj[0] - sn) * (sj[0] + sn));
            double zres = std::sqrt((zj[0] - zn) * (zj[0] + zn));
            Vector sb = sj / sres, zb = zj / zres;
            double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
            Vector w(d);
            w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
            w.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
            W.eta.push_back(std::sqrt(sres / zres));
            W.wbar.push_back(std::move(w));
        }
        return W;
    }

    Eigen::MatrixXd block(std::size_t j) const {
        const Vector& w = wbar[j];
        const int d = static_cast<int>(w.size());
        Eigen::MatrixXd B(d, d);
        B(0, 0) = w[0];
        B.block(0, 1, 1, d - 1) = w.tail(d - 1).transpose();
        B.block(1, 0, d - 1, 1) = w.tail(d - 1);
        B.block(1, 1, d - 1, d - 1) = Eigen::MatrixXd::Identity(d - 1, d - 1) +
                                      w.tail(d - 1) * w.tail(d - 1).transpose() / (1.0 + w[0]);
        return eta[j] * B;
    }

    Vector apply(const ConeLayout& K, const Vector& v, bool inverse = false) const {
        Vector r(K.m);
        if (inverse) {
            r.head(K.l) = v.head(K.l).cwiseQuotient(lin);
        } else {
            r.head(K.l) = v.head(K.l).cwiseProduct(lin);
        }
        for (std::size_t j = 0; j < K.q.size(); ++j) {
            int o = K.offset[j], d = K.q[j];
            const Vector& w = wbar[j];
            auto v1 = v.segment(o + 1, d - 1);
            double sgn = inverse ? -1.0 : 1.0;
            double dot = w.tail(d - 1).dot(v1);
            double r0 = w[0] * v[o] + sgn * dot;
            Vector r1 = v1 + (sgn * v[o] + dot / (1.0 + w[0])) * w.tail(d - 1);
            double scale = inverse ? 1.0 / eta[j] : eta[j];
            r[o] = scale * r0;
            r.segment(o + 1, d - 1) = scale * r1;
        }
        return r;
    }
};

/// Standard form: min c^T x  s.t.  G x + s = h, s in K, A x = b.
struct StandardForm {
    int n = 0, p = 0;
    ColSparse A, G;
    Vector c, b, h;
    ConeLayout K;
};

inline StandardForm to_standard_form(const ConeProgram& prog) {
    StandardForm sf;
    sf.n = prog.n;
    sf.p = static_cast<int>(prog.eq_A.rows());
    sf.c = -prog.objective;
    sf.A = ColSparse(prog.eq_A);
    sf.b = prog.eq_b;
    sf.K.l = static_cast<int>(prog.ineq_A.rows());
    int row = sf.K.l;
    for (const auto& cb : prog.cones) {
        int d = 1 + static_cast<int>(cb.b.size());
        sf.K.q.push_back(d);
        sf.K.offset.push_back(row);
        row += d;
    }
    sf.K.m = row;
    std::vector<Trip> t;
    sf.h.resize(row);
    for (int i = 0; i < prog.ineq_A.outerSize(); ++i) {
        for (RowSparse::InnerIterator it(prog.ineq_A, i); it; ++it) t.emplace_back(i, it.col(), it.value());
        sf.h[i] = prog.ineq_b[i];
    }
    for (std::size_t j = 0; j < prog.cones.size(); ++j) {
        const auto& cb = prog.cones[j];
        int o = sf.K.offset[j];
        for (SparseVec::InnerIterator it(cb.c); it; ++it) t.emplace_back(o, it.index(), -it.value());
        sf.h[o] = cb.d;
        for (int i = 0; i < cb.A.outerSize(); ++i) {
            for (RowSparse::InnerIterator it(cb.A, i); it; ++it) t.emplace_back(o + 1 + i, it.col(), -it.value());
        }
        sf.h.segment(o + 1, cb.b.size()) = cb.b;
    }
    sf.G = ColSparse(row, sf.n);
    sf.G.setFromTriplets(t.begin(), t.end());
    return sf;
}

/// Quasi-definite KKT system [[0 A' G'], [A 0 0], [G 0 -W^2]] with static
/// regularization and iterative refinement against the unregularized matrix.
class KktSystem {
public:
    KktSystem(const StandardForm& sf, double reg, int refine) : sf_(sf), reg_(reg), refine_(refine) {
        const int n = sf.n, p = sf.p;
        for (int k = 0; k < sf.A.outerSize(); ++k) {
            for (ColSparse::InnerIterator it(sf.A, k); it; ++it) fixed_.emplace_back(n + it.row(), it.col(), it.value());
        }
        for (int k = 0; k < sf.G.outerSize(); ++k) {
            for (ColSparse::InnerIterator it(sf.G, k); it; ++it) fixed_.emplace_back(n + p + it.row(), it.col(), it.value());
        }
    }

    /// Factors with the static regularization, raising it when a pivot vanishes.
    bool factor(const NtScaling& W) {
        W_ = &W;
        for (double reg = reg_; reg <= 1e4 * reg_; reg *= 100.0) {
            if (factor_with(W, reg)) return true;
        }
        return false;
    }

    Vector solve(const Vector& rhs) const {
        Vector sol = ldlt_.solve(rhs);
        const double target = 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
        for (int k = 0; k < refine_; ++k) {
            Vector r = rhs - multiply(sol);
            if (r.lpNorm<Eigen::Infinity>() <= target) break;
            sol += ldlt_.solve(r);
        }
        return sol;
    }

private:
    bool factor_with(const NtScaling& W, double reg) {
        const int n = sf_.n, p = sf_.p, base = n + p;
        std::vector<Trip> t = fixed_;
        for (int j = 0; j < n; ++j) t.emplace_back(j, j, reg);
        for (int i = 0; i < p; ++i) t.emplace_back(n + i, n + i, -reg);
        const auto& K = sf_.K;
        for (int i = 0; i < K.l; ++i) t.emplace_back(base + i, base + i, -(W.lin[i] * W.lin[i]) - reg);
        for (std::size_t j = 0; j < K.q.size(); ++j) {
            Eigen::MatrixXd B = W.block(j);
            Eigen::MatrixXd B2 = B * B;
            int o = K.offset[j], d = K.q[j];
            for (int c = 0; c < d; ++c) {
                for (int r = c; r < d; ++r) t.emplace_back(base + o + r, base + o + c, -B2(r, c) - (r == c ? reg : 0.0));
            }
        }
        const int N = n + p + K.m;
        ColSparse M(N, N);
        M.setFromTriplets(t.begin(), t.end());
        if (!analyzed_) {
            ldlt_.analyzePattern(M);
            analyzed_ = true;
        }
        ldlt_.factorize(M);
        if (ldlt_.info() != Eigen::Success) return false;
        const auto& D = ldlt_.vectorD();
        return D.allFinite();
    }

    Vector multiply(const Vector& v) const {
        const int n = sf_.n, p = sf_.p, m = sf_.K.m;
        Vector x = v.head(n), y = v.segment(n, p), z = v.tail(m);
        Vector out(n + p + m);
        out.head(n) = sf_.A.transpose() * y + sf_.G.transpose() * z;
        out.segment(n, p) = sf_.A * x;
        out.tail(m) = sf_.G * x - W_->apply(sf_.K, W_->apply(sf_.K, z));
        return out;
    }

    const StandardForm& sf_;
    double reg_;
    int refine_;
    std::vector<Trip> fixed_;
    const NtScaling* W_ = nullptr;
    Eigen::SimplicialLDLT<ColSparse, Eigen::Lower> ldlt_;
    bool analyzed_ = false;
};

}  // namespace detail

/// Homogeneous self-dual interior point method with Nesterov-Todd scaling and
/// Mehrotra predictor-corrector steps.
inline ConeSolution solve_socp(const ConeProgram& prog, const SocpSettings& settings = {}) {
    using namespace detail;
    prog.validate();
    if (!(settings.tol > 0.0) || settings.max_iter < 1) throw ParameterError("invalid solver settings");

    const StandardForm sf = to_standard_form(prog);
    const ConeLayout& K = sf.K;
    const int n = sf.n, p = sf.p, m = K.m;
    const double tol = settings.tol;

    ConeSolution out;
    auto finish = [&](const Vector& x, const Vector& y, const Vector& z, double tau) {
        out.x = x / tau;
        out.eq_duals = y / tau;
        out.ineq_duals = z.head(K.l) / tau;
        out.cone_duals.clear();
        for (std::size_t j = 0; j < K.q.size(); ++j) out.cone_duals.push_back(z.segment(K.offset[j], K.q[j]) / tau);
    };

    if (m == 0 && p == 0) {
        // Unconstrained: bounded only for a zero objective.
        out.x = Vector::Zero(n);
        out.eq_duals = Vector();
        out.ineq_duals = Vector();
        out.status = sf.c.isZero(0.0) ? SolveStatus::Optimal : SolveStatus::Unbounded;
        return out;
    }

    KktSystem kkt(sf, settings.static_reg, settings.refine_steps);
    const Vector e = unit_element(K);

    // Initial point from two least-squares style solves with W = I.
    NtScaling W = NtScaling::identity(K);
    if (!kkt.factor(W)) throw SolverError("cone solver: initial KKT factorization failed");
    Vector rhs = Vector::Zero(n + p + m);
    rhs.segment(n, p) = sf.b;
    rhs.tail(m) = sf.h;
    Vector sol = kkt.solve(rhs);
    Vector x = sol.head(n);
    Vector s = -sol.tail(m);
    double a = distance_to_cone(K, s);
    if (a >= 0.0) s += (1.0 + a) * e;
    rhs.setZero();
    rhs.head(n) = -sf.c;
    sol = kkt.solve(rhs);
    Vector y = sol.segment(n, p);
    Vector z = sol.tail(m);
    a = distance_to_cone(K, z);
    if (a >= 0.0) z += (1.0 + a) * e;
    double tau = 1.0, kappa = 1.0;

    const double bnorm = std::max(1.0, std::sqrt(sf.b.squaredNorm() + sf.h.squaredNorm()));
    const double cnorm = std::max(1.0, sf.c.norm());
    Vector v(n + p + m);
    v << sf.c, sf.b, sf.h;

    struct Best {
        double merit = std::numeric_limits<double>::infinity();
        Vector x, y, z, s;
        double tau = 1.0;
        ConeSolution stats;
    } best;

    for (int iter = 0;; ++iter) {
        // Residuals of the homogeneous embedding.
        Vector rx = sf.A.transpose() * y + sf.G.transpose() * z + sf.c * tau;
        Vector ry = -(sf.A * x) + sf.b * tau;
        Vector rz = s + sf.G * x - sf.h * tau;
        double ctx = sf.c.dot(x), bty = sf.b.dot(y), htz = sf.h.dot(z);
        double rtau = kappa + ctx + bty + htz;

        double pcost = ctx / tau, dcost = -(bty + htz) / tau;
        double pres = std::max(ry.norm(), rz.norm()) / tau / bnorm;
        double dres = rx.norm() / tau / cnorm;
        double compl_gap = s.dot(z) / (tau * tau);
        double relgap = std::max(compl_gap, std::abs(pcost - dcost)) /
                        std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));

        IterateRecord rec;
        rec.iteration = iter;
        rec.primal_objective = -pcost;
        rec.dual_objective = -dcost;
        rec.complementarity = compl_gap;
        rec.primal_residual = pres;
        rec.dual_residual = dres;
        out.trace.push_back(rec);

        out.primal_objective = -pcost;
        out.dual_objective = -dcost;
        out.gap = std::abs(pcost - dcost);
        out.relative_gap = relgap;
        out.primal_residual = pres;
        out.dual_residual = dres;
        out.iterations = iter;

        double merit = std::max({pres, dres, relgap});
        if (merit < best.merit) {
            best.merit = merit;
            best.x = x;
            best.y = y;
            best.z = z;
            best.s = s;
            best.tau = tau;
            best.stats = out;
        }

        if (pres <= tol && dres <= tol && relgap <= tol) {
            out.status = SolveStatus::Optimal;
            finish(x, y, z, tau);
            return out;
        }
        // Infeasibility certificates.
        if (bty + htz < 0.0 && tau < kappa) {
            double pinf = (sf.A.transpose() * y + sf.G.transpose() * z).norm() / (-(bty + htz));
            if (pinf <= tol) {
                out.status = SolveStatus::Infeasible;
                finish(x, y, z, tau);
                return out;
            }
        }
        if (ctx < 0.0 && tau < kappa) {
            double dinf = std::max((sf.A * x).norm(), (sf.G * x + s).norm()) / (-ctx);
            if (dinf <= tol) {
                out.status = SolveStatus::Unbounded;
                finish(x, y, z, tau);
                return out;
            }
        }
        if (iter >= settings.max_iter) break;

        W = NtScaling::compute(K, s, z);
        if (!kkt.factor(W)) break;
        const Vector lambda = W.apply(K, z);
        const double mu = (s.dot(z) + tau * kappa) / (K.degree() + 1);

        // Direction for the tau column, shared by both solves.
        Vector rhs1(n + p + m);
        rhs1 << -sf.c, sf.b, sf.h;
        const Vector sol1 = kkt.solve(rhs1);
        const double denom1 = v.dot(sol1);

        auto direction = [&](double keep, const Vector& ds, double dk, Vector& dx, Vector& dy, Vector& dz,
                             Vector& dsv, double& dtau, double& dkap) {
            // keep = 1 - sigma scales the linear residuals.
            Vector r2(n + p + m);
            Vector corr = W.apply(K, circ_solve(K, lambda, ds));
            r2 << -keep * rx, keep * ry, -keep * rz + corr;
            Vector sol2 = kkt.solve(r2);
            dtau = (-keep * rtau + dk / tau - v.dot(sol2)) / (denom1 - kappa / tau);
            Vector d = sol2 + dtau * sol1;
            dx = d.head(n);
            dy = d.segment(n, p);
            dz = d.tail(m);
            // Delta s = -W (lambda \ ds) - W^2 dz
            dsv = -corr - W.apply(K, W.apply(K, dz));
            dkap = -(dk + kappa * dtau) / tau;
        };

        auto step_length = [&](const Vector& dsv, const Vector& dz, double dtau, double dkap) {
            double alpha = std::min(max_step(K, s, dsv), max_step(K, z, dz));
            if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
            if (dkap < 0.0) alpha = std::min(alpha, -kappa / dkap);
            return alpha;
        };

        // Predictor.
        Vector dx, dy, dz, dsv;
        double dtau = 0.0, dkap = 0.0;
        direction(1.0, circ(K, lambda, lambda), kappa * tau, dx, dy, dz, dsv, dtau, dkap);
        double alpha_aff = std::min(1.0, step_length(dsv, dz, dtau, dkap));
        double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

        // Corrector.
        Vector ds_comb = circ(K, lambda, lambda) + circ(K, W.apply(K, dsv, true), W.apply(K, dz)) - sigma * mu * e;
        double dk_comb = kappa * tau + dkap * dtau - sigma * mu;
        direction(1.0 - sigma, ds_comb, dk_comb, dx, dy, dz, dsv, dtau, dkap);
        double alpha = std::min(1.0, settings.step_fraction * step_length(dsv, dz, dtau, dkap));
        out.trace.back().step = alpha;
        if (!(alpha > 1e-12) || !dx.allFinite()) break;

        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        s += alpha * dsv;
        tau += alpha * dtau;
        kappa += alpha * dkap;
    }

    // Iteration budget exhausted or numerical stall: report the best iterate.
    std::vector<IterateRecord> trace = std::move(out.trace);
    out = best.stats;
    out.trace = std::move(trace);
    out.status = SolveStatus::MaxIter;
    finish(best.x, best.y, best.z, best.tau);
    return out;
}

}  // namespace shellopt::socp
