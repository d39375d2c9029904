#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <json.hpp>

#include "shellopt/beam/network.hpp"
#include "shellopt/mesh/load_case.hpp"

namespace shellopt {

using SpMat = Eigen::SparseMatrix<double>;

/// Every block keeps at least this fraction of the tensile and bending
/// stiffness of a block of full triangle height at the reference thickness, so
/// that emptied blocks cannot make K singular.
inline constexpr double kDefaultWidthFloor = 1e-6;

/// Blocks narrower than this fraction of their height a count as void: they are
/// not stress-checked and not exported. Stress in such slivers follows the
/// surrounding strain, so widening them cannot relieve it.
inline constexpr double kDefaultVoidWidth = 1e-3;

/// Effective w h of a block in the stiffness matrix.
inline double tensile_section(const BeamNetwork& net, const Block& b, double floor = kDefaultWidthFloor) {
    const double h_ref = net.reference_thickness();
    return std::max(b.w * b.h, floor * b.a * h_ref);
}

/// Effective w h^3 of a block in the stiffness matrix.
inline double bending_section(const BeamNetwork& net, const Block& b, double floor = kDefaultWidthFloor) {
    const double h_ref = net.reference_thickness();
    return std::max(b.w * b.h * b.h * b.h, floor * b.a * h_ref * h_ref * h_ref);
}

struct StiffnessSystem {
    SpMat K;  // over free DOFs
    DofMap dofs;
};

namespace detail {

/// Stacks one row per CellMesh edge restricted to free DOFs.
inline SpMat edge_operator(const BeamNetwork& net, const DofMap& dofs, bool bending) {
    const auto& edges = net.cells().edges();
    std::vector<Eigen::Triplet<double>> t;
    std::vector<bool> seen(edges.size(), false);
    for (const auto& b : net.blocks()) {
        if (seen[b.edge]) continue;
        seen[b.edge] = true;
        for (auto [idx, v] : bending ? b.db : b.dt) {
            int col = dofs.index[idx];
            if (col >= 0) t.emplace_back(b.edge, col, v);
        }
    }
    SpMat D(static_cast<int>(edges.size()), dofs.num_free);
    D.setFromTriplets(t.begin(), t.end());
    return D;
}

}  // namespace detail

/// K = sum over blocks of E [w h l dt dt' + (1/6) w h^3 l db db'], supports eliminated.
inline StiffnessSystem assemble_stiffness(const BeamNetwork& net, const std::vector<int>& supports,
                                          double width_floor = kDefaultWidthFloor) {
    StiffnessSystem sys;
    sys.dofs = DofMap::build(net.num_nodes(), supports);
    const std::size_t ne = net.cells().edges().size();
    Eigen::VectorXd kt = Eigen::VectorXd::Zero(ne), kb = Eigen::VectorXd::Zero(ne);
    const double E = net.youngs_modulus();
    for (const auto& b : net.blocks()) {
        kt[b.edge] += E * tensile_section(net, b, width_floor) * b.l;
        kb[b.edge] += E * bending_section(net, b, width_floor) * b.l / 6.0;
    }
    SpMat Dt = detail::edge_operator(net, sys.dofs, false);
    SpMat Db = detail::edge_operator(net, sys.dofs, true);
    SpMat K = SpMat(Dt.transpose()) * kt.asDiagonal() * Dt;
    K += SpMat(Db.transpose()) * kb.asDiagonal() * Db;
    sys.K = 0.5 * (K + SpMat(K.transpose()));
    return sys;
}

namespace detail {

/// Groups of nodes connected through edges that contain no support.
inline std::vector<std::vector<int>> floating_components(const BeamNetwork& net, const std::vector<int>& supports) {
    const int n = net.num_nodes();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const auto& e : net.cells().edges()) parent[find(e.topo.v0)] = find(e.topo.v1);
    std::vector<bool> anchored(n, false);
    for (int s : supports) anchored[find(s)] = true;
    std::map<int, std::vector<int>> groups;
    for (int v = 0; v < n; ++v) {
        if (!anchored[find(v)]) groups[find(v)].push_back(v);
    }
    std::vector<std::vector<int>> out;
    for (auto& [r, g] : groups) out.push_back(std::move(g));
    return out;
}

}  // namespace detail

inline Eigen::VectorXd free_load_vector(const LoadCase& loads, const DofMap& dofs) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(dofs.num_free);
    for (std::size_t v = 0; v < loads.forces.size(); ++v) {
        for (int c = 0; c < 3; ++c) {
            int k = dofs(static_cast<int>(v), c);
            if (k >= 0) f[k] = loads.forces[v][c];
        }
    }
    return f;
}

/// Solves K u = f and returns the full displacement vector (zeros at supports).
inline Eigen::VectorXd global_solve(const BeamNetwork& net, const LoadCase& loads,
                                    double width_floor = kDefaultWidthFloor) {
    loads.validate(net.num_nodes());
    auto floating = detail::floating_components(net, loads.supports);
    if (!floating.empty()) {
        std::string msg = "stiffness matrix is singular: " + std::to_string(floating.size()) +
                          " floating component(s), first contains nodes";
        for (std::size_t k = 0; k < std::min<std::size_t>(floating[0].size(), 8); ++k) {
            msg += " " + std::to_string(floating[0][k]);
        }
        throw SingularSystemError(msg);
    }
    StiffnessSystem sys = assemble_stiffness(net, loads.supports, width_floor);
    const Eigen::VectorXd f = free_load_vector(loads, sys.dofs);
    Eigen::VectorXd u_free = Eigen::VectorXd::Zero(sys.dofs.num_free);
    if (sys.dofs.num_free > 0) {
        Eigen::SimplicialLDLT<SpMat> ldlt(sys.K);
        if (ldlt.info() != Eigen::Success) throw SingularSystemError("stiffness factorization failed");
        if (!(ldlt.vectorD().minCoeff() > 0.0)) {
            throw SingularSystemError("stiffness matrix is singular after support elimination (mechanism)");
        }
        u_free = ldlt.solve(f);
        double rel = 0.0;
        for (int it = 0; it < 8; ++it) {
            Eigen::VectorXd r = f - sys.K * u_free;
            rel = r.norm() / std::max(f.norm(), std::numeric_limits<double>::min());
            if (rel <= 1e-13) break;
            u_free += ldlt.solve(r);
        }
        if (!(rel <= 1e-8) && f.norm() > 0.0) {
            throw SingularSystemError("stiffness system is numerically singular (residual " + std::to_string(rel) + ")");
        }
    }
    Eigen::VectorXd u = Eigen::VectorXd::Zero(net.num_dofs());
    for (int i = 0; i < net.num_dofs(); ++i) {
        if (sys.dofs.index[i] >= 0) u[i] = u_free[sys.dofs.index[i]];
    }
    return u;
}

struct BlockForce {
    double g_t = 0.0;
    double g_b = 0.0;
};

/// Elastic force vector K_loc u of one block over the full DOF vector.
inline std::map<int, double> block_force_vector(const BeamNetwork& net, const Block& b, const Eigen::VectorXd& u,
                                                double width_floor = kDefaultWidthFloor) {
    const double E = net.youngs_modulus();
    const double kt = E * tensile_section(net, b, width_floor) * b.l;
    const double kb = E * bending_section(net, b, width_floor) * b.l / 6.0;
    const double st = dot(b.dt, u), sb = dot(b.db, u);
    std::map<int, double> f;
    for (auto [i, v] : b.dt) f[i] += kt * st * v;
    for (auto [i, v] : b.db) f[i] += kb * sb * v;
    return f;
}

/// Tensile and bending force magnitudes, extracted from the block force vector
/// by dot products with the dual basis of span{dt, db}.
inline std::vector<BlockForce> block_forces(const BeamNetwork& net, const Eigen::VectorXd& u,
                                            double width_floor = kDefaultWidthFloor) {
    std::vector<BlockForce> out(net.blocks().size());
    for (std::size_t k = 0; k < net.blocks().size(); ++k) {
        const Block& b = net.blocks()[k];
        auto f = block_force_vector(net, b, u, width_floor);
        auto fdot = [&](const SparseRow& row) {
            double s = 0.0;
            for (auto [i, v] : row) {
                auto it = f.find(i);
                if (it != f.end()) s += v * it->second;
            }
            return s;
        };
        const double tt = dot(b.dt, b.dt), tb = dot(b.dt, b.db), bb = dot(b.db, b.db);
        const double det = tt * bb - tb * tb;
        const double ft = fdot(b.dt), fb = fdot(b.db);
        if (!(det > 1e-12 * tt * bb)) {
            out[k].g_t = std::abs(ft) / (tt * b.l);
            out[k].g_b = 0.0;
            continue;
        }
        // dual vectors: [dt~; db~] = G^{-1} [dt; db]
        out[k].g_t = std::abs((bb * ft - tb * fb) / det) / b.l;
        out[k].g_b = std::abs((tt * fb - tb * ft) / det) / b.l;
    }
    return out;
}

inline void store_block_forces(BeamNetwork& net, const std::vector<BlockForce>& forces) {
    for (std::size_t k = 0; k < forces.size(); ++k) {
        net.blocks()[k].g_t = forces[k].g_t;
        net.blocks()[k].g_b = forces[k].g_b;
    }
}

/// Conservative surface stress E|dt u| + f h E|db u| per block, with the outer
/// fiber at f h from the mid-plane.
inline std::vector<double> max_block_stress(const BeamNetwork& net, const Eigen::VectorXd& u, double fiber = 1.0) {
    std::vector<double> s;
    s.reserve(net.blocks().size());
    const double E = net.youngs_modulus();
    for (const auto& b : net.blocks()) {
        s.push_back(E * std::abs(dot(b.dt, u)) + fiber * b.h * E * std::abs(dot(b.db, u)));
    }
    return s;
}

/// Blocks at or below the stiffness floor hold no material and carry no stress.
inline bool holds_material(const Block& b, double void_width = kDefaultVoidWidth) {
    return b.w > void_width * b.a;
}

inline double compliance(const LoadCase& loads, const Eigen::VectorXd& u) {
    double c = 0.0;
    for (std::size_t v = 0; v < loads.forces.size(); ++v) {
        if (loads.is_support(static_cast<int>(v))) continue;
        c += loads.forces[v].dot(u.segment<3>(3 * v));
    }
    return c;
}

inline nlohmann::json network_to_json(const BeamNetwork& net, const std::vector<double>& stress) {
    nlohmann::json blocks = nlohmann::json::array();
    for (std::size_t k = 0; k < net.blocks().size(); ++k) {
        const Block& b = net.blocks()[k];
        blocks.push_back({{"cell", b.cell},
                          {"edge", {b.i, b.j}},
                          {"diagonal", b.diagonal},
                          {"l", b.l},
                          {"a", b.a},
                          {"w", b.w},
                          {"h", b.h},
                          {"g_t", b.g_t},
                          {"g_b", b.g_b},
                          {"stress", k < stress.size() ? stress[k] : 0.0}});
    }
    return {{"youngs_modulus", net.youngs_modulus()}, {"blocks", blocks}};
}

inline void save_network_json(const BeamNetwork& net, const std::vector<double>& stress,
                              const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << network_to_json(net, stress).dump(1) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace shellopt
