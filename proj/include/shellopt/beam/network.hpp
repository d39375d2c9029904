#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "shellopt/mesh/cell_mesh.hpp"

namespace shellopt {

/// Sparse row over the full displacement vector (index 3*vertex + component).
using SparseRow = std::vector<std::pair<int, double>>;

inline double dot(const SparseRow& row, const Eigen::VectorXd& u) {
    double s = 0.0;
    for (auto [i, v] : row) s += v * u[i];
    return s;
}

inline double dot(const SparseRow& a, const SparseRow& b) {
    // both sorted by index
    double s = 0.0;
    auto ia = a.begin(), ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            s += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return s;
}

/// Rectangular-section beam along one edge of one subcell.
struct Block {
    int cell = -1;   // subcell id
    int local = -1;  // local edge (opposite corner) in the subcell
    int edge = -1;   // CellMesh edge id
    int i = -1, j = -1;  // edge endpoints, i < j
    bool diagonal = false;
    double l = 0.0;
    double a = 0.0;
    double w = 0.0;
    double h = 0.0;
    SparseRow dt;  // tensile strain row (1/mm)
    SparseRow db;  // bending strain row (1/mm^2)
    double g_t = 0.0;
    double g_b = 0.0;

    double y() const { return w / a; }
};

struct NetworkInit {
    double y = 1.0 / 3.0;  // normalized width w / a
    double h = 1.0;        // mm
};

namespace detail {

inline Eigen::Matrix3d cross_matrix(const Vec3& a) {
    Eigen::Matrix3d R;
    R << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
    return R;
}

inline void accumulate(std::map<int, double>& row, int vertex, const Vec3& coef) {
    for (int c = 0; c < 3; ++c) row[3 * vertex + c] += coef[c];
}

inline SparseRow to_row(const std::map<int, double>& m) {
    SparseRow r;
    r.reserve(m.size());
    for (auto [k, v] : m) {
        if (v != 0.0) r.emplace_back(k, v);
    }
    return r;
}

}  // namespace detail

/// Linearized unit-normal change at a node: dn_i = sum_l M_l (u_l - u_i).
struct NormalLinearization {
    std::vector<int> neighbors;
    std::vector<Eigen::Matrix3d> M;
};

/// Beam network over a cell mesh: three blocks per subcell (one per edge).
class BeamNetwork {
public:
    BeamNetwork() = default;

    static BeamNetwork build(std::shared_ptr<const CellMesh> cells, double youngs_modulus = 1.0,
                             NetworkInit init = {}) {
        if (!cells) throw ParameterError("null cell mesh");
        if (!(youngs_modulus > 0.0)) throw ParameterError("Young modulus must be positive");
        if (!(init.y >= 0.0) || !(init.h > 0.0)) throw ParameterError("invalid initial block parameters");
        BeamNetwork net;
        net.cells_ = std::move(cells);
        net.E_ = youngs_modulus;
        net.h_ref_ = init.h;
        const CellMesh& cm = *net.cells_;
        const int nn = cm.num_nodes();

        net.normals_.resize(nn);
        net.lin_.resize(nn);
        for (int v = 0; v < nn; ++v) {
            Vec3 n = cm.fan_normal(v);
            double len = n.norm();
            if (!(len > 0.0)) throw StructureError("node " + std::to_string(v) + " has a degenerate fan normal");
            net.normals_[v] = n / len;
            net.lin_[v] = linearize_normal(cm, v, n);
        }

        std::vector<SparseRow> edge_dt(cm.edges().size()), edge_db(cm.edges().size());
        for (std::size_t e = 0; e < cm.edges().size(); ++e) {
            const auto& topo = cm.edges()[e].topo;
            edge_dt[e] = net.tensile_row(topo.v0, topo.v1);
            edge_db[e] = net.bending_row(topo.v0, topo.v1);
        }

        const auto& subcells = cm.subcells();
        net.blocks_.reserve(3 * subcells.size());
        for (std::size_t c = 0; c < subcells.size(); ++c) {
            const Subcell& s = subcells[c];
            for (int k = 0; k < 3; ++k) {
                Block b;
                b.cell = static_cast<int>(c);
                b.local = k;
                b.edge = s.edges[k];
                const auto& ce = cm.edges()[b.edge];
                b.i = ce.topo.v0;
                b.j = ce.topo.v1;
                b.diagonal = ce.kind == EdgeKind::Diagonal;
                b.l = s.l[k];
                b.a = s.a[k];
                b.w = init.y * b.a;
                b.h = init.h;
                b.dt = edge_dt[b.edge];
                b.db = edge_db[b.edge];
                net.blocks_.push_back(std::move(b));
            }
        }
        return net;
    }

    const CellMesh& cells() const { return *cells_; }
    std::shared_ptr<const CellMesh> cells_ptr() const { return cells_; }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }
    std::vector<Block>& blocks() noexcept { return blocks_; }
    const Block& block(int cell, int local) const { return blocks_[3 * cell + local]; }
    Block& block(int cell, int local) { return blocks_[3 * cell + local]; }
    const std::vector<Vec3>& node_normals() const noexcept { return normals_; }
    const NormalLinearization& normal_linearization(int v) const { return lin_[v]; }
    double youngs_modulus() const noexcept { return E_; }
    /// Thickness that scales the stiffness floor of emptied blocks.
    double reference_thickness() const noexcept { return h_ref_; }
    void set_reference_thickness(double h) {
        if (!(h > 0.0)) throw ParameterError("reference thickness must be positive");
        h_ref_ = h;
    }
    int num_nodes() const { return cells_->num_nodes(); }
    int num_dofs() const { return 3 * num_nodes(); }

    /// Thin-beam volume approximation: sum of w h l over all blocks.
    double thin_beam_volume() const {
        double v = 0.0;
        for (const auto& b : blocks_) v += b.w * b.h * b.l;
        return v;
    }

private:
    static NormalLinearization linearize_normal(const CellMesh& cm, int v, const Vec3& n) {
        NormalLinearization lin;
        const NodeFan& fan = cm.fans()[v];
        const std::size_t k = fan.neighbors.size();
        const double len = n.norm();
        const Vec3 nh = n / len;
        const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - nh * nh.transpose();
        const Vec3 xi = cm.nodes()[v];
        for (std::size_t s = 0; s < k; ++s) {
            bool has_prev = fan.closed || s > 0;
            bool has_next = fan.closed || s + 1 < k;
            Vec3 g = Vec3::Zero();
            if (has_prev) g += cm.nodes()[fan.neighbors[(s + k - 1) % k]] - xi;
            if (has_next) g -= cm.nodes()[fan.neighbors[(s + 1) % k]] - xi;
            lin.neighbors.push_back(fan.neighbors[s]);
            lin.M.push_back(P * detail::cross_matrix(g) / len);
        }
        return lin;
    }

    SparseRow tensile_row(int i, int j) const {
        const auto& x = cells_->nodes();
        Vec3 e = x[j] - x[i];
        double l = e.norm();
        Vec3 eh = e / l;
        std::map<int, double> row;
        detail::accumulate(row, i, -eh / l);
        detail::accumulate(row, j, eh / l);
        return detail::to_row(row);
    }

    SparseRow bending_row(int i, int j) const {
        const auto& x = cells_->nodes();
        Vec3 e = x[j] - x[i];
        double l = e.norm();
        Vec3 eh = e / l;
        std::map<int, double> row;
        // + e^T dn_j / l - e^T dn_i / l
        for (auto [node, sign] : {std::pair{j, 1.0}, std::pair{i, -1.0}}) {
            const auto& lin = lin_[node];
            for (std::size_t s = 0; s < lin.neighbors.size(); ++s) {
                Vec3 coef = sign * lin.M[s].transpose() * eh / l;
                detail::accumulate(row, lin.neighbors[s], coef);
                detail::accumulate(row, node, -coef);
            }
        }
        return detail::to_row(row);
    }

    std::shared_ptr<const CellMesh> cells_;
    double E_ = 1.0;
    double h_ref_ = 1.0;
    std::vector<Block> blocks_;
    std::vector<Vec3> normals_;
    std::vector<NormalLinearization> lin_;
};

}  // namespace shellopt
