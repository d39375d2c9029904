#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "shellopt/mesh/topology.hpp"
#include "shellopt/mesh/tri_mesh.hpp"

namespace shellopt {

enum class EdgeKind { Boundary, Diagonal, FaceEdge };

inline const char* to_string(EdgeKind k) {
    switch (k) {
        case EdgeKind::Boundary: return "boundary";
        case EdgeKind::Diagonal: return "diagonal";
        case EdgeKind::FaceEdge: return "face-edge";
    }
    return "?";
}

/// Triangular subcell of a polygonal face. Local edge k is opposite corner k;
/// `l[k]` is its length and `a[k]` the height of the opposite corner over it.
struct Subcell {
    Tri v{};
    int face = -1;
    std::array<int, 3> edges{};
    std::array<double, 3> l{};
    std::array<double, 3> a{};
    double area = 0.0;
};

struct CellEdge {
    MeshEdge topo;
    EdgeKind kind = EdgeKind::FaceEdge;
};

/// CCW-ordered neighbors of a node. For boundary nodes the fan is open: there is
/// no triangle between neighbors.back() and neighbors.front().
struct NodeFan {
    std::vector<int> neighbors;
    bool closed = false;
};

/// Polygonal cell mesh, triangulated into subcells with the inserted edges
/// flagged as diagonals. Immutable once built.
class CellMesh {
public:
    CellMesh() = default;

    /// `faces` must already be consistently oriented. When `normals` is empty,
    /// per-node normals are computed from the fans.
    static CellMesh build(std::vector<Vec3> nodes, std::vector<std::vector<int>> faces,
                          std::vector<Vec3> normals = {}) {
        CellMesh m;
        m.nodes_ = std::move(nodes);
        m.faces_ = std::move(faces);
        const int nn = static_cast<int>(m.nodes_.size());

        std::set<std::pair<int, int>> polygon_edges;
        std::vector<Tri> tris;
        std::vector<int> parent;
        for (std::size_t f = 0; f < m.faces_.size(); ++f) {
            const auto& poly = m.faces_[f];
            if (poly.size() < 3) {
                throw StructureError("face " + std::to_string(f) + " has fewer than 3 vertices");
            }
            for (std::size_t k = 0; k < poly.size(); ++k) {
                int a = poly[k], b = poly[(k + 1) % poly.size()];
                if (a < 0 || a >= nn) {
                    throw StructureError("face " + std::to_string(f) + " references missing node " +
                                         std::to_string(a));
                }
                if (a == b) throw StructureError("face " + std::to_string(f) + " repeats a node");
                polygon_edges.insert({std::min(a, b), std::max(a, b)});
            }
            for (const Tri& t : m.triangulate(poly)) {
                tris.push_back(t);
                parent.push_back(static_cast<int>(f));
            }
        }

        auto topo = EdgeTopology::build(tris);
        m.edges_.reserve(topo.edges.size());
        for (const auto& e : topo.edges) {
            CellEdge ce;
            ce.topo = e;
            if (!polygon_edges.count({e.v0, e.v1})) {
                ce.kind = EdgeKind::Diagonal;
            } else if (e.boundary()) {
                ce.kind = EdgeKind::Boundary;
            } else {
                ce.kind = EdgeKind::FaceEdge;
            }
            if (ce.kind == EdgeKind::Diagonal &&
                (e.boundary() || parent[e.faces[0]] != parent[e.faces[1]])) {
                throw StructureError("diagonal (" + std::to_string(e.v0) + ", " + std::to_string(e.v1) +
                                     ") is not interior to a single face");
            }
            m.edges_.push_back(ce);
        }

        m.subcells_.resize(tris.size());
        for (std::size_t c = 0; c < tris.size(); ++c) {
            Subcell& s = m.subcells_[c];
            s.v = tris[c];
            s.face = parent[c];
            s.edges = topo.face_edges[c];
            const Vec3& p0 = m.nodes_[s.v[0]];
            const Vec3& p1 = m.nodes_[s.v[1]];
            const Vec3& p2 = m.nodes_[s.v[2]];
            s.area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
            if (!(s.area > kMinTriangleArea)) {
                throw StructureError("subcell " + std::to_string(c) + " of face " + std::to_string(s.face) +
                                     " is degenerate");
            }
            for (int k = 0; k < 3; ++k) {
                auto [a, b] = local_edge_vertices(s.v, k);
                s.l[k] = (m.nodes_[b] - m.nodes_[a]).norm();
                s.a[k] = 2.0 * s.area / s.l[k];
            }
        }

        m.build_fans();
        if (normals.empty()) {
            m.normals_.resize(m.nodes_.size());
            for (int i = 0; i < nn; ++i) {
                Vec3 n = m.fan_normal(i);
                double len = n.norm();
                m.normals_[i] = len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
            }
        } else {
            if (normals.size() != m.nodes_.size()) {
                throw ParameterError("normals must have one entry per node");
            }
            m.normals_ = std::move(normals);
            for (auto& n : m.normals_) {
                double len = n.norm();
                if (!(len > 0.0)) throw ParameterError("zero-length node normal");
                n /= len;
            }
        }
        return m;
    }

    const std::vector<Vec3>& nodes() const noexcept { return nodes_; }
    const std::vector<std::vector<int>>& faces() const noexcept { return faces_; }
    const std::vector<Subcell>& subcells() const noexcept { return subcells_; }
    const std::vector<CellEdge>& edges() const noexcept { return edges_; }
    const std::vector<Vec3>& normals() const noexcept { return normals_; }
    const std::vector<NodeFan>& fans() const noexcept { return fans_; }

    int num_nodes() const noexcept { return static_cast<int>(nodes_.size()); }

    /// Unnormalized node normal: sum of e_il x e_i,next(l) over the fan triangles.
    Vec3 fan_normal(int i) const {
        const NodeFan& fan = fans_[i];
        Vec3 n = Vec3::Zero();
        const std::size_t k = fan.neighbors.size();
        const std::size_t pairs = fan.closed ? k : (k == 0 ? 0 : k - 1);
        for (std::size_t s = 0; s < pairs; ++s) {
            Vec3 el = nodes_[fan.neighbors[s]] - nodes_[i];
            Vec3 em = nodes_[fan.neighbors[(s + 1) % k]] - nodes_[i];
            n += el.cross(em);
        }
        return n;
    }

    /// The underlying triangle mesh (same vertices, subcells as triangles).
    TriMesh to_tri_mesh(double h0 = 0.0) const {
        std::vector<Tri> tris;
        tris.reserve(subcells_.size());
        for (const auto& s : subcells_) tris.push_back(s.v);
        return TriMesh::build(nodes_, std::move(tris), h0);
    }

    double total_area() const {
        double s = 0.0;
        for (const auto& c : subcells_) s += c.area;
        return s;
    }

    /// Splits a polygon into triangles. Quads use the shorter diagonal (ties go to
    /// the diagonal touching the lowest node index); larger polygons are fanned
    /// from their lowest-index node.
    std::vector<Tri> triangulate(const std::vector<int>& poly) const {
        if (poly.size() == 3) return {Tri{poly[0], poly[1], poly[2]}};
        if (poly.size() == 4) {
            double d02 = (nodes_[poly[0]] - nodes_[poly[2]]).norm();
            double d13 = (nodes_[poly[1]] - nodes_[poly[3]]).norm();
            bool use02;
            if (std::abs(d02 - d13) <= 1e-12 * std::max(d02, d13)) {
                use02 = std::min(poly[0], poly[2]) < std::min(poly[1], poly[3]);
            } else {
                use02 = d02 < d13;
            }
            if (use02) return {Tri{poly[0], poly[1], poly[2]}, Tri{poly[0], poly[2], poly[3]}};
            return {Tri{poly[1], poly[2], poly[3]}, Tri{poly[1], poly[3], poly[0]}};
        }
        std::size_t s = std::min_element(poly.begin(), poly.end()) - poly.begin();
        std::vector<Tri> out;
        for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
            out.push_back(Tri{poly[s], poly[(s + k) % poly.size()], poly[(s + k + 1) % poly.size()]});
        }
        return out;
    }

private:
    void build_fans() {
        const int nn = static_cast<int>(nodes_.size());
        // next[i]: for each neighbor a of i, the neighbor b following a CCW.
        std::vector<std::vector<std::pair<int, int>>> next(nn);
        for (const auto& s : subcells_) {
            for (int k = 0; k < 3; ++k) {
                next[s.v[k]].push_back({s.v[(k + 1) % 3], s.v[(k + 2) % 3]});
            }
        }
        fans_.assign(nn, NodeFan{});
        for (int i = 0; i < nn; ++i) {
            auto& pairs = next[i];
            if (pairs.empty()) continue;
            std::sort(pairs.begin(), pairs.end());
            std::set<int> has_pred;
            for (auto [a, b] : pairs) has_pred.insert(b);
            int start = -1;
            for (auto [a, b] : pairs) {
                if (!has_pred.count(a)) {
                    if (start >= 0) {
                        throw StructureError("node " + std::to_string(i) + " is non-manifold (several fans)");
                    }
                    start = a;
                }
            }
            NodeFan fan;
            fan.closed = start < 0;
            if (start < 0) start = pairs.front().first;
            int cur = start;
            fan.neighbors.push_back(cur);
            for (std::size_t step = 0; step < pairs.size(); ++step) {
                auto it = std::lower_bound(pairs.begin(), pairs.end(), std::pair<int, int>{cur, -1});
                if (it == pairs.end() || it->first != cur) break;
                cur = it->second;
                if (cur == start) break;
                fan.neighbors.push_back(cur);
            }
            std::size_t expected = fan.closed ? pairs.size() : pairs.size() + 1;
            if (fan.neighbors.size() != expected) {
                throw StructureError("node " + std::to_string(i) + " is non-manifold (disconnected fan)");
            }
            fans_[i] = std::move(fan);
        }
    }

    std::vector<Vec3> nodes_;
    std::vector<std::vector<int>> faces_;
    std::vector<Subcell> subcells_;
    std::vector<CellEdge> edges_;
    std::vector<Vec3> normals_;
    std::vector<NodeFan> fans_;
};

}  // namespace shellopt
