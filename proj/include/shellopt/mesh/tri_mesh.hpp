#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "shellopt/mesh/topology.hpp"

namespace shellopt {

inline constexpr double kMinTriangleArea = 1e-12;  // mm^2

/// Picks the world axis with the longest projection onto the plane with normal
/// `n` (ties go to the lower axis) and returns that projection, normalized.
inline Vec3 planar_reference_direction(const Vec3& n) {
    Vec3 best = Vec3::Zero();
    double best_len = -1.0;
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 e = Vec3::Unit(axis);
        Vec3 p = e - e.dot(n) * n;
        double len = p.norm();
        if (len > best_len + 1e-9) {
            best_len = len;
            best = p;
        }
    }
    return best / best_len;
}

/// Input surface: vertices, CCW triangles and per-triangle tangent frames.
/// Immutable once built.
class TriMesh {
public:
    TriMesh() = default;

    static TriMesh build(std::vector<Vec3> vertices, std::vector<Tri> triangles, double h0 = 0.0) {
        std::vector<double> thickness(triangles.size(), h0);
        return build(std::move(vertices), std::move(triangles), std::move(thickness));
    }

    static TriMesh build(std::vector<Vec3> vertices, std::vector<Tri> triangles, std::vector<double> h0) {
        TriMesh m;
        m.vertices_ = std::move(vertices);
        m.triangles_ = std::move(triangles);
        m.h0_ = std::move(h0);
        if (m.h0_.size() != m.triangles_.size()) {
            throw ParameterError("h0 must have one entry per triangle");
        }
        const int nv = static_cast<int>(m.vertices_.size());
        m.areas_.reserve(m.triangles_.size());
        for (std::size_t f = 0; f < m.triangles_.size(); ++f) {
            const Tri& t = m.triangles_[f];
            for (int k = 0; k < 3; ++k) {
                if (t[k] < 0 || t[k] >= nv) {
                    throw StructureError("triangle " + std::to_string(f) + " references missing vertex " +
                                         std::to_string(t[k]));
                }
            }
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
                throw StructureError("triangle " + std::to_string(f) + " repeats a vertex");
            }
            Vec3 cr = (m.vertices_[t[1]] - m.vertices_[t[0]]).cross(m.vertices_[t[2]] - m.vertices_[t[0]]);
            double area = 0.5 * cr.norm();
            if (!(area > kMinTriangleArea)) {
                throw StructureError("triangle " + std::to_string(f) + " is degenerate (area " +
                                     std::to_string(area) + ")");
            }
            Vec3 n = cr.normalized();
            m.areas_.push_back(area);
            m.normals_.push_back(n);
            m.ref_dirs_.push_back(planar_reference_direction(n));
        }
        auto topo = EdgeTopology::build(m.triangles_);
        m.edges_ = std::move(topo.edges);
        m.face_edges_ = std::move(topo.face_edges);
        return m;
    }

    const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
    const std::vector<Tri>& triangles() const noexcept { return triangles_; }
    const std::vector<Vec3>& ref_dirs() const noexcept { return ref_dirs_; }
    const std::vector<Vec3>& normals() const noexcept { return normals_; }
    const std::vector<double>& areas() const noexcept { return areas_; }
    const std::vector<double>& h0() const noexcept { return h0_; }
    const std::vector<MeshEdge>& edges() const noexcept { return edges_; }
    const std::vector<std::array<int, 3>>& face_edges() const noexcept { return face_edges_; }

    int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    int num_triangles() const noexcept { return static_cast<int>(triangles_.size()); }

    /// Edge vector opposite corner k, oriented CCW (from corner k+1 to corner k+2).
    Vec3 edge_vector(int f, int k) const {
        auto [a, b] = local_edge_vertices(triangles_[f], k);
        return vertices_[b] - vertices_[a];
    }

    /// Second tangent axis of the triangle frame: normal x reference direction.
    Vec3 cotangent(int f) const { return normals_[f].cross(ref_dirs_[f]); }

    double total_area() const {
        double s = 0.0;
        for (double a : areas_) s += a;
        return s;
    }

    /// Divergence-theorem volume; positive for closed outward-oriented surfaces.
    double signed_volume() const {
        double v = 0.0;
        for (const Tri& t : triangles_) {
            v += vertices_[t[0]].dot(vertices_[t[1]].cross(vertices_[t[2]])) / 6.0;
        }
        return v;
    }

    /// Interior angle of triangle f at corner k.
    double corner_angle(int f, int k) const {
        const Tri& t = triangles_[f];
        Vec3 a = vertices_[t[(k + 1) % 3]] - vertices_[t[k]];
        Vec3 b = vertices_[t[(k + 2) % 3]] - vertices_[t[k]];
        return std::atan2(a.cross(b).norm(), a.dot(b));
    }

    std::vector<bool> boundary_vertices() const {
        std::vector<bool> flag(vertices_.size(), false);
        for (const auto& e : edges_) {
            if (e.boundary()) flag[e.v0] = flag[e.v1] = true;
        }
        return flag;
    }

private:
    std::vector<Vec3> vertices_;
    std::vector<Tri> triangles_;
    std::vector<Vec3> ref_dirs_;
    std::vector<Vec3> normals_;
    std::vector<double> areas_;
    std::vector<double> h0_;
    std::vector<MeshEdge> edges_;
    std::vector<std::array<int, 3>> face_edges_;
};

}  // namespace shellopt
