#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "shellopt/mesh/cell_mesh.hpp"
#include "shellopt/mesh/tri_mesh.hpp"

namespace shellopt {

enum class SurfaceKind { Plate, Cylinder, CantileverStrip };

inline SurfaceKind parse_surface_kind(const std::string& s) {
    if (s == "plate") return SurfaceKind::Plate;
    if (s == "cylinder") return SurfaceKind::Cylinder;
    if (s == "cantilever-strip") return SurfaceKind::CantileverStrip;
    throw ParameterError("unknown surface kind '" + s + "'");
}

struct SurfaceMeshes {
    TriMesh tri;
    CellMesh cells;
};

/// Structured quad surfaces standing in for a field-aligned quadrangulation.
///
/// - plate / cantilever-strip: dims = (length x, length y), in the z = 0 plane,
///   resolution = cells along x and y.
/// - cylinder: dims = (radius, height), axis along z, resolution = (cells around,
///   cells along the axis); closed in the angular direction, normals point outward.
inline SurfaceMeshes generate_test_surface(SurfaceKind kind, std::array<double, 2> dims,
                                           std::array<int, 2> resolution, double h0 = 0.0) {
    if (!(dims[0] > 0.0) || !(dims[1] > 0.0)) throw ParameterError("surface dimensions must be positive");
    if (resolution[0] < 2 || resolution[1] < 2) throw ParameterError("resolution must be at least 2 per direction");

    std::vector<Vec3> nodes;
    std::vector<std::vector<int>> quads;
    const int nu = resolution[0];
    const int nv = resolution[1];
    if (kind == SurfaceKind::Cylinder) {
        if (nu < 3) throw ParameterError("cylinder needs at least 3 cells around");
        const double r = dims[0];
        const double height = dims[1];
        for (int j = 0; j <= nv; ++j) {
            for (int k = 0; k < nu; ++k) {
                double t = 2.0 * std::numbers::pi * k / nu;
                nodes.emplace_back(r * std::cos(t), r * std::sin(t), height * j / nv);
            }
        }
        for (int j = 0; j < nv; ++j) {
            for (int k = 0; k < nu; ++k) {
                int k1 = (k + 1) % nu;
                quads.push_back({j * nu + k, j * nu + k1, (j + 1) * nu + k1, (j + 1) * nu + k});
            }
        }
    } else {
        for (int j = 0; j <= nv; ++j) {
            for (int i = 0; i <= nu; ++i) {
                nodes.emplace_back(dims[0] * i / nu, dims[1] * j / nv, 0.0);
            }
        }
        const int row = nu + 1;
        for (int j = 0; j < nv; ++j) {
            for (int i = 0; i < nu; ++i) {
                quads.push_back({j * row + i, j * row + i + 1, (j + 1) * row + i + 1, (j + 1) * row + i});
            }
        }
    }
    CellMesh cells = CellMesh::build(std::move(nodes), std::move(quads));
    TriMesh tri = cells.to_tri_mesh(h0);
    return {std::move(tri), std::move(cells)};
}

/// Subdivided icosahedron projected onto a sphere; closed, outward oriented.
inline TriMesh make_icosphere(double radius, int subdivisions) {
    if (!(radius > 0.0) || subdivisions < 0) throw ParameterError("invalid icosphere parameters");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p.normalize();
    std::vector<Tri> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                          {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                          {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            std::pair<int, int> key{std::min(a, b), std::max(a, b)};
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            int id = static_cast<int>(v.size()) - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<Tri> next;
        next.reserve(f.size() * 4);
        for (const Tri& tr : f) {
            int ab = midpoint(tr[0], tr[1]), bc = midpoint(tr[1], tr[2]), ca = midpoint(tr[2], tr[0]);
            next.push_back({tr[0], ab, ca});
            next.push_back({tr[1], bc, ab});
            next.push_back({tr[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        f = std::move(next);
    }
    for (auto& p : v) p *= radius;
    return TriMesh::build(std::move(v), std::move(f));
}

}  // namespace shellopt
