#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "shellopt/error.hpp"

namespace shellopt {

using Vec3 = Eigen::Vector3d;
using Tri = std::array<int, 3>;

/// Undirected edge of a triangulated surface with its (at most two) incident faces.
/// Local edge index k of a face is the edge opposite corner k.
struct MeshEdge {
    int v0 = -1;  // v0 < v1
    int v1 = -1;
    std::array<int, 2> faces{-1, -1};
    std::array<int, 2> local{-1, -1};

    bool boundary() const noexcept { return faces[1] < 0; }
};

inline std::pair<int, int> local_edge_vertices(const Tri& t, int k) {
    return {t[(k + 1) % 3], t[(k + 2) % 3]};
}

/// Edge list and face-to-edge map. Throws StructureError for non-manifold edges
/// and for interior edges whose two faces disagree on orientation.
struct EdgeTopology {
    std::vector<MeshEdge> edges;
    std::vector<std::array<int, 3>> face_edges;

    static EdgeTopology build(std::span<const Tri> faces) {
        EdgeTopology topo;
        topo.face_edges.resize(faces.size());
        std::map<std::pair<int, int>, int> index;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            for (int k = 0; k < 3; ++k) {
                auto [a, b] = local_edge_vertices(faces[f], k);
                std::pair<int, int> key{std::min(a, b), std::max(a, b)};
                auto it = index.find(key);
                if (it == index.end()) {
                    MeshEdge e;
                    e.v0 = key.first;
                    e.v1 = key.second;
                    e.faces[0] = static_cast<int>(f);
                    e.local[0] = k;
                    index.emplace(key, static_cast<int>(topo.edges.size()));
                    topo.face_edges[f][k] = static_cast<int>(topo.edges.size());
                    topo.edges.push_back(e);
                    continue;
                }
                MeshEdge& e = topo.edges[it->second];
                if (e.faces[1] >= 0) {
                    throw StructureError("non-manifold edge (" + std::to_string(key.first) + ", " +
                                         std::to_string(key.second) + ") has more than two faces");
                }
                auto [pa, pb] = local_edge_vertices(faces[e.faces[0]], e.local[0]);
                if (pa == a && pb == b) {
                    throw StructureError("inconsistent face orientation across edge (" +
                                         std::to_string(key.first) + ", " + std::to_string(key.second) + ")");
                }
                e.faces[1] = static_cast<int>(f);
                e.local[1] = k;
                topo.face_edges[f][k] = it->second;
            }
        }
        return topo;
    }
};

/// Reorients polygonal faces in place so that every shared edge is traversed in
/// opposite directions by its two faces, propagating from the lowest-index face of
/// each connected component. Throws StructureError on non-manifold or
/// non-orientable input.
inline void orient_faces(std::vector<std::vector<int>>& faces) {
    std::map<std::pair<int, int>, std::vector<int>> edge_faces;
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& poly = faces[f];
        for (std::size_t k = 0; k < poly.size(); ++k) {
            int a = poly[k], b = poly[(k + 1) % poly.size()];
            auto& list = edge_faces[{std::min(a, b), std::max(a, b)}];
            list.push_back(static_cast<int>(f));
            if (list.size() > 2) {
                throw StructureError("non-manifold edge (" + std::to_string(std::min(a, b)) + ", " +
                                     std::to_string(std::max(a, b)) + ") has " +
                                     std::to_string(list.size()) + "+ faces");
            }
        }
    }
    auto has_directed = [&](int f, int a, int b) {
        const auto& poly = faces[f];
        for (std::size_t k = 0; k < poly.size(); ++k) {
            if (poly[k] == a && poly[(k + 1) % poly.size()] == b) return true;
        }
        return false;
    };
    std::vector<int> state(faces.size(), 0);  // 0 unvisited, 1 visited
    for (std::size_t seed = 0; seed < faces.size(); ++seed) {
        if (state[seed]) continue;
        state[seed] = 1;
        std::queue<int> q;
        q.push(static_cast<int>(seed));
        while (!q.empty()) {
            int f = q.front();
            q.pop();
            const auto poly = faces[f];
            for (std::size_t k = 0; k < poly.size(); ++k) {
                int a = poly[k], b = poly[(k + 1) % poly.size()];
                for (int g : edge_faces[{std::min(a, b), std::max(a, b)}]) {
                    if (g == f) continue;
                    bool same_dir = has_directed(g, a, b);
                    if (state[g]) {
                        if (same_dir) throw StructureError("surface is not orientable");
                        continue;
                    }
                    if (same_dir) std::reverse(faces[g].begin(), faces[g].end());
                    state[g] = 1;
                    q.push(g);
                }
            }
        }
    }
}

}  // namespace shellopt
