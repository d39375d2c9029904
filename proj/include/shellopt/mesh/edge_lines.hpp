#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "shellopt/mesh/cell_mesh.hpp"

namespace shellopt {

/// Lookup of CellMesh edges by endpoints, plus straight-line continuation of
/// polygon edges through regular nodes.
class EdgeLines {
public:
    explicit EdgeLines(const CellMesh& cm) : cm_(&cm) {
        for (std::size_t e = 0; e < cm.edges().size(); ++e) {
            const auto& t = cm.edges()[e].topo;
            index_[key(t.v0, t.v1)] = static_cast<int>(e);
        }
        polygon_neighbors_.resize(cm.num_nodes());
        for (int v = 0; v < cm.num_nodes(); ++v) {
            for (int w : cm.fans()[v].neighbors) {
                if (cm.edges()[edge(v, w)].kind != EdgeKind::Diagonal) polygon_neighbors_[v].push_back(w);
            }
        }
    }

    /// Edge id joining a and b, or -1.
    int edge(int a, int b) const {
        auto it = index_.find(key(a, b));
        return it == index_.end() ? -1 : it->second;
    }

    /// CCW neighbors of v along non-diagonal edges.
    const std::vector<int>& polygon_neighbors(int v) const { return polygon_neighbors_[v]; }

    /// The node continuing the line from -> v past v, or -1 where the line ends.
    /// Interior nodes continue when they have four polygon edges (to the opposite
    /// one); boundary nodes with three polygon edges continue along the boundary.
    int continuation(int v, int from) const {
        const auto& nb = polygon_neighbors_[v];
        const bool closed = cm_->fans()[v].closed;
        int pos = -1;
        for (std::size_t k = 0; k < nb.size(); ++k) {
            if (nb[k] == from) pos = static_cast<int>(k);
        }
        if (pos < 0) return -1;
        if (closed && nb.size() == 4) return nb[(pos + 2) % 4];
        if (!closed && nb.size() == 3) {
            if (pos == 0) return nb[2];
            if (pos == 2) return nb[0];
        }
        return -1;
    }

private:
    static std::uint64_t key(int a, int b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    }

    const CellMesh* cm_;
    std::unordered_map<std::uint64_t, int> index_;
    std::vector<std::vector<int>> polygon_neighbors_;
};

}  // namespace shellopt
