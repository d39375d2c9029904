#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "shellopt/mesh/topology.hpp"

namespace shellopt {

/// External per-vertex forces (N) and fixed vertices. Forces on supports are
/// ignored by every solver.
struct LoadCase {
    std::vector<Vec3> forces;
    std::vector<int> supports;
    double sigma0 = 1.0;
    double eps0 = 1.0;

    static LoadCase zero(int num_vertices) {
        LoadCase lc;
        lc.forces.assign(num_vertices, Vec3::Zero());
        return lc;
    }

    void add_support(int v) {
        auto it = std::lower_bound(supports.begin(), supports.end(), v);
        if (it == supports.end() || *it != v) supports.insert(it, v);
    }

    bool is_support(int v) const { return std::binary_search(supports.begin(), supports.end(), v); }

    /// Throws ParameterError unless the case fits a mesh with `num_vertices`.
    void validate(int num_vertices) const {
        if (static_cast<int>(forces.size()) != num_vertices) {
            throw ParameterError("load case has " + std::to_string(forces.size()) + " forces for " +
                                 std::to_string(num_vertices) + " vertices");
        }
        if (supports.empty()) throw ParameterError("load case needs at least one support");
        if (!std::is_sorted(supports.begin(), supports.end())) throw ParameterError("supports must be sorted");
        for (int s : supports) {
            if (s < 0 || s >= num_vertices) throw ParameterError("support index out of range");
        }
        if (!(sigma0 > 0.0) || !(eps0 > 0.0)) throw ParameterError("sigma0 and eps0 must be positive");
    }
};

/// Maps the 3 displacement components of every non-support vertex to a compact
/// index; supports map to -1.
struct DofMap {
    std::vector<int> index;  // size 3 * num_vertices
    int num_free = 0;

    static DofMap build(int num_vertices, const std::vector<int>& supports) {
        DofMap m;
        m.index.assign(3 * static_cast<std::size_t>(num_vertices), -1);
        std::vector<bool> fixed(num_vertices, false);
        for (int s : supports) fixed[s] = true;
        for (int v = 0; v < num_vertices; ++v) {
            if (fixed[v]) continue;
            for (int c = 0; c < 3; ++c) m.index[3 * v + c] = m.num_free++;
        }
        return m;
    }

    int operator()(int vertex, int component) const { return index[3 * vertex + component]; }
};

}  // namespace shellopt
