#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "shellopt/beam/mechanics.hpp"
#include "shellopt/mesh/edge_lines.hpp"

namespace shellopt {

/// Chain of cell-mesh edges inflated as one solid. For an open stream with m
/// nodes there are m - 1 edges; a closed stream has m edges, the last joining
/// nodes.back() to nodes.front(). Left is the side of normal x direction.
struct EdgeStream {
    std::vector<int> nodes;
    std::vector<int> edges;
    bool closed = false;
    bool diagonal = false;
    std::vector<Vec3> points;
    std::vector<Vec3> normal;
    std::vector<Vec3> direction;
    std::vector<double> thickness;
    std::vector<double> width_left;
    std::vector<double> width_right;

    int num_edges() const { return static_cast<int>(edges.size()); }
};

struct StreamOptions {
    double void_width = kDefaultVoidWidth;  // relative to the block height a
    bool include_diagonals = true;            // diagonals become single-edge streams
};

namespace detail {

/// Width and thickness of the two sides of directed edge p -> q.
struct EdgeSides {
    double w_left = 0.0, w_right = 0.0;
    double h_sum = 0.0;
    int h_count = 0;
};

inline EdgeSides edge_sides(const BeamNetwork& net, const std::vector<std::vector<int>>& edge_blocks, int edge, int p,
                            double void_width) {
    EdgeSides s;
    for (int k : edge_blocks[edge]) {
        const Block& b = net.blocks()[k];
        const Tri& v = net.cells().subcells()[b.cell].v;
        const bool left = v[(b.local + 1) % 3] == p;
        (left ? s.w_left : s.w_right) += b.w;
        if (holds_material(b, void_width)) {
            s.h_sum += b.h;
            ++s.h_count;
        }
    }
    return s;
}

inline void fill_stream_frames(const BeamNetwork& net, const std::vector<std::vector<int>>& edge_blocks,
                               EdgeStream& st, double void_width) {
    const CellMesh& cm = net.cells();
    const int m = static_cast<int>(st.nodes.size());
    const int ne = st.num_edges();
    std::vector<EdgeSides> sides(ne);
    for (int k = 0; k < ne; ++k) sides[k] = edge_sides(net, edge_blocks, st.edges[k], st.nodes[k], void_width);

    st.points.resize(m);
    st.normal.resize(m);
    st.direction.resize(m);
    st.thickness.assign(m, 0.0);
    st.width_left.assign(m, 0.0);
    st.width_right.assign(m, 0.0);
    for (int k = 0; k < m; ++k) {
        const int v = st.nodes[k];
        st.points[k] = cm.nodes()[v];
        st.normal[k] = net.node_normals()[v];
        // incident stream edges: k - 1 (ending here) and k (starting here)
        std::vector<int> inc;
        if (k > 0 || st.closed) inc.push_back((k - 1 + ne) % ne);
        if (k < ne) inc.push_back(k);
        double h = 0.0, wl = 0.0, wr = 0.0;
        int hn = 0;
        for (int e : inc) {
            h += sides[e].h_sum;
            hn += sides[e].h_count;
            wl += sides[e].w_left;
            wr += sides[e].w_right;
        }
        st.thickness[k] = hn > 0 ? h / hn : 0.0;
        st.width_left[k] = wl / inc.size();
        st.width_right[k] = wr / inc.size();

        const Vec3 prev = k > 0 ? cm.nodes()[st.nodes[k - 1]] : (st.closed ? cm.nodes()[st.nodes[m - 1]] : st.points[k]);
        const Vec3 next = k + 1 < m ? cm.nodes()[st.nodes[k + 1]] : (st.closed ? cm.nodes()[st.nodes[0]] : st.points[k]);
        st.direction[k] = next - prev;
    }
}

}  // namespace detail

/// Groups edges holding material into streams. Straight continuation through
/// regular nodes follows EdgeLines; streams stop at irregular nodes, at edges
/// without material and at the mesh boundary. Frames are finalized by
/// extrude_stream, which rejects degenerate ones.
inline std::vector<EdgeStream> build_streams(const BeamNetwork& net, const StreamOptions& opt = {}) {
    const CellMesh& cm = net.cells();
    const int ne = static_cast<int>(cm.edges().size());
    std::vector<std::vector<int>> edge_blocks(ne);
    std::vector<bool> material(ne, false);
    for (std::size_t k = 0; k < net.blocks().size(); ++k) {
        const Block& b = net.blocks()[k];
        edge_blocks[b.edge].push_back(static_cast<int>(k));
        if (holds_material(b, opt.void_width)) material[b.edge] = true;
    }
    EdgeLines lines(cm);
    std::vector<bool> used(ne, false);
    std::vector<EdgeStream> streams;
    for (int e = 0; e < ne; ++e) {
        if (!material[e] || used[e]) continue;
        const auto& topo = cm.edges()[e].topo;
        EdgeStream st;
        used[e] = true;
        if (cm.edges()[e].kind == EdgeKind::Diagonal) {
            if (!opt.include_diagonals) continue;
            st.diagonal = true;
            st.nodes = {topo.v0, topo.v1};
            st.edges = {e};
        } else {
            // walk forward from v1, then backward from v0
            std::vector<int> fwd_nodes{topo.v0, topo.v1}, fwd_edges{e};
            for (;;) {
                const int n = fwd_nodes.size();
                const int next = lines.continuation(fwd_nodes[n - 1], fwd_nodes[n - 2]);
                if (next < 0) break;
                const int ne2 = lines.edge(fwd_nodes[n - 1], next);
                if (ne2 < 0 || !material[ne2] || used[ne2]) break;
                used[ne2] = true;
                if (next == fwd_nodes[0]) {
                    fwd_edges.push_back(ne2);
                    st.closed = true;
                    break;
                }
                fwd_nodes.push_back(next);
                fwd_edges.push_back(ne2);
            }
            std::vector<int> back_nodes, back_edges;
            if (!st.closed) {
                int cur = topo.v0, from = topo.v1;
                for (;;) {
                    const int next = lines.continuation(cur, from);
                    if (next < 0) break;
                    const int ne2 = lines.edge(cur, next);
                    if (ne2 < 0 || !material[ne2] || used[ne2]) break;
                    used[ne2] = true;
                    back_nodes.push_back(next);
                    back_edges.push_back(ne2);
                    from = cur;
                    cur = next;
                }
            }
            st.nodes.assign(back_nodes.rbegin(), back_nodes.rend());
            st.nodes.insert(st.nodes.end(), fwd_nodes.begin(), fwd_nodes.end());
            st.edges.assign(back_edges.rbegin(), back_edges.rend());
            st.edges.insert(st.edges.end(), fwd_edges.begin(), fwd_edges.end());
        }
        detail::fill_stream_frames(net, edge_blocks, st, opt.void_width);
        streams.push_back(std::move(st));
    }
    return streams;
}

inline nlohmann::json streams_json(const std::vector<EdgeStream>& streams) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t s = 0; s < streams.size(); ++s) {
        const auto& st = streams[s];
        out.push_back({{"id", s},
                       {"nodes", st.nodes},
                       {"edges", st.edges},
                       {"closed", st.closed},
                       {"diagonal", st.diagonal},
                       {"thickness", st.thickness},
                       {"width_left", st.width_left},
                       {"width_right", st.width_right}});
    }
    return out;
}

}  // namespace shellopt
