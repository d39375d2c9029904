#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "shellopt/inflate/streams.hpp"
#include "shellopt/mesh/mesh_io.hpp"

namespace shellopt {

/// Closed triangle mesh of one extruded block.
struct SolidMesh {
    std::vector<Vec3> vertices;
    std::vector<Tri> triangles;

    /// Signed volume by the divergence theorem; positive for outward orientation.
    double volume() const {
        double v = 0.0;
        for (const Tri& t : triangles) v += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]]));
        return v / 6.0;
    }

    int euler_characteristic() const {
        std::set<std::pair<int, int>> edges;
        for (const Tri& t : triangles) {
            for (int k = 0; k < 3; ++k) edges.insert(std::minmax(t[k], t[(k + 1) % 3]));
        }
        return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) + static_cast<int>(triangles.size());
    }

    /// Every directed edge appears once and its reverse once.
    bool is_closed_manifold() const {
        std::map<std::pair<int, int>, int> directed;
        for (const Tri& t : triangles) {
            for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
        }
        for (const auto& [e, n] : directed) {
            if (n != 1) return false;
            auto it = directed.find({e.second, e.first});
            if (it == directed.end() || it->second != 1) return false;
        }
        return true;
    }
};

/// Merges vertices closer than `tol` and drops triangles that collapse.
inline SolidMesh weld(const SolidMesh& in, double tol = 1e-6) {
    SolidMesh out;
    std::vector<int> remap(in.vertices.size());
    for (std::size_t i = 0; i < in.vertices.size(); ++i) {
        int found = -1;
        for (std::size_t j = 0; j < out.vertices.size(); ++j) {
            if ((out.vertices[j] - in.vertices[i]).norm() <= tol) {
                found = static_cast<int>(j);
                break;
            }
        }
        if (found < 0) {
            found = static_cast<int>(out.vertices.size());
            out.vertices.push_back(in.vertices[i]);
        }
        remap[i] = found;
    }
    for (const Tri& t : in.triangles) {
        Tri r{remap[t[0]], remap[t[1]], remap[t[2]]};
        if (r[0] != r[1] && r[1] != r[2] && r[0] != r[2]) out.triangles.push_back(r);
    }
    return out;
}

/// Solid swept along the stream: at each node a rectangle spanning
/// [-width_right, width_left] along the side vector and [-h/2, h/2] along the
/// normal, joined by planar side faces; open streams get flat end caps.
inline SolidMesh extrude_stream(const EdgeStream& st) {
    const int m = static_cast<int>(st.nodes.size());
    if (m < 2) throw ParameterError("stream needs at least two nodes");
    SolidMesh s;
    s.vertices.reserve(4 * m);
    for (int k = 0; k < m; ++k) {
        const Vec3 n = st.normal[k].normalized();
        Vec3 d = st.direction[k] - st.direction[k].dot(n) * n;
        const double len = st.direction[k].norm();
        if (!(len > 0.0) || !(d.norm() > 1e-9 * len)) {
            throw StructureError("stream frame is degenerate at node " + std::to_string(st.nodes[k]));
        }
        d.normalize();
        const Vec3 side = n.cross(d);
        const double hh = 0.5 * st.thickness[k];
        const double wl = st.width_left[k], wr = st.width_right[k];
        s.vertices.push_back(st.points[k] - wr * side - hh * n);
        s.vertices.push_back(st.points[k] + wl * side - hh * n);
        s.vertices.push_back(st.points[k] + wl * side + hh * n);
        s.vertices.push_back(st.points[k] - wr * side + hh * n);
    }
    const int sections = st.closed ? m : m - 1;
    for (int k = 0; k < sections; ++k) {
        const int a = 4 * k, b = 4 * ((k + 1) % m);
        for (int i = 0; i < 4; ++i) {
            const int j = (i + 1) % 4;
            s.triangles.push_back({a + i, a + j, b + j});
            s.triangles.push_back({a + i, b + j, b + i});
        }
    }
    if (!st.closed) {
        s.triangles.push_back({0, 3, 2});
        s.triangles.push_back({0, 2, 1});
        const int e = 4 * (m - 1);
        s.triangles.push_back({e, e + 1, e + 2});
        s.triangles.push_back({e, e + 2, e + 3});
    }
    return weld(s);
}

inline void write_structure_obj(std::ostream& out, const std::vector<SolidMesh>& blocks) {
    std::size_t nv = 0, nt = 0;
    for (const auto& b : blocks) nv += b.vertices.size(), nt += b.triangles.size();
    out << "# shellopt structure: " << blocks.size() << " blocks, " << nv << " vertices, " << nt << " faces\n";
    int base = 1;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        out << "o block_" << k << '\n';
        for (const Vec3& p : blocks[k].vertices) detail::write_vertex(out, p);
        for (const Tri& t : blocks[k].triangles) {
            out << "f " << t[0] + base << ' ' << t[1] + base << ' ' << t[2] + base << '\n';
        }
        base += static_cast<int>(blocks[k].vertices.size());
    }
}

inline void save_structure_obj(const std::vector<SolidMesh>& blocks, const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    write_structure_obj(out, blocks);
    detail::finish(out, path);
}

/// Reads blocks back from a multi-object OBJ; each object keeps only the
/// vertices its faces use.
inline std::vector<SolidMesh> read_structure_obj(std::istream& in) {
    const ObjData data = parse_obj(in);
    std::vector<SolidMesh> blocks;
    for (const auto& obj : data.objects) {
        SolidMesh b;
        std::map<int, int> local;
        for (const auto& f : obj.faces) {
            if (f.size() != 3) throw ParseError("structure faces must be triangles", 0);
            Tri t;
            for (int k = 0; k < 3; ++k) {
                auto [it, added] = local.try_emplace(f[k], static_cast<int>(b.vertices.size()));
                if (added) b.vertices.push_back(data.vertices[f[k]]);
                t[k] = it->second;
            }
            b.triangles.push_back(t);
        }
        blocks.push_back(std::move(b));
    }
    return blocks;
}

inline std::vector<SolidMesh> load_structure_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_structure_obj(in);
}

}  // namespace shellopt
