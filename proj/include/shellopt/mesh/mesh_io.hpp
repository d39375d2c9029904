#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shellopt/mesh/cell_mesh.hpp"
#include "shellopt/mesh/tri_mesh.hpp"

namespace shellopt {

enum class MeshFormat { Obj, QuadJson };

inline MeshFormat parse_mesh_format(const std::string& s) {
    if (s == "obj" || s == "OBJ") return MeshFormat::Obj;
    if (s == "quad-json" || s == "json") return MeshFormat::QuadJson;
    throw ParameterError("unknown mesh format '" + s + "'");
}

struct ObjObject {
    std::string name;
    std::vector<std::vector<int>> faces;  // 0-based, global vertex indices
};

/// Contents of an ASCII OBJ file restricted to v / f / o / g records.
struct ObjData {
    std::vector<Vec3> vertices;
    std::vector<ObjObject> objects;

    std::vector<std::vector<int>> all_faces() const {
        std::vector<std::vector<int>> out;
        for (const auto& o : objects) out.insert(out.end(), o.faces.begin(), o.faces.end());
        return out;
    }
};

inline ObjData parse_obj(std::istream& in) {
    ObjData data;
    std::string line;
    int lineno = 0;
    auto current = [&]() -> ObjObject& {
        if (data.objects.empty()) data.objects.push_back({"", {}});
        return data.objects.back();
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ss >> x >> y >> z)) throw ParseError("malformed vertex record", lineno);
            data.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<int> face;
            std::string tok;
            while (ss >> tok) {
                std::size_t slash = tok.find('/');
                std::string head = tok.substr(0, slash);
                int idx = 0;
                try {
                    std::size_t used = 0;
                    idx = std::stoi(head, &used);
                    if (used != head.size()) throw std::invalid_argument(head);
                } catch (const std::exception&) {
                    throw ParseError("malformed face index '" + tok + "'", lineno);
                }
                int nv = static_cast<int>(data.vertices.size());
                int zero_based = idx > 0 ? idx - 1 : nv + idx;
                if (idx == 0 || zero_based < 0 || zero_based >= nv) {
                    throw ParseError("face index " + std::to_string(idx) + " out of range", lineno);
                }
                face.push_back(zero_based);
            }
            if (face.size() < 3) throw ParseError("face with fewer than 3 vertices", lineno);
            current().faces.push_back(std::move(face));
        } else if (tag == "o" || tag == "g") {
            std::string name;
            std::getline(ss >> std::ws, name);
            data.objects.push_back({name, {}});
        }
        // vt, vn, s, usemtl, ... are ignored
    }
    std::erase_if(data.objects, [](const ObjObject& o) { return o.faces.empty() && o.name.empty(); });
    return data;
}

inline ObjData read_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_obj(in);
}

/// Loads an OBJ as a triangle mesh. Polygons are fan-split from their first
/// corner after orientation propagation.
inline TriMesh load_tri_mesh(const std::filesystem::path& path, double h0 = 0.0) {
    ObjData data = read_obj(path);
    auto faces = data.all_faces();
    orient_faces(faces);
    std::vector<Tri> tris;
    for (const auto& poly : faces) {
        for (std::size_t k = 1; k + 1 < poly.size(); ++k) tris.push_back({poly[0], poly[k], poly[k + 1]});
    }
    return TriMesh::build(std::move(data.vertices), std::move(tris), h0);
}

namespace detail {

/// Flips every face when most faces disagree with the supplied node normals.
inline void align_with_normals(const std::vector<Vec3>& nodes, std::vector<std::vector<int>>& faces,
                               const std::vector<Vec3>& normals) {
    if (normals.empty()) return;
    int agree = 0, disagree = 0;
    for (const auto& poly : faces) {
        Vec3 n = Vec3::Zero();
        Vec3 avg = Vec3::Zero();
        for (std::size_t k = 0; k < poly.size(); ++k) {
            n += nodes[poly[k]].cross(nodes[poly[(k + 1) % poly.size()]]);
            avg += normals[poly[k]];
        }
        (n.dot(avg) >= 0.0 ? agree : disagree)++;
    }
    if (disagree > agree) {
        for (auto& poly : faces) std::reverse(poly.begin(), poly.end());
    }
}

inline Vec3 json_vec3(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ParseError(std::string("expected [x,y,z] in ") + what, 0);
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

inline CellMesh parse_quad_json(const nlohmann::json& j) {
    if (!j.contains("nodes") || !j.contains("faces")) throw ParseError("quad-JSON needs 'nodes' and 'faces'", 0);
    std::vector<Vec3> nodes;
    for (const auto& p : j.at("nodes")) nodes.push_back(detail::json_vec3(p, "nodes"));
    std::vector<std::vector<int>> faces;
    for (const auto& f : j.at("faces")) {
        std::vector<int> poly;
        for (const auto& idx : f) {
            int i = idx.get<int>();
            if (i < 0 || i >= static_cast<int>(nodes.size())) {
                throw ParseError("face index " + std::to_string(i) + " out of range", 0);
            }
            poly.push_back(i);
        }
        faces.push_back(std::move(poly));
    }
    std::vector<Vec3> normals;
    if (j.contains("normals")) {
        for (const auto& n : j.at("normals")) normals.push_back(detail::json_vec3(n, "normals"));
        if (normals.size() != nodes.size()) throw ParseError("'normals' must have one entry per node", 0);
    }
    orient_faces(faces);
    detail::align_with_normals(nodes, faces, normals);
    return CellMesh::build(std::move(nodes), std::move(faces), std::move(normals));
}

inline CellMesh load_cell_mesh(const std::filesystem::path& path, MeshFormat format) {
    if (format == MeshFormat::QuadJson) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + path.string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(e.what(), 0);
        }
        return parse_quad_json(j);
    }
    ObjData data = read_obj(path);
    auto faces = data.all_faces();
    orient_faces(faces);
    return CellMesh::build(std::move(data.vertices), std::move(faces));
}

namespace detail {

inline std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_vertex(std::ostream& out, const Vec3& p) {
    out << "v " << fmt_double(p.x()) << ' ' << fmt_double(p.y()) << ' ' << fmt_double(p.z()) << '\n';
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline void write_obj(std::ostream& out, const std::vector<Vec3>& vertices,
                      const std::vector<std::vector<int>>& faces) {
    out << "# shellopt mesh: " << vertices.size() << " vertices, " << faces.size() << " faces\n";
    for (const auto& p : vertices) detail::write_vertex(out, p);
    for (const auto& f : faces) {
        out << 'f';
        for (int i : f) out << ' ' << i + 1;
        out << '\n';
    }
}

inline void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
    std::vector<std::vector<int>> faces;
    faces.reserve(mesh.triangles().size());
    for (const Tri& t : mesh.triangles()) faces.push_back({t[0], t[1], t[2]});
    auto out = detail::open_for_write(path);
    write_obj(out, mesh.vertices(), faces);
    detail::finish(out, path);
}

inline void save_obj(const CellMesh& mesh, const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    write_obj(out, mesh.nodes(), mesh.faces());
    detail::finish(out, path);
}

inline nlohmann::json to_quad_json(const CellMesh& mesh) {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& p : mesh.nodes()) j["nodes"].push_back({p.x(), p.y(), p.z()});
    j["faces"] = mesh.faces();
    j["normals"] = nlohmann::json::array();
    for (const auto& n : mesh.normals()) j["normals"].push_back({n.x(), n.y(), n.z()});
    return j;
}

inline void save_quad_json(const CellMesh& mesh, const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    out << to_quad_json(mesh).dump(1) << '\n';
    detail::finish(out, path);
}

}  // namespace shellopt
