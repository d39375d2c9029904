#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "shellopt/cellopt/optimize.hpp"
#include "shellopt/field/solve_field.hpp"
#include "shellopt/mesh/generators.hpp"
#include "shellopt/mesh/mesh_io.hpp"

namespace shellopt {

/// Node selector: "all", "boundary", an axis-aligned box (null bounds are
/// open) or an explicit node list.
struct Selector {
    enum class Kind { All, Boundary, Box, Nodes } kind = Kind::All;
    Vec3 lo = Vec3::Constant(-std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::infinity());
    std::vector<int> nodes;

    std::vector<int> select(const CellMesh& cm) const {
        std::vector<int> out;
        std::vector<bool> boundary;
        if (kind == Kind::Boundary) {
            boundary.assign(cm.num_nodes(), false);
            for (int v = 0; v < cm.num_nodes(); ++v) boundary[v] = !cm.fans()[v].closed;
        }
        if (kind == Kind::Nodes) {
            for (int v : nodes) {
                if (v < 0 || v >= cm.num_nodes()) throw ParameterError("selected node " + std::to_string(v) + " does not exist");
            }
            return nodes;
        }
        for (int v = 0; v < cm.num_nodes(); ++v) {
            const Vec3& p = cm.nodes()[v];
            bool take = true;
            if (kind == Kind::Boundary) take = boundary[v];
            if (kind == Kind::Box) take = (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
            if (take) out.push_back(v);
        }
        return out;
    }
};

struct ForceSpec {
    Selector where;
    Vec3 force = Vec3::Zero();
    bool total = false;  // split the force evenly over the selected nodes
};

/// Uniform pressure on every subcell whose corners are all selected, lumped
/// to the corners. Positive values push against the surface normal.
struct PressureSpec {
    Selector where;
    double value = 0.0;
};

/// Moment about an axis, applied as tangential nodal forces proportional to
/// the distance from the axis.
struct TorqueSpec {
    Selector where;
    Vec3 origin = Vec3::Zero();
    Vec3 axis = Vec3::UnitZ();
    double moment = 0.0;
};

struct MeshSource {
    // generated
    SurfaceKind kind = SurfaceKind::Plate;
    std::array<double, 2> dims{100.0, 100.0};
    std::array<int, 2> resolution{8, 8};
    double jitter = 0.0;  // in-plane random offset of interior nodes, fraction of the cell size
    // or loaded
    std::filesystem::path file;
    MeshFormat format = MeshFormat::Obj;
};

struct PipelineConfig {
    MeshSource mesh;
    std::vector<Selector> supports;
    std::vector<ForceSpec> forces;
    std::vector<PressureSpec> pressures;
    std::vector<TorqueSpec> torques;
    double youngs_modulus = 1.0;
    double sigma0 = 1.0;
    std::optional<double> eps0;       // default sigma0 / E
    double shell_thickness = 0.0;     // fixed shell h^s
    std::optional<double> field_thickness;  // default h_max / 2
    bool run_field = true;
    FieldConfig field;
    OptimizeConfig optimize;
    std::filesystem::path output = "out";

    double strain_limit() const { return eps0.value_or(sigma0 / youngs_modulus); }

    void validate() const {
        optimize.validate();
        if (!(youngs_modulus > 0.0)) throw ParameterError("youngs_modulus must be positive");
        if (!(strain_limit() > 0.0)) throw ParameterError("eps0 must be positive");
        if (!(shell_thickness >= 0.0)) throw ParameterError("shell thickness must be non-negative");
        if (field_thickness && !(*field_thickness >= 0.0)) throw ParameterError("field thickness must be non-negative");
        if (supports.empty()) throw ParameterError("config needs at least one support selector");
        if (!(mesh.jitter >= 0.0 && mesh.jitter < 0.5)) throw ParameterError("mesh jitter must lie in [0, 0.5)");
        field.validate();
    }
};

namespace detail {

inline Vec3 json_bound(const nlohmann::json& j, double fallback) {
    if (!j.is_array() || j.size() != 3) throw ParameterError("box bounds need three entries");
    Vec3 v;
    for (int k = 0; k < 3; ++k) v[k] = j[k].is_null() ? fallback : j[k].get<double>();
    return v;
}

inline Vec3 json_vector(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ParameterError(std::string(what) + " needs three numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

inline Selector parse_selector(const nlohmann::json& j) {
    Selector s;
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "all") s.kind = Selector::Kind::All;
        else if (name == "boundary") s.kind = Selector::Kind::Boundary;
        else throw ParameterError("unknown selector '" + name + "'");
        return s;
    }
    if (j.contains("box")) {
        s.kind = Selector::Kind::Box;
        const auto& b = j.at("box");
        constexpr double inf = std::numeric_limits<double>::infinity();
        if (b.contains("min")) s.lo = detail::json_bound(b.at("min"), -inf);
        if (b.contains("max")) s.hi = detail::json_bound(b.at("max"), inf);
        return s;
    }
    if (j.contains("nodes")) {
        s.kind = Selector::Kind::Nodes;
        s.nodes = j.at("nodes").get<std::vector<int>>();
        return s;
    }
    throw ParameterError("selector must be \"all\", \"boundary\", {\"box\": ...} or {\"nodes\": [...]}");
}

/// Paths in the config are relative to `base`.
inline PipelineConfig parse_pipeline_config(const nlohmann::json& j, const std::filesystem::path& base = {}) {
    PipelineConfig c;
    try {
        const auto& m = j.at("mesh");
        if (m.contains("file")) {
            c.mesh.file = base / m.at("file").get<std::string>();
            c.mesh.format = parse_mesh_format(m.value("format", std::string("obj")));
        } else {
            c.mesh.kind = parse_surface_kind(m.value("kind", std::string("plate")));
            if (m.contains("dims")) c.mesh.dims = m.at("dims").get<std::array<double, 2>>();
            if (m.contains("resolution")) c.mesh.resolution = m.at("resolution").get<std::array<int, 2>>();
            c.mesh.jitter = m.value("jitter", 0.0);
        }
        const auto& loads = j.at("loads");
        for (const auto& s : loads.at("supports")) c.supports.push_back(parse_selector(s));
        for (const auto& f : loads.value("forces", nlohmann::json::array())) {
            ForceSpec fs;
            fs.where = parse_selector(f.at("select"));
            fs.force = detail::json_vector(f.at("force"), "force");
            const auto mode = f.value("distribute", std::string("each"));
            if (mode != "each" && mode != "total") throw ParameterError("distribute must be \"each\" or \"total\"");
            fs.total = mode == "total";
            c.forces.push_back(fs);
        }
        for (const auto& p : loads.value("pressures", nlohmann::json::array())) {
            c.pressures.push_back({parse_selector(p.at("select")), p.at("value").get<double>()});
        }
        for (const auto& t : loads.value("torques", nlohmann::json::array())) {
            TorqueSpec ts;
            ts.where = parse_selector(t.at("select"));
            if (t.contains("origin")) ts.origin = detail::json_vector(t.at("origin"), "origin");
            if (t.contains("axis")) ts.axis = detail::json_vector(t.at("axis"), "axis");
            if (!(ts.axis.norm() > 0.0)) throw ParameterError("torque axis must be nonzero");
            ts.axis.normalize();
            ts.moment = t.at("moment").get<double>();
            c.torques.push_back(ts);
        }
        if (j.contains("material")) {
            const auto& mat = j.at("material");
            c.youngs_modulus = mat.value("youngs_modulus", c.youngs_modulus);
            c.sigma0 = mat.value("sigma0", c.sigma0);
            if (mat.contains("eps0")) c.eps0 = mat.at("eps0").get<double>();
        }
        if (j.contains("shell")) {
            const auto& sh = j.at("shell");
            c.shell_thickness = sh.value("thickness", 0.0);
        }
        if (j.contains("optimize")) {
            const auto& o = j.at("optimize");
            auto& oc = c.optimize;
            oc.h_max = o.value("h_max", oc.h_max);
            oc.h_min = o.value("h_min", oc.h_min);
            oc.max_iter = o.value("iterations", oc.max_iter);
            oc.relax = o.value("relax", oc.relax);
            oc.tol = o.value("tol", oc.tol);
            oc.fiber = o.value("fiber", oc.fiber);
            oc.diagonal_slack = o.value("diagonal_slack", oc.diagonal_slack);
            oc.postprocess = o.value("postprocess", oc.postprocess);
            oc.void_width = o.value("void_width", oc.void_width);
        }
        if (j.contains("field")) {
            const auto& f = j.at("field");
            c.run_field = f.value("enabled", true);
            if (f.contains("thickness")) c.field_thickness = f.at("thickness").get<double>();
            c.field.fiber_ratio = f.value("fiber_ratio", c.field.fiber_ratio);
            c.field.zones.crit = f.value("tol_crit", c.field.zones.crit);
            c.field.zones.aniso = f.value("tol_aniso", c.field.zones.aniso);
            c.field.solver.tol = f.value("solver_tol", c.field.solver.tol);
            c.field.solver.max_iter = f.value("solver_max_iter", c.field.solver.max_iter);
        }
        c.output = j.value("output", std::string("out"));
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
    c.optimize.sigma0 = c.sigma0;
    c.field.thickness = c.field_thickness.value_or(0.5 * c.optimize.h_max);
    c.validate();
    return c;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
    }
    return parse_pipeline_config(j, path.parent_path());
}

/// Cell mesh of the config; `seed` drives the optional jitter.
inline CellMesh build_cell_mesh(const MeshSource& src, unsigned seed) {
    if (!src.file.empty()) return load_cell_mesh(src.file, src.format);
    CellMesh cm = generate_test_surface(src.kind, src.dims, src.resolution).cells;
    if (src.jitter == 0.0) return cm;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ud(-src.jitter, src.jitter);
    std::vector<Vec3> nodes = cm.nodes();
    for (int v = 0; v < cm.num_nodes(); ++v) {
        // keep boundary nodes so selectors and supports stay put
        const double du = ud(rng), dv = ud(rng);
        if (!cm.fans()[v].closed) continue;
        const Vec3& n = cm.normals()[v];
        Vec3 t1 = n.unitOrthogonal();
        Vec3 t2 = n.cross(t1);
        double h = std::numeric_limits<double>::infinity();
        for (int w : cm.fans()[v].neighbors) h = std::min(h, (cm.nodes()[w] - cm.nodes()[v]).norm());
        nodes[v] += h * (du * t1 + dv * t2);
    }
    return CellMesh::build(std::move(nodes), cm.faces());
}

/// Load case on the mesh nodes.
inline LoadCase build_load_case(const CellMesh& cm, const PipelineConfig& cfg) {
    LoadCase lc = LoadCase::zero(cm.num_nodes());
    lc.sigma0 = cfg.sigma0;
    lc.eps0 = cfg.strain_limit();
    for (const auto& s : cfg.supports) {
        for (int v : s.select(cm)) lc.add_support(v);
    }
    for (const auto& f : cfg.forces) {
        const auto nodes = f.where.select(cm);
        if (nodes.empty()) continue;
        const Vec3 each = f.total ? Vec3(f.force / static_cast<double>(nodes.size())) : f.force;
        for (int v : nodes) lc.forces[v] += each;
    }
    for (const auto& p : cfg.pressures) {
        std::vector<bool> in(cm.num_nodes(), false);
        for (int v : p.where.select(cm)) in[v] = true;
        for (const auto& sc : cm.subcells()) {
            if (!in[sc.v[0]] || !in[sc.v[1]] || !in[sc.v[2]]) continue;
            const Vec3& a = cm.nodes()[sc.v[0]];
            const Vec3 area_normal = 0.5 * (cm.nodes()[sc.v[1]] - a).cross(cm.nodes()[sc.v[2]] - a);
            for (int v : sc.v) lc.forces[v] -= p.value * area_normal / 3.0;
        }
    }
    for (const auto& t : cfg.torques) {
        const auto nodes = t.where.select(cm);
        std::vector<Vec3> arm;
        double r2 = 0.0;
        for (int v : nodes) {
            Vec3 r = cm.nodes()[v] - t.origin;
            r -= r.dot(t.axis) * t.axis;
            r2 += r.squaredNorm();
            arm.push_back(r);
        }
        if (!(r2 > 0.0)) throw ParameterError("torque nodes all lie on the axis");
        for (std::size_t k = 0; k < nodes.size(); ++k) lc.forces[nodes[k]] += t.moment / r2 * t.axis.cross(arm[k]);
    }
    lc.validate(cm.num_nodes());
    return lc;
}

}  // namespace shellopt
