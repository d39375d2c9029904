#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shellopt/field/cross_field.hpp"
#include "shellopt/field/dual_program.hpp"
#include "shellopt/socp/solver.hpp"

namespace shellopt {

struct StrainPair {
    Sym2 tensile;
    Sym2 bending;

    /// Strain at distance z from the midsurface.
    Sym2 at(double z) const { return tensile + bending * z; }
};

struct FieldConfig {
    double thickness = 0.5;    // shell thickness of the program, usually h_max / 2
    double fiber_ratio = 0.5;  // surfaces at +-fiber_ratio * thickness
    ZoneTolerances zones;
    socp::SocpSettings solver;

    void validate() const {
        if (!(thickness >= 0.0)) throw ParameterError("field thickness must be non-negative");
        if (!(fiber_ratio >= 0.0)) throw ParameterError("fiber ratio must be non-negative");
        if (!(zones.crit >= 0.0 && zones.crit < 1.0)) throw ParameterError("tol_crit must lie in [0, 1)");
        if (!(zones.aniso >= 0.0)) throw ParameterError("tol_aniso must be non-negative");
    }
};

struct FieldResult {
    Eigen::VectorXd u;                // 3 per vertex
    std::vector<StrainPair> strains;  // per triangle
    CrossField field;                 // beta set on salient triangles only
    std::vector<Zone> zone_top, zone_bottom;
    double fiber_offset = 0.0;
    double objective = 0.0;
    double dual_objective = 0.0;
    double relative_gap = 0.0;
    int iterations = 0;
};

/// Zones and salient directions from per-triangle strains at z = +-offset.
inline void classify_zones(const std::vector<StrainPair>& strains, double offset, double eps0,
                           const ZoneTolerances& tol, FieldResult& out) {
    const std::size_t nf = strains.size();
    out.zone_top.resize(nf);
    out.zone_bottom.resize(nf);
    CrossField& cf = out.field;
    cf.beta.assign(nf, 0.0);
    cf.salient.assign(nf, false);
    cf.zone.assign(nf, Zone::Slack);
    for (std::size_t f = 0; f < nf; ++f) {
        const Sym2 surf[2] = {strains[f].at(offset), strains[f].at(-offset)};
        const Zone z[2] = {classify_strain(surf[0], eps0, tol), classify_strain(surf[1], eps0, tol)};
        out.zone_top[f] = z[0];
        out.zone_bottom[f] = z[1];
        cf.zone[f] = combine_zones(z[0], z[1]);
        cf.salient[f] = is_salient(cf.zone[f]);
        if (!cf.salient[f]) continue;
        std::vector<double> dirs;
        for (int s = 0; s < 2; ++s) {
            if (is_salient(z[s])) dirs.push_back(cross_angle(surf[s]));
        }
        cf.beta[f] = average_cross_angle(dirs);
    }
}

/// Solves the field program, then classifies zones. The returned cross field
/// is not completed. The program is homogeneous in eps0 and in the load scale,
/// so it is solved with unit eps0 and unit load norm and rescaled.
inline FieldResult solve_field(const TriMesh& mesh, const LoadCase& loads, const FieldConfig& cfg) {
    cfg.validate();
    loads.validate(mesh.num_vertices());
    if (!(loads.eps0 > 0.0)) throw ParameterError("eps0 must be positive");
    double load_norm = 0.0;
    for (const Vec3& f : loads.forces) load_norm += f.squaredNorm();
    load_norm = std::sqrt(load_norm);

    LoadCase unit = loads;
    unit.eps0 = 1.0;
    if (load_norm > 0.0) {
        for (Vec3& f : unit.forces) f /= load_norm;
    }
    DualProgram dp = assemble_dual_program(mesh, unit, cfg.thickness, cfg.fiber_ratio);
    FieldResult res;
    res.fiber_offset = dp.fiber_offset;
    res.u = Eigen::VectorXd::Zero(3 * mesh.num_vertices());
    if (load_norm > 0.0) {
        socp::ConeSolution sol = socp::solve_socp(dp.program, cfg.solver);
        if (sol.status != socp::SolveStatus::Optimal) {
            throw SolverError(std::string("field program ended ") + socp::to_string(sol.status) + " after " +
                              std::to_string(sol.iterations) + " iterations, duality gap " +
                              std::to_string(sol.gap) + " (relative " + std::to_string(sol.relative_gap) + ")");
        }
        res.u = loads.eps0 * dp.displacements(sol.x);
        res.objective = loads.eps0 * load_norm * sol.primal_objective;
        res.dual_objective = loads.eps0 * load_norm * sol.dual_objective;
        res.relative_gap = sol.relative_gap;
        res.iterations = sol.iterations;
    }
    const auto et = apply_strain(dp.tensile, res.u);
    const auto eb = apply_strain(dp.bending, res.u);
    res.strains.resize(et.size());
    for (std::size_t f = 0; f < et.size(); ++f) res.strains[f] = {et[f], eb[f]};
    classify_zones(res.strains, res.fiber_offset, loads.eps0, cfg.zones, res);
    return res;
}

inline nlohmann::json field_json(const FieldResult& res) {
    nlohmann::json tris = nlohmann::json::array();
    for (std::size_t f = 0; f < res.strains.size(); ++f) {
        const Sym2 top = res.strains[f].at(res.fiber_offset);
        const Sym2 bot = res.strains[f].at(-res.fiber_offset);
        tris.push_back({{"beta", res.field.beta[f]},
                        {"zone", static_cast<int>(res.field.zone[f])},
                        {"salient", static_cast<bool>(res.field.salient[f])},
                        {"lambda_top", {top.lambda_max(), top.lambda_min()}},
                        {"lambda_bot", {bot.lambda_max(), bot.lambda_min()}}});
    }
    nlohmann::json sing = nlohmann::json::array();
    for (const auto& s : res.field.singular_vertices) sing.push_back({{"vertex", s.vertex}, {"index", s.index}});
    return {{"objective", res.objective},
            {"relative_gap", res.relative_gap},
            {"iterations", res.iterations},
            {"triangles", tris},
            {"singular_vertices", sing}};
}

inline void save_field_json(const FieldResult& res, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << field_json(res).dump(1) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace shellopt
