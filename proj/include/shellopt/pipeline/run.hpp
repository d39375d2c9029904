#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "shellopt/inflate/solid.hpp"
#include "shellopt/pipeline/config.hpp"

namespace shellopt {

enum class Stage { Config = 2, Setup = 3, Field = 4, Optimize = 5, Inflate = 6, Report = 7 };

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::Config: return "config";
        case Stage::Setup: return "setup";
        case Stage::Field: return "field";
        case Stage::Optimize: return "optimize";
        case Stage::Inflate: return "inflate";
        case Stage::Report: return "report";
    }
    return "?";
}

/// Failure of one pipeline stage; the process exit code is the stage value.
class StageError : public Error {
public:
    StageError(Stage stage, const std::string& what)
        : Error(std::string("stage ") + to_string(stage) + ": " + what), stage_(stage) {}
    Stage stage() const noexcept { return stage_; }
    int exit_code() const noexcept { return static_cast<int>(stage_); }

private:
    Stage stage_;
};

template <class F>
auto run_stage(Stage stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

struct ShellComparison {
    double area = 0.0;
    double shell_volume = 0.0;    // V^s
    double support_volume = 0.0;  // V^b
    double equivalent_thickness = 0.0;
    double compliance = 0.0;
    double equivalent_compliance = 0.0;
    double ratio = 1.0;  // c_eq / c
};

inline double surface_area(const CellMesh& cm) {
    double a = 0.0;
    for (const auto& sc : cm.subcells()) a += sc.area;
    return a;
}

/// Compliance of the optimized blocks against a constant shell of the same
/// total volume: every block at width a/3 (filled cells) and thickness
/// h_eq = (V^s + V^b) / area.
inline ShellComparison compare_constant_shell(const BeamNetwork& net, const LoadCase& loads, double shell_thickness,
                                              double width_floor = kDefaultWidthFloor) {
    ShellComparison r;
    r.area = surface_area(net.cells());
    r.shell_volume = shell_thickness * r.area;
    r.support_volume = network_volume(net);
    r.equivalent_thickness = (r.shell_volume + r.support_volume) / r.area;
    if (!(r.equivalent_thickness > 0.0)) return r;
    const Eigen::VectorXd u = global_solve(net, loads, width_floor);
    r.compliance = compliance(loads, u);
    BeamNetwork uniform = net;
    for (auto& b : uniform.blocks()) {
        b.w = b.a / 3.0;
        b.h = r.equivalent_thickness;
    }
    const Eigen::VectorXd ue = global_solve(uniform, loads, width_floor);
    r.equivalent_compliance = compliance(loads, ue);
    if (r.compliance > 0.0) r.ratio = r.equivalent_compliance / r.compliance;
    return r;
}

/// Sets block widths and thicknesses from a cell-solution JSON of the same mesh.
inline void apply_cell_solution(BeamNetwork& net, const nlohmann::json& j) {
    const auto& cells = j.at("cells");
    const int n = static_cast<int>(net.cells().subcells().size());
    if (static_cast<int>(cells.size()) != n) {
        throw ParameterError("cell solution has " + std::to_string(cells.size()) + " subcells, mesh has " +
                             std::to_string(n));
    }
    for (int c = 0; c < n; ++c) {
        const auto& blocks = cells[c].at("blocks");
        for (int k = 0; k < 3; ++k) {
            Block& b = net.block(c, k);
            b.w = blocks.at(k).at("w").get<double>();
            b.h = blocks.at(k).at("h").get<double>();
        }
    }
}

struct PipelineState {
    PipelineConfig config;
    unsigned seed = 0;
    std::shared_ptr<const CellMesh> cells;
    TriMesh tri;
    LoadCase loads;
    std::optional<FieldResult> field;
    std::optional<CrossField> completed;
    std::optional<BeamNetwork> network;
    std::optional<OptimizeResult> optimized;
    std::vector<EdgeStream> streams;
    std::vector<SolidMesh> solids;
    nlohmann::json timings = nlohmann::json::object();
};

namespace detail {

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

template <class F>
void timed(nlohmann::json& timings, const char* name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

inline PipelineState setup_pipeline(const PipelineConfig& cfg, unsigned seed) {
    return run_stage(Stage::Setup, [&] {
        PipelineState st;
        st.config = cfg;
        st.seed = seed;
        st.cells = std::make_shared<const CellMesh>(build_cell_mesh(cfg.mesh, seed));
        st.tri = st.cells->to_tri_mesh();
        st.loads = build_load_case(*st.cells, cfg);
        std::filesystem::create_directories(cfg.output);
        return st;
    });
}

/// Field program on the triangulated surface; writes field.json.
inline void run_field_stage(PipelineState& st) {
    run_stage(Stage::Field, [&] {
        detail::timed(st.timings, "field", [&] {
            st.field = solve_field(st.tri, st.loads, st.config.field);
            st.completed = complete_field(st.field->field, st.tri);
            FieldResult dump = *st.field;
            dump.field = *st.completed;
            save_field_json(dump, st.config.output / "field.json");
        });
    });
}

/// Cell optimization; writes cells.json and trace.csv.
inline void run_optimize_stage(PipelineState& st) {
    run_stage(Stage::Optimize, [&] {
        detail::timed(st.timings, "optimize", [&] {
            st.network = BeamNetwork::build(st.cells, st.config.youngs_modulus);
            st.optimized = optimize(*st.network, st.loads, st.config.optimize);
            if (st.optimized->status == OptimizeStatus::Diverged) {
                save_trace_csv(st.optimized->trace, st.config.output / "trace.csv");
                throw SolverError("cell optimization diverged after " + std::to_string(st.optimized->iterations) +
                                  " iterations");
            }
            detail::write_json(cell_solution_json(*st.network, *st.optimized), st.config.output / "cells.json");
            save_trace_csv(st.optimized->trace, st.config.output / "trace.csv");
        });
    });
}

/// Loads cells.json from the output directory when the optimize stage did not run.
inline void load_optimized_network(PipelineState& st) {
    run_stage(Stage::Inflate, [&] {
        const auto path = st.config.output / "cells.json";
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + path.string() + " (run the optimize stage first)");
        st.network = BeamNetwork::build(st.cells, st.config.youngs_modulus);
        st.network->set_reference_thickness(st.config.optimize.h_max);
        apply_cell_solution(*st.network, nlohmann::json::parse(in));
    });
}

/// Streams and solids; writes structure.obj and streams.json.
inline void run_inflate_stage(PipelineState& st) {
    run_stage(Stage::Inflate, [&] {
        if (!st.network) throw StructureError("no optimized network");
        detail::timed(st.timings, "inflate", [&] {
            st.streams = build_streams(*st.network, {.void_width = st.config.optimize.void_width});
            st.solids.clear();
            for (const auto& s : st.streams) st.solids.push_back(extrude_stream(s));
            save_structure_obj(st.solids, st.config.output / "structure.obj");
            detail::write_json(streams_json(st.streams), st.config.output / "streams.json");
        });
    });
}

/// Run report; deterministic for a fixed config and seed (timings go to a
/// separate file).
inline nlohmann::json pipeline_report(const PipelineState& st) {
    return run_stage(Stage::Report, [&] {
        nlohmann::json r;
        r["seed"] = st.seed;
        r["mesh"] = {{"nodes", st.cells->num_nodes()},
                     {"faces", st.cells->faces().size()},
                     {"subcells", st.cells->subcells().size()},
                     {"triangles", st.tri.num_triangles()}};
        if (st.field) {
            int salient = 0;
            for (bool s : st.field->field.salient) salient += s;
            r["field"] = {{"objective", st.field->objective},
                          {"relative_gap", st.field->relative_gap},
                          {"salient_triangles", salient},
                          {"singular_vertices", st.completed ? st.completed->singular_vertices.size() : 0}};
        }
        if (st.network) {
            const auto cmp = compare_constant_shell(*st.network, st.loads, st.config.shell_thickness,
                                                    st.config.optimize.width_floor);
            r["volumes"] = {{"shell", cmp.shell_volume},
                            {"support", cmp.support_volume},
                            {"total", cmp.shell_volume + cmp.support_volume},
                            {"area", cmp.area},
                            {"equivalent_thickness", cmp.equivalent_thickness}};
            r["compliance"] = {{"optimized", cmp.compliance},
                               {"constant_shell", cmp.equivalent_compliance},
                               {"ratio", cmp.ratio}};
        }
        if (st.optimized) {
            const auto& o = *st.optimized;
            r["optimize"] = {{"status", to_string(o.status)},
                             {"iterations", o.iterations},
                             {"max_stress", o.max_stress},
                             {"filled_fraction", filled_fraction(*st.network)},
                             {"repair_rounds", o.post.repair.rounds}};
        }
        if (!st.solids.empty() || !st.streams.empty()) {
            double v = 0.0;
            for (const auto& s : st.solids) v += s.volume();
            r["inflate"] = {{"streams", st.streams.size()}, {"solid_volume", v}};
        }
        return r;
    });
}

enum class PipelineMode { Field, Optimize, Inflate, All };

/// Runs the stages of `mode` and writes their outputs plus report.json and
/// timings.json. Throws StageError naming the failing stage; outputs of
/// finished stages stay on disk.
inline nlohmann::json run_pipeline(const PipelineConfig& cfg, unsigned seed, PipelineMode mode = PipelineMode::All) {
    PipelineState st = setup_pipeline(cfg, seed);
    if ((mode == PipelineMode::Field || mode == PipelineMode::All) && cfg.run_field) run_field_stage(st);
    if (mode == PipelineMode::Optimize || mode == PipelineMode::All) run_optimize_stage(st);
    if (mode == PipelineMode::Inflate) load_optimized_network(st);
    if (mode == PipelineMode::Inflate || mode == PipelineMode::All) run_inflate_stage(st);
    nlohmann::json report = pipeline_report(st);
    run_stage(Stage::Report, [&] {
        detail::write_json(report, cfg.output / "report.json");
        detail::write_json(st.timings, cfg.output / "timings.json");
    });
    return report;
}

}  // namespace shellopt
