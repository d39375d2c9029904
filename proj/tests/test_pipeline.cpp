#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "shellopt/shellopt.hpp"

using namespace shellopt;
namespace fs = std::filesystem;

namespace {

nlohmann::json base_config() {
    return nlohmann::json::parse(R"({
        "mesh": {"kind": "plate", "dims": [40, 40], "resolution": [4, 4]},
        "loads": {"supports": ["boundary"]},
        "material": {"youngs_modulus": 1.0, "sigma0": 1.0, "eps0": 0.001},
        "optimize": {"h_max": 2.0, "iterations": 100, "relax": 0.5, "tol": 0.001}
    })");
}

fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("shellopt_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, SelectorsPickExpectedNodes) {
    auto cfg = parse_pipeline_config(base_config());
    const CellMesh cm = build_cell_mesh(cfg.mesh, 0);
    EXPECT_EQ(static_cast<int>(Selector{}.select(cm).size()), cm.num_nodes());
    EXPECT_EQ(parse_selector("boundary").select(cm).size(), 16u);
    auto box = parse_selector(nlohmann::json::parse(R"({"box": {"max": [0, null, null]}})"));
    EXPECT_EQ(box.select(cm).size(), 5u);
    auto list = parse_selector(nlohmann::json::parse(R"({"nodes": [3, 1]})"));
    EXPECT_EQ(list.select(cm), (std::vector<int>{3, 1}));
    auto bad = parse_selector(nlohmann::json::parse(R"({"nodes": [1000]})"));
    EXPECT_THROW(bad.select(cm), ParameterError);
    EXPECT_THROW(parse_selector("nowhere"), ParameterError);
}

TEST(Config, TotalForceIsSplitOverSelection) {
    auto j = base_config();
    j["loads"]["forces"] = nlohmann::json::parse(
        R"([{"select": {"box": {"min": [40, null, null]}}, "force": [10, 0, 0], "distribute": "total"}])");
    auto cfg = parse_pipeline_config(j);
    const CellMesh cm = build_cell_mesh(cfg.mesh, 0);
    const LoadCase lc = build_load_case(cm, cfg);
    Vec3 sum = Vec3::Zero();
    for (const auto& f : lc.forces) sum += f;
    EXPECT_NEAR((sum - Vec3(10, 0, 0)).norm(), 0.0, 1e-12);
    EXPECT_EQ(lc.supports.size(), 16u);
}

TEST(Config, TorqueHasZeroNetForceAndRequestedMoment) {
    auto j = nlohmann::json::parse(R"({
        "mesh": {"kind": "cylinder", "dims": [20, 60], "resolution": [16, 6]},
        "loads": {"supports": [{"box": {"max": [null, null, 10]}}],
                  "torques": [{"select": {"box": {"min": [null, null, 60]}}, "origin": [0, 0, 0],
                               "axis": [0, 0, 2], "moment": 3.5}]}
    })");
    auto cfg = parse_pipeline_config(j);
    const CellMesh cm = build_cell_mesh(cfg.mesh, 0);
    const LoadCase lc = build_load_case(cm, cfg);
    Vec3 net = Vec3::Zero(), moment = Vec3::Zero();
    for (int v = 0; v < cm.num_nodes(); ++v) {
        net += lc.forces[v];
        moment += cm.nodes()[v].cross(lc.forces[v]);
    }
    EXPECT_LT(net.norm(), 1e-12);
    EXPECT_NEAR(moment.z(), 3.5, 1e-12);
    EXPECT_LT(moment.head<2>().norm(), 1e-12);
}

TEST(Config, TorqueOnAxisIsRejected) {
    auto j = base_config();
    j["loads"]["torques"] = nlohmann::json::parse(
        R"([{"select": {"nodes": [0]}, "origin": [0, 0, 0], "axis": [0, 0, 1], "moment": 1}])");
    auto cfg = parse_pipeline_config(j);
    const CellMesh cm = build_cell_mesh(cfg.mesh, 0);
    EXPECT_THROW(build_load_case(cm, cfg), ParameterError);
    j["loads"]["torques"][0]["axis"] = {0, 0, 0};
    EXPECT_THROW(parse_pipeline_config(j), ParameterError);
}

TEST(Config, PressureLumpsAreaTimesValue) {
    auto j = base_config();
    j["loads"]["pressures"] = nlohmann::json::parse(R"([{"select": "all", "value": 0.25}])");
    auto cfg = parse_pipeline_config(j);
    const CellMesh cm = build_cell_mesh(cfg.mesh, 0);
    const LoadCase lc = build_load_case(cm, cfg);
    Vec3 sum = Vec3::Zero();
    for (const auto& f : lc.forces) sum += f;
    // the plate normal is +z, so positive pressure pushes down
    EXPECT_NEAR(sum.z(), -0.25 * 1600.0, 1e-9);
    EXPECT_NEAR(sum.head<2>().norm(), 0.0, 1e-12);
}

TEST(Config, InvalidValuesAreRejected) {
    auto j = base_config();
    j["loads"]["supports"] = nlohmann::json::array();
    EXPECT_THROW(parse_pipeline_config(j), ParameterError);

    j = base_config();
    j["optimize"]["relax"] = 0.0;
    EXPECT_THROW(parse_pipeline_config(j), ParameterError);

    j = base_config();
    j["optimize"]["h_min"] = 3.0;
    EXPECT_THROW(parse_pipeline_config(j), ParameterError);

    j = base_config();
    j["material"]["youngs_modulus"] = -1.0;
    EXPECT_THROW(parse_pipeline_config(j), ParameterError);

    j = base_config();
    j["loads"]["forces"] = nlohmann::json::parse(R"([{"select": "all", "force": [1, 0]}])");
    EXPECT_THROW(parse_pipeline_config(j), ParameterError);

    j = base_config();
    j.erase("mesh");
    EXPECT_THROW(parse_pipeline_config(j), ParameterError);
}

TEST(Config, MissingOrBrokenFileReported) {
    EXPECT_THROW(load_pipeline_config("/nonexistent/config.json"), IoError);
    const fs::path dir = scratch_dir("broken");
    fs::create_directories(dir);
    std::ofstream(dir / "c.json") << "{ not json";
    EXPECT_THROW(load_pipeline_config(dir / "c.json"), ParseError);
}

TEST(Config, SampleConfigsParse) {
    for (const auto& e : fs::directory_iterator(fs::path(SHELLOPT_SOURCE_DIR) / "configs")) {
        if (e.path().extension() != ".json") continue;
        SCOPED_TRACE(e.path().string());
        EXPECT_NO_THROW(load_pipeline_config(e.path()));
    }
}

TEST(Stages, ErrorCarriesStageExitCode) {
    try {
        run_stage(Stage::Optimize, []() -> int { throw SolverError("boom"); });
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.exit_code(), 5);
        EXPECT_NE(std::string(e.what()).find("optimize"), std::string::npos);
    }
    // an inner stage error keeps its own code
    try {
        run_stage(Stage::Report, [] { run_stage(Stage::Field, []() -> int { throw IoError("x"); }); });
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), Stage::Field);
    }
}

TEST(Stages, InflateWithoutCellsFailsInInflateStage) {
    auto cfg = parse_pipeline_config(base_config());
    cfg.output = scratch_dir("no_cells");
    try {
        run_pipeline(cfg, 0, PipelineMode::Inflate);
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), Stage::Inflate);
    }
}

TEST(Pipeline, ZeroLoadGivesEmptyStructureAndUnitRatio) {
    auto cfg = parse_pipeline_config(base_config());
    cfg.output = scratch_dir("zero");
    const auto report = run_pipeline(cfg, 0);
    EXPECT_EQ(report["optimize"]["status"], "converged");
    EXPECT_NEAR(report["volumes"]["support"].get<double>(), 0.0, 1e-9);
    EXPECT_EQ(report["compliance"]["ratio"].get<double>(), 1.0);
    EXPECT_TRUE(fs::exists(cfg.output / "report.json"));
    EXPECT_TRUE(fs::exists(cfg.output / "timings.json"));
}

TEST(Pipeline, UniformNetworkMatchesConstantShell) {
    auto j = base_config();
    j["loads"]["forces"] = nlohmann::json::parse(R"([{"select": "all", "force": [0, 0, -0.01]}])");
    auto cfg = parse_pipeline_config(j);
    const auto cells = std::make_shared<const CellMesh>(build_cell_mesh(cfg.mesh, 0));
    const LoadCase lc = build_load_case(*cells, cfg);
    auto net = BeamNetwork::build(cells, 1.0);
    for (auto& b : net.blocks()) {
        b.w = b.a / 3.0;
        b.h = 0.7;
    }
    const auto cmp = compare_constant_shell(net, lc, 0.0);
    EXPECT_NEAR(cmp.equivalent_thickness, 0.7, 1e-12);
    EXPECT_NEAR(cmp.ratio, 1.0, 1e-9);
}

TEST(Pipeline, CellSolutionRoundTrips) {
    auto j = base_config();
    j["loads"]["forces"] = nlohmann::json::parse(R"([{"select": "all", "force": [0, 0, -0.01]}])");
    auto cfg = parse_pipeline_config(j);
    cfg.run_field = false;
    cfg.output = scratch_dir("roundtrip");
    run_pipeline(cfg, 0, PipelineMode::Optimize);
    PipelineState st = setup_pipeline(cfg, 0);
    load_optimized_network(st);
    const auto solved = nlohmann::json::parse(slurp(cfg.output / "cells.json"));
    const auto& cells = solved.at("cells");
    for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
        for (int k = 0; k < 3; ++k) {
            EXPECT_EQ(st.network->block(c, k).w, cells[c]["blocks"][k]["w"].get<double>());
            EXPECT_EQ(st.network->block(c, k).h, cells[c]["blocks"][k]["h"].get<double>());
        }
    }
    auto wrong = solved;
    wrong["cells"].erase(0);
    EXPECT_THROW(apply_cell_solution(*st.network, wrong), ParameterError);
}

TEST(Pipeline, RepeatedRunsAreBitIdentical) {
    auto cfg = load_pipeline_config(fs::path(SHELLOPT_SOURCE_DIR) / "configs" / "cantilever.json");
    cfg.output = scratch_dir("det_a");
    run_pipeline(cfg, 7);
    const fs::path first = cfg.output;
    cfg.output = scratch_dir("det_b");
    run_pipeline(cfg, 7);
    for (const char* name : {"report.json", "structure.obj", "cells.json", "streams.json", "field.json"}) {
        SCOPED_TRACE(name);
        const std::string a = slurp(first / name);
        EXPECT_FALSE(a.empty());
        EXPECT_EQ(a, slurp(cfg.output / name));
    }
}
