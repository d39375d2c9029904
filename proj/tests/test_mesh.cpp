#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "shellopt/mesh/generators.hpp"
#include "shellopt/mesh/load_case.hpp"
#include "shellopt/mesh/mesh_io.hpp"

using namespace shellopt;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "shellopt_mesh_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST(Generators, PlateCounts) {
    auto s = generate_test_surface(SurfaceKind::Plate, {100, 100}, {4, 4});
    EXPECT_EQ(s.cells.faces().size(), 16u);
    EXPECT_EQ(s.cells.subcells().size(), 32u);
    EXPECT_EQ(s.cells.nodes().size(), 25u);
    EXPECT_EQ(s.tri.num_triangles(), 32);
    int diagonals = 0;
    for (const auto& e : s.cells.edges()) diagonals += e.kind == EdgeKind::Diagonal;
    EXPECT_EQ(diagonals, 16);
    for (const auto& p : s.cells.nodes()) EXPECT_EQ(p.z(), 0.0);
}

TEST(Generators, CylinderIsClosedAroundTheAxis) {
    auto s = generate_test_surface(SurfaceKind::Cylinder, {10, 40}, {8, 8});
    EXPECT_EQ(s.cells.faces().size(), 64u);
    EXPECT_EQ(s.cells.nodes().size(), 72u);
    int boundary = 0;
    for (const auto& e : s.cells.edges()) {
        if (e.kind == EdgeKind::Boundary) {
            ++boundary;
            // only the two end rings are open
            double z0 = s.cells.nodes()[e.topo.v0].z(), z1 = s.cells.nodes()[e.topo.v1].z();
            EXPECT_EQ(z0, z1);
            EXPECT_TRUE(z0 == 0.0 || z0 == 40.0);
        }
    }
    EXPECT_EQ(boundary, 16);
    // outward normals
    for (int i = 0; i < s.cells.num_nodes(); ++i) {
        Vec3 radial = s.cells.nodes()[i];
        radial.z() = 0;
        EXPECT_GT(s.cells.normals()[i].dot(radial), 0.0);
    }
}

TEST(Generators, PlateAreaConservation) {
    auto s = generate_test_surface(SurfaceKind::Plate, {100, 100}, {2, 2});
    EXPECT_NEAR(s.cells.total_area(), 10000.0, 1e-9);
    EXPECT_NEAR(s.tri.total_area(), 10000.0, 1e-9);
}

TEST(Generators, RejectsBadInput) {
    EXPECT_THROW(generate_test_surface(SurfaceKind::Plate, {0, 1}, {2, 2}), ParameterError);
    EXPECT_THROW(generate_test_surface(SurfaceKind::Plate, {1, 1}, {1, 2}), ParameterError);
    EXPECT_THROW(generate_test_surface(SurfaceKind::Cylinder, {1, 1}, {2, 2}), ParameterError);
    EXPECT_THROW(parse_surface_kind("torus"), ParameterError);
}

TEST(Generators, Deterministic) {
    auto a = generate_test_surface(SurfaceKind::Cylinder, {3, 7}, {9, 5});
    auto b = generate_test_surface(SurfaceKind::Cylinder, {3, 7}, {9, 5});
    ASSERT_EQ(a.cells.nodes().size(), b.cells.nodes().size());
    for (std::size_t i = 0; i < a.cells.nodes().size(); ++i) {
        for (int c = 0; c < 3; ++c) EXPECT_EQ(a.cells.nodes()[i][c], b.cells.nodes()[i][c]);
    }
    EXPECT_EQ(a.tri.triangles(), b.tri.triangles());
}

TEST(Generators, ClosedSurfacesHavePositiveVolume) {
    for (int sub = 0; sub < 3; ++sub) {
        TriMesh s = make_icosphere(2.0, sub);
        EXPECT_GT(s.signed_volume(), 0.0);
        for (const auto& e : s.edges()) EXPECT_FALSE(e.boundary());
    }
    EXPECT_NEAR(make_icosphere(1.0, 4).signed_volume(), 4.0 / 3.0 * std::numbers::pi, 0.02);
}

TEST(CellMeshInvariants, SubcellGeometryAndFans) {
    for (auto kind : {SurfaceKind::Plate, SurfaceKind::Cylinder, SurfaceKind::CantileverStrip}) {
        auto s = generate_test_surface(kind, {10, 6}, {5, 3});
        for (const auto& c : s.cells.subcells()) {
            for (int k = 0; k < 3; ++k) EXPECT_LE(std::abs(c.area - c.a[k] * c.l[k] / 2), 1e-9 * c.area);
        }
        // CCW neighbor order agrees with the node normal.
        for (int i = 0; i < s.cells.num_nodes(); ++i) {
            const auto& fan = s.cells.fans()[i];
            const std::size_t k = fan.neighbors.size();
            const std::size_t pairs = fan.closed ? k : k - 1;
            for (std::size_t t = 0; t < pairs; ++t) {
                Vec3 a = s.cells.nodes()[fan.neighbors[t]] - s.cells.nodes()[i];
                Vec3 b = s.cells.nodes()[fan.neighbors[(t + 1) % k]] - s.cells.nodes()[i];
                EXPECT_GT(a.cross(b).dot(s.cells.normals()[i]), 0.0);
            }
        }
        // diagonals are interior to exactly one face
        for (const auto& e : s.cells.edges()) {
            if (e.kind != EdgeKind::Diagonal) continue;
            ASSERT_FALSE(e.topo.boundary());
            EXPECT_EQ(s.cells.subcells()[e.topo.faces[0]].face, s.cells.subcells()[e.topo.faces[1]].face);
        }
    }
}

TEST(CellMeshInvariants, QuadSplitsAlongShorterDiagonal) {
    // Rhombus-like quad: 0-2 diagonal is shorter.
    std::vector<Vec3> nodes = {{0, 0, 0}, {2, -0.5, 0}, {3, 0, 0}, {2, 2, 0}};
    auto m = CellMesh::build(nodes, {{0, 1, 2, 3}});
    int diag = -1;
    for (std::size_t e = 0; e < m.edges().size(); ++e) {
        if (m.edges()[e].kind == EdgeKind::Diagonal) diag = static_cast<int>(e);
    }
    ASSERT_GE(diag, 0);
    double d02 = (nodes[0] - nodes[2]).norm(), d13 = (nodes[1] - nodes[3]).norm();
    auto e = m.edges()[diag].topo;
    if (d02 < d13) {
        EXPECT_EQ(e.v0, 0);
        EXPECT_EQ(e.v1, 2);
    } else {
        EXPECT_EQ(e.v0, 1);
        EXPECT_EQ(e.v1, 3);
    }
    // Square tie goes to the diagonal through the lowest index.
    auto sq = CellMesh::build({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{1, 2, 3, 0}});
    for (const auto& ce : sq.edges()) {
        if (ce.kind == EdgeKind::Diagonal) {
            EXPECT_EQ(ce.topo.v0, 0);
            EXPECT_EQ(ce.topo.v1, 2);
        }
    }
}

TEST(CellMeshInvariants, PentagonIsFannedFromLowestIndex) {
    std::vector<Vec3> nodes;
    for (int k = 0; k < 5; ++k) {
        double t = 2 * std::numbers::pi * k / 5;
        nodes.emplace_back(std::cos(t), std::sin(t), 0);
    }
    auto m = CellMesh::build(nodes, {{2, 3, 4, 0, 1}});
    EXPECT_EQ(m.subcells().size(), 3u);
    int diagonals = 0;
    for (const auto& e : m.edges()) {
        if (e.kind == EdgeKind::Diagonal) {
            ++diagonals;
            EXPECT_EQ(e.topo.v0, 0);
        }
    }
    EXPECT_EQ(diagonals, 2);
}

TEST(TriMeshInvariants, ReferenceDirectionsAreUnitAndTangent) {
    TriMesh s = make_icosphere(3.0, 2);
    for (int f = 0; f < s.num_triangles(); ++f) {
        EXPECT_NEAR(s.ref_dirs()[f].norm(), 1.0, 1e-12);
        EXPECT_NEAR(s.ref_dirs()[f].dot(s.normals()[f]), 0.0, 1e-12);
    }
}

TEST(TriMeshInvariants, RejectsDegenerateAndBadIndices) {
    EXPECT_THROW(TriMesh::build({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}), StructureError);
    EXPECT_THROW(TriMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 3}}), StructureError);
    EXPECT_THROW(TriMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 1}}), StructureError);
}

TEST(MeshIo, SingleTriangleObj) {
    auto p = temp_path("one.obj");
    write_text(p, "# test\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    TriMesh m = load_tri_mesh(p);
    EXPECT_EQ(m.num_triangles(), 1);
    EXPECT_NEAR(m.areas()[0], 0.5, 1e-15);
}

TEST(MeshIo, NonManifoldEdgeIsRejected) {
    auto p = temp_path("fan5.obj");
    std::ostringstream ss;
    ss << "v 0 0 0\nv 0 0 1\n";
    for (int k = 0; k < 5; ++k) {
        double t = 2 * std::numbers::pi * k / 5;
        ss << "v " << std::cos(t) << ' ' << std::sin(t) << " 0.5\n";
    }
    for (int k = 0; k < 5; ++k) ss << "f 1 2 " << 3 + k << "\n";
    write_text(p, ss.str());
    EXPECT_THROW(load_tri_mesh(p), StructureError);
}

TEST(MeshIo, ParseErrorsCarryLineNumbers) {
    std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
    try {
        parse_obj(in);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 4);
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    }
    std::istringstream bad("v 0 0\n");
    EXPECT_THROW(parse_obj(bad), ParseError);
    EXPECT_THROW(read_obj(temp_path("missing.obj")), IoError);
}

TEST(MeshIo, OrientationIsPropagated) {
    auto p = temp_path("flip.obj");
    write_text(p, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 4 3\n");
    TriMesh m = load_tri_mesh(p);
    EXPECT_NEAR(m.normals()[0].dot(m.normals()[1]), 1.0, 1e-12);
}

TEST(MeshIo, QuadJsonRoundTripIsBitExact) {
    auto s = generate_test_surface(SurfaceKind::Cylinder, {1.0 / 3.0, 2.7}, {7, 3});
    auto p = temp_path("cyl.json");
    save_quad_json(s.cells, p);
    CellMesh back = load_cell_mesh(p, MeshFormat::QuadJson);
    ASSERT_EQ(back.nodes().size(), s.cells.nodes().size());
    for (std::size_t i = 0; i < back.nodes().size(); ++i) {
        for (int c = 0; c < 3; ++c) EXPECT_EQ(back.nodes()[i][c], s.cells.nodes()[i][c]);
    }
    EXPECT_EQ(back.faces(), s.cells.faces());
}

TEST(MeshIo, SaveThenLoadKeepsConnectivity) {
    auto s = generate_test_surface(SurfaceKind::Plate, {3, 2}, {3, 2});
    auto p = temp_path("plate.obj");
    save_obj(s.tri, p);
    TriMesh back = load_tri_mesh(p);
    EXPECT_EQ(back.triangles(), s.tri.triangles());
    for (int i = 0; i < back.num_vertices(); ++i) {
        EXPECT_LE((back.vertices()[i] - s.tri.vertices()[i]).norm(), 1e-12);
    }
    auto pq = temp_path("plate_cells.obj");
    save_obj(s.cells, pq);
    CellMesh cells = load_cell_mesh(pq, MeshFormat::Obj);
    EXPECT_EQ(cells.faces(), s.cells.faces());
}

TEST(MeshIo, EmptyMeshWritesValidObj) {
    TriMesh empty = TriMesh::build({}, {});
    auto p = temp_path("empty.obj");
    save_obj(empty, p);
    ObjData d = read_obj(p);
    EXPECT_TRUE(d.vertices.empty());
    EXPECT_TRUE(d.all_faces().empty());
}

TEST(MeshIo, LargeMeshKeepsFaceOrder) {
    const int nx = 500, ny = 1000;
    std::vector<Vec3> v;
    std::vector<std::vector<int>> faces;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) v.emplace_back(i, j, 0);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            int a = j * (nx + 1) + i;
            faces.push_back({a, a + 1, a + nx + 2});
            faces.push_back({a, a + nx + 2, a + nx + 1});
        }
    }
    ASSERT_EQ(faces.size(), 1000000u);
    std::ostringstream out;
    write_obj(out, v, faces);
    std::istringstream in(out.str());
    ObjData d = parse_obj(in);
    EXPECT_EQ(d.all_faces(), faces);
}

TEST(LoadCases, ValidationAndDofMap) {
    LoadCase lc = LoadCase::zero(4);
    EXPECT_THROW(lc.validate(4), ParameterError);
    lc.add_support(2);
    lc.add_support(0);
    lc.add_support(2);
    EXPECT_EQ(lc.supports, (std::vector<int>{0, 2}));
    EXPECT_NO_THROW(lc.validate(4));
    EXPECT_THROW(lc.validate(5), ParameterError);
    DofMap dm = DofMap::build(4, lc.supports);
    EXPECT_EQ(dm.num_free, 6);
    EXPECT_EQ(dm(0, 0), -1);
    EXPECT_EQ(dm(1, 2), 2);
    EXPECT_EQ(dm(3, 0), 3);
}
