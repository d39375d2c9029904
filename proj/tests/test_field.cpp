#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "shellopt/field/solve_field.hpp"
#include "shellopt/mesh/generators.hpp"

using namespace shellopt;

namespace {

constexpr double kPi = std::numbers::pi;

TriMesh plate(double lx, double ly, int nx, int ny) {
    return generate_test_surface(SurfaceKind::Plate, {lx, ly}, {nx, ny}).tri;
}

/// Plate lifted into a smooth bump with in-plane jitter.
TriMesh curved_mesh(unsigned seed) {
    TriMesh flat = plate(10, 8, 5, 4);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ud(-0.3, 0.3);
    std::vector<Vec3> x = flat.vertices();
    for (auto& p : x) {
        p.z() = 0.05 * (p.x() - 5) * (p.x() - 5) - 0.03 * p.y() * p.y() + ud(rng);
        p.x() += 0.5 * ud(rng);
        p.y() += 0.5 * ud(rng);
    }
    return TriMesh::build(x, flat.triangles());
}

Eigen::VectorXd random_vector(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = nd(rng);
    return u;
}

std::vector<Vec3> displaced(const std::vector<Vec3>& x, const Eigen::VectorXd& u, double t) {
    std::vector<Vec3> y = x;
    for (std::size_t v = 0; v < x.size(); ++v) y[v] += t * u.segment<3>(3 * v);
    return y;
}

/// Green strain of the deformed triangle f in its rest frame.
Eigen::Matrix2d green_strain(const TriMesh& m, const std::vector<Vec3>& y, int f) {
    const Tri& t = m.triangles()[f];
    const auto& x = m.vertices();
    Eigen::Matrix<double, 3, 2> T;
    T << m.ref_dirs()[f], m.cotangent(f);
    Eigen::Matrix<double, 3, 2> E, Ey;
    E << x[t[1]] - x[t[0]], x[t[2]] - x[t[0]];
    Ey << y[t[1]] - y[t[0]], y[t[2]] - y[t[0]];
    const Eigen::Matrix2d P = T.transpose() * E;
    const Eigen::Matrix<double, 3, 2> F = Ey * P.inverse();
    return 0.5 * (F.transpose() * F - Eigen::Matrix2d::Identity());
}

/// Rest-frame matrix of the tangential projection of a 3x3 tensor.
Eigen::Matrix2d in_frame(const TriMesh& m, int f, const Eigen::Matrix3d& A) {
    Eigen::Matrix<double, 3, 2> T;
    T << m.ref_dirs()[f], m.cotangent(f);
    return T.transpose() * A * T;
}

bool all_edges_interior(const TriMesh& m, int f) {
    for (int e : m.face_edges()[f]) {
        if (m.edges()[e].boundary()) return false;
    }
    return true;
}

struct PlateCase {
    TriMesh mesh;
    LoadCase loads;
};

/// Plate clamped along x = 0 and pulled along +x at x = L.
PlateCase tension_plate(int n, double eps0 = 1e-3) {
    PlateCase c{plate(10, 10, n, n), {}};
    c.loads = LoadCase::zero(c.mesh.num_vertices());
    c.loads.eps0 = eps0;
    std::vector<int> tip;
    for (int v = 0; v < c.mesh.num_vertices(); ++v) {
        const double x = c.mesh.vertices()[v].x();
        if (x < 1e-9) c.loads.add_support(v);
        if (x > 10 - 1e-9) tip.push_back(v);
    }
    for (int v : tip) c.loads.forces[v] = Vec3(1.0 / tip.size(), 0, 0);
    return c;
}

/// Plate with its whole boundary fixed and a uniform transverse load.
PlateCase pressed_plate(int n, double total_load, double eps0 = 1e-3) {
    PlateCase c{plate(100, 100, n, n), {}};
    c.loads = LoadCase::zero(c.mesh.num_vertices());
    c.loads.eps0 = eps0;
    const auto boundary = c.mesh.boundary_vertices();
    int inner = 0;
    for (int v = 0; v < c.mesh.num_vertices(); ++v) {
        if (boundary[v]) c.loads.add_support(v);
        else ++inner;
    }
    for (int v = 0; v < c.mesh.num_vertices(); ++v) {
        if (!boundary[v]) c.loads.forces[v] = Vec3(0, 0, -total_load / inner);
    }
    return c;
}

double max_surface_strain(const FieldResult& r) {
    double worst = 0.0;
    for (const auto& s : r.strains) {
        worst = std::max({worst, s.at(r.fiber_offset).spectral_norm(), s.at(-r.fiber_offset).spectral_norm()});
    }
    return worst;
}

/// Distance between two cross directions (mod pi/2).
double cross_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), kPi / 2);
    return std::min(d, kPi / 2 - d);
}

}  // namespace

TEST(Sym2, AbsEigenSumIdentityOnRandomTensors) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 100000; ++k) {
        Eigen::Matrix2d A;
        A << ud(rng), ud(rng), 0, ud(rng);
        A(1, 0) = A(0, 1);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A);
        const double direct = es.eigenvalues().cwiseAbs().sum();
        const Sym2 s = Sym2::from_matrix(A);
        worst = std::max(worst, std::abs(direct - 2.0 * std::max(std::abs(s.a), s.radius())));
        worst = std::max(worst, std::abs(direct - s.abs_eigen_sum()));
        worst = std::max(worst, std::abs(es.eigenvalues().cwiseAbs().maxCoeff() - s.spectral_norm()));
    }
    EXPECT_LE(worst, 1e-12);
}

TEST(Sym2, PrincipalAngleIsEigenvectorOfLargerEigenvalue) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ud(-2.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        const Sym2 s{ud(rng), ud(rng), ud(rng)};
        const double t = s.principal_angle();
        EXPECT_GE(t, 0.0);
        EXPECT_LT(t, kPi);
        const Eigen::Vector2d d(std::cos(t), std::sin(t));
        EXPECT_LE((s.matrix() * d - s.lambda_max() * d).norm(), 1e-12);
    }
}

TEST(TensileOperator, UniformStretchOfRightTriangle) {
    TriMesh m = TriMesh::build({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Tri{0, 1, 2}});
    Eigen::VectorXd u = Eigen::VectorXd::Zero(9);
    for (int v = 0; v < 3; ++v) u[3 * v] = m.vertices()[v].x();
    const Sym2 s = apply_strain(tensile_strain_operator(m), u)[0];
    Eigen::Matrix3d grad = Eigen::Matrix3d::Zero();
    grad(0, 0) = 1.0;
    EXPECT_LE((s.matrix() - in_frame(m, 0, grad)).norm(), 1e-14);
    EXPECT_NEAR(s.lambda_max(), 1.0, 1e-14);
    EXPECT_NEAR(s.lambda_min(), 0.0, 1e-14);
}

TEST(TensileOperator, MatchesFiniteDifferencesOfGreenStrain) {
    for (unsigned seed : {1u, 2u, 3u}) {
        TriMesh m = curved_mesh(seed);
        const Eigen::VectorXd u = random_vector(3 * m.num_vertices(), seed + 10);
        const auto lin = apply_strain(tensile_strain_operator(m), u);
        const double h = 1e-6;
        const auto xp = displaced(m.vertices(), u, h), xm = displaced(m.vertices(), u, -h);
        for (int f = 0; f < m.num_triangles(); ++f) {
            const Eigen::Matrix2d fd = (green_strain(m, xp, f) - green_strain(m, xm, f)) / (2 * h);
            EXPECT_LE((lin[f].matrix() - fd).norm(), 1e-6 * (1.0 + fd.norm())) << "triangle " << f;
        }
    }
}

TEST(StrainOperators, AnnihilateRigidMotions) {
    for (const TriMesh& m : {curved_mesh(4), make_icosphere(2.0, 2)}) {
        const auto Bt = tensile_strain_operator(m);
        const auto Bb = bending_strain_operator(m);
        const Vec3 shift(0.3, -1.2, 0.7), spin(-0.4, 0.9, 0.25);
        Eigen::VectorXd translate(3 * m.num_vertices()), rotate(3 * m.num_vertices());
        for (int v = 0; v < m.num_vertices(); ++v) {
            translate.segment<3>(3 * v) = shift;
            rotate.segment<3>(3 * v) = spin.cross(m.vertices()[v]);
        }
        EXPECT_LE((Bt * translate).lpNorm<Eigen::Infinity>(), 1e-12);
        EXPECT_LE((Bb * translate).lpNorm<Eigen::Infinity>(), 1e-12);
        EXPECT_LE((Bt * rotate).lpNorm<Eigen::Infinity>(), 1e-10);
        EXPECT_LE((Bb * rotate).lpNorm<Eigen::Infinity>(), 1e-10);
    }
}

TEST(BendingOperator, QuadraticHeightGivesConstantCurvature) {
    TriMesh m = plate(4, 4, 8, 8);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(3 * m.num_vertices());
    for (int v = 0; v < m.num_vertices(); ++v) {
        const double x = m.vertices()[v].x();
        u[3 * v + 2] = x * x;
    }
    const auto eb = apply_strain(bending_strain_operator(m), u);
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
    hess(0, 0) = 2.0;
    int checked = 0;
    for (int f = 0; f < m.num_triangles(); ++f) {
        if (!all_edges_interior(m, f)) continue;
        ++checked;
        EXPECT_LE((eb[f].matrix() - in_frame(m, f, hess)).norm(), 1e-9) << "triangle " << f;
    }
    EXPECT_GT(checked, 50);
}

TEST(BendingOperator, HingeLinearizationMatchesFiniteDifferences) {
    for (unsigned seed : {5u, 6u}) {
        TriMesh m = curved_mesh(seed);
        const Eigen::VectorXd u = random_vector(3 * m.num_vertices(), seed);
        const Eigen::VectorXd lin = hinge_angle_operator(m) * u;
        const double h = 1e-6;
        const auto xp = displaced(m.vertices(), u, h), xm = displaced(m.vertices(), u, -h);
        for (std::size_t e = 0; e < m.edges().size(); ++e) {
            const int k = static_cast<int>(e);
            const double fd = (hinge_angle(m, xp, k) - hinge_angle(m, xm, k)) / (2 * h);
            EXPECT_NEAR(lin[k], fd, 1e-5 * (1.0 + std::abs(fd))) << "edge " << e;
            if (m.edges()[e].boundary()) EXPECT_EQ(lin[k], 0.0);
        }
    }
}

TEST(BendingOperator, MatchesFiniteDifferencesOfHingeCurvature) {
    TriMesh m = curved_mesh(8);
    const Eigen::VectorXd u = random_vector(3 * m.num_vertices(), 9);
    const auto lin = apply_strain(bending_strain_operator(m), u);
    const double h = 1e-6;
    const auto xp = displaced(m.vertices(), u, h), xm = displaced(m.vertices(), u, -h);
    for (int f = 0; f < m.num_triangles(); ++f) {
        Eigen::Matrix2d fd = Eigen::Matrix2d::Zero();
        for (int i = 0; i < 3; ++i) {
            const int e = m.face_edges()[f][i];
            if (m.edges()[e].boundary()) continue;
            const double dtheta = -(hinge_angle(m, xp, e) - hinge_angle(m, xm, e)) / (2 * h);
            const Vec3 perp = m.normals()[f].cross(m.edge_vector(f, i));
            const Eigen::Vector2d q(perp.dot(m.ref_dirs()[f]), perp.dot(m.cotangent(f)));
            fd += dtheta / (2 * m.areas()[f] * perp.norm()) * q * q.transpose();
        }
        EXPECT_LE((lin[f].matrix() - fd).norm(), 1e-5 * (1.0 + fd.norm())) << "triangle " << f;
    }
}

TEST(DualProgram, TwoConesPerTriangle) {
    PlateCase c = tension_plate(4);
    DualProgram dp = assemble_dual_program(c.mesh, c.loads, 0.5);
    EXPECT_EQ(dp.program.cones.size(), 2u * c.mesh.num_triangles());
    EXPECT_EQ(dp.program.ineq_A.rows(), 4 * c.mesh.num_triangles());
    EXPECT_EQ(dp.num_displacement_vars, dp.dofs.num_free);
    EXPECT_EQ(dp.program.n, dp.num_displacement_vars + 2 * c.mesh.num_triangles());
    EXPECT_EQ(dp.fiber_offset, 0.25);
}

TEST(DualProgram, AllFixedTriangleHasNoDisplacementVariables) {
    TriMesh m = TriMesh::build({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Tri{0, 1, 2}});
    LoadCase lc = LoadCase::zero(3);
    for (int v = 0; v < 3; ++v) lc.add_support(v);
    lc.forces[1] = Vec3(1, 2, 3);
    DualProgram dp = assemble_dual_program(m, lc, 1.0);
    EXPECT_EQ(dp.num_displacement_vars, 0);
    EXPECT_EQ(dp.program.objective.norm(), 0.0);
    auto sol = socp::solve_socp(dp.program);
    EXPECT_EQ(sol.status, socp::SolveStatus::Optimal);
    EXPECT_NEAR(sol.primal_objective, 0.0, 1e-9);
}

TEST(DualProgram, ZeroThicknessKeepsOnlyTensileRows) {
    PlateCase c = tension_plate(3);
    DualProgram dp = assemble_dual_program(c.mesh, c.loads, 0.0);
    Eigen::VectorXd x = random_vector(dp.program.n, 4);
    const Eigen::VectorXd u = dp.displacements(x);
    const auto et = apply_strain(dp.tensile, u);
    for (int f = 0; f < c.mesh.num_triangles(); ++f) {
        for (int s = 0; s < 2; ++s) {
            const auto& cone = dp.program.cones[2 * f + s];
            const Eigen::VectorXd bc = cone.A * x;
            EXPECT_NEAR(bc[0], et[f].b, 1e-12);
            EXPECT_NEAR(bc[1], et[f].c, 1e-12);
        }
    }
}

TEST(DualProgram, RejectsBadInput) {
    PlateCase c = tension_plate(3);
    EXPECT_THROW(assemble_dual_program(c.mesh, c.loads, -1.0), ParameterError);
    LoadCase none = LoadCase::zero(c.mesh.num_vertices());
    EXPECT_THROW(assemble_dual_program(c.mesh, none, 1.0), ParameterError);
}

TEST(Zones, ClassificationExamples) {
    const double eps0 = 2e-3;
    auto zone_of = [&](double l1, double l2) {
        Eigen::Matrix2d m = Eigen::Vector2d(l1, l2).asDiagonal();
        return classify_strain(Sym2::from_matrix(m), eps0);
    };
    EXPECT_EQ(zone_of(eps0, -eps0), Zone::Opposite);
    EXPECT_EQ(zone_of(eps0, eps0), Zone::Isotropic);
    EXPECT_EQ(zone_of(-eps0, -eps0), Zone::Isotropic);
    EXPECT_EQ(zone_of(0.2 * eps0, 0.1 * eps0), Zone::Slack);
    EXPECT_EQ(zone_of(eps0, 0.3 * eps0), Zone::Single);
    EXPECT_EQ(zone_of(-eps0, 0.5 * eps0), Zone::Single);
    EXPECT_EQ(zone_of(eps0, 0.95 * eps0), Zone::Isotropic);  // critical, below the anisotropy threshold
    EXPECT_TRUE(is_salient(Zone::Opposite));
    EXPECT_TRUE(is_salient(Zone::Single));
    EXPECT_FALSE(is_salient(Zone::Isotropic));
    EXPECT_FALSE(is_salient(Zone::Slack));
    EXPECT_EQ(combine_zones(Zone::Isotropic, Zone::Single), Zone::Single);
    EXPECT_EQ(combine_zones(Zone::Slack, Zone::Isotropic), Zone::Isotropic);
    EXPECT_EQ(combine_zones(Zone::Single, Zone::Opposite), Zone::Opposite);
}

TEST(Zones, AveragingIsPeriodicInQuarterTurns) {
    EXPECT_NEAR(average_cross_angle({0.1, 0.1 + kPi / 2}), 0.1, 1e-12);
    EXPECT_NEAR(average_cross_angle({0.2}), 0.2, 1e-12);
    EXPECT_NEAR(cross_distance(average_cross_angle({0.05, kPi / 2 - 0.05}), 0.0), 0.0, 1e-12);
    const double b = average_cross_angle({0.3, 0.5});
    EXPECT_NEAR(b, 0.4, 1e-12);
    EXPECT_GE(average_cross_angle({kPi / 2 - 1e-3}), 0.0);
}

TEST(Zones, SalientAngleIsAverageOfSalientSurfaces) {
    // top surface single-direction at 30 degrees, bottom slack
    const double t = kPi / 6;
    Eigen::Matrix2d R;
    R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    const Eigen::Matrix2d top = R * Eigen::Vector2d(1e-3, 2e-4).asDiagonal() * R.transpose();
    StrainPair sp{Sym2::from_matrix(top) * 0.5, Sym2::from_matrix(top) * 1.0};  // top = t + 0.5 b at z = 0.5
    FieldResult r;
    classify_zones({sp}, 0.5, 1e-3, {}, r);
    EXPECT_EQ(r.zone_top[0], Zone::Single);
    EXPECT_EQ(r.zone_bottom[0], Zone::Slack);
    EXPECT_TRUE(r.field.salient[0]);
    EXPECT_NEAR(cross_distance(r.field.beta[0], t), 0.0, 1e-8);
}

TEST(SolveField, ZeroLoadGivesZeroDisplacement) {
    PlateCase c = tension_plate(4);
    c.loads.forces.assign(c.mesh.num_vertices(), Vec3::Zero());
    FieldResult r = solve_field(c.mesh, c.loads, {});
    EXPECT_EQ(r.objective, 0.0);
    EXPECT_EQ(r.u.norm(), 0.0);
    for (bool s : r.field.salient) EXPECT_FALSE(s);
}

TEST(SolveField, UniaxialTensionAlignsWithLoad) {
    PlateCase c = tension_plate(10);
    FieldResult r = solve_field(c.mesh, c.loads, {});
    EXPECT_LE(r.relative_gap, 1e-6);
    EXPECT_NEAR(r.objective, c.loads.eps0 * 10.0, 1e-6 * r.objective);  // uniform strain eps0 over length 10
    int salient = 0;
    for (int f = 0; f < c.mesh.num_triangles(); ++f) {
        if (!r.field.salient[f]) continue;
        ++salient;
        const Vec3& t1 = c.mesh.ref_dirs()[f];
        const double load_angle = std::atan2(Vec3::UnitX().dot(c.mesh.cotangent(f)), Vec3::UnitX().dot(t1));
        EXPECT_LE(cross_distance(r.field.beta[f], load_angle), 5.0 * kPi / 180) << "triangle " << f;
    }
    EXPECT_GT(salient, c.mesh.num_triangles() / 2);
    EXPECT_LE(max_surface_strain(r), c.loads.eps0 * (1 + 1e-6));
}

TEST(SolveField, TinyLoadOnClampedPlateActivatesBound) {
    PlateCase c = pressed_plate(6, 1e-9);
    FieldResult r = solve_field(c.mesh, c.loads, {.thickness = 1.0});
    EXPECT_GT(r.objective, 0.0);
    EXPECT_LE(r.relative_gap, 1e-6);
    EXPECT_NEAR(max_surface_strain(r), c.loads.eps0, 1e-6 * c.loads.eps0);
}

TEST(SolveField, ObjectiveGrowsWithStrainBound) {
    PlateCase c = pressed_plate(6, 1.0);
    double prev = 0.0;
    for (double eps0 : {5e-4, 1e-3, 2e-3}) {
        c.loads.eps0 = eps0;
        FieldResult r = solve_field(c.mesh, c.loads, {.thickness = 1.0});
        EXPECT_GE(r.objective, prev);
        prev = r.objective;
    }
}

TEST(SolveField, DualBoundMatchesObjective) {
    PlateCase c = pressed_plate(8, 1.0);
    FieldResult r = solve_field(c.mesh, c.loads, {.thickness = 1.0});
    EXPECT_NEAR(r.objective, r.dual_objective, 1e-6 * std::abs(r.objective));
    EXPECT_LE(max_surface_strain(r), c.loads.eps0 * (1 + 1e-6));
}

TEST(SolveField, FieldJsonHasOneEntryPerTriangle) {
    PlateCase c = tension_plate(3);
    FieldResult r = solve_field(c.mesh, c.loads, {});
    const auto j = field_json(r);
    ASSERT_EQ(j["triangles"].size(), static_cast<std::size_t>(c.mesh.num_triangles()));
    const auto& t = j["triangles"][0];
    for (const char* key : {"beta", "zone", "salient", "lambda_top", "lambda_bot"}) EXPECT_TRUE(t.contains(key)) << key;
    EXPECT_EQ(t["lambda_top"].size(), 2u);
}

TEST(CompleteField, AllSalientIsUnchanged) {
    TriMesh m = curved_mesh(11);
    CrossField cf;
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> ud(0.0, kPi / 2);
    for (int f = 0; f < m.num_triangles(); ++f) {
        cf.beta.push_back(ud(rng));
        cf.salient.push_back(true);
        cf.zone.push_back(Zone::Single);
    }
    CrossField out = complete_field(cf, m);
    for (int f = 0; f < m.num_triangles(); ++f) EXPECT_EQ(out.beta[f], cf.beta[f]);
}

TEST(CompleteField, HalfSalientStripCompletesConstant) {
    TriMesh m = plate(20, 4, 10, 2);
    CrossField cf;
    for (int f = 0; f < m.num_triangles(); ++f) {
        const Tri& t = m.triangles()[f];
        const double cx = (m.vertices()[t[0]].x() + m.vertices()[t[1]].x() + m.vertices()[t[2]].x()) / 3;
        cf.beta.push_back(cx < 10 ? 0.0 : 0.7);
        cf.salient.push_back(cx < 10);
        cf.zone.push_back(cx < 10 ? Zone::Single : Zone::Slack);
    }
    CrossField out = complete_field(cf, m);
    for (int f = 0; f < m.num_triangles(); ++f) EXPECT_NEAR(cross_distance(out.beta[f], 0.0), 0.0, 1e-9);
    EXPECT_NEAR(cross_field_energy(m, out.beta, out.k), 0.0, 1e-12);
    EXPECT_TRUE(out.singular_vertices.empty());
}

TEST(CompleteField, SphereIndicesSumToEulerCharacteristic) {
    for (int sub : {1, 2, 3}) {
        TriMesh m = make_icosphere(1.0, sub);
        CrossField cf;
        std::mt19937 rng(sub);
        std::uniform_real_distribution<double> ud(0.0, kPi / 2);
        for (int f = 0; f < m.num_triangles(); ++f) {
            const bool fixed = f % 7 == 0;
            cf.beta.push_back(fixed ? ud(rng) : 0.0);
            cf.salient.push_back(fixed);
            cf.zone.push_back(fixed ? Zone::Single : Zone::Slack);
        }
        CrossField out = complete_field(cf, m);
        const auto index = vertex_indices(m, out.beta, out.k);
        double sum = 0.0;
        for (double i : index) {
            EXPECT_NEAR(4 * i, std::round(4 * i), 1e-9);
            sum += i;
        }
        EXPECT_NEAR(sum, 2.0, 1e-9);
        double singular = 0.0;
        for (const auto& s : out.singular_vertices) singular += s.index;
        EXPECT_NEAR(singular, 2.0, 1e-12);
        for (int f = 0; f < m.num_triangles(); ++f) {
            if (cf.salient[f]) EXPECT_EQ(out.beta[f], cf.beta[f]);
            EXPECT_GE(out.beta[f], 0.0);
            EXPECT_LT(out.beta[f], kPi / 2);
        }
    }
}

TEST(CompleteField, WithoutSalientTrianglesFieldIsZero) {
    TriMesh m = make_icosphere(1.0, 1);
    CrossField cf;
    cf.beta.assign(m.num_triangles(), 0.4);
    cf.salient.assign(m.num_triangles(), false);
    cf.zone.assign(m.num_triangles(), Zone::Slack);
    CrossField out = complete_field(cf, m);
    for (double b : out.beta) EXPECT_EQ(b, 0.0);
    double singular = 0.0;
    for (const auto& s : out.singular_vertices) singular += s.index;
    EXPECT_NEAR(singular, 2.0, 1e-12);
}

TEST(CompleteField, CompletionLowersEnergyBelowNaiveFill) {
    PlateCase c = pressed_plate(8, 1.0);
    FieldResult r = solve_field(c.mesh, c.loads, {.thickness = 1.0});
    CrossField out = complete_field(r.field, c.mesh);
    // naive: zero angles on non-salient triangles, jumps rounded per edge
    std::vector<int> k(c.mesh.edges().size(), 0);
    for (std::size_t e = 0; e < k.size(); ++e) {
        const auto& ed = c.mesh.edges()[e];
        if (ed.boundary()) continue;
        const double res = r.field.beta[ed.faces[0]] + frame_transport_angle(c.mesh, static_cast<int>(e)) -
                           r.field.beta[ed.faces[1]];
        k[e] = static_cast<int>(std::lround(-res / (kPi / 2)));
    }
    EXPECT_LE(cross_field_energy(c.mesh, out.beta, out.k), cross_field_energy(c.mesh, r.field.beta, k) + 1e-12);
}
