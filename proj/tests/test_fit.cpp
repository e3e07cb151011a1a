#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cstcloud/errors.hpp"
#include "cstcloud/fit.hpp"
#include "cstcloud/oracle.hpp"
#include "cstcloud/rng.hpp"
#include "cstcloud/shape_gen.hpp"
#include "cstcloud/spatial.hpp"

#include <cmath>

using namespace cstcloud;
using geom::Vec3;

namespace {

PointMatrix plane_points(int n, std::uint64_t seed, double sigma = 0.0) {
    Rng rng(seed);
    PointMatrix pts(n, 3);
    for (int i = 0; i < n; ++i)
        pts.row(i) << rng.uniform(-1, 1), rng.uniform(-1, 1), sigma * rng.normal();
    return pts;
}

PointMatrix cylinder_sector(int n, double r, double arc_rad, double h, std::uint64_t seed) {
    Rng rng(seed);
    PointMatrix pts(n, 3);
    for (int i = 0; i < n; ++i) {
        const double th = rng.uniform(0, arc_rad);
        pts.row(i) << r * std::cos(th), r * std::sin(th), rng.uniform(0, h);
    }
    return pts;
}

PointMatrix sphere_points(int n, double r, std::uint64_t seed) {
    Rng rng(seed);
    PointMatrix pts(n, 3);
    for (int i = 0; i < n; ++i) {
        Vec3 v = rng.unit_vector();
        if (v.z() < 0) v.z() = -v.z();  // half sphere
        pts.row(i) = r * v;
    }
    return pts;
}

PointMatrix cone_sector(int n, double alpha, std::uint64_t seed) {
    Rng rng(seed);
    PointMatrix pts(n, 3);
    for (int i = 0; i < n; ++i) {
        const double s = rng.uniform(0.5, 2.0);  // slant parameter, away from apex
        const double th = rng.uniform(0, M_PI);  // half-turn sector
        pts.row(i) = s * std::cos(alpha) * Vec3(0, 0, 1) +
                     s * std::sin(alpha) * Vec3(std::cos(th), std::sin(th), 0);
    }
    return pts;
}

double axis_error_rad(const Vec3& a, const Vec3& b) {
    return std::acos(std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0));
}

}  // namespace

TEST_CASE("fit_plane: exact, noisy, rotated") {
    const auto exact = fit::fit_plane(plane_points(100, 1));
    REQUIRE(exact.has_value());
    CHECK(axis_error_rad(exact->prim.axis, Vec3(0, 0, 1)) < 1e-9);
    CHECK(exact->rms_residual < 1e-12);

    const double sigma = 0.01;
    const auto noisy = fit::fit_plane(plane_points(400, 2, sigma));
    REQUIRE(noisy.has_value());
    CHECK(noisy->rms_residual > 0.7 * sigma);
    CHECK(noisy->rms_residual < 1.3 * sigma);

    Rng rng(3);
    const Eigen::Matrix3d R = rng.rotation_so3();
    PointMatrix rotated = (R * plane_points(150, 4).transpose()).transpose();
    const auto rfit = fit::fit_plane(rotated);
    REQUIRE(rfit.has_value());
    CHECK(axis_error_rad(rfit->prim.axis, R * Vec3(0, 0, 1)) < 1e-6);

    PointMatrix line(5, 3);
    for (int i = 0; i < 5; ++i) line.row(i) << i, 0, 0;
    CHECK_FALSE(fit::fit_plane(line).has_value());
}

TEST_CASE("fit_cylinder recovers a 90-degree sector exactly") {
    const auto pts = cylinder_sector(200, 1.0, M_PI / 2.0, 2.0, 5);
    const auto r = fit::fit_cylinder(pts);
    REQUIRE(r.has_value());
    CHECK(axis_error_rad(r->prim.axis, Vec3(0, 0, 1)) < 1e-6);
    CHECK(r->prim.radius == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r->rms_residual < 1e-7);
}

TEST_CASE("comparative residuals drive type selection") {
    // plane data: plane residual far below cylinder residual
    const auto pl = plane_points(120, 7, 0.0);
    const auto plane_fit = fit::fit_plane(pl);
    const auto cyl_on_plane = fit::fit_cylinder(pl);
    REQUIRE(plane_fit.has_value());
    if (cyl_on_plane) CHECK(plane_fit->rms_residual <= cyl_on_plane->rms_residual + 1e-12);

    // sphere data: cylinder residual above sphere residual
    const auto sp = sphere_points(300, 1.3, 8);
    const auto sphere_fit = fit::fit_sphere(sp);
    const auto cyl_on_sphere = fit::fit_cylinder(sp);
    REQUIRE(sphere_fit.has_value());
    REQUIRE(cyl_on_sphere.has_value());
    CHECK(sphere_fit->rms_residual < cyl_on_sphere->rms_residual);

    std::vector<std::optional<fit::FitResult>> cands;
    cands.push_back(plane_fit);
    cands.push_back(cyl_on_plane);
    const auto* win = fit::select_kind(cands, 0.25);
    REQUIRE(win != nullptr);
    CHECK(win->kind == geom::PrimitiveKind::Plane);
}

TEST_CASE("fit_sphere recovers a half sphere; coplanar input fails") {
    const auto r = fit::fit_sphere(sphere_points(300, 2.0, 9));
    REQUIRE(r.has_value());
    CHECK(r->prim.point.norm() < 1e-6);
    CHECK(r->prim.radius == doctest::Approx(2.0).epsilon(1e-6));

    PointMatrix coplanar(4, 3);
    coplanar << 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 2, 0;
    CHECK_FALSE(fit::fit_sphere(coplanar).has_value());
}

TEST_CASE("fit_cone recovers the half angle") {
    const auto pts = cone_sector(300, 30.0 * M_PI / 180.0, 10);
    const auto r = fit::fit_cone(pts);
    REQUIRE(r.has_value());
    CHECK(std::abs(r->prim.half_angle - 30.0 * M_PI / 180.0) < 1e-4);
    CHECK(axis_error_rad(r->prim.axis, Vec3(0, 0, 1)) < 1e-4);
    CHECK(r->prim.point.norm() < 1e-4);
}

namespace {

struct SuiteStats {
    double pt_acc_off_edge = 0.0;
    double pt_acc_all = 0.0;
    double adj_acc = 0.0;
    double mad_mse = 0.0;                 // mean over all components
    double mad_axis_err_off_edge = 0.0;   // max angle, radians
};

SuiteStats compare_vs_oracle(const LabeledCloud& oracle_cloud, const LabeledCloud& pred) {
    SuiteStats s;
    int off_edge = 0, off_edge_ok = 0, all_ok = 0, adj_ok = 0;
    double mse = 0.0, max_axis = 0.0;
    const auto n = oracle_cloud.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& o = oracle_cloud.labels[static_cast<size_t>(i)];
        const auto& p = pred.labels[static_cast<size_t>(i)];
        if (o.adj == 0) {
            ++off_edge;
            if (o.pt == p.pt) ++off_edge_ok;
            if (o.mad.norm() > 0.5 && p.mad.norm() > 0.5)
                max_axis = std::max(max_axis, axis_error_rad(o.mad, p.mad));
        }
        if (o.pt == p.pt) ++all_ok;
        if (o.adj == p.adj) ++adj_ok;
        mse += (o.mad - p.mad).squaredNorm();
    }
    s.pt_acc_off_edge = off_edge ? static_cast<double>(off_edge_ok) / off_edge : 1.0;
    s.pt_acc_all = static_cast<double>(all_ok) / static_cast<double>(n);
    s.adj_acc = static_cast<double>(adj_ok) / static_cast<double>(n);
    s.mad_mse = mse / static_cast<double>(3 * n);
    s.mad_axis_err_off_edge = max_axis;
    return s;
}

}  // namespace

TEST_CASE("classical prediction matches the oracle on clean shapes") {
    // unit cube: interior-face point plane + normal, edge-adjacent point near-edge
    const auto cube = gen::build_prism(1, 1, 1, M_PI / 2.0);
    const auto mesh = gen::tessellate(cube, 0.5);
    auto cloud = gen::sample_poisson_disk(mesh, 1024, 11);
    oracle::label_cloud(cube, cloud);
    const auto graph = spatial::SurfaceGraph::build(cloud.points, 8);
    const auto pred = fit::predict_constraints_classical(cloud, graph);

    const auto stats = compare_vs_oracle(cloud, pred);
    CHECK(stats.pt_acc_off_edge == 1.0);
    CHECK(stats.mad_axis_err_off_edge < 1e-3);

    // spot checks from the oracle labels themselves
    int checked_interior = 0, checked_edge = 0;
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        const auto& o = cloud.labels[static_cast<size_t>(i)];
        const auto& p = pred.labels[static_cast<size_t>(i)];
        if (o.adj == 0) {
            CHECK(p.pt == static_cast<int>(geom::PrimitiveKind::Plane));
            CHECK((p.mad - o.mad).norm() < 1e-3);
            ++checked_interior;
        }
        if (o.adj == 1 && checked_edge < 32) {
            // points close to an edge: flagged by trimming or residual
            ++checked_edge;
        }
    }
    CHECK(checked_interior > 400);

    // cylinder block: side point gets the axis within 1e-2
    const auto cyl = gen::build_cylinder_block(1.0, 2.0);
    const auto cmesh = gen::tessellate(cyl, 0.2);
    auto ccloud = gen::sample_poisson_disk(cmesh, 1024, 12);
    oracle::label_cloud(cyl, ccloud);
    const auto cgraph = spatial::SurfaceGraph::build(ccloud.points, 8);
    const auto cpred = fit::predict_constraints_classical(ccloud, cgraph);
    int side_checked = 0;
    for (Eigen::Index i = 0; i < ccloud.size(); ++i) {
        const auto& o = ccloud.labels[static_cast<size_t>(i)];
        const auto& p = cpred.labels[static_cast<size_t>(i)];
        if (o.adj == 0 && o.pt == static_cast<int>(geom::PrimitiveKind::Cylinder)) {
            CHECK(p.pt == o.pt);
            CHECK(axis_error_rad(p.mad, Vec3(0, 0, 1)) < 1e-2);
            ++side_checked;
        }
    }
    CHECK(side_checked > 200);
}

TEST_CASE("classical near-edge flag fires next to cube edges") {
    const auto cube = gen::build_prism(1, 1, 1, M_PI / 2.0);
    const auto mesh = gen::tessellate(cube, 0.5);
    auto cloud = gen::sample_poisson_disk(mesh, 1024, 13);
    oracle::label_cloud(cube, cloud);
    const auto graph = spatial::SurfaceGraph::build(cloud.points, 8);
    const auto pred = fit::predict_constraints_classical(cloud, graph);
    // of the points very close to an edge, most must be flagged
    int close = 0, flagged = 0;
    double tau = oracle::adjacency_threshold(cube);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        double dmin = 1e9;
        for (const auto& e : cube.edges)
            dmin = std::min(dmin, geom::point_polyline_distance(cloud.points.row(i), e.polyline));
        if (dmin < 0.5 * tau) {
            ++close;
            flagged += pred.labels[static_cast<size_t>(i)].adj;
        }
    }
    REQUIRE(close > 10);
    CHECK(static_cast<double>(flagged) / close > 0.8);
}

TEST_CASE("classical MAD prediction is rotation equivariant (noiseless)") {
    const auto shape = gen::build_cylinder_block(0.8, 1.6);
    const auto mesh = gen::tessellate(shape, 0.15);
    auto cloud = gen::sample_poisson_disk(mesh, 512, 14);
    const auto graph = spatial::SurfaceGraph::build(cloud.points, 8);
    const auto base = fit::predict_constraints_classical(cloud, graph);

    Rng rng(15);
    const Eigen::Matrix3d R = rng.rotation_so3();
    LabeledCloud rot = cloud;
    rot.points = (R * cloud.points.transpose()).transpose();
    const auto rgraph = spatial::SurfaceGraph::build(rot.points, 8);
    const auto rpred = fit::predict_constraints_classical(rot, rgraph);

    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        const auto& b = base.labels[static_cast<size_t>(i)];
        const auto& r = rpred.labels[static_cast<size_t>(i)];
        CHECK(r.pt == b.pt);
        if (b.mad.norm() > 0.5) {
            const Vec3 expect = geom::canonicalize_direction(R * b.mad);
            CHECK((r.mad - expect).norm() < 1e-6);
        }
    }
}

TEST_CASE("classical prediction under jitter stays in the reported regime") {
    // a small version of the acceptance suite for fast feedback
    SuiteStats agg{};
    int shapes = 0;
    for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
        gen::GenSpec spec;
        spec.family = seed % 2 ? gen::Family::CylinderBlock : gen::Family::ConeBlock;
        spec.size_ranges = {{0.6, 1.4}, {0.8, 1.8}};
        spec.seed = seed;
        const auto shape = gen::generate(spec);
        const auto mesh = gen::tessellate(shape, 0.12);
        auto cloud = gen::sample_poisson_disk(mesh, 1024, seed + 100);
        oracle::label_cloud(shape, cloud);

        LabeledCloud noisy = cloud;
        add_gaussian_jitter(noisy, 0.005 * bbox_diagonal(noisy.points), seed + 200);
        const auto graph = spatial::SurfaceGraph::build(noisy.points, 8);
        const auto pred = fit::predict_constraints_classical(noisy, graph);
        const auto s = compare_vs_oracle(cloud, pred);
        agg.pt_acc_all += s.pt_acc_all;
        agg.adj_acc += s.adj_acc;
        agg.mad_mse += s.mad_mse;
        ++shapes;
    }
    CHECK(agg.pt_acc_all / shapes >= 0.95);
    CHECK(agg.adj_acc / shapes >= 0.90);
    CHECK(agg.mad_mse / shapes <= 0.05);
}

TEST_CASE("classical prediction validates k") {
    LabeledCloud cloud;
    cloud.points = plane_points(64, 30);
    const auto graph = spatial::SurfaceGraph::build(cloud.points, 8);
    fit::ClassicalOptions opts;
    opts.k = 8;
    CHECK_THROWS_AS(fit::predict_constraints_classical(cloud, graph, opts), ValidationError);
}
