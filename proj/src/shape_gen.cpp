#include "cstcloud/shape_gen.hpp"

#include "cstcloud/errors.hpp"
#include "cstcloud/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <unordered_map>

namespace cstcloud::gen {

using geom::BRepLiteShape;
using geom::Edge;
using geom::Face;
using geom::FacePatch;
using geom::Primitive;
using geom::Vec3;

Family family_from_string(const std::string& s) {
    if (s == "prism") return Family::Prism;
    if (s == "cuboid") return Family::Cuboid;
    if (s == "cylinder_block") return Family::CylinderBlock;
    if (s == "cone_block") return Family::ConeBlock;
    if (s == "sphere_block") return Family::SphereBlock;
    if (s == "composite") return Family::Composite;
    throw ValidationError("unknown family: " + s);
}

const char* to_string(Family f) {
    switch (f) {
        case Family::Prism: return "prism";
        case Family::Cuboid: return "cuboid";
        case Family::CylinderBlock: return "cylinder_block";
        case Family::ConeBlock: return "cone_block";
        case Family::SphereBlock: return "sphere_block";
        case Family::Composite: return "composite";
    }
    return "cuboid";
}

namespace {

constexpr int kCircleSegments = 128;

std::vector<Vec3> circle_polyline(const Vec3& center, double r, const Vec3& u, const Vec3& v) {
    std::vector<Vec3> pts;
    pts.reserve(kCircleSegments + 1);
    for (int i = 0; i <= kCircleSegments; ++i) {
        const double a = 2.0 * M_PI * i / kCircleSegments;
        pts.push_back(center + r * (std::cos(a) * u + std::sin(a) * v));
    }
    return pts;
}

Face make_polygon_face(int id, const Primitive& plane, std::vector<Vec3> loop) {
    Face f;
    f.id = id;
    f.surface = plane;
    f.patch.kind = FacePatch::Kind::Polygon;
    f.patch.poly = std::move(loop);
    f.area = geom::face_area(f.surface, f.patch);
    return f;
}

}  // namespace

BRepLiteShape build_prism(double a, double b, double h, double angle_rad) {
    if (!(angle_rad > 0.0 && angle_rad <= M_PI / 2.0 + 1e-12))
        throw ValidationError("prism angle out of (0, 90] degrees");
    const double ct = std::cos(angle_rad), st = std::sin(angle_rad);
    const Vec3 eu(a, 0, 0);            // first cross-section side
    const Vec3 ev(b * ct, b * st, 0);  // second side, interior angle angle_rad
    const Vec3 ez(0, 0, h);

    const Vec3 p000 = Vec3::Zero(), p100 = eu, p110 = eu + ev, p010 = ev;
    const Vec3 p001 = p000 + ez, p101 = p100 + ez, p111 = p110 + ez, p011 = p010 + ez;

    const Vec3 n_bottom(0, 0, -1), n_top(0, 0, 1);
    const Vec3 n_front(0, -1, 0);            // contains eu, z
    const Vec3 n_back(0, 1, 0);
    const Vec3 n_left = Vec3(-st, ct, 0);    // contains ev, z
    const Vec3 n_right = Vec3(st, -ct, 0);

    BRepLiteShape s;
    s.faces.push_back(make_polygon_face(0, Primitive::plane(p000, n_bottom), {p000, p010, p110, p100}));
    s.faces.push_back(make_polygon_face(1, Primitive::plane(p001, n_top), {p001, p101, p111, p011}));
    s.faces.push_back(make_polygon_face(2, Primitive::plane(p000, n_front), {p000, p100, p101, p001}));
    s.faces.push_back(make_polygon_face(3, Primitive::plane(p010, n_back), {p010, p011, p111, p110}));
    s.faces.push_back(make_polygon_face(4, Primitive::plane(p000, n_left), {p000, p001, p011, p010}));
    s.faces.push_back(make_polygon_face(5, Primitive::plane(p100, n_right), {p100, p110, p111, p101}));

    struct E {
        Vec3 a, b;
        int f0, f1;
    };
    const std::vector<E> edges = {
        {p000, p100, 0, 2}, {p100, p110, 0, 5}, {p110, p010, 0, 3}, {p010, p000, 0, 4},
        {p001, p101, 1, 2}, {p101, p111, 1, 5}, {p111, p011, 1, 3}, {p011, p001, 1, 4},
        {p000, p001, 2, 4}, {p100, p101, 2, 5}, {p110, p111, 3, 5}, {p010, p011, 3, 4},
    };
    int eid = 0;
    for (const auto& e : edges) {
        Edge edge;
        edge.id = eid;
        edge.polyline = {e.a, e.b};
        edge.adjacent_faces = {e.f0, e.f1};
        edge.smooth = false;
        s.faces[static_cast<size_t>(e.f0)].boundary.push_back(eid);
        s.faces[static_cast<size_t>(e.f1)].boundary.push_back(eid);
        s.edges.push_back(std::move(edge));
        ++eid;
    }
    return s;
}

BRepLiteShape build_cylinder_block(double r, double h) {
    if (r <= 0.0 || h <= 0.0) throw ValidationError("cylinder dimensions must be positive");
    const Vec3 ux = Vec3::UnitX(), uy = Vec3::UnitY(), uz = Vec3::UnitZ();
    BRepLiteShape s;

    Face side;
    side.id = 0;
    side.surface = Primitive::cylinder(Vec3::Zero(), uz, r);
    side.patch.kind = FacePatch::Kind::CylinderBand;
    side.patch.frame_u = ux;
    side.patch.frame_v = uy;
    side.patch.ang0 = 0.0;
    side.patch.ang1 = 2.0 * M_PI;
    side.patch.t0 = 0.0;
    side.patch.t1 = h;
    side.area = geom::face_area(side.surface, side.patch);
    s.faces.push_back(side);

    for (int i = 0; i < 2; ++i) {
        const bool top = (i == 0);
        Face cap;
        cap.id = 1 + i;
        cap.surface = Primitive::plane(Vec3(0, 0, top ? h : 0.0), top ? uz : -uz);
        cap.patch.kind = FacePatch::Kind::Disk;
        cap.patch.frame_u = ux;
        cap.patch.frame_v = uy;
        cap.patch.r0 = r;
        cap.area = geom::face_area(cap.surface, cap.patch);
        s.faces.push_back(cap);
    }

    for (int i = 0; i < 2; ++i) {
        Edge e;
        e.id = i;
        e.polyline = circle_polyline(Vec3(0, 0, i == 0 ? h : 0.0), r, ux, uy);
        e.adjacent_faces = {0, 1 + i};
        e.smooth = false;
        s.faces[0].boundary.push_back(i);
        s.faces[static_cast<size_t>(1 + i)].boundary.push_back(i);
        s.edges.push_back(std::move(e));
    }
    return s;
}

BRepLiteShape build_cone_block(double r, double h) {
    if (r <= 0.0 || h <= 0.0) throw ValidationError("cone dimensions must be positive");
    const Vec3 ux = Vec3::UnitX(), uy = Vec3::UnitY();
    const Vec3 apex(0, 0, h);
    const Vec3 axis(0, 0, -1);  // opens toward composed base plane z = 0
    const double alpha = std::atan2(r, h);
    BRepLiteShape s;

    Face lateral;
    lateral.id = 0;
    lateral.surface = Primitive::cone(apex, axis, alpha);
    lateral.patch.kind = FacePatch::Kind::ConeBand;
    lateral.patch.frame_u = ux;
    lateral.patch.frame_v = uy;
    lateral.patch.ang0 = 0.0;
    lateral.patch.ang1 = 2.0 * M_PI;
    lateral.patch.t0 = 0.0;
    lateral.patch.t1 = h;  // axial distance from apex down to the base
    lateral.area = geom::face_area(lateral.surface, lateral.patch);
    s.faces.push_back(lateral);

    Face base;
    base.id = 1;
    base.surface = Primitive::plane(Vec3::Zero(), Vec3(0, 0, -1));
    base.patch.kind = FacePatch::Kind::Disk;
    base.patch.frame_u = ux;
    base.patch.frame_v = uy;
    base.patch.r0 = r;
    base.area = geom::face_area(base.surface, base.patch);
    s.faces.push_back(base);

    Edge e;
    e.id = 0;
    e.polyline = circle_polyline(Vec3::Zero(), r, ux, uy);
    e.adjacent_faces = {0, 1};
    e.smooth = false;
    s.faces[0].boundary.push_back(0);
    s.faces[1].boundary.push_back(0);
    s.edges.push_back(std::move(e));
    return s;
}

BRepLiteShape build_sphere_block(double r) {
    if (r <= 0.0) throw ValidationError("sphere radius must be positive");
    BRepLiteShape s;
    Face f;
    f.id = 0;
    f.surface = Primitive::sphere(Vec3::Zero(), r);  // no construction axis
    f.patch.kind = FacePatch::Kind::SphereFull;
    f.area = geom::face_area(f.surface, f.patch);
    s.faces.push_back(f);
    return s;
}

namespace {

double draw_dim(Rng& rng, const GenSpec& spec, size_t idx) {
    double lo = 0.5, hi = 2.0;
    if (idx < spec.size_ranges.size()) {
        lo = spec.size_ranges[idx][0];
        hi = spec.size_ranges[idx][1];
    }
    if (!(lo > 0.0 && hi >= lo)) throw ValidationError("size range must be positive with min <= max");
    return rng.uniform(lo, hi);
}

BRepLiteShape merge(std::vector<BRepLiteShape> parts) {
    BRepLiteShape out;
    int face_off = 0, edge_off = 0;
    for (auto& p : parts) {
        for (auto& f : p.faces) {
            f.id += face_off;
            for (auto& b : f.boundary) b += edge_off;
            out.faces.push_back(std::move(f));
        }
        for (auto& e : p.edges) {
            e.id += edge_off;
            e.adjacent_faces[0] += face_off;
            e.adjacent_faces[1] += face_off;
            out.edges.push_back(std::move(e));
        }
        face_off = static_cast<int>(out.faces.size());
        edge_off = static_cast<int>(out.edges.size());
    }
    return out;
}

}  // namespace

BRepLiteShape generate(const GenSpec& spec) {
    if (spec.family == Family::Prism &&
        !(spec.angle_deg > 0.0 && spec.angle_deg <= 90.0))
        throw ValidationError("prism angle_deg must lie in (0, 90]");
    Rng rng(spec.seed);
    BRepLiteShape shape;
    switch (spec.family) {
        case Family::Prism: {
            const double a = draw_dim(rng, spec, 0);
            const double b = draw_dim(rng, spec, 1);
            const double h = draw_dim(rng, spec, 2);
            shape = build_prism(a, b, h, spec.angle_deg * M_PI / 180.0);
            break;
        }
        case Family::Cuboid: {
            const double a = draw_dim(rng, spec, 0);
            const double b = draw_dim(rng, spec, 1);
            const double h = draw_dim(rng, spec, 2);
            shape = build_prism(a, b, h, M_PI / 2.0);
            break;
        }
        case Family::CylinderBlock: {
            const double r = draw_dim(rng, spec, 0);
            const double h = draw_dim(rng, spec, 1);
            shape = build_cylinder_block(r, h);
            break;
        }
        case Family::ConeBlock: {
            const double r = draw_dim(rng, spec, 0);
            const double h = draw_dim(rng, spec, 1);
            shape = build_cone_block(r, h);
            break;
        }
        case Family::SphereBlock: {
            const double r = draw_dim(rng, spec, 0);
            shape = build_sphere_block(r);
            break;
        }
        case Family::Composite: {
            // One block of each kind on a padded grid; bounding radii keep
            // the parts disjoint.
            const double a = draw_dim(rng, spec, 0);
            const double b = draw_dim(rng, spec, 1);
            const double h = draw_dim(rng, spec, 2);
            BRepLiteShape box = build_prism(a, b, h, M_PI / 2.0);
            const double cr = draw_dim(rng, spec, 0);
            const double ch = draw_dim(rng, spec, 1);
            BRepLiteShape cyl = build_cylinder_block(cr, ch);
            const double kr = draw_dim(rng, spec, 0);
            const double kh = draw_dim(rng, spec, 1);
            BRepLiteShape cone = build_cone_block(kr, kh);
            const double sr = 0.5 * draw_dim(rng, spec, 0);
            BRepLiteShape ball = build_sphere_block(sr);

            const double pitch = 2.2 * (2.0 + 2.0);  // conservative vs max dims
            const geom::Mat3 ident = geom::Mat3::Identity();
            std::vector<BRepLiteShape> parts;
            parts.push_back(transformed(box, ident, Vec3(0, 0, 0)));
            parts.push_back(transformed(cyl, ident, Vec3(pitch, 0, 0)));
            parts.push_back(transformed(cone, ident, Vec3(0, pitch, 0)));
            parts.push_back(transformed(ball, ident, Vec3(pitch, pitch, 0)));
            shape = merge(std::move(parts));
            break;
        }
    }
    switch (spec.rotation) {
        case RotMode::None:
            break;
        case RotMode::AxisZ: {
            const double a = rng.uniform(0.0, 2.0 * M_PI);
            geom::Mat3 R;
            R << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
            shape = transformed(shape, R, Vec3::Zero());
            break;
        }
        case RotMode::SO3:
            shape = transformed(shape, rng.rotation_so3(), Vec3::Zero());
            break;
    }
    shape.validate();
    return shape;
}

// --- tessellation ---

double TriMesh::triangle_area(int t) const {
    const auto& tri = triangles[static_cast<size_t>(t)];
    const Vec3 a = vertices.row(tri[0]), b = vertices.row(tri[1]), c = vertices.row(tri[2]);
    return 0.5 * (b - a).cross(c - a).norm();
}

double TriMesh::area() const {
    double s = 0.0;
    for (int t = 0; t < static_cast<int>(triangles.size()); ++t) s += triangle_area(t);
    return s;
}

void TriMesh::validate() const {
    if (face_of_triangle.size() != triangles.size())
        throw std::runtime_error("face_of_triangle length mismatch");
    const int nv = static_cast<int>(vertices.rows());
    for (size_t t = 0; t < triangles.size(); ++t) {
        for (int i : triangles[t])
            if (i < 0 || i >= nv) throw std::runtime_error("triangle index out of range");
        if (triangle_area(static_cast<int>(t)) <= 0.0)
            throw std::runtime_error("degenerate triangle");
    }
}

namespace {

struct MeshBuilder {
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    std::vector<int> tri_face;

    int add_vertex(const Vec3& v) {
        verts.push_back(v);
        return static_cast<int>(verts.size()) - 1;
    }
    void add_triangle(int a, int b, int c, int face, const Vec3& outward) {
        const Vec3 va = verts[static_cast<size_t>(a)], vb = verts[static_cast<size_t>(b)],
                   vc = verts[static_cast<size_t>(c)];
        const Vec3 n = (vb - va).cross(vc - va);
        if (n.norm() < 1e-14) return;  // skip degenerate slivers
        if (n.dot(outward) < 0.0) std::swap(b, c);
        tris.push_back({a, b, c});
        tri_face.push_back(face);
    }
};

void tessellate_polygon(MeshBuilder& mb, const Face& f) {
    const auto& poly = f.patch.poly;
    const int base = mb.add_vertex(poly[0]);
    for (size_t i = 1; i + 1 < poly.size(); ++i) {
        const int v1 = mb.add_vertex(poly[i]);
        const int v2 = mb.add_vertex(poly[i + 1]);
        mb.add_triangle(base, v1, v2, f.id, f.surface.axis);
    }
}

void tessellate_disk(MeshBuilder& mb, const Face& f, double mel) {
    const double r = f.patch.r0;
    const int n = std::max(8, static_cast<int>(std::ceil(2.0 * M_PI * r / mel)));
    const Vec3 c = f.surface.point;
    const int center = mb.add_vertex(c);
    std::vector<int> ring(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * M_PI * i / n;
        ring[static_cast<size_t>(i)] =
            mb.add_vertex(c + r * (std::cos(a) * f.patch.frame_u + std::sin(a) * f.patch.frame_v));
    }
    for (int i = 0; i < n; ++i)
        mb.add_triangle(center, ring[static_cast<size_t>(i)], ring[static_cast<size_t>((i + 1) % n)],
                        f.id, f.surface.axis);
}

void tessellate_cylinder_band(MeshBuilder& mb, const Face& f, double mel) {
    const auto& p = f.patch;
    const double r = f.surface.radius;
    const double ang = p.ang1 - p.ang0;
    const int nth = std::max(8, static_cast<int>(std::ceil(r * ang / mel)));
    const int nt = std::max(1, static_cast<int>(std::ceil((p.t1 - p.t0) / mel)));
    const bool closed = std::abs(ang - 2.0 * M_PI) < 1e-12;
    const int cols = closed ? nth : nth + 1;
    std::vector<int> grid(static_cast<size_t>(cols * (nt + 1)));
    for (int j = 0; j <= nt; ++j) {
        const double t = p.t0 + (p.t1 - p.t0) * j / nt;
        for (int i = 0; i < cols; ++i) {
            const double a = p.ang0 + ang * i / nth;
            const Vec3 v = f.surface.point + t * f.surface.axis +
                           r * (std::cos(a) * p.frame_u + std::sin(a) * p.frame_v);
            grid[static_cast<size_t>(j * cols + i)] = mb.add_vertex(v);
        }
    }
    for (int j = 0; j < nt; ++j) {
        for (int i = 0; i < nth; ++i) {
            const int i1 = closed ? (i + 1) % nth : i + 1;
            const int v00 = grid[static_cast<size_t>(j * cols + i)];
            const int v01 = grid[static_cast<size_t>(j * cols + i1)];
            const int v10 = grid[static_cast<size_t>((j + 1) * cols + i)];
            const int v11 = grid[static_cast<size_t>((j + 1) * cols + i1)];
            const Vec3 mid = (mb.verts[static_cast<size_t>(v00)] + mb.verts[static_cast<size_t>(v11)]) / 2.0;
            const Vec3 outward = geom::surface_normal(f.surface, mid);
            mb.add_triangle(v00, v01, v11, f.id, outward);
            mb.add_triangle(v00, v11, v10, f.id, outward);
        }
    }
}

void tessellate_cone_band(MeshBuilder& mb, const Face& f, double mel) {
    const auto& p = f.patch;
    const double ta = std::tan(f.surface.half_angle);
    const double ca = std::cos(f.surface.half_angle);
    const double ang = p.ang1 - p.ang0;
    const double rmax = p.t1 * ta;
    const int nth = std::max(8, static_cast<int>(std::ceil(rmax * ang / mel)));
    const double slant = (p.t1 - p.t0) / ca;
    const int ns = std::max(1, static_cast<int>(std::ceil(slant / mel)));
    const bool closed = std::abs(ang - 2.0 * M_PI) < 1e-12;
    const int cols = closed ? nth : nth + 1;

    auto ring_vertex = [&](double s, int i) {
        const double a = p.ang0 + ang * i / nth;
        return f.surface.point + s * f.surface.axis +
               s * ta * (std::cos(a) * p.frame_u + std::sin(a) * p.frame_v);
    };

    std::vector<std::vector<int>> rows(static_cast<size_t>(ns + 1));
    for (int j = 0; j <= ns; ++j) {
        const double s = p.t0 + (p.t1 - p.t0) * j / ns;
        if (s == 0.0) {
            rows[static_cast<size_t>(j)] = {mb.add_vertex(f.surface.point)};
            continue;
        }
        rows[static_cast<size_t>(j)].resize(static_cast<size_t>(cols));
        for (int i = 0; i < cols; ++i)
            rows[static_cast<size_t>(j)][static_cast<size_t>(i)] = mb.add_vertex(ring_vertex(s, i));
    }
    for (int j = 0; j < ns; ++j) {
        const auto& lo = rows[static_cast<size_t>(j)];
        const auto& hi = rows[static_cast<size_t>(j + 1)];
        if (lo.size() == 1) {  // apex fan
            for (int i = 0; i < nth; ++i) {
                const int i1 = closed ? (i + 1) % nth : i + 1;
                const Vec3 mid = mb.verts[static_cast<size_t>(hi[static_cast<size_t>(i)])];
                mb.add_triangle(lo[0], hi[static_cast<size_t>(i)], hi[static_cast<size_t>(i1)], f.id,
                                geom::surface_normal(f.surface, mid));
            }
            continue;
        }
        for (int i = 0; i < nth; ++i) {
            const int i1 = closed ? (i + 1) % nth : i + 1;
            const int v00 = lo[static_cast<size_t>(i)], v01 = lo[static_cast<size_t>(i1)];
            const int v10 = hi[static_cast<size_t>(i)], v11 = hi[static_cast<size_t>(i1)];
            const Vec3 mid = (mb.verts[static_cast<size_t>(v00)] + mb.verts[static_cast<size_t>(v11)]) / 2.0;
            const Vec3 outward = geom::surface_normal(f.surface, mid);
            mb.add_triangle(v00, v01, v11, f.id, outward);
            mb.add_triangle(v00, v11, v10, f.id, outward);
        }
    }
}

void tessellate_sphere(MeshBuilder& mb, const Face& f, double mel) {
    const double r = f.surface.radius;
    const Vec3 c = f.surface.point;
    const int nth = std::max(8, static_cast<int>(std::ceil(2.0 * M_PI * r / mel)));
    const int nph = std::max(4, static_cast<int>(std::ceil(M_PI * r / mel)));
    const int north = mb.add_vertex(c + Vec3(0, 0, r));
    const int south = mb.add_vertex(c - Vec3(0, 0, r));
    std::vector<std::vector<int>> rings(static_cast<size_t>(nph - 1));
    for (int j = 1; j < nph; ++j) {
        const double phi = M_PI * j / nph;
        auto& ring = rings[static_cast<size_t>(j - 1)];
        ring.resize(static_cast<size_t>(nth));
        for (int i = 0; i < nth; ++i) {
            const double a = 2.0 * M_PI * i / nth;
            ring[static_cast<size_t>(i)] = mb.add_vertex(
                c + r * Vec3(std::sin(phi) * std::cos(a), std::sin(phi) * std::sin(a), std::cos(phi)));
        }
    }
    auto outward = [&](int v) { return (mb.verts[static_cast<size_t>(v)] - c).normalized(); };
    for (int i = 0; i < nth; ++i) {
        const int i1 = (i + 1) % nth;
        mb.add_triangle(north, rings.front()[static_cast<size_t>(i)],
                        rings.front()[static_cast<size_t>(i1)], f.id,
                        outward(rings.front()[static_cast<size_t>(i)]));
        mb.add_triangle(south, rings.back()[static_cast<size_t>(i1)],
                        rings.back()[static_cast<size_t>(i)], f.id,
                        outward(rings.back()[static_cast<size_t>(i)]));
    }
    for (int j = 0; j + 1 < nph - 1; ++j) {
        const auto& lo = rings[static_cast<size_t>(j)];
        const auto& hi = rings[static_cast<size_t>(j + 1)];
        for (int i = 0; i < nth; ++i) {
            const int i1 = (i + 1) % nth;
            const Vec3 mid = (mb.verts[static_cast<size_t>(lo[static_cast<size_t>(i)])] +
                              mb.verts[static_cast<size_t>(hi[static_cast<size_t>(i1)])]) /
                             2.0;
            mb.add_triangle(lo[static_cast<size_t>(i)], lo[static_cast<size_t>(i1)],
                            hi[static_cast<size_t>(i1)], f.id, (mid - c).normalized());
            mb.add_triangle(lo[static_cast<size_t>(i)], hi[static_cast<size_t>(i1)],
                            hi[static_cast<size_t>(i)], f.id, (mid - c).normalized());
        }
    }
}

}  // namespace

TriMesh tessellate(const BRepLiteShape& shape, double max_edge_len) {
    if (!(max_edge_len > 0.0)) throw ValidationError("max_edge_len must be positive");
    MeshBuilder mb;
    for (const auto& f : shape.faces) {
        switch (f.patch.kind) {
            case FacePatch::Kind::Polygon: tessellate_polygon(mb, f); break;
            case FacePatch::Kind::Disk: tessellate_disk(mb, f, max_edge_len); break;
            case FacePatch::Kind::CylinderBand: tessellate_cylinder_band(mb, f, max_edge_len); break;
            case FacePatch::Kind::ConeBand: tessellate_cone_band(mb, f, max_edge_len); break;
            case FacePatch::Kind::SphereFull: tessellate_sphere(mb, f, max_edge_len); break;
        }
    }
    TriMesh mesh;
    mesh.vertices.resize(static_cast<Eigen::Index>(mb.verts.size()), 3);
    for (size_t i = 0; i < mb.verts.size(); ++i) mesh.vertices.row(static_cast<Eigen::Index>(i)) = mb.verts[i];
    mesh.triangles = std::move(mb.tris);
    mesh.face_of_triangle = std::move(mb.tri_face);
    mesh.face_surfaces.reserve(shape.faces.size());
    for (const auto& f : shape.faces) mesh.face_surfaces.push_back(f.surface);
    mesh.validate();
    return mesh;
}

// --- Poisson-disk sampling by weighted sample elimination ---

namespace {

Vec3 project_to_surface(const Primitive& p, const Vec3& x) {
    switch (p.kind) {
        case geom::PrimitiveKind::Plane:
            return x - geom::signed_distance(p, x) * p.axis;
        case geom::PrimitiveKind::Cylinder: {
            const Vec3 d = x - p.point;
            const double t = d.dot(p.axis);
            Vec3 radial = d - t * p.axis;
            const double n = radial.norm();
            if (n < 1e-14) return p.point + t * p.axis + p.radius * p.axis.unitOrthogonal();
            return p.point + t * p.axis + (p.radius / n) * radial;
        }
        case geom::PrimitiveKind::Sphere: {
            const Vec3 d = x - p.point;
            const double n = d.norm();
            if (n < 1e-14) return p.point + p.radius * Vec3::UnitZ();
            return p.point + (p.radius / n) * d;
        }
        case geom::PrimitiveKind::Cone: {
            const Vec3 d = x - p.point;
            const double t = d.dot(p.axis);
            Vec3 radial = d - t * p.axis;
            const double rho = radial.norm();
            const double sa = std::sin(p.half_angle), ca = std::cos(p.half_angle);
            const double s = rho * sa + t * ca;  // slant parameter
            if (s <= 0.0 || rho < 1e-14) return p.point;
            const Vec3 u = radial / rho;
            return p.point + (s * ca) * p.axis + (s * sa) * u;
        }
        case geom::PrimitiveKind::Other:
            return x;
    }
    return x;
}

struct HashGrid {
    double cell;
    Eigen::RowVector3d origin;
    std::unordered_map<std::uint64_t, std::vector<int>> cells;

    static std::uint64_t key(int ix, int iy, int iz) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 42) ^
               (static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy)) << 21) ^
               static_cast<std::uint64_t>(static_cast<std::uint32_t>(iz));
    }
    std::array<int, 3> index(const Eigen::RowVector3d& p) const {
        return {static_cast<int>(std::floor((p.x() - origin.x()) / cell)),
                static_cast<int>(std::floor((p.y() - origin.y()) / cell)),
                static_cast<int>(std::floor((p.z() - origin.z()) / cell))};
    }
    void insert(const Eigen::RowVector3d& p, int id) {
        const auto ix = index(p);
        cells[key(ix[0], ix[1], ix[2])].push_back(id);
    }
    template <typename F>
    void for_neighbors(const Eigen::RowVector3d& p, F&& fn) const {
        const auto ix = index(p);
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const auto it = cells.find(key(ix[0] + dx, ix[1] + dy, ix[2] + dz));
                    if (it == cells.end()) continue;
                    for (int id : it->second) fn(id);
                }
    }
};

}  // namespace

LabeledCloud sample_poisson_disk(const TriMesh& mesh, int n, std::uint64_t seed) {
    if (n < 16) throw ValidationError("sample count must be at least 16");
    const double total_area = mesh.area();
    if (!(total_area > 0.0)) throw ValidationError("degenerate mesh");

    const int m = 4 * n;
    Rng rng(seed);

    // Area-weighted pre-sample.
    std::vector<double> cdf(mesh.triangles.size());
    double acc = 0.0;
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        acc += mesh.triangle_area(static_cast<int>(t));
        cdf[t] = acc;
    }
    PointMatrix pre(m, 3);
    std::vector<int> pre_face(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        const double u = rng.uniform() * acc;
        const size_t t = static_cast<size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const auto& tri = mesh.triangles[std::min(t, mesh.triangles.size() - 1)];
        const double r1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        const Vec3 a = mesh.vertices.row(tri[0]), b = mesh.vertices.row(tri[1]),
                   c = mesh.vertices.row(tri[2]);
        Vec3 x = (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c;
        const int fid = mesh.face_of_triangle[std::min(t, mesh.triangles.size() - 1)];
        x = project_to_surface(mesh.face_surfaces[static_cast<size_t>(fid)], x);
        pre.row(i) = x;
        pre_face[static_cast<size_t>(i)] = fid;
    }

    // Weighted elimination down to n survivors (weight favors crowded points).
    const double r_target = std::sqrt(total_area / (n * 2.0 * std::sqrt(3.0)));
    const double r2max = 2.0 * r_target;
    HashGrid grid;
    grid.cell = r2max;
    grid.origin = pre.colwise().minCoeff();
    for (int i = 0; i < m; ++i) grid.insert(pre.row(i), i);

    auto wfun = [&](double d) {
        const double t = 1.0 - d / r2max;
        if (t <= 0.0) return 0.0;
        const double t2 = t * t;
        return t2 * t2 * t2 * t2;
    };

    std::vector<double> weight(static_cast<size_t>(m), 0.0);
    std::vector<std::vector<int>> nbrs(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        grid.for_neighbors(pre.row(i), [&](int j) {
            if (j == i) return;
            const double d = (pre.row(i) - pre.row(j)).norm();
            if (d < r2max) {
                nbrs[static_cast<size_t>(i)].push_back(j);
                weight[static_cast<size_t>(i)] += wfun(d);
            }
        });
        std::sort(nbrs[static_cast<size_t>(i)].begin(), nbrs[static_cast<size_t>(i)].end());
    }

    std::priority_queue<std::pair<double, int>> heap;
    for (int i = 0; i < m; ++i) heap.push({weight[static_cast<size_t>(i)], i});
    std::vector<char> alive(static_cast<size_t>(m), 1);
    int alive_count = m;
    while (alive_count > n && !heap.empty()) {
        const auto [w, i] = heap.top();
        heap.pop();
        if (!alive[static_cast<size_t>(i)]) continue;
        if (w != weight[static_cast<size_t>(i)]) continue;  // stale entry
        alive[static_cast<size_t>(i)] = 0;
        --alive_count;
        for (int j : nbrs[static_cast<size_t>(i)]) {
            if (!alive[static_cast<size_t>(j)]) continue;
            const double d = (pre.row(i) - pre.row(j)).norm();
            weight[static_cast<size_t>(j)] -= wfun(d);
            heap.push({weight[static_cast<size_t>(j)], j});
        }
    }

    LabeledCloud cloud;
    cloud.points.resize(alive_count, 3);
    cloud.face_ids.reserve(static_cast<size_t>(alive_count));
    Eigen::Index row = 0;
    for (int i = 0; i < m; ++i) {
        if (!alive[static_cast<size_t>(i)]) continue;
        cloud.points.row(row++) = pre.row(i);
        cloud.face_ids.push_back(pre_face[static_cast<size_t>(i)]);
    }
    cloud.sampling_warning = (alive_count != n);
    return cloud;
}

void save_obj(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "# cstcloud mesh export\n";
    for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i)
        f << "v " << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' '
          << mesh.vertices(i, 2) << '\n';
    for (const auto& t : mesh.triangles)
        f << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

}  // namespace cstcloud::gen
