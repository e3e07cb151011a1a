#include "cstcloud/geometry.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cstcloud::geom {

using nlohmann::json;

const char* to_string(PrimitiveKind k) {
    switch (k) {
        case PrimitiveKind::Plane: return "plane";
        case PrimitiveKind::Cylinder: return "cylinder";
        case PrimitiveKind::Cone: return "cone";
        case PrimitiveKind::Sphere: return "sphere";
        case PrimitiveKind::Other: return "other";
    }
    return "other";
}

Primitive Primitive::plane(const Vec3& p0, const Vec3& normal) {
    Primitive p;
    p.kind = PrimitiveKind::Plane;
    p.point = p0;
    p.axis = normal.normalized();
    return p;
}

Primitive Primitive::cylinder(const Vec3& axis_point, const Vec3& axis, double radius) {
    Primitive p;
    p.kind = PrimitiveKind::Cylinder;
    p.point = axis_point;
    p.axis = axis.normalized();
    p.radius = radius;
    return p;
}

Primitive Primitive::cone(const Vec3& apex, const Vec3& axis, double half_angle) {
    Primitive p;
    p.kind = PrimitiveKind::Cone;
    p.point = apex;
    p.axis = axis.normalized();
    p.half_angle = half_angle;
    return p;
}

Primitive Primitive::sphere(const Vec3& center, double radius, const Vec3& axis) {
    Primitive p;
    p.kind = PrimitiveKind::Sphere;
    p.point = center;
    p.radius = radius;
    if (axis.norm() > 0.0) p.axis = axis.normalized();
    return p;
}

Primitive Primitive::other() { return Primitive{}; }

bool Primitive::valid() const {
    switch (kind) {
        case PrimitiveKind::Plane:
            return std::abs(axis.norm() - 1.0) < kUnitTol;
        case PrimitiveKind::Cylinder:
            return std::abs(axis.norm() - 1.0) < kUnitTol && radius > 0.0;
        case PrimitiveKind::Cone:
            return std::abs(axis.norm() - 1.0) < kUnitTol && half_angle > 0.0 &&
                   half_angle < M_PI / 2.0;
        case PrimitiveKind::Sphere: {
            const double an = axis.norm();
            return radius > 0.0 && (an < kUnitTol || std::abs(an - 1.0) < kUnitTol);
        }
        case PrimitiveKind::Other:
            return true;
    }
    return false;
}

Vec3 mad_of_primitive(const Primitive& p) {
    switch (p.kind) {
        case PrimitiveKind::Plane:
        case PrimitiveKind::Cylinder:
        case PrimitiveKind::Cone:
            return canonicalize_direction(p.axis);
        case PrimitiveKind::Sphere:
            return p.axis.norm() > 0.0 ? canonicalize_direction(p.axis) : Vec3::Zero();
        case PrimitiveKind::Other:
            return Vec3::Zero();
    }
    return Vec3::Zero();
}

double signed_distance(const Primitive& p, const Vec3& x) {
    switch (p.kind) {
        case PrimitiveKind::Plane:
            return p.axis.dot(x - p.point);
        case PrimitiveKind::Cylinder: {
            const Vec3 d = x - p.point;
            const Vec3 radial = d - d.dot(p.axis) * p.axis;
            return radial.norm() - p.radius;
        }
        case PrimitiveKind::Sphere:
            return (x - p.point).norm() - p.radius;
        case PrimitiveKind::Cone: {
            const Vec3 d = x - p.point;
            const double t = d.dot(p.axis);
            const double rho = (d - t * p.axis).norm();
            const double sa = std::sin(p.half_angle), ca = std::cos(p.half_angle);
            // Projection onto the slant ray; behind the apex the apex is closest.
            if (rho * sa + t * ca >= 0.0) return rho * ca - t * sa;
            return std::sqrt(rho * rho + t * t);
        }
        case PrimitiveKind::Other:
            return std::numeric_limits<double>::infinity();
    }
    return std::numeric_limits<double>::infinity();
}

Vec3 surface_normal(const Primitive& p, const Vec3& x) {
    switch (p.kind) {
        case PrimitiveKind::Plane:
            return p.axis;
        case PrimitiveKind::Cylinder: {
            const Vec3 d = x - p.point;
            Vec3 radial = d - d.dot(p.axis) * p.axis;
            const double n = radial.norm();
            if (n < 1e-12) return p.axis.unitOrthogonal();
            return radial / n;
        }
        case PrimitiveKind::Sphere: {
            const Vec3 d = x - p.point;
            const double n = d.norm();
            if (n < 1e-12) return Vec3::UnitZ();
            return d / n;
        }
        case PrimitiveKind::Cone: {
            const Vec3 d = x - p.point;
            const double t = d.dot(p.axis);
            Vec3 radial = d - t * p.axis;
            const double n = radial.norm();
            if (n < 1e-12) return p.axis.unitOrthogonal();
            const Vec3 u = radial / n;
            return std::cos(p.half_angle) * u - std::sin(p.half_angle) * p.axis;
        }
        case PrimitiveKind::Other:
            return Vec3::UnitZ();
    }
    return Vec3::UnitZ();
}

double face_area(const Primitive& surface, const FacePatch& patch) {
    switch (patch.kind) {
        case FacePatch::Kind::Polygon: {
            // Shoelace around the loop, projected on the plane normal.
            const auto& v = patch.poly;
            if (v.size() < 3) return 0.0;
            Vec3 acc = Vec3::Zero();
            for (size_t i = 0; i < v.size(); ++i) {
                const Vec3& a = v[i];
                const Vec3& b = v[(i + 1) % v.size()];
                acc += a.cross(b);
            }
            return 0.5 * std::abs(acc.dot(surface.axis));
        }
        case FacePatch::Kind::Disk:
            return M_PI * patch.r0 * patch.r0;
        case FacePatch::Kind::CylinderBand:
            return (patch.ang1 - patch.ang0) * surface.radius * (patch.t1 - patch.t0);
        case FacePatch::Kind::ConeBand: {
            const double ta = std::tan(surface.half_angle);
            const double ca = std::cos(surface.half_angle);
            return 0.5 * (patch.ang1 - patch.ang0) * (ta / ca) *
                   (patch.t1 * patch.t1 - patch.t0 * patch.t0);
        }
        case FacePatch::Kind::SphereFull:
            return 4.0 * M_PI * surface.radius * surface.radius;
    }
    return 0.0;
}

double BRepLiteShape::total_area() const {
    double a = 0.0;
    for (const auto& f : faces) a += f.area;
    return a;
}

void BRepLiteShape::validate() const {
    for (const auto& e : edges) {
        if (e.polyline.size() < 2) throw std::runtime_error("edge polyline too short");
        if (e.adjacent_faces[0] == e.adjacent_faces[1])
            throw std::runtime_error("edge adjacent faces not distinct");
        for (int fid : e.adjacent_faces) {
            if (fid < 0 || fid >= static_cast<int>(faces.size()))
                throw std::runtime_error("edge references missing face");
        }
    }
    for (const auto& f : faces) {
        if (!f.surface.valid()) throw std::runtime_error("invalid primitive on face");
        if (f.area <= 0.0) throw std::runtime_error("non-positive face area");
        const double a = face_area(f.surface, f.patch);
        if (std::abs(a - f.area) > 1e-9 * std::max(1.0, f.area))
            throw std::runtime_error("face area inconsistent with patch");
    }
}

BRepLiteShape transformed(const BRepLiteShape& s, const Mat3& rot, const Vec3& trans) {
    BRepLiteShape out = s;
    for (auto& f : out.faces) {
        f.surface.point = rot * f.surface.point + trans;
        f.surface.axis = rot * f.surface.axis;
        f.patch.frame_u = rot * f.patch.frame_u;
        f.patch.frame_v = rot * f.patch.frame_v;
        for (auto& v : f.patch.poly) v = rot * v + trans;
    }
    for (auto& e : out.edges)
        for (auto& v : e.polyline) v = rot * v + trans;
    return out;
}

double point_polyline_distance(const Vec3& x, const std::vector<Vec3>& poly) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < poly.size(); ++i) {
        const Vec3& a = poly[i];
        const Vec3 ab = poly[i + 1] - a;
        const double len2 = ab.squaredNorm();
        double t = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, (x - (a + t * ab)).norm());
    }
    return best;
}

// --- JSON ---

namespace {

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }

json primitive_to_json(const Primitive& p) {
    json j;
    j["kind"] = to_string(p.kind);
    j["point"] = vec_to_json(p.point);
    j["axis"] = vec_to_json(p.axis);
    j["radius"] = p.radius;
    j["half_angle"] = p.half_angle;
    return j;
}

PrimitiveKind kind_from_string(const std::string& s) {
    if (s == "plane") return PrimitiveKind::Plane;
    if (s == "cylinder") return PrimitiveKind::Cylinder;
    if (s == "cone") return PrimitiveKind::Cone;
    if (s == "sphere") return PrimitiveKind::Sphere;
    return PrimitiveKind::Other;
}

Primitive primitive_from_json(const json& j) {
    Primitive p;
    p.kind = kind_from_string(j.at("kind"));
    p.point = vec_from_json(j.at("point"));
    p.axis = vec_from_json(j.at("axis"));
    p.radius = j.at("radius");
    p.half_angle = j.at("half_angle");
    return p;
}

const char* patch_kind_name(FacePatch::Kind k) {
    switch (k) {
        case FacePatch::Kind::Polygon: return "polygon";
        case FacePatch::Kind::Disk: return "disk";
        case FacePatch::Kind::CylinderBand: return "cylinder_band";
        case FacePatch::Kind::ConeBand: return "cone_band";
        case FacePatch::Kind::SphereFull: return "sphere_full";
    }
    return "polygon";
}

FacePatch::Kind patch_kind_from(const std::string& s) {
    if (s == "disk") return FacePatch::Kind::Disk;
    if (s == "cylinder_band") return FacePatch::Kind::CylinderBand;
    if (s == "cone_band") return FacePatch::Kind::ConeBand;
    if (s == "sphere_full") return FacePatch::Kind::SphereFull;
    return FacePatch::Kind::Polygon;
}

}  // namespace

std::string to_json(const BRepLiteShape& s) {
    json j;
    j["breplite_version"] = 1;
    if (s.class_id) j["class_id"] = *s.class_id;
    else j["class_id"] = nullptr;
    j["faces"] = json::array();
    for (const auto& f : s.faces) {
        json jf;
        jf["id"] = f.id;
        jf["surface"] = primitive_to_json(f.surface);
        jf["boundary"] = f.boundary;
        jf["area"] = f.area;
        json jp;
        jp["kind"] = patch_kind_name(f.patch.kind);
        jp["frame_u"] = vec_to_json(f.patch.frame_u);
        jp["frame_v"] = vec_to_json(f.patch.frame_v);
        jp["ang0"] = f.patch.ang0;
        jp["ang1"] = f.patch.ang1;
        jp["t0"] = f.patch.t0;
        jp["t1"] = f.patch.t1;
        jp["r0"] = f.patch.r0;
        jp["poly"] = json::array();
        for (const auto& v : f.patch.poly) jp["poly"].push_back(vec_to_json(v));
        jf["patch"] = jp;
        j["faces"].push_back(jf);
    }
    j["edges"] = json::array();
    for (const auto& e : s.edges) {
        json je;
        je["id"] = e.id;
        je["adjacent_faces"] = json::array({e.adjacent_faces[0], e.adjacent_faces[1]});
        je["smooth"] = e.smooth;
        je["polyline"] = json::array();
        for (const auto& v : e.polyline) je["polyline"].push_back(vec_to_json(v));
        j["edges"].push_back(je);
    }
    return j.dump();
}

BRepLiteShape shape_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("breplite_version").get<int>() != 1)
        throw std::runtime_error("unsupported breplite_version");
    BRepLiteShape s;
    if (!j.at("class_id").is_null()) s.class_id = j.at("class_id").get<int>();
    for (const auto& jf : j.at("faces")) {
        Face f;
        f.id = jf.at("id");
        f.surface = primitive_from_json(jf.at("surface"));
        f.boundary = jf.at("boundary").get<std::vector<int>>();
        f.area = jf.at("area");
        const auto& jp = jf.at("patch");
        f.patch.kind = patch_kind_from(jp.at("kind"));
        f.patch.frame_u = vec_from_json(jp.at("frame_u"));
        f.patch.frame_v = vec_from_json(jp.at("frame_v"));
        f.patch.ang0 = jp.at("ang0");
        f.patch.ang1 = jp.at("ang1");
        f.patch.t0 = jp.at("t0");
        f.patch.t1 = jp.at("t1");
        f.patch.r0 = jp.at("r0");
        for (const auto& jv : jp.at("poly")) f.patch.poly.push_back(vec_from_json(jv));
        s.faces.push_back(std::move(f));
    }
    for (const auto& je : j.at("edges")) {
        Edge e;
        e.id = je.at("id");
        e.adjacent_faces = {je.at("adjacent_faces").at(0), je.at("adjacent_faces").at(1)};
        e.smooth = je.at("smooth");
        for (const auto& jv : je.at("polyline")) e.polyline.push_back(vec_from_json(jv));
        s.edges.push_back(std::move(e));
    }
    return s;
}

void save_shape(const BRepLiteShape& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << to_json(s);
}

BRepLiteShape load_shape(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return shape_from_json(ss.str());
}

}  // namespace cstcloud::geom
