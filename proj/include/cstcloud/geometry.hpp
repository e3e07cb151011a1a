#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace cstcloud::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kUnitTol = 1e-9;

enum class PrimitiveKind { Plane = 0, Cylinder = 1, Cone = 2, Sphere = 3, Other = 4 };

const char* to_string(PrimitiveKind k);

/// Analytic surface. Field use depends on kind:
///   Plane:    point = p0, axis = unit normal
///   Cylinder: point = axis point, axis = unit axis, radius > 0
///   Cone:     point = apex, axis = unit axis into the opening, half_angle in (0, pi/2)
///   Sphere:   point = center, radius > 0, axis = construction axis or zero
///   Other:    none
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::Other;
    Vec3 point = Vec3::Zero();
    Vec3 axis = Vec3::Zero();
    double radius = 0.0;
    double half_angle = 0.0;

    static Primitive plane(const Vec3& p0, const Vec3& normal);
    static Primitive cylinder(const Vec3& axis_point, const Vec3& axis, double radius);
    static Primitive cone(const Vec3& apex, const Vec3& axis, double half_angle);
    static Primitive sphere(const Vec3& center, double radius, const Vec3& axis = Vec3::Zero());
    static Primitive other();

    bool valid() const;
};

/// Flips v so the first component with magnitude > 1e-9 (in x,y,z order) is
/// positive, and normalizes. Zero vectors pass through unchanged.
template <typename Derived>
Vec3 canonicalize_direction(const Eigen::MatrixBase<Derived>& v) {
    Vec3 d = v;
    const double n = d.norm();
    if (n == 0.0) return d;
    d /= n;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) > kUnitTol) {
            if (d[i] < 0.0) d = -d;
            break;
        }
    }
    return d;
}

/// Main axis direction of a primitive: plane normal or rotation axis,
/// canonicalized. Spheres without a construction axis and Other yield the
/// zero vector.
Vec3 mad_of_primitive(const Primitive& p);

/// Orthogonal distance from x to the surface. Planes are signed by the
/// normal; cylinders/spheres use distance-minus-radius; cones use the exact
/// axial-plane distance (0 at the apex). Other returns +infinity.
double signed_distance(const Primitive& p, const Vec3& x);

/// Outward surface normal at a point on (or near) the surface.
Vec3 surface_normal(const Primitive& p, const Vec3& x);

/// Bounded extent of a face, used for tessellation and analytic area.
struct FacePatch {
    enum class Kind { Polygon, Disk, CylinderBand, ConeBand, SphereFull };
    Kind kind = Kind::Polygon;
    std::vector<Vec3> poly;     // Polygon: planar convex loop
    Vec3 frame_u = Vec3::UnitX();  // Disk/bands: in-plane basis, orthonormal with the axis
    Vec3 frame_v = Vec3::UnitY();
    double ang0 = 0.0, ang1 = 0.0;  // bands: angular range
    double t0 = 0.0, t1 = 0.0;      // bands: axial range (cone: axial distance from apex)
    double r0 = 0.0;                // Disk: radius
};

struct Face {
    int id = -1;
    Primitive surface;
    std::vector<int> boundary;  // edge ids
    double area = 0.0;
    FacePatch patch;
};

struct Edge {
    int id = -1;
    std::vector<Vec3> polyline;    // >= 2 samples along the curve
    std::array<int, 2> adjacent_faces{-1, -1};
    bool smooth = false;
};

struct BRepLiteShape {
    std::vector<Face> faces;
    std::vector<Edge> edges;
    std::optional<int> class_id;

    double total_area() const;
    /// Referential integrity + area consistency; throws std::runtime_error on violation.
    void validate() const;
};

/// Analytic area of a bounded face (polygon shoelace or closed form).
double face_area(const Primitive& surface, const FacePatch& patch);

/// Rigid transform applied to every analytic entity (primitives, patches, polylines).
BRepLiteShape transformed(const BRepLiteShape& s, const Mat3& rot, const Vec3& trans);

/// Exact distance from a point to a polyline (minimum over segments).
double point_polyline_distance(const Vec3& x, const std::vector<Vec3>& poly);

// --- JSON serialization ("breplite_version": 1) ---
std::string to_json(const BRepLiteShape& s);
BRepLiteShape shape_from_json(const std::string& text);
void save_shape(const BRepLiteShape& s, const std::string& path);
BRepLiteShape load_shape(const std::string& path);

}  // namespace cstcloud::geom
