#pragma once

#include "cstcloud/cloud.hpp"
#include "cstcloud/geometry.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cstcloud::gen {

enum class Family { Prism, Cuboid, CylinderBlock, ConeBlock, SphereBlock, Composite };
enum class RotMode { None, AxisZ, SO3 };

Family family_from_string(const std::string& s);
const char* to_string(Family f);

/// Seeded generator request. Dimension draws come from size_ranges in a
/// fixed order per family: Prism/Cuboid (a, b, h); CylinderBlock and
/// ConeBlock (r, h); SphereBlock (r). Missing ranges default to [0.5, 2].
struct GenSpec {
    Family family = Family::Cuboid;
    double angle_deg = 90.0;  // Prism only, in (0, 90]
    std::vector<std::array<double, 2>> size_ranges;
    std::uint64_t seed = 0;
    RotMode rotation = RotMode::None;
};

struct TriMesh {
    PointMatrix vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> face_of_triangle;
    std::vector<geom::Primitive> face_surfaces;  // indexed by face id

    double area() const;
    double triangle_area(int t) const;
    void validate() const;
};

geom::BRepLiteShape generate(const GenSpec& spec);

/// Triangulates every face; chords on curved surfaces are kept at or below
/// max_edge_len so the sagitta stays within max_edge_len^2 / (8 r).
TriMesh tessellate(const geom::BRepLiteShape& shape, double max_edge_len);

/// Blue-noise sampling by weighted sample elimination over a 4n area-uniform
/// pre-sample. Points are projected back onto their face's analytic surface;
/// face ids are carried along, labels stay empty.
LabeledCloud sample_poisson_disk(const TriMesh& mesh, int n, std::uint64_t seed);

void save_obj(const TriMesh& mesh, const std::string& path);

// Fixed-dimension builders used by generate() and by tests.
geom::BRepLiteShape build_prism(double a, double b, double h, double angle_rad);
geom::BRepLiteShape build_cylinder_block(double r, double h);
geom::BRepLiteShape build_cone_block(double r, double h);
geom::BRepLiteShape build_sphere_block(double r);

}  // namespace cstcloud::gen
