#include "cstcloud/oracle.hpp"

#include "cstcloud/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cstcloud::oracle {

using geom::Vec3;

std::vector<int> valid_edges(const geom::BRepLiteShape& shape, double smooth_tol_rad) {
    std::vector<int> out;
    for (const auto& e : shape.edges) {
        const auto& fa = shape.faces[static_cast<size_t>(e.adjacent_faces[0])];
        const auto& fb = shape.faces[static_cast<size_t>(e.adjacent_faces[1])];
        bool valid = false;
        for (const auto& p : e.polyline) {
            const Vec3 na = geom::surface_normal(fa.surface, p);
            const Vec3 nb = geom::surface_normal(fb.surface, p);
            // Compare up to sign so face orientation cannot fake a crease.
            const double c = std::min(1.0, std::abs(na.dot(nb)));
            if (std::acos(c) > smooth_tol_rad) {
                valid = true;
                break;
            }
        }
        if (valid) out.push_back(e.id);
    }
    return out;
}

double adjacency_threshold(const geom::BRepLiteShape& shape, double coeff, bool sqrt_variant) {
    const double area = shape.total_area();
    if (!(area > 0.0)) throw ValidationError("shape has no area");
    if (sqrt_variant) return coeff * std::sqrt(area / (4.0 * M_PI));
    return coeff * area / (4.0 * M_PI);
}

LabelStats label_cloud(const geom::BRepLiteShape& shape, LabeledCloud& cloud,
                       const LabelOptions& opts) {
    cloud.validate();
    const auto n = cloud.points.rows();
    LabelStats stats;
    stats.threshold = adjacency_threshold(shape, opts.coeff, opts.sqrt_variant);
    const auto valid = valid_edges(shape, opts.smooth_tol_rad);
    stats.valid_edge_count = static_cast<int>(valid.size());
    const bool have_ids = !cloud.face_ids.empty();

    cloud.labels.assign(static_cast<size_t>(n), ConstraintLabel{});
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 x = cloud.points.row(i);
        int fid = -1;
        if (have_ids) {
            fid = cloud.face_ids[static_cast<size_t>(i)];
        } else {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& f : shape.faces) {
                const double d = std::abs(geom::signed_distance(f.surface, x));
                if (d < best) {
                    best = d;
                    fid = f.id;
                }
            }
            if (best > 10.0 * stats.threshold) {
                ++stats.far_point_warnings;
                fid = -1;
            }
        }

        auto& lb = cloud.labels[static_cast<size_t>(i)];
        if (fid < 0 || fid >= static_cast<int>(shape.faces.size())) {
            lb.pt = static_cast<int>(geom::PrimitiveKind::Other);
            lb.mad = Vec3::Zero();
            lb.adj = 1;
        } else {
            const auto& face = shape.faces[static_cast<size_t>(fid)];
            lb.pt = static_cast<int>(face.surface.kind);
            lb.mad = geom::mad_of_primitive(face.surface);
            lb.adj = 0;
        }

        double dmin = std::numeric_limits<double>::infinity();
        for (int eid : valid)
            dmin = std::min(dmin, geom::point_polyline_distance(x, shape.edges[static_cast<size_t>(eid)].polyline));
        if (fid >= 0) lb.adj = dmin < stats.threshold ? 1 : 0;
    }
    return stats;
}

}  // namespace cstcloud::oracle
