#pragma once

#include "cstcloud/cloud.hpp"
#include "cstcloud/geometry.hpp"

#include <vector>

namespace cstcloud::oracle {

/// An edge is valid when the two adjacent surfaces meet with a normal jump
/// larger than smooth_tol_rad at one or more polyline samples. Normals are
/// compared up to sign.
std::vector<int> valid_edges(const geom::BRepLiteShape& shape, double smooth_tol_rad = 1e-2);

/// Near-edge distance threshold: coeff * total_area / (4 pi), as printed.
/// The sqrt variant coeff * sqrt(area / (4 pi)) is available for experiments.
double adjacency_threshold(const geom::BRepLiteShape& shape, double coeff = 0.08,
                           bool sqrt_variant = false);

struct LabelOptions {
    double coeff = 0.08;
    bool sqrt_variant = false;
    double smooth_tol_rad = 1e-2;
};

struct LabelStats {
    int far_point_warnings = 0;  // points beyond 10x threshold from every face
    double threshold = 0.0;
    int valid_edge_count = 0;
};

/// Ground-truth MAD-Adj-PT for every point. Attachment uses the cloud's
/// face_ids when present, otherwise the face with smallest |signed_distance|
/// (ties to the lowest id).
LabelStats label_cloud(const geom::BRepLiteShape& shape, LabeledCloud& cloud,
                       const LabelOptions& opts = {});

}  // namespace cstcloud::oracle
