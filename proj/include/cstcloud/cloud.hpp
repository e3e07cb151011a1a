#pragma once

#include "cstcloud/geometry.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cstcloud {

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Per-point constraint attributes. adj is the {NearEdge, NotNearEdge}
/// choice stored as an index (1 = near edge); pt indexes the 5 primitive
/// kinds in PrimitiveKind order.
struct ConstraintLabel {
    geom::Vec3 mad = geom::Vec3::Zero();
    int adj = 0;  // 0 = not near edge, 1 = near edge
    int pt = static_cast<int>(geom::PrimitiveKind::Other);
};

struct LabeledCloud {
    PointMatrix points;                        // N x 3
    std::vector<ConstraintLabel> labels;       // empty or size N
    std::vector<int> face_ids;                 // empty or size N
    std::optional<int> class_id;
    bool sampling_warning = false;             // set when the target count was unreachable

    Eigen::Index size() const { return points.rows(); }
    bool has_labels() const { return !labels.empty(); }

    void validate() const;
};

/// Bounding-box diagonal length of a cloud.
double bbox_diagonal(const PointMatrix& pts);

/// Centroid to origin, uniform scale so the extent fits a unit cube.
PointMatrix normalize_to_unit_cube(const PointMatrix& pts);

/// Adds N(0, sigma) jitter per coordinate (labels untouched).
void add_gaussian_jitter(LabeledCloud& cloud, double sigma, std::uint64_t seed);

// --- .cstpc text format ---
// Header "cstpc 1 N has_labels class_id", then N whitespace-delimited rows:
// labeled "x y z madx mady madz adj pt", unlabeled "x y z".
void save_cstpc(const LabeledCloud& cloud, const std::string& path);
LabeledCloud load_cstpc(const std::string& path);

// Face-id sidecar (one integer per point) written by the generator so that
// labeling can use exact attachment.
void save_face_ids(const std::vector<int>& ids, const std::string& path);
std::vector<int> load_face_ids(const std::string& path);

}  // namespace cstcloud
