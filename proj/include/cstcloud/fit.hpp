#pragma once

#include "cstcloud/cloud.hpp"
#include "cstcloud/geometry.hpp"
#include "cstcloud/spatial.hpp"

#include <optional>

namespace cstcloud::fit {

struct FitResult {
    geom::PrimitiveKind kind = geom::PrimitiveKind::Other;
    geom::Primitive prim;
    double rms_residual = 0.0;
    int inlier_count = 0;
    bool converged = true;
};

/// Total-least-squares plane (centroid + smallest principal direction).
std::optional<FitResult> fit_plane(const PointMatrix& pts);

/// Algebraic sphere fit; rejects rank-deficient (coplanar) systems.
std::optional<FitResult> fit_sphere(const PointMatrix& pts);

/// Axis search over the covariance eigenvectors (smallest first), each
/// refined by damped Gauss-Newton on (axis, center, radius).
std::optional<FitResult> fit_cylinder(const PointMatrix& pts);

/// Tangent-plane apex + plane-of-normals axis initialization, refined by
/// damped Gauss-Newton on (apex, axis, half-angle).
std::optional<FitResult> fit_cone(const PointMatrix& pts);

struct ClassicalOptions {
    int k = 24;                  // neighborhood size (>= 12)
    double edge_band = 0.25;     // trimmed-fraction that flags NearEdge
    double type_margin = 0.25;   // simpler kind wins within (1+margin) of the best rms
    bool use_surface_knn = true;
    int threads = 0;             // 0 = hardware
};

/// Per-point classical MAD-Adj-PT prediction: surface neighborhood, one
/// round of residual trimming, best-of-four fit, near-edge flag from the
/// trimmed fraction or an outlier winning residual.
LabeledCloud predict_constraints_classical(const LabeledCloud& cloud,
                                           const spatial::SurfaceGraph& graph,
                                           const ClassicalOptions& opts = {});

/// Kind selection with the simplicity preference: candidates in the order
/// plane, cylinder, cone, sphere; the first within (1+margin) of the best
/// rms (plus a 1e-9 tie guard) wins.
const FitResult* select_kind(const std::vector<std::optional<FitResult>>& candidates,
                             double margin);

}  // namespace cstcloud::fit
