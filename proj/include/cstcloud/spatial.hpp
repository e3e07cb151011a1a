#pragma once

#include "cstcloud/cloud.hpp"

#include <vector>

namespace cstcloud::spatial {

/// Exact k nearest neighbors of cloud row query_idx (self excluded), ordered
/// by (distance, index). Throws ValidationError when k >= N.
std::vector<int> knn(const PointMatrix& cloud, int query_idx, int k);

/// Farthest point sampling: greedy max-min-distance chain from start_idx.
/// Distance ties pick the lowest index. Throws when m > N.
std::vector<int> fps(const PointMatrix& cloud, int m, int start_idx);

/// Small-k Euclidean neighbor graph supporting surface-following traversal.
struct SurfaceGraph {
    int base_k = 8;
    std::vector<std::vector<int>> neighbors;  // per point, base_k nearest (or all when N <= base_k)
    PointMatrix points;

    static SurfaceGraph build(const PointMatrix& cloud, int base_k = 8);
};

struct SurfaceKnnResult {
    std::vector<int> indices;
    bool fallback = false;  // component was smaller than k; remainder filled by plain knn
};

/// Breadth-first traversal over the graph from query_idx; visited points are
/// ranked by (hop count, Euclidean distance, index) and the first k returned.
SurfaceKnnResult surface_knn(const SurfaceGraph& graph, int query_idx, int k);

}  // namespace cstcloud::spatial
