#include "cstcloud/spatial.hpp"

#include "cstcloud/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace cstcloud::spatial {

std::vector<int> knn(const PointMatrix& cloud, int query_idx, int k) {
    const int n = static_cast<int>(cloud.rows());
    if (k < 0 || k >= n) throw ValidationError("knn requires 0 <= k < N");
    if (query_idx < 0 || query_idx >= n) throw ValidationError("query index out of range");
    if (k == 0) return {};

    const Eigen::RowVector3d q = cloud.row(query_idx);
    std::vector<std::pair<double, int>> cand;
    cand.reserve(static_cast<size_t>(n - 1));
    for (int i = 0; i < n; ++i) {
        if (i == query_idx) continue;
        cand.emplace_back((cloud.row(i) - q).squaredNorm(), i);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    std::vector<int> out(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) out[static_cast<size_t>(i)] = cand[static_cast<size_t>(i)].second;
    return out;
}

std::vector<int> fps(const PointMatrix& cloud, int m, int start_idx) {
    const int n = static_cast<int>(cloud.rows());
    if (m < 0 || m > n) throw ValidationError("fps requires 0 <= m <= N");
    if (start_idx < 0 || start_idx >= n) throw ValidationError("start index out of range");
    std::vector<int> sel;
    if (m == 0) return sel;
    sel.reserve(static_cast<size_t>(m));
    std::vector<double> min_d2(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<char> taken(static_cast<size_t>(n), 0);
    int cur = start_idx;
    sel.push_back(cur);
    taken[static_cast<size_t>(cur)] = 1;
    for (int step = 1; step < m; ++step) {
        const Eigen::RowVector3d p = cloud.row(cur);
        int best = -1;
        double best_d2 = -1.0;
        for (int i = 0; i < n; ++i) {
            double& d2 = min_d2[static_cast<size_t>(i)];
            const double nd = (cloud.row(i) - p).squaredNorm();
            if (nd < d2) d2 = nd;
            if (!taken[static_cast<size_t>(i)] && d2 > best_d2) {
                best_d2 = d2;
                best = i;
            }
        }
        cur = best;
        sel.push_back(cur);
        taken[static_cast<size_t>(cur)] = 1;
    }
    return sel;
}

SurfaceGraph SurfaceGraph::build(const PointMatrix& cloud, int base_k) {
    SurfaceGraph g;
    g.base_k = base_k;
    g.points = cloud;
    const int n = static_cast<int>(cloud.rows());
    const int k = std::min(base_k, n - 1);
    g.neighbors.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) g.neighbors[static_cast<size_t>(i)] = knn(cloud, i, std::max(k, 0));
    return g;
}

SurfaceKnnResult surface_knn(const SurfaceGraph& graph, int query_idx, int k) {
    const int n = static_cast<int>(graph.points.rows());
    if (k < 0 || k >= n) throw ValidationError("surface_knn requires 0 <= k < N");
    if (query_idx < 0 || query_idx >= n) throw ValidationError("query index out of range");
    SurfaceKnnResult res;
    if (k == 0) return res;

    const Eigen::RowVector3d q = graph.points.row(query_idx);
    std::vector<int> hop(static_cast<size_t>(n), -1);
    hop[static_cast<size_t>(query_idx)] = 0;

    // (hop, distance, index) triples, grown level by level so the ranking is
    // complete before the cut.
    std::vector<std::tuple<int, double, int>> visited;
    std::vector<int> frontier = {query_idx};
    int level = 0;
    while (!frontier.empty() && static_cast<int>(visited.size()) < k) {
        ++level;
        std::vector<int> next;
        for (int u : frontier) {
            for (int v : graph.neighbors[static_cast<size_t>(u)]) {
                if (hop[static_cast<size_t>(v)] != -1) continue;
                hop[static_cast<size_t>(v)] = level;
                visited.emplace_back(level, (graph.points.row(v) - q).norm(), v);
                next.push_back(v);
            }
        }
        frontier = std::move(next);
    }
    std::sort(visited.begin(), visited.end());
    const int take = std::min<int>(k, static_cast<int>(visited.size()));
    res.indices.reserve(static_cast<size_t>(k));
    for (int i = 0; i < take; ++i) res.indices.push_back(std::get<2>(visited[static_cast<size_t>(i)]));

    if (take < k) {
        // Disconnected component exhausted; fill the remainder with plain knn.
        res.fallback = true;
        for (int i : knn(graph.points, query_idx, n - 1)) {
            if (hop[static_cast<size_t>(i)] != -1) continue;
            res.indices.push_back(i);
            if (static_cast<int>(res.indices.size()) == k) break;
        }
    }
    return res;
}

}  // namespace cstcloud::spatial
