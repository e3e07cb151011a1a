#include "cstcloud/fit.hpp"

#include "cstcloud/errors.hpp"
#include "cstcloud/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <cstdlib>
#include <cstdio>

namespace cstcloud::fit {

using geom::Primitive;
using geom::PrimitiveKind;
using geom::Vec3;

namespace {

constexpr int kMaxIters = 50;
constexpr double kStepTol = 1e-10;

double rms_of(const Primitive& p, const PointMatrix& pts) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const double d = geom::signed_distance(p, pts.row(i));
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(pts.rows()));
}

void tangent_basis(const Vec3& a, Vec3& t1, Vec3& t2) {
    t1 = a.unitOrthogonal();
    t2 = a.cross(t1);
}

struct Scatter {
    Vec3 centroid;
    Eigen::Matrix3d cov;  // unnormalized scatter
};

Scatter scatter_of(const PointMatrix& pts) {
    Scatter s;
    s.centroid = pts.colwise().mean();
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const Vec3 d = Vec3(pts.row(i)) - s.centroid;
        m += d * d.transpose();
    }
    s.cov = m;
    return s;
}

}  // namespace

std::optional<FitResult> fit_plane(const PointMatrix& pts) {
    const auto n = pts.rows();
    if (n < 3) return std::nullopt;
    const auto s = scatter_of(pts);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(s.cov);
    const Vec3 evals = es.eigenvalues();
    const double scale2 = std::max(evals[2], 1e-300);
    if (evals[1] < 1e-12 * scale2) return std::nullopt;  // collinear
    FitResult r;
    r.kind = PrimitiveKind::Plane;
    r.prim = Primitive::plane(s.centroid, es.eigenvectors().col(0));
    r.rms_residual = std::sqrt(std::max(0.0, evals[0]) / static_cast<double>(n));
    r.inlier_count = static_cast<int>(n);
    return r;
}

std::optional<FitResult> fit_sphere(const PointMatrix& pts) {
    const auto n = pts.rows();
    if (n < 4) return std::nullopt;
    Eigen::MatrixXd A(n, 4);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A.row(i) << 2.0 * pts(i, 0), 2.0 * pts(i, 1), 2.0 * pts(i, 2), 1.0;
        b[i] = pts.row(i).squaredNorm();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < 4) return std::nullopt;  // coplanar points: singular system
    const Eigen::Vector4d sol = qr.solve(b);
    const Vec3 c = sol.head<3>();
    const double r2 = sol[3] + c.squaredNorm();
    if (!(r2 > 0.0)) return std::nullopt;
    FitResult r;
    r.kind = PrimitiveKind::Sphere;
    r.prim = Primitive::sphere(c, std::sqrt(r2));
    r.rms_residual = rms_of(r.prim, pts);
    r.inlier_count = static_cast<int>(n);
    return r;
}

namespace {

// One Gauss-Newton polish of a cylinder from a fixed axis direction guess.
std::optional<FitResult> refine_cylinder(const PointMatrix& pts, Vec3 axis) {
    const auto n = pts.rows();
    const Vec3 centroid = pts.colwise().mean();
    const double extent = (pts.colwise().maxCoeff() - pts.colwise().minCoeff()).norm();

    // Kasa circle fit in the axis-normal plane for center/radius init.
    Vec3 t1, t2;
    tangent_basis(axis, t1, t2);
    Eigen::MatrixXd A(n, 3);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 d = Vec3(pts.row(i)) - centroid;
        const double u = d.dot(t1), v = d.dot(t2);
        A.row(i) << u, v, 1.0;
        rhs[i] = u * u + v * v;
    }
    const Eigen::Vector3d kasa = (A.transpose() * A).ldlt().solve(A.transpose() * rhs);
    const double cu = 0.5 * kasa[0], cv = 0.5 * kasa[1];
    double radius = std::sqrt(std::max(1e-12, kasa[2] + cu * cu + cv * cv));
    Vec3 center = centroid + cu * t1 + cv * t2;

    double cur_rms = rms_of(Primitive::cylinder(center, axis, radius), pts);
    bool converged = false;
    for (int iter = 0; iter < kMaxIters; ++iter) {
        tangent_basis(axis, t1, t2);
        Eigen::MatrixXd J(n, 5);
        Eigen::VectorXd res(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Vec3 d = Vec3(pts.row(i)) - center;
            const double t = d.dot(axis);
            const Vec3 radial = d - t * axis;
            const double rho = std::max(radial.norm(), 1e-14);
            const Vec3 u = radial / rho;
            res[i] = rho - radius;
            J(i, 0) = -t * u.dot(t1);
            J(i, 1) = -t * u.dot(t2);
            J(i, 2) = -u.dot(t1);
            J(i, 3) = -u.dot(t2);
            J(i, 4) = -1.0;
        }
        const Eigen::Matrix<double, 5, 5> JtJ = J.transpose() * J;
        const Eigen::Matrix<double, 5, 1> g = -J.transpose() * res;
        Eigen::Matrix<double, 5, 1> step = JtJ.ldlt().solve(g);
        if (!step.allFinite()) break;

        double scale = 1.0;
        bool accepted = false;
        for (int half = 0; half < 20; ++half) {
            const Vec3 na = (axis + scale * (step[0] * t1 + step[1] * t2)).normalized();
            const Vec3 nc = center + scale * (step[2] * t1 + step[3] * t2);
            const double nr = std::clamp(radius + scale * step[4], 1e-9, 1e5 * extent);
            const double nrms = rms_of(Primitive::cylinder(nc, na, nr), pts);
            if (nrms <= cur_rms) {
                axis = na;
                center = nc;
                radius = nr;
                cur_rms = nrms;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        // keep the gauge: center stays at the axial height of the centroid
        center -= (center - centroid).dot(axis) * axis;
        if (!accepted || (scale * step).norm() < kStepTol) {
            converged = true;
            break;
        }
    }
    // A radius enormous relative to the patch is a plane in disguise and the
    // distance arithmetic below cancellation; let the plane model own it.
    if (radius > 1e4 * extent) return std::nullopt;
    FitResult out;
    out.kind = PrimitiveKind::Cylinder;
    out.prim = Primitive::cylinder(center, axis, radius);
    out.rms_residual = rms_of(out.prim, pts);
    out.inlier_count = static_cast<int>(n);
    out.converged = converged;
    return out;
}

}  // namespace

std::optional<FitResult> fit_cylinder(const PointMatrix& pts) {
    const auto n = pts.rows();
    if (n < 6) return std::nullopt;
    const auto s = scatter_of(pts);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(s.cov);
    if (es.eigenvalues()[1] < 1e-12 * std::max(es.eigenvalues()[2], 1e-300))
        return std::nullopt;  // collinear

    std::optional<FitResult> best;
    for (int c = 0; c < 3; ++c) {  // smallest-eigenvector candidate first
        auto r = refine_cylinder(pts, es.eigenvectors().col(c));
        if (!r) continue;
        if (!best || r->rms_residual < best->rms_residual) best = r;
    }
    return best;
}

std::optional<FitResult> fit_cone(const PointMatrix& pts) {
    const auto n = pts.rows();
    if (n < 6) return std::nullopt;

    // Local PCA normals; the apex equations below are sign-invariant.
    const int jn = std::min<int>(10, static_cast<int>(n) - 1);
    PointMatrix normals(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> near;
        near.reserve(static_cast<size_t>(n));
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) near.emplace_back((pts.row(j) - pts.row(i)).squaredNorm(), static_cast<int>(j));
        std::partial_sort(near.begin(), near.begin() + jn, near.end());
        PointMatrix patch(jn + 1, 3);
        patch.row(0) = pts.row(i);
        for (int j = 0; j < jn; ++j) patch.row(j + 1) = pts.row(near[static_cast<size_t>(j)].second);
        const auto sc = scatter_of(patch);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(sc.cov);
        normals.row(i) = es.eigenvectors().col(0);
    }

    // Tangent planes of a cone all pass through the apex.
    Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
    Vec3 rhs = Vec3::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 nm = normals.row(i);
        M += nm * nm.transpose();
        rhs += nm * nm.dot(pts.row(i));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> esM(M);
    if (esM.eigenvalues()[0] < 1e-8 * std::max(esM.eigenvalues()[2], 1e-300))
        return std::nullopt;  // normals nearly coplanar: plane or cylinder data
    Vec3 apex = M.ldlt().solve(rhs);

    // Unit rays from the apex lie on a spherical circle around the axis;
    // its plane gives the axis without any normal-orientation bookkeeping.
    PointMatrix rays(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 d = Vec3(pts.row(i)) - apex;
        const double dn = d.norm();
        if (dn < 1e-12) return std::nullopt;  // apex estimate sits on the data
        rays.row(i) = d / dn;
    }
    const auto sr = scatter_of(rays);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> esr(sr.cov);
    Vec3 axis = esr.eigenvectors().col(0);
    const Vec3 ray_mean = rays.colwise().mean();
    if (axis.dot(ray_mean) < 0.0) axis = -axis;

    double alpha = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        alpha += std::acos(std::clamp(Vec3(rays.row(i)).dot(axis), -1.0, 1.0));
    alpha = std::clamp(alpha / static_cast<double>(n), 0.01, M_PI / 2.0 - 0.01);

    auto cone_rms = [&](const Vec3& ap, const Vec3& ax, double al) {
        return rms_of(Primitive::cone(ap, ax, al), pts);
    };
    double cur_rms = cone_rms(apex, axis, alpha);
    bool converged = false;
    for (int iter = 0; iter < kMaxIters; ++iter) {
        Vec3 t1, t2;
        tangent_basis(axis, t1, t2);
        Eigen::MatrixXd J(n, 6);
        Eigen::VectorXd res(n);
        const double sa = std::sin(alpha), ca = std::cos(alpha);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Vec3 d = Vec3(pts.row(i)) - apex;
            const double t = d.dot(axis);
            const Vec3 radial = d - t * axis;
            const double rho = std::max(radial.norm(), 1e-14);
            const Vec3 u = radial / rho;
            res[i] = ca * rho - sa * t;
            const Vec3 dapex = -ca * u + sa * axis;
            J(i, 0) = dapex[0];
            J(i, 1) = dapex[1];
            J(i, 2) = dapex[2];
            J(i, 3) = -ca * t * u.dot(t1) - sa * d.dot(t1);
            J(i, 4) = -ca * t * u.dot(t2) - sa * d.dot(t2);
            J(i, 5) = -sa * rho - ca * t;
        }
        const Eigen::Matrix<double, 6, 6> JtJ = J.transpose() * J;
        const Eigen::Matrix<double, 6, 1> g = -J.transpose() * res;
        Eigen::Matrix<double, 6, 1> step = JtJ.ldlt().solve(g);
        if (!step.allFinite()) break;

        double scale = 1.0;
        bool accepted = false;
        for (int half = 0; half < 20; ++half) {
            const Vec3 nap = apex + scale * step.head<3>();
            const Vec3 nax = (axis + scale * (step[3] * t1 + step[4] * t2)).normalized();
            const double nal = std::clamp(alpha + scale * step[5], 0.01, M_PI / 2.0 - 0.01);
            const double nrms = cone_rms(nap, nax, nal);
            if (nrms <= cur_rms) {
                apex = nap;
                axis = nax;
                alpha = nal;
                cur_rms = nrms;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted || (scale * step).norm() < kStepTol) {
            converged = true;
            break;
        }
    }

    const double extent = (pts.colwise().maxCoeff() - pts.colwise().minCoeff()).norm();
    if ((apex - Vec3(pts.colwise().mean())).norm() > 1e4 * extent) return std::nullopt;
    FitResult out;
    out.kind = PrimitiveKind::Cone;
    out.prim = Primitive::cone(apex, axis, alpha);
    out.rms_residual = cur_rms;
    out.inlier_count = static_cast<int>(n);
    out.converged = converged;
    return out;
}

const FitResult* select_kind(const std::vector<std::optional<FitResult>>& candidates,
                             double margin) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates)
        if (c && c->rms_residual < best) best = c->rms_residual;
    if (!std::isfinite(best)) return nullptr;
    const double cut = best * (1.0 + margin) + 1e-9;
    for (const auto& c : candidates)
        if (c && c->rms_residual <= cut) return &*c;
    return nullptr;
}

namespace {

// Global noise scale: median over a point subsample of the best single-kind
// rms on the 8 closest neighbors. Noiseless data collapses to the floor.
double estimate_noise_scale(const PointMatrix& pts, double diag) {
    const int n = static_cast<int>(pts.rows());
    const int probes = std::min(64, n);
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(probes));
    for (int p = 0; p < probes; ++p) {
        const int i = static_cast<int>((static_cast<long long>(p) * n) / probes);
        const auto nb = spatial::knn(pts, i, std::min(8, n - 1));
        PointMatrix patch(static_cast<Eigen::Index>(nb.size()) + 1, 3);
        patch.row(0) = pts.row(i);
        for (size_t j = 0; j < nb.size(); ++j)
            patch.row(static_cast<Eigen::Index>(j) + 1) = pts.row(nb[j]);
        double best = std::numeric_limits<double>::infinity();
        if (auto r = fit_plane(patch)) best = std::min(best, r->rms_residual);
        if (auto r = fit_cylinder(patch)) best = std::min(best, r->rms_residual);
        if (auto r = fit_sphere(patch)) best = std::min(best, r->rms_residual);
        if (std::isfinite(best)) vals.push_back(best);
    }
    if (vals.empty()) return 1e-8 * diag;
    std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
    return vals[vals.size() / 2];
}

struct Proposal {
    Primitive prim;
    PrimitiveKind kind = PrimitiveKind::Other;
    int inliers = -1;
    double rms = std::numeric_limits<double>::infinity();
};

int kind_rank(PrimitiveKind k) {
    switch (k) {
        case PrimitiveKind::Plane: return 0;
        case PrimitiveKind::Cylinder: return 1;
        case PrimitiveKind::Cone: return 2;
        case PrimitiveKind::Sphere: return 3;
        case PrimitiveKind::Other: return 4;
    }
    return 4;
}

}  // namespace

LabeledCloud predict_constraints_classical(const LabeledCloud& cloud,
                                           const spatial::SurfaceGraph& graph,
                                           const ClassicalOptions& opts) {
    if (opts.k < 12) throw ValidationError("classical prediction needs k >= 12");
    const int n = static_cast<int>(cloud.points.rows());
    if (n <= opts.k) throw ValidationError("cloud smaller than neighborhood");
    const double diag = bbox_diagonal(cloud.points);
    const double eps = std::max(3.0 * estimate_noise_scale(cloud.points, diag), 1e-8 * diag);

    LabeledCloud out = cloud;
    out.labels.assign(static_cast<size_t>(n), ConstraintLabel{});
    std::vector<double> win_rms(static_cast<size_t>(n), 0.0);
    std::vector<double> trimmed_frac(static_cast<size_t>(n), 0.0);
    std::vector<char> failed(static_cast<size_t>(n), 0);

    parallel_for(n, opts.threads, [&](int i) {
        std::vector<int> nb;
        if (opts.use_surface_knn) nb = spatial::surface_knn(graph, i, opts.k).indices;
        else nb = spatial::knn(cloud.points, i, opts.k);

        // Patch rows ordered by distance from the center point (row 0).
        std::vector<std::pair<double, int>> order;
        order.reserve(nb.size());
        for (int j : nb) order.emplace_back((cloud.points.row(j) - cloud.points.row(i)).norm(), j);
        std::sort(order.begin(), order.end());
        const Eigen::Index np = static_cast<Eigen::Index>(order.size()) + 1;
        PointMatrix patch(np, 3);
        patch.row(0) = cloud.points.row(i);
        for (size_t j = 0; j < order.size(); ++j)
            patch.row(static_cast<Eigen::Index>(j) + 1) = cloud.points.row(order[j].second);
        const Vec3 center = patch.row(0);

        // Consensus search: the structure the center belongs to is the one
        // with the largest tight-tolerance inlier set over the patch.
        Proposal best;
        auto consider = [&](const Primitive& prim, PrimitiveKind kind) {
            if (std::abs(geom::signed_distance(prim, center)) > eps) return;
            int count = 0;
            double acc = 0.0;
            for (Eigen::Index j = 0; j < np; ++j) {
                const double d = geom::signed_distance(prim, patch.row(j));
                if (std::abs(d) <= eps) {
                    ++count;
                    acc += d * d;
                }
            }
            const double rms = std::sqrt(acc / std::max(count, 1));
            const bool better =
                count > best.inliers ||
                (count == best.inliers && kind_rank(kind) < kind_rank(best.kind)) ||
                (count == best.inliers && kind_rank(kind) == kind_rank(best.kind) && rms < best.rms);
            if (better) best = Proposal{prim, kind, count, rms};
        };

        // Minimal planes through the center and two of its six nearest
        // neighbors: exact for flat faces even in mixed neighborhoods.
        const int nm = std::min<int>(6, static_cast<int>(np) - 1);
        for (int a = 1; a <= nm; ++a)
            for (int b = a + 1; b <= nm; ++b) {
                const Vec3 nrm = (Vec3(patch.row(a)) - center).cross(Vec3(patch.row(b)) - center);
                if (nrm.norm() < 1e-12) continue;
                consider(Primitive::plane(center, nrm), PrimitiveKind::Plane);
            }

        // Subset fits: full patch, closest half, and four directional halves
        // (one of them avoids a straight crease whenever the center is off it).
        std::vector<std::vector<Eigen::Index>> subsets;
        {
            std::vector<Eigen::Index> full(static_cast<size_t>(np));
            std::iota(full.begin(), full.end(), 0);
            subsets.push_back(full);
            const Eigen::Index half = std::max<Eigen::Index>(8, (np + 1) / 2);
            subsets.emplace_back(full.begin(), full.begin() + std::min(half, np));
            // Data-canonical tangent frame: normal from the 9-pt plane fit,
            // first direction toward the farthest patch point. Rotating the
            // cloud rotates the frame, so the subsets stay equivariant.
            Vec3 nrm = Vec3::UnitZ();
            if (auto pl = fit_plane(patch.topRows(std::min<Eigen::Index>(9, np)))) nrm = pl->prim.axis;
            Vec3 t1 = Vec3(patch.row(np - 1)) - center;
            t1 -= t1.dot(nrm) * nrm;
            if (t1.norm() < 1e-12) t1 = nrm.unitOrthogonal();
            t1.normalize();
            const Vec3 t2 = nrm.cross(t1);
            const std::array<Vec3, 4> dirs = {t1, Vec3(-t1), t2, Vec3(-t2)};
            for (const Vec3& dir : dirs) {
                std::vector<Eigen::Index> sub = {0};
                for (Eigen::Index j = 1; j < np; ++j)
                    if ((Vec3(patch.row(j)) - center).dot(dir) >= 0.0) sub.push_back(j);
                subsets.push_back(std::move(sub));
            }
        }
        auto gather = [&](const std::vector<Eigen::Index>& rows) {
            PointMatrix m(static_cast<Eigen::Index>(rows.size()), 3);
            for (size_t j = 0; j < rows.size(); ++j) m.row(static_cast<Eigen::Index>(j)) = patch.row(rows[j]);
            return m;
        };
        for (const auto& rows : subsets) {
            if (rows.size() < 3) continue;
            const PointMatrix sub = gather(rows);
            if (auto r = fit_plane(sub)) consider(r->prim, PrimitiveKind::Plane);
            if (rows.size() >= 6) {
                if (auto r = fit_cylinder(sub)) consider(r->prim, PrimitiveKind::Cylinder);
                if (auto r = fit_cone(sub)) consider(r->prim, PrimitiveKind::Cone);
            }
            if (rows.size() >= 4)
                if (auto r = fit_sphere(sub)) consider(r->prim, PrimitiveKind::Sphere);
        }

        if (const char* dbg = std::getenv("CSTCLOUD_DEBUG_POINT"); dbg && std::atoi(dbg) == i) {
            std::fprintf(stderr, "[dbg] i=%d eps=%.3e best kind=%d inliers=%d rms=%.3e prim: kind=%d axis=(%.3f,%.3f,%.3f) r=%.3f\n",
                         i, eps, static_cast<int>(best.kind), best.inliers, best.rms,
                         static_cast<int>(best.prim.kind), best.prim.axis.x(), best.prim.axis.y(),
                         best.prim.axis.z(), best.prim.radius);
        }
        auto& lb = out.labels[static_cast<size_t>(i)];
        // Inlier set of the winning structure; refit every kind on it and let
        // the simplicity-margin rule pick the final type.
        std::vector<Eigen::Index> inl;
        if (best.inliers > 0) {
            for (Eigen::Index j = 0; j < np; ++j)
                if (std::abs(geom::signed_distance(best.prim, patch.row(j))) <= eps)
                    inl.push_back(j);
        }
        trimmed_frac[static_cast<size_t>(i)] =
            1.0 - static_cast<double>(inl.size()) / static_cast<double>(np);

        const PointMatrix kept = inl.size() >= 6 ? gather(inl) : patch;
        std::vector<std::optional<FitResult>> final_cands;
        final_cands.push_back(fit_plane(kept));
        final_cands.push_back(fit_cylinder(kept));
        final_cands.push_back(fit_cone(kept));
        final_cands.push_back(fit_sphere(kept));
        const FitResult* win = select_kind(final_cands, opts.type_margin);
        if (!win) {
            failed[static_cast<size_t>(i)] = 1;
            lb.pt = static_cast<int>(PrimitiveKind::Other);
            lb.mad = Vec3::Zero();
            lb.adj = 1;
            return;
        }
        lb.pt = static_cast<int>(win->kind);
        lb.mad = geom::mad_of_primitive(win->prim);
        win_rms[static_cast<size_t>(i)] = win->rms_residual;
    });

    // Near-edge flags need the cloud-wide median winning residual.
    std::vector<double> med_src = win_rms;
    std::nth_element(med_src.begin(), med_src.begin() + med_src.size() / 2, med_src.end());
    const double med = med_src[med_src.size() / 2];
    const double resid_cut = std::max(5.0 * med, 1e-7 * diag);
    for (int i = 0; i < n; ++i) {
        if (failed[static_cast<size_t>(i)]) continue;
        auto& lb = out.labels[static_cast<size_t>(i)];
        lb.adj = (trimmed_frac[static_cast<size_t>(i)] > opts.edge_band ||
                  win_rms[static_cast<size_t>(i)] > resid_cut)
                     ? 1
                     : 0;
    }
    return out;
}

}  // namespace cstcloud::fit
