#include "cstcloud/cloud.hpp"

#include "cstcloud/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cstcloud {

void LabeledCloud::validate() const {
    const auto n = static_cast<size_t>(points.rows());
    if (!labels.empty() && labels.size() != n)
        throw std::runtime_error("labels length mismatch");
    if (!face_ids.empty() && face_ids.size() != n)
        throw std::runtime_error("face_ids length mismatch");
    if (!points.allFinite()) throw std::runtime_error("non-finite coordinates");
}

double bbox_diagonal(const PointMatrix& pts) {
    if (pts.rows() == 0) return 0.0;
    const Eigen::RowVector3d lo = pts.colwise().minCoeff();
    const Eigen::RowVector3d hi = pts.colwise().maxCoeff();
    return (hi - lo).norm();
}

PointMatrix normalize_to_unit_cube(const PointMatrix& pts) {
    PointMatrix out = pts;
    if (out.rows() == 0) return out;
    const Eigen::RowVector3d centroid = out.colwise().mean();
    out.rowwise() -= centroid;
    const Eigen::RowVector3d lo = out.colwise().minCoeff();
    const Eigen::RowVector3d hi = out.colwise().maxCoeff();
    const double extent = (hi - lo).maxCoeff();
    if (extent > 0.0) out /= extent;
    return out;
}

void add_gaussian_jitter(LabeledCloud& cloud, double sigma, std::uint64_t seed) {
    if (sigma <= 0.0) return;
    Rng rng(seed);
    for (Eigen::Index i = 0; i < cloud.points.rows(); ++i)
        for (int c = 0; c < 3; ++c) cloud.points(i, c) += sigma * rng.normal();
}

namespace {

void append_double(std::string& out, double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

double parse_double(std::string_view& sv) {
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\n' || sv.front() == '\r'))
        sv.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (res.ec != std::errc{}) throw std::runtime_error("cstpc: bad number");
    sv.remove_prefix(static_cast<size_t>(res.ptr - sv.data()));
    return v;
}

long parse_long(std::string_view& sv) {
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\n' || sv.front() == '\r'))
        sv.remove_prefix(1);
    long v = 0;
    const auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (res.ec != std::errc{}) throw std::runtime_error("cstpc: bad integer");
    sv.remove_prefix(static_cast<size_t>(res.ptr - sv.data()));
    return v;
}

}  // namespace

void save_cstpc(const LabeledCloud& cloud, const std::string& path) {
    cloud.validate();
    const auto n = cloud.points.rows();
    const bool labeled = cloud.has_labels();
    std::string out;
    out.reserve(static_cast<size_t>(n) * 64 + 64);
    out += "cstpc 1 ";
    out += std::to_string(n);
    out += labeled ? " 1 " : " 0 ";
    out += std::to_string(cloud.class_id.value_or(-1));
    out += '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
        append_double(out, cloud.points(i, 0));
        out += ' ';
        append_double(out, cloud.points(i, 1));
        out += ' ';
        append_double(out, cloud.points(i, 2));
        if (labeled) {
            const auto& lb = cloud.labels[static_cast<size_t>(i)];
            for (int c = 0; c < 3; ++c) {
                out += ' ';
                append_double(out, lb.mad[c]);
            }
            out += ' ';
            out += std::to_string(lb.adj);
            out += ' ';
            out += std::to_string(lb.pt);
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

LabeledCloud load_cstpc(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string text = ss.str();
    std::string_view sv(text);
    if (sv.substr(0, 6) != "cstpc ") throw std::runtime_error("cstpc: bad magic");
    sv.remove_prefix(6);
    const long version = parse_long(sv);
    if (version != 1) throw std::runtime_error("cstpc: unsupported version");
    const long n = parse_long(sv);
    const long has_labels = parse_long(sv);
    const long class_id = parse_long(sv);

    LabeledCloud cloud;
    cloud.points.resize(n, 3);
    if (class_id >= 0) cloud.class_id = static_cast<int>(class_id);
    if (has_labels) cloud.labels.resize(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) cloud.points(i, c) = parse_double(sv);
        if (has_labels) {
            auto& lb = cloud.labels[static_cast<size_t>(i)];
            for (int c = 0; c < 3; ++c) lb.mad[c] = parse_double(sv);
            lb.adj = static_cast<int>(parse_long(sv));
            lb.pt = static_cast<int>(parse_long(sv));
        }
    }
    return cloud;
}

void save_face_ids(const std::vector<int>& ids, const std::string& path) {
    std::string out;
    for (int v : ids) {
        out += std::to_string(v);
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::vector<int> load_face_ids(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::vector<int> ids;
    int v;
    while (f >> v) ids.push_back(v);
    return ids;
}

}  // namespace cstcloud
