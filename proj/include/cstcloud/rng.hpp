#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace cstcloud {

/// Seeded generator with portable value mappings. The engine (mt19937_64)
/// is fully specified by the standard; the mappings below avoid the
/// implementation-defined std distributions so that streams are identical
/// on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::int64_t uniform_int(std::int64_t n) {
        // Rejection-free modulo bias is negligible for n << 2^64; keep exact anyway.
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / un * un;
        std::uint64_t x;
        do { x = eng_(); } while (x >= limit);
        return static_cast<std::int64_t>(x % un);
    }

    /// Standard normal via Box-Muller (portable).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform direction on the unit sphere.
    Eigen::Vector3d unit_vector() {
        const double z = uniform(-1.0, 1.0);
        const double a = uniform(0.0, 2.0 * M_PI);
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {s * std::cos(a), s * std::sin(a), z};
    }

    /// Uniform rotation (Shoemake quaternion method).
    Eigen::Matrix3d rotation_so3() {
        const double u1 = uniform(), u2 = uniform(), u3 = uniform();
        const double s1 = std::sqrt(1.0 - u1), s2 = std::sqrt(u1);
        Eigen::Quaterniond q(s1 * std::sin(2 * M_PI * u2), s1 * std::cos(2 * M_PI * u2),
                             s2 * std::sin(2 * M_PI * u3), s2 * std::cos(2 * M_PI * u3));
        return q.normalized().toRotationMatrix();
    }

    /// Splits a parent seed into per-item seeds (splitmix64 finalizer).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cstcloud
