#pragma once

#include "dualmap/concrete_map.hpp"
#include "dualmap/features.hpp"
#include "dualmap/geometry.hpp"
#include "dualmap/observation.hpp"
#include "dualmap/rng.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace dualmap::test {

/// Points on a regular lattice filling the box [lo, hi].
inline PointCloud box(const Point3& lo, const Point3& hi, double spacing) {
    std::vector<Point3> pts;
    for (double x = lo.x(); x <= hi.x() + 1e-9; x += spacing)
        for (double y = lo.y(); y <= hi.y() + 1e-9; y += spacing)
            for (double z = lo.z(); z <= hi.z() + 1e-9; z += spacing) pts.emplace_back(x, y, z);
    return PointCloud(std::move(pts));
}

inline PointCloud random_cloud(Rng& rng, std::size_t n, const Point3& lo, const Point3& hi) {
    std::vector<Point3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        pts.emplace_back(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), rng.uniform(lo.z(), hi.z()));
    }
    return PointCloud(std::move(pts));
}

inline FeatureVec random_feature(Rng& rng, std::size_t dim) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (auto& x : v) x = rng.gaussian();
    return FeatureVec::normalized(v);
}

inline Observation obs(PointCloud cloud, FeatureVec f, std::optional<std::string> cls, Timestamp t) {
    return {std::move(cloud), std::move(f), std::move(cls), t};
}

inline FrameRecord frame(std::uint64_t id, std::vector<Observation> observations) {
    FrameRecord f;
    f.frame_id = id;
    f.observations = std::move(observations);
    for (auto& o : f.observations) o.timestamp = id;
    return f;
}

/// Brute-force reference for the overlap measure.
inline double directed_overlap_oracle(const PointCloud& probe, const PointCloud& index, double r) {
    std::size_t hits = 0;
    for (const auto& p : probe.points()) {
        for (const auto& q : index.points()) {
            if ((p - q).squaredNorm() <= r * r) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(probe.size());
}

inline double overlap_oracle(const PointCloud& a, const PointCloud& b, double r) {
    if (a.empty() || b.empty()) return 0.0;
    if (a.size() < b.size()) return directed_overlap_oracle(a, b, r);
    if (b.size() < a.size()) return directed_overlap_oracle(b, a, r);
    const double ab = directed_overlap_oracle(a, b, r), ba = directed_overlap_oracle(b, a, r);
    return ab > ba ? ab : ba;
}

inline double cosine_oracle(const FeatureVec& a, const FeatureVec& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (Eigen::Index i = 0; i < a.values().size(); ++i) {
        dot += a.values()[i] * b.values()[i];
        na += a.values()[i] * a.values()[i];
        nb += b.values()[i] * b.values()[i];
    }
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

inline HistoryEntry entry(const Observation& z) {
    return {z.timestamp, z.class_id, std::make_shared<const Observation>(z)};
}

}  // namespace dualmap::test
