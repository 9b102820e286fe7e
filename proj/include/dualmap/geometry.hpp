#pragma once

// Point-cloud containers and the geometric primitives shared by the mapping
// pipeline. Z is up, frames are right-handed, units are meters.

#include <Eigen/Core>

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace dualmap {

using Point3 = Eigen::Vector3d;
using Point2 = Eigen::Vector2d;

struct Aabb {
    Point3 min{Point3::Constant(std::numeric_limits<double>::infinity())};
    Point3 max{Point3::Constant(-std::numeric_limits<double>::infinity())};

    bool empty() const { return min.x() > max.x(); }
    void extend(const Point3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    /// True when the boxes, each grown by `margin`, intersect.
    bool intersects(const Aabb& other, double margin) const;
};

/// Immutable list of 3D points. Copies share storage.
class PointCloud {
public:
    PointCloud();
    /// Throws DataError if any coordinate is not finite.
    explicit PointCloud(std::vector<Point3> points);

    std::span<const Point3> points() const { return *points_; }
    std::size_t size() const { return points_->size(); }
    bool empty() const { return points_->empty(); }
    const Point3& operator[](std::size_t i) const { return (*points_)[i]; }

    const Aabb& bounds() const { return bounds_; }
    Point3 centroid() const;
    double min_z() const { return bounds_.min.z(); }

    static PointCloud concat(const PointCloud& a, const PointCloud& b);

    bool operator==(const PointCloud& other) const;

private:
    std::shared_ptr<const std::vector<Point3>> points_;
    Aabb bounds_;
};

/// Hash grid over a fixed point set, used for radius-neighbor queries.
class PointGrid {
public:
    PointGrid(std::span<const Point3> points, double cell);

    /// True if some indexed point lies within `radius` (inclusive) of `p`.
    /// `radius` must not exceed the cell size.
    bool any_within(const Point3& p, double radius) const;

    /// Index of the nearest point within `radius`, lowest index on ties.
    std::optional<std::size_t> nearest_within(const Point3& p, double radius) const;

private:
    std::span<const Point3> points_;
    double cell_;
    std::vector<std::uint64_t> keys_;     // sorted unique cell keys
    std::vector<std::uint32_t> offsets_;  // keys_.size() + 1 entries into order_
    std::vector<std::uint32_t> order_;    // point indices grouped by cell

    std::pair<const std::uint32_t*, const std::uint32_t*> bucket(std::int64_t x, std::int64_t y,
                                                                 std::int64_t z) const;
};

/// One centroid per occupied voxel, ordered by voxel key.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel);

struct OverlapResult {
    double ratio = 0.0;
    bool degenerate = false;  ///< either input was empty
};

/// Fraction of the smaller cloud's points that have a neighbor in the other
/// cloud within `radius`. For equal sizes the larger of the two directed
/// fractions is used, which keeps the measure symmetric.
OverlapResult overlap_ratio(const PointCloud& a, const PointCloud& b, double radius);

/// Height of the dominant horizontal surface in the upper half of the cloud.
/// The winning histogram bin must hold at least `min_points` points; the
/// returned height is the highest point inside that bin.
std::optional<double> supporting_plane_z(const PointCloud& cloud, double bin = 0.05,
                                         std::size_t min_points = 50);

struct Cell2 {
    std::int32_t x = 0;
    std::int32_t y = 0;
    auto operator<=>(const Cell2&) const = default;
};

inline Cell2 cell_of(const Point2& p, double resolution) {
    return {static_cast<std::int32_t>(std::floor(p.x() / resolution)),
            static_cast<std::int32_t>(std::floor(p.y() / resolution))};
}

inline Point2 cell_center(Cell2 c, double resolution) {
    return {(c.x + 0.5) * resolution, (c.y + 0.5) * resolution};
}

/// Rasterized XY projection of a cloud.
class Footprint2D {
public:
    Footprint2D() = default;
    Footprint2D(double resolution, std::vector<Cell2> cells,
                std::optional<double> z_support = std::nullopt);

    double resolution() const { return resolution_; }
    std::span<const Cell2> cells() const { return cells_; }
    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }
    std::optional<double> z_support() const { return z_support_; }
    void set_z_support(std::optional<double> z) { z_support_ = z; }

    bool contains(Cell2 c) const;
    bool contains(const Point2& p) const { return contains(cell_of(p, resolution_)); }

    /// |this ∩ other| / |this|; 0 when this is empty.
    double fraction_inside(const Footprint2D& other) const;
    /// |this ∩ other| / min(|this|, |other|); 0 when either is empty.
    double overlap(const Footprint2D& other) const;
    std::size_t intersection_size(const Footprint2D& other) const;

    Point2 centroid() const;

    bool operator==(const Footprint2D&) const = default;

private:
    double resolution_ = 0.1;
    std::vector<Cell2> cells_;  // sorted, unique
    std::optional<double> z_support_;
};

Footprint2D footprint(const PointCloud& cloud, double resolution);
Footprint2D footprint(std::span<const Point2> points, double resolution);

/// 2D centroid-per-cell downsampling, ordered by cell.
std::vector<Point2> downsample_2d(std::span<const Point2> points, double voxel);

}  // namespace dualmap
