#include "dualmap/geometry.hpp"

#include "dualmap/error.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

namespace dualmap {

namespace {

constexpr std::int64_t kKeyBias = std::int64_t{1} << 20;
constexpr std::uint64_t kKeyMask = (std::uint64_t{1} << 21) - 1;

std::uint64_t pack_key(std::int64_t x, std::int64_t y, std::int64_t z) {
    return (static_cast<std::uint64_t>(x + kKeyBias) & kKeyMask) << 42 |
           (static_cast<std::uint64_t>(y + kKeyBias) & kKeyMask) << 21 |
           (static_cast<std::uint64_t>(z + kKeyBias) & kKeyMask);
}

std::int64_t cell_index(double v, double cell) {
    return static_cast<std::int64_t>(std::floor(v / cell));
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw UsageError(std::string(what) + " must be positive");
    }
}

// Fraction of `probe` points with a neighbor in `index` within radius.
double directed_fraction(const PointCloud& probe, const PointCloud& index, double radius) {
    const PointGrid grid(index.points(), radius);
    std::size_t hits = 0;
    for (const auto& p : probe.points()) {
        if (grid.any_within(p, radius)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(probe.size());
}

}  // namespace

bool Aabb::intersects(const Aabb& other, double margin) const {
    if (empty() || other.empty()) return false;
    for (int i = 0; i < 3; ++i) {
        if (min[i] - margin > other.max[i] || other.min[i] - margin > max[i]) return false;
    }
    return true;
}

PointCloud::PointCloud() : points_(std::make_shared<const std::vector<Point3>>()) {}

PointCloud::PointCloud(std::vector<Point3> points) {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!points[i].allFinite()) {
            throw DataError("point " + std::to_string(i) + " has a non-finite coordinate");
        }
        bounds_.extend(points[i]);
    }
    points_ = std::make_shared<const std::vector<Point3>>(std::move(points));
}

Point3 PointCloud::centroid() const {
    Point3 sum = Point3::Zero();
    for (const auto& p : *points_) sum += p;
    return empty() ? sum : Point3(sum / static_cast<double>(size()));
}

PointCloud PointCloud::concat(const PointCloud& a, const PointCloud& b) {
    std::vector<Point3> merged;
    merged.reserve(a.size() + b.size());
    merged.insert(merged.end(), a.points().begin(), a.points().end());
    merged.insert(merged.end(), b.points().begin(), b.points().end());
    return PointCloud(std::move(merged));
}

bool PointCloud::operator==(const PointCloud& other) const {
    return points_ == other.points_ || *points_ == *other.points_;
}

PointGrid::PointGrid(std::span<const Point3> points, double cell) : points_(points), cell_(cell) {
    require_positive(cell, "grid cell");
    std::vector<std::pair<std::uint64_t, std::uint32_t>> tagged;
    tagged.reserve(points.size());
    for (std::uint32_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        tagged.emplace_back(
            pack_key(cell_index(p.x(), cell), cell_index(p.y(), cell), cell_index(p.z(), cell)), i);
    }
    std::sort(tagged.begin(), tagged.end());
    order_.reserve(tagged.size());
    for (std::size_t i = 0; i < tagged.size(); ++i) {
        if (i == 0 || tagged[i].first != tagged[i - 1].first) {
            keys_.push_back(tagged[i].first);
            offsets_.push_back(static_cast<std::uint32_t>(i));
        }
        order_.push_back(tagged[i].second);
    }
    offsets_.push_back(static_cast<std::uint32_t>(order_.size()));
}

std::pair<const std::uint32_t*, const std::uint32_t*> PointGrid::bucket(std::int64_t x,
                                                                        std::int64_t y,
                                                                        std::int64_t z) const {
    const auto key = pack_key(x, y, z);
    const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return {nullptr, nullptr};
    const auto k = static_cast<std::size_t>(it - keys_.begin());
    return {order_.data() + offsets_[k], order_.data() + offsets_[k + 1]};
}

bool PointGrid::any_within(const Point3& p, double radius) const {
    const double r2 = radius * radius;
    const auto cx = cell_index(p.x(), cell_);
    const auto cy = cell_index(p.y(), cell_);
    const auto cz = cell_index(p.z(), cell_);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
            for (std::int64_t dz = -1; dz <= 1; ++dz) {
                auto [first, last] = bucket(cx + dx, cy + dy, cz + dz);
                for (; first != last; ++first) {
                    if ((points_[*first] - p).squaredNorm() <= r2) return true;
                }
            }
        }
    }
    return false;
}

std::optional<std::size_t> PointGrid::nearest_within(const Point3& p, double radius) const {
    const double r2 = radius * radius;
    const auto cx = cell_index(p.x(), cell_);
    const auto cy = cell_index(p.y(), cell_);
    const auto cz = cell_index(p.z(), cell_);
    std::optional<std::size_t> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
            for (std::int64_t dz = -1; dz <= 1; ++dz) {
                auto [first, last] = bucket(cx + dx, cy + dy, cz + dz);
                for (; first != last; ++first) {
                    const double d2 = (points_[*first] - p).squaredNorm();
                    if (d2 > r2) continue;
                    if (d2 < best_d2 || (d2 == best_d2 && *first < *best)) {
                        best_d2 = d2;
                        best = *first;
                    }
                }
            }
        }
    }
    return best;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
    require_positive(voxel, "voxel size");
    if (cloud.empty()) return cloud;

    struct Acc {
        Point3 sum = Point3::Zero();
        std::size_t n = 0;
    };
    std::vector<std::pair<std::uint64_t, std::uint32_t>> tagged;
    tagged.reserve(cloud.size());
    for (std::uint32_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud[i];
        tagged.emplace_back(
            pack_key(cell_index(p.x(), voxel), cell_index(p.y(), voxel), cell_index(p.z(), voxel)),
            i);
    }
    // Stable on index so accumulation order is fixed for a given input order.
    std::sort(tagged.begin(), tagged.end());

    std::vector<Point3> out;
    Acc acc;
    for (std::size_t i = 0; i < tagged.size(); ++i) {
        acc.sum += cloud[tagged[i].second];
        ++acc.n;
        if (i + 1 == tagged.size() || tagged[i + 1].first != tagged[i].first) {
            out.emplace_back(acc.n == 1 ? acc.sum : Point3(acc.sum / static_cast<double>(acc.n)));
            acc = Acc{};
        }
    }
    return PointCloud(std::move(out));
}

OverlapResult overlap_ratio(const PointCloud& a, const PointCloud& b, double radius) {
    require_positive(radius, "overlap radius");
    if (a.empty() || b.empty()) return {0.0, true};
    if (!a.bounds().intersects(b.bounds(), radius)) return {0.0, false};
    if (a.size() < b.size()) return {directed_fraction(a, b, radius), false};
    if (b.size() < a.size()) return {directed_fraction(b, a, radius), false};
    return {std::max(directed_fraction(a, b, radius), directed_fraction(b, a, radius)), false};
}

std::optional<double> supporting_plane_z(const PointCloud& cloud, double bin,
                                         std::size_t min_points) {
    require_positive(bin, "histogram bin");
    if (cloud.empty()) return std::nullopt;
    const double z0 = cloud.bounds().min.z();
    const double z1 = cloud.bounds().max.z();
    const double mid = 0.5 * (z0 + z1);
    const auto bin_of = [&](double z) { return static_cast<std::size_t>(std::floor((z - z0) / bin)); };
    const std::size_t nbins = bin_of(z1) + 1;

    std::vector<std::size_t> counts(nbins, 0);
    std::vector<double> top(nbins, -std::numeric_limits<double>::infinity());
    for (const auto& p : cloud.points()) {
        const auto k = bin_of(p.z());
        ++counts[k];
        top[k] = std::max(top[k], p.z());
    }
    // Bins whose extent reaches the vertical midpoint or above.
    const std::size_t first = bin_of(mid);
    std::size_t best = first;
    for (std::size_t k = first; k < nbins; ++k) {
        if (counts[k] >= counts[best]) best = k;  // ties go to the higher bin
    }
    if (counts[best] < min_points) return std::nullopt;
    return top[best];
}

Footprint2D::Footprint2D(double resolution, std::vector<Cell2> cells, std::optional<double> z_support)
    : resolution_(resolution), cells_(std::move(cells)), z_support_(z_support) {
    require_positive(resolution, "footprint resolution");
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
}

bool Footprint2D::contains(Cell2 c) const {
    return std::binary_search(cells_.begin(), cells_.end(), c);
}

std::size_t Footprint2D::intersection_size(const Footprint2D& other) const {
    if (resolution_ != other.resolution_) {
        throw UsageError("footprints have different resolutions");
    }
    std::size_t n = 0;
    auto i = cells_.begin();
    auto j = other.cells_.begin();
    while (i != cells_.end() && j != other.cells_.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

double Footprint2D::fraction_inside(const Footprint2D& other) const {
    if (cells_.empty()) return 0.0;
    return static_cast<double>(intersection_size(other)) / static_cast<double>(cells_.size());
}

double Footprint2D::overlap(const Footprint2D& other) const {
    if (cells_.empty() || other.cells_.empty()) return 0.0;
    return static_cast<double>(intersection_size(other)) /
           static_cast<double>(std::min(cells_.size(), other.cells_.size()));
}

Point2 Footprint2D::centroid() const {
    Point2 sum = Point2::Zero();
    for (const auto& c : cells_) sum += cell_center(c, resolution_);
    return cells_.empty() ? sum : Point2(sum / static_cast<double>(cells_.size()));
}

Footprint2D footprint(const PointCloud& cloud, double resolution) {
    require_positive(resolution, "footprint resolution");
    std::vector<Cell2> cells;
    cells.reserve(cloud.size());
    for (const auto& p : cloud.points()) cells.push_back(cell_of(p.head<2>(), resolution));
    return Footprint2D(resolution, std::move(cells));
}

Footprint2D footprint(std::span<const Point2> points, double resolution) {
    require_positive(resolution, "footprint resolution");
    std::vector<Cell2> cells;
    cells.reserve(points.size());
    for (const auto& p : points) cells.push_back(cell_of(p, resolution));
    return Footprint2D(resolution, std::move(cells));
}

std::vector<Point2> downsample_2d(std::span<const Point2> points, double voxel) {
    require_positive(voxel, "voxel size");
    std::vector<std::pair<Cell2, std::uint32_t>> tagged;
    tagged.reserve(points.size());
    for (std::uint32_t i = 0; i < points.size(); ++i) {
        if (!points[i].allFinite()) throw DataError("non-finite 2D point");
        tagged.emplace_back(cell_of(points[i], voxel), i);
    }
    std::sort(tagged.begin(), tagged.end());
    std::vector<Point2> out;
    Point2 sum = Point2::Zero();
    std::size_t n = 0;
    for (std::size_t i = 0; i < tagged.size(); ++i) {
        sum += points[tagged[i].second];
        ++n;
        if (i + 1 == tagged.size() || tagged[i + 1].first != tagged[i].first) {
            out.emplace_back(n == 1 ? sum : Point2(sum / static_cast<double>(n)));
            sum.setZero();
            n = 0;
        }
    }
    return out;
}

}  // namespace dualmap
