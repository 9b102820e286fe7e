#pragma once

#include "dualmap/abstract_map.hpp"
#include "dualmap/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dualmap {

struct PlannerConfig {
    double inflation = 0.2;        ///< obstacle inflation radius, meters
    double pad = 1.0;              ///< free margin added around the planning area
    std::size_t rrt_budget = 5000; ///< RRT* iterations
    double rrt_step = 0.5;         ///< steering distance
    double rrt_goal_bias = 0.05;
    double rrt_margin = 2.0;       ///< sampling box margin around start/goal
    double snap_radius = 0.5;      ///< max goal snap distance for local planning
    double goal_reach = 0.5;       ///< max approach distance beyond the inflation band
};

/// Layout raster plus inflated obstacles over a fixed cell range.
/// Cells outside the range count as blocked.
class PlannerGrid {
public:
    PlannerGrid(const OccupancyLayout& layout, double inflation, std::span<const Point2> must_include = {},
                double pad = 1.0);

    double resolution() const { return resolution_; }
    double inflation() const { return inflation_; }
    Cell2 origin() const { return origin_; }
    std::int32_t width() const { return width_; }
    std::int32_t height() const { return height_; }

    bool in_bounds(Cell2 c) const;
    bool raw_occupied(Cell2 c) const;   ///< layout obstacle (false outside bounds)
    bool blocked(Cell2 c) const;        ///< inflated obstacle or outside bounds
    bool free(Cell2 c) const { return !blocked(c); }
    bool free(const Point2& p) const { return free(cell(p)); }

    /// Distance from the cell center to the nearest raw obstacle cell center.
    double clearance(Cell2 c) const;

    Cell2 cell(const Point2& p) const { return cell_of(p, resolution_); }
    Point2 center(Cell2 c) const { return cell_center(c, resolution_); }

    /// Samples the segment at a quarter cell and checks every touched cell.
    bool segment_free(const Point2& a, const Point2& b) const;
    bool segment_clear_of_raw(const Point2& a, const Point2& b) const;

    std::size_t index(Cell2 c) const {
        return static_cast<std::size_t>(c.y - origin_.y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(c.x - origin_.x);
    }
    Cell2 cell_at(std::size_t i) const {
        return {origin_.x + static_cast<std::int32_t>(i % static_cast<std::size_t>(width_)),
                origin_.y + static_cast<std::int32_t>(i / static_cast<std::size_t>(width_))};
    }
    std::size_t cell_count() const { return raw_.size(); }

private:
    double resolution_;
    double inflation_;
    Cell2 origin_{};
    std::int32_t width_ = 0;
    std::int32_t height_ = 0;
    std::vector<std::uint8_t> raw_;
    std::vector<std::uint8_t> blocked_;
    std::vector<double> clearance_;
};

struct Path {
    std::vector<Point2> waypoints;
    double length = 0.0;

    static Path from_points(std::vector<Point2> pts);
};

struct PlanResult {
    std::optional<Path> path;
    std::string failure;  ///< reason when path is empty
    Point2 goal = Point2::Zero();
    bool ok() const { return path.has_value(); }
};

/// Free-space skeleton cells (distance-ordered homotopic thinning).
std::vector<Cell2> voronoi_skeleton(const PlannerGrid& grid);

/// Shortest route along the free-space skeleton from `start` to the nearest
/// reachable free cell bordering `goal_footprint`, shortcut where the
/// straight segment stays clear. Approach cells lie at most
/// `inflation + goal_reach` from the footprint. Throws UsageError if `start`
/// is inside a raw obstacle.
PlanResult plan_global(const PlannerGrid& grid, const Point2& start, const Footprint2D& goal_footprint,
                       double goal_reach = 0.5);

/// RRT* with a shrinking-ball rewiring radius. Deterministic for a fixed seed.
PlanResult plan_local(const PlannerGrid& grid, const Point2& start, const Point2& goal,
                      std::size_t budget, std::uint64_t seed, const PlannerConfig& config = {});

}  // namespace dualmap
