#include "dualmap/error.hpp"
#include "dualmap/planner.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dualmap;

namespace {

constexpr double kRes = 0.1;

// Layout of `w` x `h` cells with the listed rectangles (cell ranges, inclusive) occupied.
struct Rect {
    int x0, y0, x1, y1;
};

OccupancyLayout layout(int w, int h, std::initializer_list<Rect> rects) {
    std::vector<std::uint8_t> raster(static_cast<std::size_t>(w * h), 0);
    for (const auto& r : rects)
        for (int y = r.y0; y <= r.y1; ++y)
            for (int x = r.x0; x <= r.x1; ++x) raster[static_cast<std::size_t>(y * w + x)] = 1;
    return OccupancyLayout(kRes, {0, 0}, w, h, std::move(raster));
}

Footprint2D square_at(const Point2& p, int half = 0) {
    const Cell2 c = cell_of(p, kRes);
    std::vector<Cell2> cells;
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) cells.push_back({c.x + dx, c.y + dy});
    return Footprint2D(kRes, cells);
}

// Dense independent sweep at a tenth of a cell.
bool swept_free(const PlannerGrid& g, const Path& p) {
    for (std::size_t i = 1; i < p.waypoints.size(); ++i) {
        const Point2 a = p.waypoints[i - 1], b = p.waypoints[i];
        const auto n = static_cast<int>(std::ceil((b - a).norm() / (kRes * 0.1))) + 1;
        for (int k = 0; k <= n; ++k) {
            if (g.blocked(g.cell(a + (b - a) * (static_cast<double>(k) / n)))) return false;
        }
    }
    return true;
}

double polyline(std::initializer_list<Point2> pts) {
    double len = 0.0;
    const Point2* prev = nullptr;
    for (const auto& p : pts) {
        if (prev) len += (p - *prev).norm();
        prev = &p;
    }
    return len;
}

// U opening to -x: bar at x = 3.0, arms at y = 1.5 and y = 4.5 reaching back to x = 2.0.
OccupancyLayout u_wall() { return layout(60, 60, {{30, 15, 30, 45}, {20, 15, 30, 15}, {20, 45, 30, 45}}); }

}  // namespace

TEST(PlannerGrid, InflatedCoversRaw) {
    const auto l = u_wall();
    const PlannerGrid g(l, 0.2);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        const Cell2 c = g.cell_at(i);
        if (g.raw_occupied(c)) EXPECT_TRUE(g.blocked(c));
        if (g.free(c)) EXPECT_GT(g.clearance(c), 0.2);
    }
    EXPECT_TRUE(g.blocked(Cell2{-1000, 0}));
    EXPECT_THROW(PlannerGrid(l, -1.0), UsageError);
}

TEST(PlanGlobal, EmptyLayoutGivesStraightLine) {
    const auto l = layout(50, 50, {});
    const PlannerGrid g(l, 0.2);
    const Point2 start(0.55, 0.55);
    const auto r = plan_global(g, start, square_at(Point2(4.05, 0.55)));
    ASSERT_TRUE(r.ok()) << r.failure;
    ASSERT_EQ(r.path->waypoints.size(), 2u);
    EXPECT_NEAR(r.path->length, (r.goal - start).norm(), 1e-12);
    EXPECT_NEAR(r.goal.x(), 3.95, 1e-9);
}

TEST(PlanGlobal, StartNextToFootprintIsSingleWaypoint) {
    const auto l = layout(50, 50, {});
    const PlannerGrid g(l, 0.2);
    const auto r = plan_global(g, Point2(1.95, 1.05), square_at(Point2(2.05, 1.05)));
    ASSERT_TRUE(r.ok()) << r.failure;
    EXPECT_EQ(r.path->waypoints.size(), 1u);
    EXPECT_EQ(r.path->length, 0.0);
}

TEST(PlanGlobal, UWallDetour) {
    const auto l = u_wall();
    const double inflation = 0.2;
    const PlannerGrid g(l, inflation);
    const Point2 start(2.55, 3.05), goal(4.05, 3.05);
    const auto r = plan_global(g, start, square_at(goal));
    ASSERT_TRUE(r.ok()) << r.failure;
    // Hand-measured: out of the U past the upper arm tip, over the bar corner, down to the goal.
    const double c = inflation + kRes;
    const double hand = polyline({start, Point2(2.0 - c, 4.55 + c), Point2(3.05 + c, 4.55 + c), r.goal});
    EXPECT_NEAR(r.path->length, hand, 0.1 * hand);
    for (const auto& w : r.path->waypoints) EXPECT_GE(g.clearance(g.cell(w)), inflation);
    EXPECT_TRUE(swept_free(g, *r.path));
    EXPECT_NEAR(r.path->length, Path::from_points(r.path->waypoints).length, 1e-12);
}

TEST(PlanGlobal, Deterministic) {
    const auto l = u_wall();
    const PlannerGrid g(l, 0.2);
    const auto a = plan_global(g, Point2(2.55, 3.05), square_at(Point2(4.05, 3.05)));
    const auto b = plan_global(g, Point2(2.55, 3.05), square_at(Point2(4.05, 3.05)));
    ASSERT_TRUE(a.ok());
    EXPECT_EQ(a.path->waypoints, b.path->waypoints);
}

TEST(PlanGlobal, DisconnectedGoalFails) {
    // Closed box around the goal, wider than the approach reach.
    const auto l = layout(60, 60, {{28, 18, 52, 18}, {28, 42, 52, 42}, {28, 18, 28, 42}, {52, 18, 52, 42}});
    const PlannerGrid g(l, 0.2);
    const auto r = plan_global(g, Point2(1.05, 1.05), square_at(Point2(4.05, 3.05)));
    EXPECT_FALSE(r.ok());
    EXPECT_FALSE(r.failure.empty());
}

TEST(PlanGlobal, StartInObstacleThrows) {
    const auto l = u_wall();
    const PlannerGrid g(l, 0.2);
    EXPECT_THROW(plan_global(g, Point2(3.05, 3.05), square_at(Point2(4.05, 3.05))), UsageError);
}

TEST(PlanGlobal, StartInInflationBandEscapes) {
    const auto l = u_wall();
    const PlannerGrid g(l, 0.2);
    const auto r = plan_global(g, Point2(2.85, 3.05), square_at(Point2(1.05, 3.05)));
    ASSERT_TRUE(r.ok()) << r.failure;
    EXPECT_TRUE(g.free(r.path->waypoints[1]));
}

TEST(PlanLocal, FreeSpaceNearStraight) {
    const auto l = layout(60, 60, {});
    const PlannerGrid g(l, 0.2);
    const Point2 start(2.05, 3.05), goal(4.05, 3.05);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = plan_local(g, start, goal, 5000, seed);
        ASSERT_TRUE(r.ok()) << "seed " << seed << ": " << r.failure;
        EXPECT_LE(r.path->length, 1.1 * 2.0) << "seed " << seed;
        EXPECT_TRUE(r.path->waypoints.front() == start);
        EXPECT_TRUE(r.path->waypoints.back() == goal);
        EXPECT_TRUE(swept_free(g, *r.path));
    }
}

TEST(PlanLocal, WallWithoutOpeningFails) {
    // Wall spanning the whole grid height.
    const auto l = layout(60, 60, {{30, 0, 31, 59}});
    const PlannerGrid g(l, 0.2, {}, 0.0);
    const auto r = plan_local(g, Point2(2.05, 3.05), Point2(4.05, 3.05), 2000, 3);
    EXPECT_FALSE(r.ok());
}

TEST(PlanLocal, StartEqualsGoal) {
    const auto l = layout(20, 20, {});
    const PlannerGrid g(l, 0.2);
    const auto r = plan_local(g, Point2(1.05, 1.05), Point2(1.05, 1.05), 100, 1);
    ASSERT_TRUE(r.ok());
    EXPECT_TRUE(r.path->waypoints.empty());
    EXPECT_EQ(r.path->length, 0.0);
}

TEST(PlanLocal, CostNonIncreasingInBudget) {
    const auto l = u_wall();
    const PlannerGrid g(l, 0.2);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t budget = 500; budget <= 5000; budget += 500) {
            const auto r = plan_local(g, Point2(2.55, 3.05), Point2(4.05, 3.05), budget, seed);
            const double cost = r.ok() ? r.path->length : std::numeric_limits<double>::infinity();
            EXPECT_LE(cost, prev + 1e-12) << "seed " << seed << " budget " << budget;
            prev = cost;
        }
        EXPECT_TRUE(std::isfinite(prev)) << "seed " << seed;
    }
}

TEST(PlanLocal, DeterministicForSeed) {
    const auto l = u_wall();
    const PlannerGrid g(l, 0.2);
    const auto a = plan_local(g, Point2(2.55, 3.05), Point2(4.05, 3.05), 3000, 9);
    const auto b = plan_local(g, Point2(2.55, 3.05), Point2(4.05, 3.05), 3000, 9);
    ASSERT_TRUE(a.ok());
    EXPECT_EQ(a.path->waypoints, b.path->waypoints);
}

TEST(PlanLocal, GoalInObstacleSnaps) {
    const auto l = layout(60, 60, {{40, 28, 42, 32}});
    const PlannerGrid g(l, 0.2);
    const auto r = plan_local(g, Point2(2.05, 3.05), Point2(4.15, 3.05), 3000, 1);
    ASSERT_TRUE(r.ok()) << r.failure;
    EXPECT_TRUE(g.free(r.goal));
    EXPECT_LE((r.goal - Point2(4.15, 3.05)).norm(), 0.5);
    // Deep inside a large obstacle nothing is within the snap radius.
    const auto big = layout(60, 60, {{20, 20, 40, 40}});
    const PlannerGrid gb(big, 0.2);
    EXPECT_FALSE(plan_local(gb, Point2(0.55, 0.55), Point2(3.05, 3.05), 1000, 1).ok());
}

TEST(VoronoiSkeleton, CorridorCenterline) {
    // Horizontal corridor between two walls; the skeleton runs along its middle
    // and branches toward the corners near the open ends.
    const auto l = layout(60, 21, {{0, 0, 59, 0}, {0, 20, 59, 20}});
    const PlannerGrid g(l, 0.2, {}, 0.0);
    const auto skel = voronoi_skeleton(g);
    ASSERT_FALSE(skel.empty());
    std::size_t middle = 0;
    for (const auto& c : skel) {
        if (c.x > 12 && c.x < 48) {
            EXPECT_NEAR(c.y, 10, 1) << c.x;
            ++middle;
        }
    }
    EXPECT_GE(middle, 35u);
}
