#include "dualmap/abstract_map.hpp"
#include "dualmap/error.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dualmap;

namespace {

constexpr std::size_t kDim = 8;

FeatureVec direction(double c) {
    // Unit vector with cosine `c` to the first axis.
    Eigen::VectorXd v = Eigen::VectorXd::Zero(kDim);
    v[0] = c;
    v[1] = std::sqrt(1.0 - c * c);
    return FeatureVec(v);
}

const FeatureVec& templ() {
    static const FeatureVec t = FeatureVec::basis(kDim, 0);
    return t;
}

// Table top at `top` over [x0, x0 + 1] x [0, 0.6] with four legs.
PointCloud table_cloud(double x0, double top = 0.75) {
    std::vector<Point3> pts;
    for (double x = 0; x <= 1.0 + 1e-9; x += 0.05)
        for (double y = 0; y <= 0.6 + 1e-9; y += 0.05) pts.emplace_back(x0 + x, y, top);
    for (double z = 0; z < top - 0.05; z += 0.05) {
        for (const auto& c : {Point2(0, 0), Point2(1, 0), Point2(0, 0.6), Point2(1, 0.6)}) pts.emplace_back(x0 + c.x(), c.y(), z);
    }
    return PointCloud(pts);
}

PointCloud cup_cloud(double x, double y, double bottom) {
    return test::box(Point3(x, y, bottom), Point3(x + 0.1, y + 0.1, bottom + 0.1), 0.02);
}

MapObject object(ObjectId id, PointCloud cloud, FeatureVec f, std::string cls) {
    return make_object(id, {test::entry(test::obs(std::move(cloud), std::move(f), cls, 1))}, 0.05);
}

ConcreteMap map_of(std::vector<MapObject> objects) {
    const auto next = objects.empty() ? 0 : objects.back().id + 1;
    return ConcreteMap::from_parts({}, std::move(objects), next, 1);
}

}  // namespace

TEST(ClassifyAnchor, ThresholdIsStrict) {
    const auto o = object(0, table_cloud(0), direction(0.8), "table");
    const double c = cosine(o.feature, templ());
    EXPECT_EQ(classify_anchor(o, templ(), c), AnchorKind::volatile_object);
    EXPECT_EQ(classify_anchor(o, templ(), std::nextafter(c, 0.0)), AnchorKind::anchor);
    EXPECT_EQ(classify_anchor(o, templ(), 0.6), AnchorKind::anchor);
    EXPECT_EQ(classify_anchor(object(1, cup_cloud(0, 0, 0), direction(0.2), "cup"), templ(), 0.6),
              AnchorKind::volatile_object);
}

TEST(SizeWeightedFeature, QuarterThreeQuarters) {
    const auto a = FeatureVec::basis(kDim, 0), b = FeatureVec::basis(kDim, 1);
    const auto m = size_weighted_feature(a, 100, b, 300);
    const double n = std::sqrt(0.25 * 0.25 + 0.75 * 0.75);
    EXPECT_NEAR(m.values()[0], 0.25 / n, 1e-9);
    EXPECT_NEAR(m.values()[1], 0.75 / n, 1e-9);
    EXPECT_NEAR(m.norm(), 1.0, 1e-9);
}

TEST(SizeWeightedFeature, MatchesOracle) {
    Rng rng(21);
    for (int i = 0; i < 1000; ++i) {
        const auto a = test::random_feature(rng, kDim), b = test::random_feature(rng, kDim);
        const std::size_t na = 1 + rng.below(1000), nb = 1 + rng.below(1000);
        const Eigen::VectorXd expect =
            ((static_cast<double>(na) * a.values() + static_cast<double>(nb) * b.values()) /
             static_cast<double>(na + nb))
                .normalized();
        const auto m = size_weighted_feature(a, na, b, nb);
        ASSERT_LT((m.values() - expect).cwiseAbs().maxCoeff(), 1e-9) << "instance " << i;
        ASSERT_NEAR(m.norm(), 1.0, 1e-9);
    }
}

TEST(SizeWeightedFeature, IdenticalInputsUnchanged) {
    const auto a = direction(0.3);
    EXPECT_EQ(size_weighted_feature(a, 10, a, 90), a);
    EXPECT_THROW(size_weighted_feature(a, 0, a, 0), UsageError);
}

TEST(MakeAnchor, FootprintAndSupport) {
    const auto a = make_anchor(4, object(0, table_cloud(0), direction(0.9), "table"), {});
    EXPECT_EQ(a.id, 4u);
    ASSERT_TRUE(a.support_z.has_value());
    EXPECT_NEAR(*a.support_z, 0.75, 1e-12);
    EXPECT_EQ(a.footprint.z_support(), a.support_z);
    EXPECT_EQ(a.cloud_size, a.projected.size());
    EXPECT_TRUE(a.footprint.contains(Point2(0.5, 0.3)));
    EXPECT_FALSE(a.footprint.contains(Point2(1.5, 0.3)));
}

TEST(OnRelation, CupOnTable) {
    const auto a = make_anchor(0, object(0, table_cloud(0), direction(0.9), "table"), {});
    EXPECT_TRUE(on_relation(object(1, cup_cloud(0.4, 0.2, 0.76), direction(0.1), "cup"), a, 0.1));
    // Exactly at the tolerance.
    EXPECT_TRUE(on_relation(object(1, cup_cloud(0.4, 0.2, 0.85), direction(0.1), "cup"), a, 0.1 + 1e-12));
    EXPECT_FALSE(on_relation(object(1, cup_cloud(0.4, 0.2, 0.9), direction(0.1), "cup"), a, 0.1));
    // Cup on the floor below the table and cup beside the table.
    EXPECT_FALSE(on_relation(object(1, cup_cloud(0.4, 0.2, 0.0), direction(0.1), "cup"), a, 0.1));
    EXPECT_FALSE(on_relation(object(1, cup_cloud(2.0, 0.2, 0.76), direction(0.1), "cup"), a, 0.1));
}

TEST(OnRelation, ContainmentBoundary) {
    const auto a = make_anchor(0, object(0, table_cloud(0), direction(0.9), "table"), {});
    // Cup straddling the table edge: footprint cells x = 9..11, two of three inside.
    const auto v = object(1, test::box(Point3(0.95, 0.2, 0.76), Point3(1.15, 0.25, 0.8), 0.05), direction(0.1), "cup");
    const double inside = footprint(v.cloud, 0.1).fraction_inside(a.footprint);
    ASSERT_GT(inside, 0.0);
    ASSERT_LT(inside, 1.0);
    AbstractionConfig c;
    c.containment = inside;
    EXPECT_TRUE(on_relation(v, a, c));
    c.containment = std::nextafter(inside, 2.0);
    EXPECT_FALSE(on_relation(v, a, c));
}

TEST(Abstract, TableWithCup) {
    const auto m = map_of({object(0, table_cloud(0), direction(0.9), "table"),
                           object(1, cup_cloud(0.4, 0.2, 0.76), direction(0.1), "cup")});
    const auto am = abstract(m, templ(), PointCloud());
    ASSERT_EQ(am.anchors.size(), 1u);
    ASSERT_EQ(am.anchors[0].volatile_features.size(), 1u);
    EXPECT_EQ(am.anchors[0].volatile_features[0], m.objects()[1].feature);
    EXPECT_EQ(am.next_id, 1u);
}

TEST(Abstract, CupOnFloorIsNotAttached) {
    const auto m = map_of({object(0, table_cloud(0), direction(0.9), "table"),
                           object(1, cup_cloud(0.4, 0.2, 0.0), direction(0.1), "cup")});
    const auto am = abstract(m, templ(), PointCloud());
    ASSERT_EQ(am.anchors.size(), 1u);
    EXPECT_TRUE(am.anchors[0].volatile_features.empty());
}

TEST(Abstract, VolatileGoesToBestContainingAnchor) {
    const auto m = map_of({object(0, table_cloud(0), direction(0.9), "table"),
                           object(1, table_cloud(1.1), direction(0.9), "table"),
                           object(2, cup_cloud(1.5, 0.2, 0.76), direction(0.1), "cup")});
    const auto am = abstract(m, templ(), PointCloud());
    ASSERT_EQ(am.anchors.size(), 2u);
    EXPECT_TRUE(am.anchors[0].volatile_features.empty());
    EXPECT_EQ(am.anchors[1].volatile_features.size(), 1u);
}

TEST(Abstract, Idempotent) {
    const auto m = map_of({object(0, table_cloud(0), direction(0.9), "table"),
                           object(1, cup_cloud(0.4, 0.2, 0.76), direction(0.1), "cup")});
    const auto scene = test::box(Point3(0, 0, 0), Point3(2, 2, 0), 0.05);
    EXPECT_EQ(abstract(m, templ(), scene), abstract(m, templ(), scene));
}

TEST(Layout, WallCellsOnly) {
    std::vector<Point3> pts;
    std::vector<Cell2> walls;
    for (int x = 0; x < 10; ++x) {
        for (int y = 0; y < 10; ++y) {
            const bool wall = x == 0 || y == 0;
            const int n = wall ? 20 : 2;
            for (int k = 0; k < n; ++k) pts.emplace_back(0.1 * x + 0.05, 0.1 * y + 0.05, 0.1 * k);
            if (wall) walls.push_back({x, y});
        }
    }
    const auto layout = compute_layout(PointCloud(pts), 0.1);
    EXPECT_EQ(layout.occupied_cells(), walls);
    EXPECT_EQ(layout.width(), 10);
    EXPECT_EQ(layout.height(), 10);
}

TEST(Layout, PercentileWithManyDistinctCounts) {
    // Cells with 1..20 points; nearest rank of 0.9 over 20 values is the 18th.
    std::vector<Point3> pts;
    for (int x = 0; x < 20; ++x)
        for (int k = 0; k <= x; ++k) pts.emplace_back(0.1 * x + 0.05, 0.05, 0.0);
    const auto layout = compute_layout(PointCloud(pts), 0.1, 0.9);
    EXPECT_EQ(layout.occupied_cells(), (std::vector<Cell2>{{17, 0}, {18, 0}, {19, 0}}));
    EXPECT_EQ(compute_layout(PointCloud(pts), 0.1, 1.0).occupied_count(), 1u);
}

TEST(Layout, EmptySceneAndBadArguments) {
    EXPECT_EQ(compute_layout(PointCloud(), 0.1).occupied_count(), 0u);
    EXPECT_THROW(compute_layout(PointCloud(), 0.0), UsageError);
    EXPECT_THROW(compute_layout(PointCloud(), 0.1, 0.0), UsageError);
}

TEST(OccupancyLayout, PgmHeader) {
    const std::vector<Cell2> cells{{0, 0}, {2, 1}};
    const auto l = OccupancyLayout::from_cells(0.1, cells, 0);
    const auto pgm = l.to_pgm();
    EXPECT_EQ(pgm.rfind("P5\n3 2\n255\n", 0), 0u);
    EXPECT_EQ(pgm.size(), std::string("P5\n3 2\n255\n").size() + 6);
}

TEST(UpdateAbstract, SameTableMergesAndReplaces) {
    const auto table = object(0, table_cloud(0), direction(0.9), "table");
    const auto am = abstract(map_of({table, object(1, cup_cloud(0.4, 0.2, 0.76), direction(0.1), "cup")}), templ(),
                             PointCloud());
    const auto local = map_of({object(0, table_cloud(0), direction(0.85), "table"),
                               object(1, cup_cloud(0.6, 0.3, 0.76), direction(0.3), "book"),
                               object(2, cup_cloud(0.2, 0.1, 0.76), direction(0.2), "pen")});
    const auto r = update_abstract(am, local, templ());
    ASSERT_EQ(r.map.anchors.size(), 1u);
    ASSERT_EQ(r.changes.size(), 1u);
    EXPECT_EQ(r.changes[0].kind, AnchorChange::Kind::merged);
    EXPECT_TRUE(r.changes[0].volatile_list_replaced);
    EXPECT_EQ(r.map.anchors[0].volatile_features.size(), 2u);
    const auto expect = size_weighted_feature(am.anchors[0].feature, am.anchors[0].cloud_size,
                                              local.objects()[0].feature, am.anchors[0].cloud_size);
    EXPECT_LT((r.map.anchors[0].feature.values() - expect.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(UpdateAbstract, PartialOverlapMergesWithoutReplacing) {
    const auto am = abstract(map_of({object(0, table_cloud(0), direction(0.9), "table"),
                                     object(1, cup_cloud(0.4, 0.2, 0.76), direction(0.1), "cup")}),
                             templ(), PointCloud());
    // Shifted by half a table: footprint overlap about 0.5.
    const auto local = map_of({object(0, table_cloud(0.5), direction(0.9), "table")});
    const double ov = make_anchor(0, local.objects()[0], {}).footprint.overlap(am.anchors[0].footprint);
    ASSERT_GT(ov, 0.3);
    ASSERT_LE(ov, 0.7);
    const auto r = update_abstract(am, local, templ());
    ASSERT_EQ(r.map.anchors.size(), 1u);
    EXPECT_EQ(r.changes[0].kind, AnchorChange::Kind::merged);
    EXPECT_FALSE(r.changes[0].volatile_list_replaced);
    EXPECT_EQ(r.map.anchors[0].volatile_features, am.anchors[0].volatile_features);
    EXPECT_GT(r.map.anchors[0].footprint.size(), am.anchors[0].footprint.size());
}

TEST(UpdateAbstract, DisjointInsertsAndPreserves) {
    const auto am = abstract(map_of({object(0, table_cloud(0), direction(0.9), "table")}), templ(), PointCloud());
    const auto local = map_of({object(0, table_cloud(5), direction(0.9), "table")});
    const auto r = update_abstract(am, local, templ());
    ASSERT_EQ(r.map.anchors.size(), 2u);
    EXPECT_EQ(r.changes[0].kind, AnchorChange::Kind::preserved);
    EXPECT_EQ(r.changes[1].kind, AnchorChange::Kind::inserted);
    EXPECT_EQ(r.map.anchors[1].id, 1u);
    EXPECT_EQ(r.map.next_id, 2u);
    EXPECT_EQ(r.map.anchors[0], am.anchors[0]);
}

TEST(UpdateAbstract, MergeThresholdIsStrict) {
    const auto am = abstract(map_of({object(0, table_cloud(0), direction(0.9), "table")}), templ(), PointCloud());
    const auto local = map_of({object(0, table_cloud(0.5), direction(0.9), "table")});
    const double ov = make_anchor(0, local.objects()[0], {}).footprint.overlap(am.anchors[0].footprint);
    auto at = am;
    at.config.merge_threshold = ov;
    EXPECT_EQ(update_abstract(at, local, templ()).map.anchors.size(), 2u);
    at.config.merge_threshold = std::nextafter(ov, 0.0);
    EXPECT_EQ(update_abstract(at, local, templ()).map.anchors.size(), 1u);
    at.config.replace_threshold = ov;
    EXPECT_FALSE(update_abstract(at, local, templ()).changes[0].volatile_list_replaced);
    at.config.replace_threshold = std::nextafter(ov, 0.0);
    EXPECT_TRUE(update_abstract(at, local, templ()).changes[0].volatile_list_replaced);
}

TEST(UpdateAbstract, EmptyLocalMapChangesNothing) {
    const auto am = abstract(map_of({object(0, table_cloud(0), direction(0.9), "table")}), templ(), PointCloud());
    const auto r = update_abstract(am, ConcreteMap(), templ());
    EXPECT_EQ(r.map, am);
}

TEST(ClassifyAnchor, TemplateAndOrthogonal) {
    const auto self = object(0, table_cloud(0), templ(), "table");
    EXPECT_EQ(classify_anchor(self, templ(), 0.999), AnchorKind::anchor);
    const auto ortho = object(0, table_cloud(0), FeatureVec::basis(kDim, 3), "mug");
    EXPECT_EQ(classify_anchor(ortho, templ(), 0.5), AnchorKind::volatile_object);
}

TEST(OnRelation, FloatingAndUnsupported) {
    const auto a = make_anchor(0, object(0, table_cloud(0), direction(0.9), "table"), {});
    EXPECT_FALSE(on_relation(object(1, cup_cloud(0.4, 0.2, 1.05), direction(0.1), "cup"), a, 0.1));
    // Anchor with too few points for a plane.
    const auto bare = make_anchor(0, object(0, test::box(Point3(0, 0, 0), Point3(0.1, 0.1, 0.1), 0.05), direction(0.9), "box"), {});
    ASSERT_FALSE(bare.support_z.has_value());
    EXPECT_FALSE(on_relation(object(1, cup_cloud(0.0, 0.0, 0.11), direction(0.1), "cup"), bare, 0.1));
}

TEST(Abstract, ScriptedVolatileCounts) {
    // Three tables; two cups each on the first two and one on the third.
    const auto m = map_of({object(0, table_cloud(0), direction(0.9), "table"),
                           object(1, table_cloud(2), direction(0.9), "table"),
                           object(2, table_cloud(4), direction(0.9), "table"),
                           object(3, cup_cloud(0.1, 0.1, 0.76), direction(0.1), "cup"),
                           object(4, cup_cloud(0.7, 0.4, 0.77), direction(0.2), "cup"),
                           object(5, cup_cloud(2.2, 0.1, 0.76), direction(0.1), "cup"),
                           object(6, cup_cloud(2.6, 0.4, 0.8), direction(0.3), "cup"),
                           object(7, cup_cloud(4.5, 0.3, 0.76), direction(0.1), "cup")});
    const auto am = abstract(m, templ(), PointCloud());
    ASSERT_EQ(am.anchors.size(), 3u);
    EXPECT_EQ(am.anchors[0].volatile_features.size(), 2u);
    EXPECT_EQ(am.anchors[1].volatile_features.size(), 2u);
    EXPECT_EQ(am.anchors[2].volatile_features.size(), 1u);
}

TEST(Layout, UniformFloorOccupiesEverything) {
    const auto floor = test::box(Point3(0.05, 0.05, 0), Point3(0.95, 0.95, 0), 0.1);
    const auto layout = compute_layout(floor, 0.1);
    EXPECT_EQ(layout.occupied_count(), 100u);
}

TEST(Layout, HalvingResolutionPreservesArea) {
    // Walls (dense) around a sparse floor, 4 m square.
    std::vector<Point3> pts;
    for (double x = 0.0125; x < 4.0; x += 0.025) {
        for (double y = 0.0125; y < 4.0; y += 0.025) {
            const bool wall = x < 0.2 || y < 0.2 || x > 3.8 || y > 3.8;
            if (wall) {
                for (double z = 0; z < 2.0; z += 0.1) pts.emplace_back(x, y, z);
            } else if (std::fmod(x + y, 0.1) < 0.03) {
                pts.emplace_back(x, y, 0.0);
            }
        }
    }
    const PointCloud scene(pts);
    const auto coarse = compute_layout(scene, 0.2);
    const auto fine = compute_layout(scene, 0.1);
    const double area_coarse = 0.04 * static_cast<double>(coarse.occupied_count());
    const double area_fine = 0.01 * static_cast<double>(fine.occupied_count());
    EXPECT_NEAR(area_fine, area_coarse, 4.0 * 4 * 0.2);
    EXPECT_GT(area_fine, 0.0);
}

TEST(UpdateAbstract, IdenticalAnchorKeepsFeature) {
    const auto t = object(0, table_cloud(0), direction(0.9), "table");
    const auto am = abstract(map_of({t}), templ(), PointCloud());
    const auto r = update_abstract(am, map_of({t}), templ());
    ASSERT_EQ(r.map.anchors.size(), 1u);
    EXPECT_EQ(r.changes[0].kind, AnchorChange::Kind::merged);
    EXPECT_EQ(r.map.anchors[0].feature, am.anchors[0].feature);
    EXPECT_EQ(r.map.anchors[0].footprint, am.anchors[0].footprint);
}
