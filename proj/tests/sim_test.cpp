#include "dualmap/metrics.hpp"
#include "dualmap/scenario.hpp"
#include "dualmap/sim.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

using namespace dualmap;

namespace {

// One table in front of the agent, optionally behind a wall.
Scenario room(bool wall) {
    Scenario s;
    s.id = "room";
    s.seed = 4;
    s.classes = {{"table", {{"static", 0.8}}}, {"mug", {}}};
    s.vocabulary.dim = 64;
    s.anchor_classes = {"table"};
    s.furniture = {{"table", "table", {{2.5, -0.4}, {3.5, -0.4}, {3.5, 0.4}, {2.5, 0.4}}, 0.75}};
    s.items = {{"mug", "mug", std::string("table"), {3.0, 0.0}, {0.1, 0.1, 0.12}}};
    if (wall) s.walls = {{{1.5, -2.0}, {1.5, 2.0}}};
    s.start = {0.5, 0.0};
    s.tour = {{{0.5, 0.0}, true}};
    s.queries = {{"mug"}};
    validate(s);
    return s;
}

const AgentPose kFacing{{0.5, 0.0}, 0.0};

}  // namespace

TEST(SimWorld, SeesObjectsInView) {
    const SimWorld w(room(false));
    auto v = w.visible(kFacing);
    std::sort(v.begin(), v.end());
    EXPECT_EQ(v, (std::vector<std::string>{"mug", "table"}));
    EXPECT_TRUE(w.visible({{0.5, 0.0}, std::numbers::pi}).empty());
}

TEST(SimWorld, WallsOcclude) {
    const SimWorld w(room(true));
    EXPECT_TRUE(w.visible(kFacing).empty());
    EXPECT_TRUE(w.sense(kFacing, 1, false).observations.empty());
}

TEST(SimWorld, CleanFramesAreLabeledAndUnitNorm) {
    const SimWorld w(room(false));
    const auto f = w.sense(kFacing, 3, false);
    ASSERT_EQ(f.observations.size(), 2u);
    for (const auto& z : f.observations) {
        EXPECT_TRUE(z.class_id.has_value());
        EXPECT_EQ(z.timestamp, 3u);
        EXPECT_NEAR(z.feature.norm(), 1.0, 1e-9);
        EXPECT_FALSE(z.cloud.empty());
    }
    EXPECT_EQ(f.frame_id, 3u);
    EXPECT_FALSE(f.full_cloud.has_value());
    EXPECT_TRUE(w.sense(kFacing, 3, true).full_cloud.has_value());
}

TEST(SimWorld, SensingIsDeterministic) {
    const SimWorld a(room(false)), b(room(false));
    EXPECT_EQ(a.sense(kFacing, 9, true), b.sense(kFacing, 9, true));
    EXPECT_NE(a.sense(kFacing, 9, false), a.sense(kFacing, 10, false));
}

TEST(SimWorld, NoiseKnobs) {
    auto s = room(false);
    s.sensor.spurious_prob = 1.0;
    const SimWorld spurious(s);
    const auto f = spurious.sense(kFacing, 1, false);
    ASSERT_EQ(f.observations.size(), 3u);
    EXPECT_FALSE(f.observations.back().class_id.has_value());
    EXPECT_EQ(f.observations.back().cloud.size(), s.sensor.spurious_points);

    s = room(false);
    s.sensor.drop_prob = 1.0;
    EXPECT_TRUE(SimWorld(s).sense(kFacing, 1, false).observations.empty());

    s = room(false);
    s.sensor.null_class_prob = 1.0;
    for (const auto& z : SimWorld(s).sense(kFacing, 1, false).observations) EXPECT_FALSE(z.class_id.has_value());
}

TEST(SimWorld, UndersegmentMergesPair) {
    auto s = room(false);
    s.undersegments = {{"table", "mug", 0, 10}};
    const SimWorld w(s);
    const auto merged = w.sense(kFacing, 4, false);
    ASSERT_EQ(merged.observations.size(), 1u);
    const auto odd = w.sense(kFacing, 5, false);
    ASSERT_EQ(odd.observations.size(), 1u);
    EXPECT_NE(merged.observations[0].class_id, odd.observations[0].class_id);
    EXPECT_EQ(w.sense(kFacing, 10, false).observations.size(), 2u);
}

TEST(SimWorld, RelocationMovesItem) {
    auto s = room(false);
    s.furniture.push_back({"shelf", "table", {{-0.5, 2.0}, {0.5, 2.0}, {0.5, 2.5}, {-0.5, 2.5}}, 1.0});
    s.relocations = {{1, "mug", std::string("shelf"), {0.0, 2.25}, RelocationKind::cross_anchor}};
    validate(s);
    SimWorld w(s);
    EXPECT_NEAR(w.centroid("mug").x(), 3.0, 1e-9);
    w.apply_relocations();
    EXPECT_NEAR(w.centroid("mug").x(), 0.0, 1e-9);
    EXPECT_NEAR(w.centroid("mug").y(), 2.25, 1e-9);
    EXPECT_EQ(w.carrier_of("mug"), std::optional<std::string>("shelf"));
    EXPECT_GT(w.centroid("mug").z(), 1.0);
}

TEST(SimWorld, GroundTruthCoversEveryObject) {
    const SimWorld w(room(false));
    const auto pts = w.ground_truth_points();
    EXPECT_EQ(w.object_count(), 2u);
    EXPECT_TRUE(std::any_of(pts.begin(), pts.end(), [](const LabeledPoint& p) { return p.cls == "mug"; }));
    EXPECT_TRUE(std::any_of(pts.begin(), pts.end(), [](const LabeledPoint& p) { return p.cls == "table"; }));
}

TEST(TourPoses, SpinAndTravel) {
    auto s = room(false);
    s.tour = {{{0.5, 0.0}, true}, {{1.5, 0.0}, false}};
    s.spin_steps = 8;
    const auto poses = tour_poses(s, 0.25);
    ASSERT_FALSE(poses.empty());
    EXPECT_EQ(poses.back().position, Point2(1.5, 0.0));
    for (std::size_t i = 1; i < poses.size(); ++i) EXPECT_LE((poses[i].position - poses[i - 1].position).norm(), 0.25 + 1e-9);
    EXPECT_EQ(tour_poses(s, 0.25).size(), poses.size());
}

TEST(MapTour, ApartmentMapsEveryObservedObjectOnce) {
    GeneratorOptions g;
    g.seed = 104;
    auto s = generate_apartment(g);
    s.vocabulary.dim = 128;
    const SimWorld w(s);
    std::size_t frames = 0;
    const auto m = map_tour(w, {}, true, [&](const FrameRecord&) { ++frames; });
    EXPECT_EQ(frames, m.frames);
    EXPECT_GT(m.observed.size(), 0u);
    EXPECT_DOUBLE_EQ(odr(m.map.size(), m.observed.size()), 1.0);
    EXPECT_FALSE(m.scene.cloud.empty());
    const auto again = map_tour(w, {});
    EXPECT_EQ(again.map, m.map);
    EXPECT_EQ(again.scene.cloud, m.scene.cloud);
}

TEST(MapTour, SplitFixtureSeparatesChairAndCushion) {
    const auto s = split_fixture();
    const SimWorld w(s);
    AssociationConfig with, without;
    with.stability_enabled = without.stability_enabled = false;
    without.split_enabled = false;
    EXPECT_EQ(map_tour(w, with).map.size(), 2u);
    EXPECT_EQ(map_tour(w, without).map.size(), 1u);
}
