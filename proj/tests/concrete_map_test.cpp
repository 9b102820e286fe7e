#include "dualmap/concrete_map.hpp"
#include "dualmap/error.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace dualmap;

namespace {

constexpr std::size_t kDim = 16;

AssociationConfig plain() {
    AssociationConfig c;
    c.stability_enabled = false;
    c.split_enabled = false;
    return c;
}

PointCloud cube(double x, double size = 0.3) {
    return test::box(Point3(x, 0, 0), Point3(x + size, size, size), 0.05);
}

// Object whose history has the given classes at timestamps 1..n.
MapObject object_with_classes(const std::vector<std::optional<std::string>>& classes) {
    Rng rng(1);
    const auto f = test::random_feature(rng, kDim);
    std::vector<HistoryEntry> h;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        h.push_back(test::entry(test::obs(cube(0), f, classes[i], i + 1)));
    }
    return make_object(0, std::move(h), 0.05);
}

ConcreteMap single(const MapObject& o, AssociationConfig c = {}) {
    return ConcreteMap::from_parts(c, {o}, o.id + 1, o.last_update);
}

}  // namespace

TEST(Similarity, MatchesOracle) {
    Rng rng(77);
    for (int i = 0; i < 1000; ++i) {
        const double r = rng.uniform(0.02, 0.2);
        const auto zc = test::random_cloud(rng, 1 + rng.below(50), Point3::Zero(), Point3::Constant(0.5));
        const Point3 shift = Point3::Constant(rng.uniform(-0.3, 0.3));
        const auto oc = test::random_cloud(rng, 1 + rng.below(50), shift, shift + Point3::Constant(0.5));
        const auto z = test::obs(zc, test::random_feature(rng, kDim), std::nullopt, 1);
        const auto o = make_object(0, {test::entry(test::obs(oc, test::random_feature(rng, kDim), "a", 0))}, r);
        const double expect = test::cosine_oracle(z.feature, o.feature) + test::overlap_oracle(z.cloud, o.cloud, r);
        ASSERT_NEAR(similarity(z, o, r), expect, 1e-12) << "instance " << i;
    }
}

TEST(Similarity, IdenticalObservationScoresTwo) {
    Rng rng(2);
    const auto z = test::obs(cube(0), test::random_feature(rng, kDim), "a", 1);
    const auto o = make_object(0, {test::entry(z)}, 0.05);
    EXPECT_NEAR(similarity(z, o, 0.05), 2.0, 1e-12);
}

TEST(Association, InitializeCreatesOnePerObservation) {
    Rng rng(3);
    const auto f = test::frame(1, {test::obs(cube(0), test::random_feature(rng, kDim), "a", 0),
                                   test::obs(cube(2), test::random_feature(rng, kDim), "b", 0)});
    const auto m = ConcreteMap::initialize(f, plain());
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m.objects()[0].id, 0u);
    EXPECT_EQ(m.objects()[1].id, 1u);
    EXPECT_EQ(m.objects()[1].class_id, std::optional<std::string>("b"));
}

TEST(Association, InfiniteThresholdNeverMerges) {
    auto c = plain();
    c.match_threshold = std::numeric_limits<double>::infinity();
    ConcreteMap m(c);
    Rng rng(4);
    const auto f = test::random_feature(rng, kDim);
    for (std::uint64_t t = 1; t <= 5; ++t) m.associate_frame(test::frame(t, {test::obs(cube(0), f, "a", 0)}));
    EXPECT_EQ(m.size(), 5u);
}

TEST(Association, ZeroThresholdMergesIdentical) {
    auto c = plain();
    c.match_threshold = 0.0;
    ConcreteMap m(c);
    Rng rng(5);
    const auto f = test::random_feature(rng, kDim);
    m.associate_frame(test::frame(1, {test::obs(cube(0), f, "a", 0)}));
    const auto r = m.associate_frame(test::frame(2, {test::obs(cube(0), f, "a", 0)}));
    EXPECT_EQ(m.size(), 1u);
    EXPECT_EQ(r.merged(), 1u);
    EXPECT_EQ(m.objects()[0].history.size(), 2u);
    EXPECT_EQ(m.objects()[0].last_update, 2u);
}

TEST(Association, ThresholdIsStrict) {
    Rng rng(6);
    const auto f1 = test::random_feature(rng, kDim), f2 = test::random_feature(rng, kDim);
    const auto z1 = test::obs(cube(0), f1, "a", 1);
    const auto z2 = test::obs(cube(0.1), f2, "a", 2);
    const double s = similarity(z2, make_object(0, {test::entry(z1)}, 0.05), 0.05);

    auto at = plain();
    at.match_threshold = s;
    ConcreteMap equal(at);
    equal.associate_frame(test::frame(1, {z1}));
    const auto r = equal.associate_frame(test::frame(2, {z2}));
    EXPECT_EQ(equal.size(), 2u);
    EXPECT_DOUBLE_EQ(r.entries[0].score, s);
    EXPECT_TRUE(r.entries[0].created);

    auto below = plain();
    below.match_threshold = std::nextafter(s, -1.0);
    ConcreteMap merged(below);
    merged.associate_frame(test::frame(1, {z1}));
    merged.associate_frame(test::frame(2, {z2}));
    EXPECT_EQ(merged.size(), 1u);
}

TEST(Association, ScoresAgainstFrameStartSnapshot) {
    auto c = plain();
    c.match_threshold = 0.0;
    ConcreteMap m(c);
    Rng rng(7);
    const auto f = test::random_feature(rng, kDim);
    // Two identical observations in the first frame cannot see each other.
    m.associate_frame(test::frame(1, {test::obs(cube(0), f, "a", 0), test::obs(cube(0), f, "a", 0)}));
    EXPECT_EQ(m.size(), 2u);
    // Both later observations merge into the lower id on the tie.
    const auto r = m.associate_frame(test::frame(2, {test::obs(cube(0), f, "a", 0), test::obs(cube(0), f, "a", 0)}));
    EXPECT_EQ(r.entries[0].object, 0u);
    EXPECT_EQ(r.entries[1].object, 0u);
    EXPECT_EQ(m.objects()[0].history.size(), 3u);
}

TEST(Association, RejectsNonIncreasingFrames) {
    ConcreteMap m(plain());
    m.associate_frame(test::frame(5, {}));
    EXPECT_THROW(m.associate_frame(test::frame(5, {})), UsageError);
    EXPECT_THROW(m.associate_frame(test::frame(4, {})), UsageError);
}

TEST(Association, IncrementalFeatureMatchesRecompute) {
    auto c = plain();
    c.match_threshold = 0.5;
    ConcreteMap m(c);
    Rng rng(8);
    const auto base = test::random_feature(rng, kDim);
    for (std::uint64_t t = 1; t <= 200; ++t) {
        Eigen::VectorXd v = base.values() + 0.2 * test::random_feature(rng, kDim).values();
        m.associate_frame(test::frame(t, {test::obs(cube(0), FeatureVec::normalized(v), "a", 0)}));
    }
    ASSERT_EQ(m.size(), 1u);
    const auto& o = m.objects()[0];
    EXPECT_EQ(o.history.size(), 200u);
    EXPECT_LT((o.feature.values() - recompute_feature(o).values()).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(o.feature.norm(), 1.0, 1e-9);
}

TEST(MapObject, MajorityTieGoesToEarliest) {
    const auto o = object_with_classes({"b", "a", "a", "b"});
    EXPECT_EQ(o.majority_class().first, std::optional<std::string>("b"));
    EXPECT_EQ(o.majority_class().second, 2u);
    EXPECT_EQ(o.class_id, std::optional<std::string>("b"));
}

TEST(MapObject, NullIsItsOwnBucket) {
    const auto o = object_with_classes({std::nullopt, std::nullopt, "a"});
    EXPECT_EQ(o.majority_class().first, std::nullopt);
    EXPECT_EQ(o.majority_class().second, 2u);
}

TEST(Stability, EvenSplitIsRemoved) {
    auto m = single(object_with_classes({"a", "a", "a", "b", "b", "b"}));
    EXPECT_EQ(m.finalize().size(), 1u);
    EXPECT_TRUE(m.empty());
}

TEST(Stability, UnanimousIsKept) {
    auto m = single(object_with_classes(std::vector<std::optional<std::string>>(9, "a")));
    EXPECT_TRUE(m.finalize().empty());
    EXPECT_EQ(m.size(), 1u);
}

TEST(Stability, TwoThirdsBoundary) {
    // 4 of 6 is exactly two thirds.
    auto keep = single(object_with_classes({"a", "a", "b", "a", "b", "a"}));
    EXPECT_TRUE(keep.finalize().empty());
    // 3 of 5 falls short.
    auto drop = single(object_with_classes({"a", "b", "a", "b", "a"}));
    EXPECT_EQ(drop.finalize().size(), 1u);
    // 6 of 9 is exactly two thirds, 5 of 8 is not.
    auto keep9 = single(object_with_classes({"a", "a", "a", "a", "a", "a", "b", "b", "b"}));
    EXPECT_TRUE(keep9.finalize().empty());
    auto drop8 = single(object_with_classes({"a", "a", "a", "a", "a", "b", "b", "b"}));
    EXPECT_EQ(drop8.finalize().size(), 1u);
}

TEST(Stability, MinObservationsBoundary) {
    auto four = single(object_with_classes({"a", "a", "a", "a"}));
    EXPECT_EQ(four.finalize().size(), 1u);
    auto five = single(object_with_classes({"a", "a", "a", "a", "a"}));
    EXPECT_TRUE(five.finalize().empty());
}

TEST(Stability, IdleWindow) {
    const auto o = object_with_classes({"a"});  // last update at 1
    auto recent = single(o);
    EXPECT_TRUE(recent.stability_check(20).empty());  // idle 19
    auto at_window = single(o);
    EXPECT_EQ(at_window.stability_check(21).size(), 1u);  // idle 20
    auto idle = single(o);
    EXPECT_EQ(idle.stability_check(26).size(), 1u);  // idle 25
}

TEST(Stability, OnlineCheckDuringProcessing) {
    AssociationConfig c;
    c.split_enabled = false;
    ConcreteMap m(c);
    Rng rng(9);
    m.process_frame(test::frame(1, {test::obs(cube(0), test::random_feature(rng, kDim), "a", 0)}));
    for (std::uint64_t t = 2; t <= 25; ++t) {
        m.process_frame(test::frame(t, {}));
        EXPECT_EQ(m.size(), t < 21 ? 1u : 0u) << "tick " << t;
    }
}

TEST(Split, PersistentConflictSplitsByClass) {
    Rng rng(10);
    const auto fa = test::random_feature(rng, kDim), fb = test::random_feature(rng, kDim);
    std::vector<HistoryEntry> h;
    for (Timestamp t = 1; t <= 3; ++t) {
        h.push_back(test::entry(test::obs(cube(0), fa, "chair", t)));
        h.push_back(test::entry(test::obs(cube(0.3, 0.2), fb, "cushion", t)));
    }
    h.push_back(test::entry(test::obs(cube(0), fa, "chair", 4)));
    auto m = single(make_object(0, std::move(h), 0.05), plain());
    const auto r = m.split_detection();
    ASSERT_EQ(r.splits.size(), 1u);
    EXPECT_EQ(r.splits[0].original, 0u);
    EXPECT_EQ(r.splits[0].created, (std::vector<ObjectId>{1, 2}));
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m.objects()[0].class_id, std::optional<std::string>("chair"));
    EXPECT_EQ(m.objects()[0].history.size(), 4u);
    EXPECT_LT((m.objects()[0].feature.values() - fa.values()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(m.objects()[1].class_id, std::optional<std::string>("cushion"));
    EXPECT_EQ(m.objects()[1].history.size(), 3u);
    EXPECT_EQ(m.next_id(), 3u);
}

TEST(Split, TwoConflictsAreBelowPersistence) {
    Rng rng(11);
    const auto f = test::random_feature(rng, kDim);
    std::vector<HistoryEntry> h;
    for (Timestamp t = 1; t <= 2; ++t) {
        h.push_back(test::entry(test::obs(cube(0), f, "chair", t)));
        h.push_back(test::entry(test::obs(cube(0), f, "cushion", t)));
    }
    const auto o = make_object(0, std::move(h), 0.05);
    auto m = single(o, plain());
    EXPECT_TRUE(m.split_detection().splits.empty());
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m.objects()[0], o);
}

TEST(Split, NullDoesNotConflict) {
    Rng rng(12);
    const auto f = test::random_feature(rng, kDim);
    std::vector<HistoryEntry> h;
    for (Timestamp t = 1; t <= 5; ++t) {
        h.push_back(test::entry(test::obs(cube(0), f, "chair", t)));
        h.push_back(test::entry(test::obs(cube(0), f, std::nullopt, t)));
    }
    auto m = single(make_object(0, std::move(h), 0.05), plain());
    EXPECT_TRUE(m.split_detection().splits.empty());
}

TEST(MakeObject, UnionCloudAndMeanFeature) {
    const auto a = FeatureVec::basis(2, 0), b = FeatureVec::basis(2, 1);
    const auto o = make_object(3, {test::entry(test::obs(cube(0), a, "x", 2)), test::entry(test::obs(cube(1), b, "x", 1))},
                               0.05);
    EXPECT_EQ(o.history.front().timestamp, 1u);
    EXPECT_EQ(o.last_update, 2u);
    EXPECT_NEAR(o.feature.values()[0], 1 / std::sqrt(2.0), 1e-12);
    const auto c0 = cube(0), c1 = cube(1);
    std::vector<Point3> both(c1.points().begin(), c1.points().end());
    both.insert(both.end(), c0.points().begin(), c0.points().end());
    const auto expect = voxel_downsample(PointCloud(both), 0.05);
    EXPECT_TRUE(std::equal(o.cloud.points().begin(), o.cloud.points().end(), expect.points().begin(),
                           expect.points().end()));
    EXPECT_THROW(make_object(0, {}, 0.05), UsageError);
}

TEST(ConcreteMap, FromPartsValidates) {
    const auto o = object_with_classes({"a"});
    EXPECT_THROW(ConcreteMap::from_parts({}, {o}, 0, std::nullopt), DataError);
    EXPECT_THROW(ConcreteMap::from_parts({}, {o, o}, 5, std::nullopt), DataError);
    EXPECT_NO_THROW(ConcreteMap::from_parts({}, {o}, 1, std::nullopt));
}

TEST(ConcreteMap, ProcessingIsDeterministic) {
    auto run = [] {
        ConcreteMap m;
        Rng rng(13);
        const auto fa = test::random_feature(rng, kDim), fb = test::random_feature(rng, kDim);
        for (std::uint64_t t = 1; t <= 40; ++t) {
            m.process_frame(test::frame(t, {test::obs(cube(0), fa, "a", 0), test::obs(cube(3), fb, "b", 0)}));
        }
        return m;
    };
    const auto a = run(), b = run();
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 2u);
}

TEST(Association, ThreeObservationsThreeObjects) {
    Rng rng(14);
    const auto f = test::frame(1, {test::obs(cube(0), test::random_feature(rng, kDim), "a", 0),
                                   test::obs(cube(2), test::random_feature(rng, kDim), "b", 0),
                                   test::obs(cube(4), test::random_feature(rng, kDim), std::nullopt, 0)});
    EXPECT_EQ(ConcreteMap::initialize(f).size(), 3u);
    EXPECT_TRUE(ConcreteMap::initialize(test::frame(1, {})).empty());
}

TEST(Similarity, OrthogonalAndDisjointIsZero) {
    const auto z = test::obs(cube(0), FeatureVec::basis(kDim, 0), "a", 1);
    const auto o = make_object(0, {test::entry(test::obs(cube(10), FeatureVec::basis(kDim, 1), "b", 0))}, 0.05);
    EXPECT_DOUBLE_EQ(similarity(z, o, 0.05), 0.0);
}

TEST(Association, TwoObjectsOverTenFramesMatchScoreTable) {
    auto c = plain();
    ConcreteMap m(c);
    Rng rng(15);
    const auto fa = test::random_feature(rng, kDim), fb = test::random_feature(rng, kDim);
    for (std::uint64_t t = 1; t <= 10; ++t) {
        // Jittered views of two separated objects with noisy features.
        auto jitter = [&](const FeatureVec& f) {
            return FeatureVec::normalized(f.values() + 0.1 * test::random_feature(rng, kDim).values());
        };
        const auto frame = test::frame(t, {test::obs(cube(0.01 * static_cast<double>(t % 3)), jitter(fa), "a", 0),
                                           test::obs(cube(2.0 + 0.01 * static_cast<double>(t % 2)), jitter(fb), "b", 0)});
        // Exhaustive score table against the objects at frame start.
        std::vector<std::pair<ObjectId, double>> expect;
        for (const auto& z : frame.observations) {
            std::pair<ObjectId, double> best{0, -1e9};
            for (const auto& o : m.objects()) {
                const double s = test::cosine_oracle(z.feature, o.feature) + test::overlap_oracle(z.cloud, o.cloud, c.voxel);
                if (s > best.second) best = {o.id, s};
            }
            expect.push_back(best);
        }
        const auto r = m.associate_frame(frame);
        if (t > 1) {
            for (std::size_t i = 0; i < 2; ++i) {
                ASSERT_EQ(r.entries[i].best, std::optional<ObjectId>(expect[i].first));
                ASSERT_NEAR(r.entries[i].score, expect[i].second, 1e-12);
                ASSERT_FALSE(r.entries[i].created);
            }
        }
    }
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m.objects()[0].history.size(), 10u);
    EXPECT_EQ(m.objects()[1].history.size(), 10u);
}

TEST(Association, DistantNovelObservationCreatesObject) {
    ConcreteMap m(plain());
    Rng rng(16);
    const auto f = test::random_feature(rng, kDim);
    m.associate_frame(test::frame(1, {test::obs(cube(0), f, "a", 0)}));
    m.associate_frame(test::frame(2, {test::obs(cube(0), f, "a", 0)}));
    EXPECT_EQ(m.size(), 1u);
    m.associate_frame(test::frame(3, {test::obs(cube(8), FeatureVec::normalized(-f.values()), "b", 0)}));
    EXPECT_EQ(m.size(), 2u);
}

TEST(Split, SingleClassUntouched) {
    auto m = single(object_with_classes({"a", "a", "a", "a"}), plain());
    EXPECT_TRUE(m.split_detection().splits.empty());
    EXPECT_EQ(m.size(), 1u);
}
