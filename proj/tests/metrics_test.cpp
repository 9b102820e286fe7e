#include "dualmap/error.hpp"
#include "dualmap/metrics.hpp"
#include "dualmap/rng.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace dualmap;

namespace {

// Ten points on a line, the first five labeled a, the rest b.
LabeledCloud line_gt() {
    LabeledCloud c;
    c.label_set = {"a", "b"};
    for (int i = 0; i < 10; ++i) {
        c.points.emplace_back(i * 0.5, 0, 0);
        c.labels.push_back(i < 5 ? 0 : 1);
    }
    return c;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

TEST(Segmentation, PerfectPrediction) {
    const auto gt = line_gt();
    const auto r = segmentation_metrics(gt, gt);
    EXPECT_DOUBLE_EQ(r.miou, 1.0);
    EXPECT_DOUBLE_EQ(r.fmiou, 1.0);
    EXPECT_DOUBLE_EQ(r.macc, 1.0);
    EXPECT_EQ(r.unmatched, 0u);
    EXPECT_EQ(r.support.at("a"), 5u);
}

TEST(Segmentation, HandComputedFixture) {
    const auto gt = line_gt();
    auto pred = gt;
    pred.labels[0] = pred.labels[1] = 1;
    const auto r = segmentation_metrics(pred, gt);
    EXPECT_DOUBLE_EQ(r.iou.at("a"), 3.0 / 5.0);
    EXPECT_DOUBLE_EQ(r.iou.at("b"), 5.0 / 7.0);
    EXPECT_DOUBLE_EQ(r.miou, (0.6 + 5.0 / 7.0) / 2);
    EXPECT_DOUBLE_EQ(r.fmiou, r.miou);
    EXPECT_DOUBLE_EQ(r.macc, 0.8);
}

TEST(Segmentation, AllWrong) {
    const auto gt = line_gt();
    auto pred = gt;
    for (auto& l : pred.labels) l = 1 - l;
    const auto r = segmentation_metrics(pred, gt);
    EXPECT_DOUBLE_EQ(r.miou, 0.0);
    EXPECT_DOUBLE_EQ(r.macc, 0.0);
}

TEST(Segmentation, ClassAbsentFromPredictionCountsAsZero) {
    const auto gt = line_gt();
    auto pred = gt;
    std::fill(pred.labels.begin(), pred.labels.end(), 1u);
    const auto r = segmentation_metrics(pred, gt);
    EXPECT_DOUBLE_EQ(r.iou.at("a"), 0.0);
    EXPECT_DOUBLE_EQ(r.iou.at("b"), 0.5);
    EXPECT_DOUBLE_EQ(r.miou, 0.25);
}

TEST(Segmentation, UnmatchedPointsAreMisses) {
    const auto gt = line_gt();
    LabeledCloud pred;
    pred.label_set = gt.label_set;
    const auto r = segmentation_metrics(pred, gt);
    EXPECT_EQ(r.unmatched, 10u);
    EXPECT_DOUBLE_EQ(r.miou, 0.0);
}

TEST(Segmentation, FrequencyWeighting) {
    auto gt = line_gt();
    gt.labels[5] = 0;  // a: 6 points, b: 4
    auto pred = gt;
    pred.labels[0] = 1;
    const auto r = segmentation_metrics(pred, gt);
    const double iou_a = 5.0 / 6.0, iou_b = 4.0 / 5.0;
    EXPECT_DOUBLE_EQ(r.fmiou, 0.6 * iou_a + 0.4 * iou_b);
    EXPECT_DOUBLE_EQ(r.miou, (iou_a + iou_b) / 2);
}

TEST(Segmentation, PermutationInvariant) {
    Rng rng(5);
    LabeledCloud gt;
    gt.label_set = {"a", "b", "c"};
    for (int i = 0; i < 300; ++i) {
        gt.points.emplace_back(rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 1));
        gt.labels.push_back(static_cast<std::uint32_t>(rng.below(3)));
    }
    auto pred = gt;
    for (auto& l : pred.labels) {
        if (rng.uniform(0, 1) < 0.3) l = static_cast<std::uint32_t>(rng.below(3));
    }
    const auto base = segmentation_metrics(pred, gt);
    std::vector<std::size_t> perm(gt.points.size());
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, rng);
    LabeledCloud pg = gt, pp = pred;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        pg.points[i] = gt.points[perm[i]];
        pg.labels[i] = gt.labels[perm[i]];
    }
    shuffle(perm, rng);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        pp.points[i] = pred.points[perm[i]];
        pp.labels[i] = pred.labels[perm[i]];
    }
    const auto r = segmentation_metrics(pp, pg);
    EXPECT_NEAR(r.miou, base.miou, 1e-12);
    EXPECT_NEAR(r.fmiou, base.fmiou, 1e-12);
    EXPECT_NEAR(r.macc, base.macc, 1e-12);
}

TEST(Segmentation, RejectsBadInput) {
    const auto gt = line_gt();
    LabeledCloud empty;
    empty.label_set = gt.label_set;
    EXPECT_THROW(segmentation_metrics(gt, empty), DataError);
    auto other = gt;
    other.label_set = {"a", "c"};
    EXPECT_THROW(segmentation_metrics(other, gt), UsageError);
    auto bad = gt;
    bad.labels[0] = 7;
    EXPECT_THROW(segmentation_metrics(bad, gt), DataError);
    EXPECT_THROW(segmentation_metrics(gt, gt, 0.0), UsageError);
}

TEST(LabeledCloudText, RoundTrip) {
    auto c = line_gt();
    c.points[3] = Point3(0.1, -2.0 / 3.0, 1e-17);
    const auto back = labeled_cloud_from_text(labeled_cloud_to_text(c));
    EXPECT_EQ(back.label_set, c.label_set);
    EXPECT_EQ(back.labels, c.labels);
    ASSERT_EQ(back.points.size(), c.points.size());
    for (std::size_t i = 0; i < c.points.size(); ++i) EXPECT_EQ(back.points[i], c.points[i]);
}

TEST(LabeledCloudText, RejectsMalformed) {
    EXPECT_THROW(labeled_cloud_from_text(""), DataError);
    EXPECT_THROW(labeled_cloud_from_text("points a\n"), DataError);
    EXPECT_THROW(labeled_cloud_from_text("labels a\n1 2 3\n"), DataError);
    EXPECT_THROW(labeled_cloud_from_text("labels a\n1 2 3 0 9\n"), DataError);
    EXPECT_THROW(labeled_cloud_from_text("labels a\n1 2 3 1\n"), DataError);
    EXPECT_THROW(labeled_cloud_from_text("labels a\n1 2 3 -1\n"), DataError);
}

TEST(Odr, Values) {
    EXPECT_DOUBLE_EQ(odr(100, 100), 1.0);
    EXPECT_DOUBLE_EQ(odr(97, 100), 0.97);
    EXPECT_DOUBLE_EQ(odr(0, 100), 0.0);
    EXPECT_THROW(odr(3, 0), UsageError);
}

TEST(SuccessRate, Criteria) {
    using S = NavigationEpisode::Status;
    const std::map<std::string, Point3> gt{{"mug", Point3(0, 0, 0.8)}};
    auto ep = [](S s, double x, std::size_t attempts) { return EpisodeSummary{"mug", s, Point2(x, 0), attempts}; };
    EXPECT_DOUBLE_EQ(success_rate({ep(S::success, 0.5, 1), ep(S::success, 1.0, 3)}, gt), 1.0);
    EXPECT_FALSE(episode_succeeded(ep(S::success, 1.2, 1), gt.at("mug")));
    EXPECT_FALSE(episode_succeeded(ep(S::success, 0.0, 4), gt.at("mug")));
    EXPECT_FALSE(episode_succeeded(ep(S::exhausted, 0.0, 3), gt.at("mug")));
    const std::vector<EpisodeSummary> five{ep(S::success, 0, 1), ep(S::success, 0, 2), ep(S::success, 0, 3),
                                           ep(S::exhausted, 0, 3), ep(S::success, 1.5, 1)};
    EXPECT_DOUBLE_EQ(success_rate(five, gt), 0.6);
    EXPECT_DOUBLE_EQ(success_rate({}, gt), 0.0);
    EXPECT_THROW(success_rate({EpisodeSummary{"cup", S::success, Point2::Zero(), 1}}, gt), DataError);
}

TEST(LabeledCloudFromMap, SkipsUnlabeledObjects) {
    const auto cloud = test::box(Point3(0, 0, 0), Point3(0.1, 0.1, 0.1), 0.05);
    const auto f = FeatureVec::basis(4, 0);
    auto chair = make_object(0, {test::entry(test::obs(cloud, f, "chair", 1))}, 0.05);
    auto blank = make_object(1, {test::entry(test::obs(cloud, f, std::nullopt, 1))}, 0.05);
    const auto m = ConcreteMap::from_parts({}, {chair, blank}, 2, 1);
    const auto lc = labeled_cloud(m, {"mug", "chair"});
    EXPECT_EQ(lc.points.size(), chair.cloud.size());
    for (const auto l : lc.labels) EXPECT_EQ(l, 1u);
    EXPECT_THROW(labeled_cloud(m, {"mug"}), UsageError);
}
