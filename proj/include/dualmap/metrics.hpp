#pragma once

#include "dualmap/concrete_map.hpp"
#include "dualmap/geometry.hpp"
#include "dualmap/query_nav.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dualmap {

struct LabeledCloud {
    std::vector<std::string> label_set;
    std::vector<Point3> points;
    std::vector<std::uint32_t> labels;  ///< index into label_set, one per point

    /// Throws DataError on length mismatch or out-of-range labels.
    void validate() const;
};

/// Object clouds labeled by class; objects without a class are left out.
LabeledCloud labeled_cloud(const ConcreteMap& map, const std::vector<std::string>& label_set);

/// Text form: a `labels` line naming the label set, then `x y z index` per point.
std::string labeled_cloud_to_text(const LabeledCloud& c);
LabeledCloud labeled_cloud_from_text(const std::string& text);

struct SegmentationReport {
    std::map<std::string, double> iou;          ///< classes present in the ground truth
    std::map<std::string, std::size_t> support; ///< ground-truth points per class
    double miou = 0.0;
    double fmiou = 0.0;
    double macc = 0.0;
    std::size_t unmatched = 0;                  ///< gt points with no prediction within the radius
};

/// Labels transfer to each ground-truth point from its nearest prediction within
/// `match_radius`; unmatched points count as misclassified.
SegmentationReport segmentation_metrics(const LabeledCloud& pred, const LabeledCloud& gt, double match_radius = 0.1);

/// Predicted / ground-truth object count.
double odr(std::size_t pred_objects, std::size_t gt_objects);

struct EpisodeSummary {
    std::string target;
    NavigationEpisode::Status status = NavigationEpisode::Status::searching;
    Point2 final_position = Point2::Zero();
    std::size_t attempts = 0;
};

/// Share of episodes that succeeded, stopped within `radius` of the target and
/// used at most `attempt_limit` attempts.
double success_rate(const std::vector<EpisodeSummary>& episodes, const std::map<std::string, Point3>& gt_positions,
                    double radius = 1.0, std::size_t attempt_limit = 3);

bool episode_succeeded(const EpisodeSummary& e, const Point3& gt, double radius = 1.0, std::size_t attempt_limit = 3);

}  // namespace dualmap
