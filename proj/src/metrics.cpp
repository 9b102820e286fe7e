#include "dualmap/metrics.hpp"

#include "dualmap/error.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <sstream>

namespace dualmap {

void LabeledCloud::validate() const {
    if (points.size() != labels.size()) throw DataError("labeled cloud: point and label counts differ");
    for (const auto l : labels) {
        if (l >= label_set.size()) throw DataError("labeled cloud: label index " + std::to_string(l) + " out of range");
    }
    for (const auto& p : points) {
        if (!p.allFinite()) throw DataError("labeled cloud: non-finite point");
    }
}

LabeledCloud labeled_cloud(const ConcreteMap& map, const std::vector<std::string>& label_set) {
    LabeledCloud out;
    out.label_set = label_set;
    for (const auto& o : map.objects()) {
        if (!o.class_id) continue;
        const auto it = std::find(label_set.begin(), label_set.end(), *o.class_id);
        if (it == label_set.end()) throw UsageError("class '" + *o.class_id + "' is not in the label set");
        const auto idx = static_cast<std::uint32_t>(it - label_set.begin());
        for (const auto& p : o.cloud.points()) {
            out.points.push_back(p);
            out.labels.push_back(idx);
        }
    }
    return out;
}

std::string labeled_cloud_to_text(const LabeledCloud& c) {
    c.validate();
    std::ostringstream out;
    out << "labels";
    for (const auto& l : c.label_set) out << ' ' << l;
    out << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        out << c.points[i].x() << ' ' << c.points[i].y() << ' ' << c.points[i].z() << ' ' << c.labels[i] << '\n';
    }
    return out.str();
}

LabeledCloud labeled_cloud_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    LabeledCloud c;
    if (!std::getline(in, line)) throw DataError("labeled cloud: empty input");
    {
        std::istringstream hs(line);
        std::string tag;
        hs >> tag;
        if (tag != "labels") throw DataError("labeled cloud: first line must start with 'labels'");
        std::string l;
        while (hs >> l) c.label_set.push_back(l);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        double x, y, z;
        long long label;
        if (!(ls >> x >> y >> z >> label) || label < 0) {
            throw DataError("labeled cloud: malformed line " + std::to_string(lineno));
        }
        std::string rest;
        if (ls >> rest) throw DataError("labeled cloud: trailing data on line " + std::to_string(lineno));
        c.points.emplace_back(x, y, z);
        c.labels.push_back(static_cast<std::uint32_t>(label));
    }
    c.validate();
    return c;
}

SegmentationReport segmentation_metrics(const LabeledCloud& pred, const LabeledCloud& gt, double match_radius) {
    pred.validate();
    gt.validate();
    if (gt.points.empty()) throw DataError("segmentation metrics need a non-empty ground truth");
    if (pred.label_set != gt.label_set) throw UsageError("prediction and ground truth use different label sets");
    if (!(match_radius > 0.0)) throw UsageError("match radius must be positive");

    const std::size_t n_labels = gt.label_set.size();
    constexpr auto unmatched = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> tp(n_labels, 0), fp(n_labels, 0), count(n_labels, 0);
    const PointGrid grid(pred.points, match_radius);
    SegmentationReport r;
    for (std::size_t i = 0; i < gt.points.size(); ++i) {
        const std::size_t truth = gt.labels[i];
        ++count[truth];
        const auto nn = grid.nearest_within(gt.points[i], match_radius);
        const std::size_t guess = nn ? pred.labels[*nn] : unmatched;
        if (!nn) ++r.unmatched;
        if (guess == truth) {
            ++tp[truth];
        } else if (guess != unmatched) {
            ++fp[guess];
        }
    }
    const double total = static_cast<double>(gt.points.size());
    std::size_t present = 0;
    for (std::size_t c = 0; c < n_labels; ++c) {
        if (count[c] == 0) continue;
        ++present;
        const double fn = static_cast<double>(count[c] - tp[c]);
        const double iou = static_cast<double>(tp[c]) / (static_cast<double>(tp[c] + fp[c]) + fn);
        r.iou[gt.label_set[c]] = iou;
        r.support[gt.label_set[c]] = count[c];
        r.miou += iou;
        r.fmiou += static_cast<double>(count[c]) / total * iou;
        r.macc += static_cast<double>(tp[c]) / static_cast<double>(count[c]);
    }
    r.miou /= static_cast<double>(present);
    r.macc /= static_cast<double>(present);
    return r;
}

double odr(std::size_t pred_objects, std::size_t gt_objects) {
    if (gt_objects == 0) throw UsageError("ODR needs a positive ground-truth object count");
    return static_cast<double>(pred_objects) / static_cast<double>(gt_objects);
}

bool episode_succeeded(const EpisodeSummary& e, const Point3& gt, double radius, std::size_t attempt_limit) {
    return e.status == NavigationEpisode::Status::success && e.attempts <= attempt_limit &&
           (e.final_position - gt.head<2>()).norm() <= radius;
}

double success_rate(const std::vector<EpisodeSummary>& episodes, const std::map<std::string, Point3>& gt_positions,
                    double radius, std::size_t attempt_limit) {
    if (episodes.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& e : episodes) {
        const auto it = gt_positions.find(e.target);
        if (it == gt_positions.end()) throw DataError("episode target '" + e.target + "' has no ground-truth position");
        if (episode_succeeded(e, it->second, radius, attempt_limit)) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(episodes.size());
}

}  // namespace dualmap
