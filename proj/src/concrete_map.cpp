#include "dualmap/concrete_map.hpp"

#include "dualmap/error.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

namespace dualmap {

std::pair<std::optional<std::string>, std::size_t> MapObject::majority_class() const {
    // Count per class, remembering first appearance for tie-breaking.
    std::map<std::optional<std::string>, std::pair<std::size_t, std::size_t>> counts;
    for (std::size_t i = 0; i < history.size(); ++i) {
        auto [it, inserted] = counts.try_emplace(history[i].class_id, 0, i);
        ++it->second.first;
    }
    std::optional<std::string> best;
    std::size_t best_count = 0;
    std::size_t best_first = std::numeric_limits<std::size_t>::max();
    for (const auto& [cls, cf] : counts) {
        const auto [count, first] = cf;
        if (count > best_count || (count == best_count && first < best_first)) {
            best = cls;
            best_count = count;
            best_first = first;
        }
    }
    return {best, best_count};
}

bool HistoryEntry::operator==(const HistoryEntry& other) const {
    if (timestamp != other.timestamp || class_id != other.class_id) return false;
    if (!observation || !other.observation) return observation == other.observation;
    return *observation == *other.observation;
}

bool MapObject::operator==(const MapObject& other) const {
    return id == other.id && cloud == other.cloud && class_id == other.class_id && feature == other.feature &&
           feature_sum.size() == other.feature_sum.size() && feature_sum == other.feature_sum &&
           history == other.history && last_update == other.last_update;
}

MapObject make_object(ObjectId id, std::vector<HistoryEntry> history, double voxel) {
    if (history.empty()) throw UsageError("cannot create an object without observations");
    MapObject o;
    o.id = id;
    o.history = std::move(history);
    std::stable_sort(o.history.begin(), o.history.end(),
                     [](const HistoryEntry& a, const HistoryEntry& b) { return a.timestamp < b.timestamp; });
    if (o.history.size() == 1) {
        const auto& z = *o.history.front().observation;
        o.cloud = z.cloud;
        o.feature = z.feature;
        o.feature_sum = z.feature.values();
    } else {
        o.feature_sum = Eigen::VectorXd::Zero(o.history.front().observation->feature.values().size());
        std::vector<Point3> pts;
        for (const auto& h : o.history) {
            o.feature_sum += h.observation->feature.values();
            pts.insert(pts.end(), h.observation->cloud.points().begin(), h.observation->cloud.points().end());
        }
        o.feature = FeatureVec::normalized(o.feature_sum);
        o.cloud = voxel_downsample(PointCloud(std::move(pts)), voxel);
    }
    o.class_id = o.majority_class().first;
    o.last_update = o.history.back().timestamp;
    return o;
}

FeatureVec recompute_feature(const MapObject& o) {
    if (o.history.empty()) throw UsageError("object has no history");
    if (o.history.size() == 1) return o.history.front().observation->feature;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(o.history.front().observation->feature.values().size());
    for (const auto& h : o.history) sum += h.observation->feature.values();
    return FeatureVec::normalized(sum);
}

double similarity(const Observation& z, const MapObject& o, double overlap_radius) {
    return cosine(z.feature, o.feature) + overlap_ratio(z.cloud, o.cloud, overlap_radius).ratio;
}

std::size_t AssociationReport::merged() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const Entry& e) { return !e.created; }));
}

std::size_t AssociationReport::created() const { return entries.size() - merged(); }

ConcreteMap::ConcreteMap(AssociationConfig config) : config_(config) {
    if (!(config_.voxel > 0.0)) throw UsageError("voxel must be positive");
}

ConcreteMap ConcreteMap::initialize(const FrameRecord& frame, AssociationConfig config) {
    ConcreteMap map(config);
    map.associate_frame(frame);
    return map;
}

void ConcreteMap::merge_into(MapObject& o, std::shared_ptr<const Observation> z) {
    o.feature_sum += z->feature.values();
    o.feature = FeatureVec::normalized(o.feature_sum);
    o.cloud = voxel_downsample(PointCloud::concat(o.cloud, z->cloud), config_.voxel);
    o.history.push_back({z->timestamp, z->class_id, z});
    o.last_update = z->timestamp;
    o.class_id = o.majority_class().first;
}

AssociationReport ConcreteMap::associate_frame(const FrameRecord& frame) {
    if (last_timestamp_ && frame.frame_id <= *last_timestamp_) {
        throw UsageError("frame " + std::to_string(frame.frame_id) +
                         " is not newer than the map's last timestamp");
    }
    last_timestamp_ = frame.frame_id;

    const std::size_t existing = objects_.size();
    AssociationReport report;
    report.entries.reserve(frame.observations.size());

    // Scores are taken against the map as it was at frame start.
    std::vector<std::pair<std::optional<std::size_t>, double>> best(frame.observations.size(),
                                                                    {std::nullopt, -std::numeric_limits<double>::infinity()});
    for (std::size_t i = 0; i < frame.observations.size(); ++i) {
        const auto& z = frame.observations[i];
        for (std::size_t j = 0; j < existing; ++j) {
            const double s = similarity(z, objects_[j], config_.voxel);
            if (s > best[i].second) best[i] = {j, s};
        }
    }

    for (std::size_t i = 0; i < frame.observations.size(); ++i) {
        auto z = std::make_shared<const Observation>(frame.observations[i]);
        AssociationReport::Entry e;
        e.observation = i;
        e.score = best[i].second;
        if (best[i].first) e.best = objects_[*best[i].first].id;
        if (best[i].first && best[i].second > config_.match_threshold) {
            auto& o = objects_[*best[i].first];
            merge_into(o, z);
            e.object = o.id;
        } else {
            const ObjectId id = next_id_++;
            objects_.push_back(make_object(id, {{z->timestamp, z->class_id, z}}, config_.voxel));
            e.created = true;
            e.object = id;
        }
        report.entries.push_back(e);
    }
    return report;
}

bool ConcreteMap::passes_stability(const MapObject& o) const {
    if (o.history.size() < config_.min_observations) return false;
    const auto majority = o.majority_class().second;
    return 3 * majority >= 2 * o.history.size();
}

std::vector<ObjectId> ConcreteMap::stability_check(Timestamp now) {
    std::vector<ObjectId> removed;
    std::erase_if(objects_, [&](const MapObject& o) {
        const bool idle = now >= o.last_update && now - o.last_update >= config_.stability_window;
        if (idle && !passes_stability(o)) {
            removed.push_back(o.id);
            return true;
        }
        return false;
    });
    return removed;
}

std::vector<ObjectId> ConcreteMap::finalize() {
    std::vector<ObjectId> removed;
    std::erase_if(objects_, [&](const MapObject& o) {
        if (!passes_stability(o)) {
            removed.push_back(o.id);
            return true;
        }
        return false;
    });
    return removed;
}

SplitReport ConcreteMap::split_detection() {
    SplitReport report;
    std::vector<MapObject> kept;
    std::vector<MapObject> created;
    kept.reserve(objects_.size());
    for (auto& o : objects_) {
        std::map<Timestamp, std::set<std::string>> classes_at;
        for (const auto& h : o.history) {
            if (h.class_id) classes_at[h.timestamp].insert(*h.class_id);
        }
        const auto conflicts = std::count_if(classes_at.begin(), classes_at.end(),
                                             [](const auto& kv) { return kv.second.size() >= 2; });
        if (static_cast<std::size_t>(conflicts) < config_.split_persistence) {
            kept.push_back(std::move(o));
            continue;
        }
        std::map<std::optional<std::string>, std::vector<HistoryEntry>> parts;
        for (auto& h : o.history) parts[h.class_id].push_back(std::move(h));
        SplitReport::Split split{o.id, {}};
        for (auto& [cls, entries] : parts) {
            const ObjectId id = next_id_++;
            created.push_back(make_object(id, std::move(entries), config_.voxel));
            split.created.push_back(id);
        }
        report.splits.push_back(std::move(split));
    }
    objects_ = std::move(kept);
    for (auto& c : created) objects_.push_back(std::move(c));
    return report;
}

AssociationReport ConcreteMap::process_frame(const FrameRecord& frame) {
    auto report = associate_frame(frame);
    if (config_.split_enabled) split_detection();
    if (config_.stability_enabled) stability_check(frame.frame_id);
    return report;
}

const MapObject* ConcreteMap::find(ObjectId id) const {
    const auto it = std::lower_bound(objects_.begin(), objects_.end(), id,
                                     [](const MapObject& o, ObjectId v) { return o.id < v; });
    return it != objects_.end() && it->id == id ? &*it : nullptr;
}

bool ConcreteMap::operator==(const ConcreteMap& other) const {
    const auto& a = config_;
    const auto& b = other.config_;
    const bool same_config = a.match_threshold == b.match_threshold && a.voxel == b.voxel &&
                             a.stability_window == b.stability_window && a.min_observations == b.min_observations &&
                             a.split_persistence == b.split_persistence && a.stability_enabled == b.stability_enabled &&
                             a.split_enabled == b.split_enabled;
    return same_config && objects_ == other.objects_ && next_id_ == other.next_id_ &&
           last_timestamp_ == other.last_timestamp_;
}

ConcreteMap ConcreteMap::from_parts(AssociationConfig config, std::vector<MapObject> objects,
                                    ObjectId next_id, std::optional<Timestamp> last_timestamp) {
    ConcreteMap map(config);
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (objects[i].history.empty()) {
            throw DataError("object " + std::to_string(objects[i].id) + " has an empty history");
        }
        if (i > 0 && objects[i].id <= objects[i - 1].id) throw DataError("object ids not unique and sorted");
        if (objects[i].id >= next_id) throw DataError("object id exceeds next id");
    }
    map.objects_ = std::move(objects);
    map.next_id_ = next_id;
    map.last_timestamp_ = last_timestamp;
    return map;
}

}  // namespace dualmap
