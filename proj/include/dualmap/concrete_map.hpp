#pragma once

#include "dualmap/features.hpp"
#include "dualmap/geometry.hpp"
#include "dualmap/observation.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dualmap {

using ObjectId = std::uint64_t;

struct AssociationConfig {
    double match_threshold = 1.05;     ///< tau: score must exceed this to merge
    double voxel = 0.05;               ///< object cloud downsampling and overlap radius
    Timestamp stability_window = 20;   ///< idle frames before the stability check applies
    std::size_t min_observations = 5;
    std::size_t split_persistence = 3; ///< distinct conflicting timestamps needed to split
    bool stability_enabled = true;
    bool split_enabled = true;
};

struct HistoryEntry {
    Timestamp timestamp = 0;
    std::optional<std::string> class_id;
    std::shared_ptr<const Observation> observation;

    /// Compares the observation by value.
    bool operator==(const HistoryEntry& other) const;
};

/// Accumulated object. `feature` is the normalized mean of the associated
/// observation features; `feature_sum` holds the unnormalized sum so the mean
/// can be updated incrementally without drift.
struct MapObject {
    ObjectId id = 0;
    PointCloud cloud;
    std::optional<std::string> class_id;
    FeatureVec feature;
    Eigen::VectorXd feature_sum;
    std::vector<HistoryEntry> history;
    Timestamp last_update = 0;

    /// Most frequent class over the history (null counts as its own bucket),
    /// ties resolved by earliest first appearance. Returns the class and its count.
    std::pair<std::optional<std::string>, std::size_t> majority_class() const;

    bool operator==(const MapObject& other) const;
};

/// Builds an object from a set of observations (the creation rule).
MapObject make_object(ObjectId id, std::vector<HistoryEntry> history, double voxel);

/// Feature mean and cloud union recomputed from scratch over the history.
FeatureVec recompute_feature(const MapObject& o);

/// cos(f_z, f_o) + overlap(P_z, P_o).
double similarity(const Observation& z, const MapObject& o, double overlap_radius);

struct AssociationReport {
    struct Entry {
        std::size_t observation = 0;          ///< index within the frame
        std::optional<ObjectId> best;         ///< argmax object (ties: lower id)
        double score = 0.0;                   ///< S(z, best); -inf when the map was empty
        bool created = false;
        ObjectId object = 0;                  ///< object now holding the observation
    };
    std::vector<Entry> entries;
    std::size_t merged() const;
    std::size_t created() const;
};

struct SplitReport {
    struct Split {
        ObjectId original = 0;
        std::vector<ObjectId> created;
    };
    std::vector<Split> splits;
};

/// Online object map. Single writer: frames must be applied in increasing
/// timestamp order. Copies are independent snapshots.
class ConcreteMap {
public:
    explicit ConcreteMap(AssociationConfig config = {});

    /// One object per observation of the first frame.
    static ConcreteMap initialize(const FrameRecord& frame, AssociationConfig config = {});

    /// Matches every observation against the objects present at frame start
    /// and merges or creates. Several observations may merge into one object.
    AssociationReport associate_frame(const FrameRecord& frame);

    /// Removes idle objects that are under-observed or lack a two-thirds
    /// majority class. Objects updated within the window are untouched.
    std::vector<ObjectId> stability_check(Timestamp now);
    /// Stability check treating every object as idle (end of a stream).
    std::vector<ObjectId> finalize();

    SplitReport split_detection();

    /// associate_frame, then split detection and stability check if enabled.
    AssociationReport process_frame(const FrameRecord& frame);

    const std::vector<MapObject>& objects() const { return objects_; }
    const MapObject* find(ObjectId id) const;
    std::size_t size() const { return objects_.size(); }
    bool empty() const { return objects_.empty(); }
    const AssociationConfig& config() const { return config_; }
    ObjectId next_id() const { return next_id_; }
    std::optional<Timestamp> last_timestamp() const { return last_timestamp_; }

    /// Restores a map from serialized parts; validates invariants.
    bool operator==(const ConcreteMap& other) const;

    static ConcreteMap from_parts(AssociationConfig config, std::vector<MapObject> objects,
                                  ObjectId next_id, std::optional<Timestamp> last_timestamp);

private:
    bool passes_stability(const MapObject& o) const;
    void merge_into(MapObject& o, std::shared_ptr<const Observation> z);

    AssociationConfig config_;
    std::vector<MapObject> objects_;  // sorted by id
    ObjectId next_id_ = 0;
    std::optional<Timestamp> last_timestamp_;
};

}  // namespace dualmap
