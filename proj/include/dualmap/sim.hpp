#pragma once

#include "dualmap/concrete_map.hpp"
#include "dualmap/features.hpp"
#include "dualmap/query_nav.hpp"
#include "dualmap/rng.hpp"
#include "dualmap/scenario.hpp"

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace dualmap {

/// Labeled surface sample of the ground truth.
struct LabeledPoint {
    Point3 position;
    std::string cls;
};

/// Deterministic synthetic world built from a scenario.
class SimWorld : public World {
public:
    explicit SimWorld(Scenario scenario);

    const Scenario& scenario() const { return scenario_; }
    const SyntheticVocabulary& vocabulary() const { return *vocab_; }
    SensorSpec& sensor() { return scenario_.sensor; }
    const SensorSpec& sensor() const { return scenario_.sensor; }

    FrameRecord sense(const AgentPose& pose, Timestamp tick) override { return sense(pose, tick, false); }
    /// `full_cloud` attaches the frame's depth projection (walls, floor, surfaces in view).
    FrameRecord sense(const AgentPose& pose, Timestamp tick, bool full_cloud) const;

    /// Ids of ground-truth objects in view and unoccluded from `pose`.
    std::vector<std::string> visible(const AgentPose& pose) const;

    /// Applies every relocation event in time order.
    void apply_relocations();
    void relocate(const RelocationEvent& e);

    /// Ground-truth centroid of an item or piece of furniture.
    Point3 centroid(const std::string& id) const;
    std::optional<std::string> carrier_of(const std::string& item) const;

    /// Normalized mean of the anchor-class text features.
    FeatureVec anchor_template() const;
    Query query_for(const QuerySpec& q) const;

    /// Surface lattice of every object, labeled with its class.
    std::vector<LabeledPoint> ground_truth_points() const;
    std::size_t object_count() const { return bodies_.size(); }

private:
    struct Face {
        Point2 normal = Point2::Zero();  // zero for the top face
        Point2 mid = Point2::Zero();
        std::vector<Point3> lattice;
    };
    struct Body {
        std::string id;
        std::string cls;
        std::vector<Point2> polygon;
        double z0 = 0.0;
        double z1 = 0.0;
        bool item = false;
        std::optional<std::size_t> carrier;  // body index
        std::vector<Face> faces;
    };

    void rebuild_body(std::size_t i);
    bool in_view(const AgentPose& pose, const Point2& p) const;
    bool occluded(const Point2& from, const Point2& to, std::size_t target) const;
    bool body_visible(const AgentPose& pose, std::size_t i) const;
    std::vector<Point3> sample_body(const AgentPose& pose, std::size_t i, Rng& rng) const;
    std::size_t body_index(const std::string& id) const;

    Scenario scenario_;
    std::shared_ptr<const SyntheticVocabulary> vocab_;
    std::vector<Body> bodies_;
    std::vector<Point3> wall_points_;
    std::vector<Point3> floor_points_;
};

/// Agent poses of the scripted tour: travel between stops facing the motion
/// direction, with an in-place spin at stops that request one.
std::vector<AgentPose> tour_poses(const Scenario& s, double step = 0.25);

struct MappingResult {
    ConcreteMap map;
    SceneCloud scene;
    Timestamp next_tick = 0;
    std::size_t frames = 0;
    std::set<std::string> observed;  ///< ground-truth objects emitted at least once
};

using FrameSink = std::function<void(const FrameRecord&)>;

/// Drives the agent along the tour and maps every frame. `finalize` applies
/// the end-of-stream stability check when the check is enabled.
MappingResult map_tour(const SimWorld& world, const AssociationConfig& config, bool finalize = true,
                       const FrameSink& sink = {}, double step = 0.25,
                       const KeyframePolicy& keyframe = {});

}  // namespace dualmap
