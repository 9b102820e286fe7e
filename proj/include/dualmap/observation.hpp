#pragma once

#include "dualmap/features.hpp"
#include "dualmap/geometry.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dualmap {

using Timestamp = std::uint64_t;

struct Pose {
    Point3 translation = Point3::Zero();
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

    static Pose planar(double x, double y, double heading, double z = 0.0);
    double heading() const;
    bool operator==(const Pose& other) const;
};

/// Geodesic angle between two rotations, radians in [0, pi].
double rotation_delta(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

/// One segmented object instance in one frame.
struct Observation {
    PointCloud cloud;
    FeatureVec feature;
    std::optional<std::string> class_id;  ///< nullopt for open-set segments
    Timestamp timestamp = 0;

    bool operator==(const Observation&) const = default;
};

struct FrameRecord {
    std::uint64_t frame_id = 0;
    Pose pose;
    std::vector<Observation> observations;
    /// Depth projection of the whole frame; present only where the producer
    /// emitted one (typically keyframes).
    std::optional<PointCloud> full_cloud;

    bool operator==(const FrameRecord&) const = default;
};

struct KeyframePolicy {
    double min_translation = 1.0;      ///< meters, strict
    double min_rotation_deg = 20.0;    ///< degrees, strict
};

/// Accumulated, voxel-downsampled cloud of keyframe depth projections.
struct SceneCloud {
    PointCloud cloud;
    std::optional<Pose> last_keyframe_pose;
    double voxel = 0.05;
};

/// Decision depends only on the pose delta to the last keyframe.
bool is_keyframe(const SceneCloud& scene, const Pose& pose, const KeyframePolicy& policy = {});

/// Merges `full_frame_cloud` into the scene when `pose` is a keyframe.
SceneCloud update_scene_cloud(const SceneCloud& scene, const Pose& pose,
                              const PointCloud& full_frame_cloud,
                              const KeyframePolicy& policy = {});

}  // namespace dualmap
