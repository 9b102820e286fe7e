#include "dualmap/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dualmap {

Pose Pose::planar(double x, double y, double heading, double z) {
    Pose p;
    p.translation = Point3(x, y, z);
    p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(heading, Eigen::Vector3d::UnitZ()));
    return p;
}

double Pose::heading() const {
    const Eigen::Vector3d fwd = rotation * Eigen::Vector3d::UnitX();
    return std::atan2(fwd.y(), fwd.x());
}

bool Pose::operator==(const Pose& other) const {
    return translation == other.translation && rotation.coeffs() == other.rotation.coeffs();
}

double rotation_delta(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
    const double d = std::abs(a.normalized().dot(b.normalized()));
    return 2.0 * std::acos(std::min(1.0, d));
}

bool is_keyframe(const SceneCloud& scene, const Pose& pose, const KeyframePolicy& policy) {
    if (!scene.last_keyframe_pose) return true;
    const auto& last = *scene.last_keyframe_pose;
    const double dt = (pose.translation - last.translation).norm();
    const double dr = rotation_delta(pose.rotation, last.rotation) * 180.0 / std::numbers::pi;
    return dt > policy.min_translation || dr > policy.min_rotation_deg;
}

SceneCloud update_scene_cloud(const SceneCloud& scene, const Pose& pose,
                              const PointCloud& full_frame_cloud, const KeyframePolicy& policy) {
    if (!is_keyframe(scene, pose, policy)) return scene;
    SceneCloud next = scene;
    next.cloud = voxel_downsample(PointCloud::concat(scene.cloud, full_frame_cloud), scene.voxel);
    next.last_keyframe_pose = pose;
    return next;
}

}  // namespace dualmap
