#pragma once

#include "dualmap/abstract_map.hpp"
#include "dualmap/concrete_map.hpp"
#include "dualmap/planner.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dualmap {

struct Query {
    FeatureVec feature;
    std::string text;  ///< metadata only
};

/// Best cosine of the anchor's own feature and its volatile features.
double anchor_score(const Query& q, const Anchor& a);

struct Candidate {
    AnchorId anchor = 0;
    double score = 0.0;
};

/// argmax of anchor_score over non-excluded anchors, ties to the lower id.
std::optional<Candidate> retrieve_candidate(const Query& q, const AbstractMap& map,
                                            const std::set<AnchorId>& excluded = {});

/// All non-excluded anchors ordered by score (descending), then id.
std::vector<Candidate> rank_anchors(const Query& q, const AbstractMap& map,
                                    const std::set<AnchorId>& excluded = {});

/// Local object matching the query within `epsilon` of the pinned score whose
/// footprint lies mostly inside the anchor's footprint.
const MapObject* confident_match(const Query& q, const ConcreteMap& local, const Anchor& anchor,
                                 double pinned_score, double epsilon, double containment = 0.6);

struct AgentPose {
    Point2 position = Point2::Zero();
    double heading = 0.0;  ///< radians, counter-clockwise from +x
};

/// Source of frames for an episode.
class World {
public:
    virtual ~World() = default;
    virtual FrameRecord sense(const AgentPose& pose, Timestamp tick) = 0;
};

enum class Strategy { random_pick, stale, updated };
const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct EpisodeConfig {
    Strategy strategy = Strategy::updated;
    std::size_t attempt_limit = 3;
    double epsilon = 0.05;
    double near_gate = 3.0;       ///< agent-to-anchor distance for the no-match decision
    double success_radius = 1.0;
    double step = 0.25;           ///< agent travel per tick
    double containment = 0.6;
    AssociationConfig association;
    PlannerConfig planner;
    std::uint64_t seed = 0;
};

struct FrameEvent {
    Timestamp tick = 0;
    std::size_t attempt = 0;
    AgentPose pose;
    std::size_t observations = 0;
    std::size_t local_objects = 0;
    bool near = false;
    std::optional<double> best_score;  ///< best query cosine among objects inside the anchor footprint
};

struct Attempt {
    enum class Outcome { matched, no_match, planning_failure };
    AnchorId anchor = 0;
    double score = 0.0;  ///< s(a*) of this attempt's candidate
    Path path;
    Outcome outcome = Outcome::no_match;
    std::string failure;  ///< planner message for planning failures
    std::optional<ObjectId> matched_object;
    std::optional<Point3> matched_centroid;
    Path local_path;
    AgentPose end_pose;
};
const char* to_string(Attempt::Outcome o);

struct NavigationEpisode {
    enum class Status { searching, success, exhausted, planning_failure };
    Query query;
    Strategy strategy = Strategy::updated;
    std::vector<Attempt> attempts;
    std::optional<double> pinned_score;
    std::size_t attempt_limit = 3;
    Status status = Status::searching;
    AgentPose start_pose;
    AgentPose final_pose;
    std::vector<FrameEvent> frames;
};
const char* to_string(NavigationEpisode::Status s);

struct EpisodeResult {
    NavigationEpisode episode;
    AbstractMap map;     ///< map after any updates made during the episode
    Timestamp next_tick = 0;
};

/// Retrieve, travel, verify; re-select over the (possibly updated) map until
/// a confident match is found or the attempt limit is reached.
EpisodeResult run_episode(const Query& q, const AbstractMap& map, const FeatureVec& template_feat, World& world,
                          const AgentPose& start, Timestamp first_tick, const EpisodeConfig& config);

/// Distance from `p` to the nearest cell center of the footprint.
double distance_to_footprint(const Point2& p, const Footprint2D& fp);

}  // namespace dualmap
