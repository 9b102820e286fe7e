#include "dualmap/query_nav.hpp"

#include "dualmap/error.hpp"
#include "dualmap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace dualmap {

double anchor_score(const Query& q, const Anchor& a) {
    double best = cosine(q.feature, a.feature);
    for (const auto& v : a.volatile_features) best = std::max(best, cosine(q.feature, v));
    return best;
}

std::optional<Candidate> retrieve_candidate(const Query& q, const AbstractMap& map,
                                            const std::set<AnchorId>& excluded) {
    std::optional<Candidate> best;
    for (const auto& a : map.anchors) {
        if (excluded.contains(a.id)) continue;
        const double s = anchor_score(q, a);
        if (!best || s > best->score || (s == best->score && a.id < best->anchor)) best = Candidate{a.id, s};
    }
    return best;
}

std::vector<Candidate> rank_anchors(const Query& q, const AbstractMap& map, const std::set<AnchorId>& excluded) {
    std::vector<Candidate> out;
    for (const auto& a : map.anchors) {
        if (!excluded.contains(a.id)) out.push_back({a.id, anchor_score(q, a)});
    }
    std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        return a.score > b.score || (a.score == b.score && a.anchor < b.anchor);
    });
    return out;
}

const MapObject* confident_match(const Query& q, const ConcreteMap& local, const Anchor& anchor,
                                 double pinned_score, double epsilon, double containment) {
    const MapObject* best = nullptr;
    double best_score = 0.0;
    for (const auto& o : local.objects()) {
        const double s = cosine(o.feature, q.feature);
        if (s < pinned_score - epsilon) continue;
        if (footprint(o.cloud, anchor.footprint.resolution()).fraction_inside(anchor.footprint) < containment) {
            continue;
        }
        if (!best || s > best_score) {
            best = &o;
            best_score = s;
        }
    }
    return best;
}

double distance_to_footprint(const Point2& p, const Footprint2D& fp) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : fp.cells()) best = std::min(best, (cell_center(c, fp.resolution()) - p).norm());
    return best;
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::random_pick: return "random";
        case Strategy::stale: return "stale";
        case Strategy::updated: return "updated";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "random") return Strategy::random_pick;
    if (s == "stale") return Strategy::stale;
    if (s == "updated") return Strategy::updated;
    throw UsageError("unknown strategy '" + s + "' (expected random, stale or updated)");
}

const char* to_string(Attempt::Outcome o) {
    switch (o) {
        case Attempt::Outcome::matched: return "matched";
        case Attempt::Outcome::no_match: return "no_match";
        case Attempt::Outcome::planning_failure: return "planning_failure";
    }
    return "unknown";
}

const char* to_string(NavigationEpisode::Status s) {
    switch (s) {
        case NavigationEpisode::Status::searching: return "searching";
        case NavigationEpisode::Status::success: return "success";
        case NavigationEpisode::Status::exhausted: return "exhausted";
        case NavigationEpisode::Status::planning_failure: return "planning_failure";
    }
    return "unknown";
}

namespace {

// Free cell reachable from `from` that is closest to `target`.
std::optional<Point2> approach_point(const PlannerGrid& grid, const Point2& from, const Point2& target) {
    const Cell2 start = grid.cell(from);
    if (grid.blocked(start)) return std::nullopt;
    std::vector<std::uint8_t> seen(grid.cell_count(), 0);
    std::deque<Cell2> queue{start};
    seen[grid.index(start)] = 1;
    std::optional<Cell2> best;
    double best_d = std::numeric_limits<double>::infinity();
    while (!queue.empty()) {
        const Cell2 c = queue.front();
        queue.pop_front();
        const double d = (grid.center(c) - target).squaredNorm();
        if (d < best_d || (d == best_d && c < *best)) {
            best_d = d;
            best = c;
        }
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const Cell2 n{c.x + dx, c.y + dy};
                if (!grid.in_bounds(n) || seen[grid.index(n)] || grid.blocked(n)) continue;
                seen[grid.index(n)] = 1;
                queue.push_back(n);
            }
        }
    }
    if (!best) return std::nullopt;
    if (*best == start) return from;
    return grid.center(*best);
}

class EpisodeRunner {
public:
    EpisodeRunner(const Query& q, World& world, const EpisodeConfig& config, NavigationEpisode& episode,
                  Timestamp tick)
        : q_(q), world_(world), config_(config), episode_(episode), tick_(tick),
          local_(config.association) {}

    Timestamp tick() const { return tick_; }
    const ConcreteMap& local() const { return local_; }

    // Senses at `pose`; returns a confident match when near the anchor.
    const MapObject* observe(const AgentPose& pose, const Anchor& anchor, double pinned) {
        const auto frame = world_.sense(pose, tick_);
        local_.process_frame(frame);
        FrameEvent ev;
        ev.tick = tick_;
        ev.attempt = episode_.attempts.size();
        ev.pose = pose;
        ev.observations = frame.observations.size();
        ev.local_objects = local_.size();
        ev.near = distance_to_footprint(pose.position, anchor.footprint) < config_.near_gate;
        const MapObject* m = nullptr;
        if (ev.near) {
            m = confident_match(q_, local_, anchor, pinned, config_.epsilon, config_.containment);
            for (const auto& o : local_.objects()) {
                if (footprint(o.cloud, anchor.footprint.resolution()).fraction_inside(anchor.footprint) <
                    config_.containment) {
                    continue;
                }
                const double s = cosine(o.feature, q_.feature);
                if (!ev.best_score || s > *ev.best_score) ev.best_score = s;
            }
        }
        episode_.frames.push_back(ev);
        ++tick_;
        return m;
    }

private:
    const Query& q_;
    World& world_;
    const EpisodeConfig& config_;
    NavigationEpisode& episode_;
    Timestamp tick_;
    ConcreteMap local_;
};

}  // namespace

EpisodeResult run_episode(const Query& q, const AbstractMap& map, const FeatureVec& template_feat, World& world,
                          const AgentPose& start, Timestamp first_tick, const EpisodeConfig& config) {
    if (map.anchors.empty()) throw UsageError("navigation needs an abstract map with at least one anchor");
    if (config.attempt_limit == 0) throw UsageError("attempt limit must be positive");
    if (!(config.step > 0.0)) throw UsageError("agent step must be positive");

    EpisodeResult result;
    result.map = map;
    auto& ep = result.episode;
    ep.query = q;
    ep.strategy = config.strategy;
    ep.attempt_limit = config.attempt_limit;
    ep.start_pose = start;

    EpisodeRunner runner(q, world, config, ep, first_tick);
    Rng pick_rng(hash_combine(config.seed, 0x9d1c5u));
    std::set<AnchorId> excluded;
    AgentPose pose = start;

    for (std::size_t k = 0; k < config.attempt_limit; ++k) {
        const AbstractMap& ranking_map = config.strategy == Strategy::updated ? result.map : map;
        std::optional<Candidate> cand;
        if (config.strategy == Strategy::random_pick) {
            std::vector<AnchorId> pool;
            for (const auto& a : map.anchors) {
                if (!excluded.contains(a.id)) pool.push_back(a.id);
            }
            if (!pool.empty()) {
                const AnchorId id = pool[pick_rng.below(pool.size())];
                cand = Candidate{id, anchor_score(q, *map.find(id))};
            }
        } else {
            cand = retrieve_candidate(q, ranking_map, excluded);
        }
        if (!cand) break;
        if (!ep.pinned_score) ep.pinned_score = retrieve_candidate(q, map)->score;
        const double pinned = *ep.pinned_score;
        excluded.insert(cand->anchor);
        const Anchor anchor = *(config.strategy == Strategy::random_pick ? map : ranking_map).find(cand->anchor);

        Attempt att;
        att.anchor = cand->anchor;
        att.score = cand->score;

        const Point2 include[] = {pose.position, anchor.footprint.centroid()};
        const PlannerGrid grid(result.map.layout, config.planner.inflation, include, config.planner.pad);
        PlanResult plan;
        try {
            plan = plan_global(grid, pose.position, anchor.footprint, config.planner.goal_reach);
        } catch (const Error& e) {
            plan.failure = e.what();
        }
        if (!plan.ok()) {
            att.outcome = Attempt::Outcome::planning_failure;
            att.failure = plan.failure;
            att.end_pose = pose;
            ep.attempts.push_back(std::move(att));
            continue;
        }
        att.path = *plan.path;

        // Travel along the path, sensing at every step.
        const MapObject* match = runner.observe(pose, anchor, pinned);
        const auto& wp = att.path.waypoints;
        for (std::size_t i = 1; i < wp.size() && !match; ++i) {
            const Point2 a = wp[i - 1], b = wp[i];
            const double len = (b - a).norm();
            if (len <= 0.0) continue;
            const double heading = std::atan2(b.y() - a.y(), b.x() - a.x());
            const auto steps = static_cast<std::size_t>(std::ceil(len / config.step));
            for (std::size_t s = 1; s <= steps && !match; ++s) {
                pose.position = a + (b - a) * (static_cast<double>(s) / static_cast<double>(steps));
                pose.heading = heading;
                match = runner.observe(pose, anchor, pinned);
            }
        }
        if (!match) {
            // One in-place scan facing the anchor before giving up on it.
            const Point2 c = anchor.footprint.centroid();
            if ((c - pose.position).norm() > 0.0) pose.heading = std::atan2(c.y() - pose.position.y(), c.x() - pose.position.x());
            match = runner.observe(pose, anchor, pinned);
        }

        if (match) {
            att.matched_object = match->id;
            att.matched_centroid = match->cloud.centroid();
            const Point2 target = att.matched_centroid->head<2>();
            PlanResult local_plan;
            try {
                const auto goal = approach_point(grid, pose.position, target);
                if (!goal) {
                    local_plan.failure = "no reachable approach point";
                } else {
                    local_plan = plan_local(grid, pose.position, *goal, config.planner.rrt_budget,
                                            hash_combine(config.seed, k), config.planner);
                }
            } catch (const Error& e) {
                local_plan.failure = e.what();
            }
            if (local_plan.ok()) {
                att.local_path = *local_plan.path;
                if (!att.local_path.waypoints.empty()) pose.position = att.local_path.waypoints.back();
                if ((pose.position - target).norm() <= config.success_radius) {
                    att.outcome = Attempt::Outcome::matched;
                    att.end_pose = pose;
                    ep.attempts.push_back(std::move(att));
                    ep.status = NavigationEpisode::Status::success;
                    break;
                }
                local_plan.failure = "approach point outside the success radius";
            }
            att.outcome = Attempt::Outcome::planning_failure;
            att.failure = local_plan.failure;
            att.end_pose = pose;
            ep.attempts.push_back(std::move(att));
            continue;
        }

        att.outcome = Attempt::Outcome::no_match;
        att.end_pose = pose;
        ep.attempts.push_back(std::move(att));
        if (config.strategy == Strategy::updated) {
            result.map = update_abstract(result.map, runner.local(), template_feat).map;
        }
    }

    if (ep.status == NavigationEpisode::Status::searching) {
        const bool all_planning =
            !ep.attempts.empty() && std::all_of(ep.attempts.begin(), ep.attempts.end(), [](const Attempt& a) {
                return a.outcome == Attempt::Outcome::planning_failure;
            });
        ep.status = all_planning ? NavigationEpisode::Status::planning_failure : NavigationEpisode::Status::exhausted;
    }
    ep.final_pose = pose;
    result.next_tick = runner.tick();
    return result;
}

}  // namespace dualmap
