#include "dualmap/episode_log.hpp"

#include "dualmap/error.hpp"

#include <json.hpp>

#include <sstream>

namespace dualmap {

using nlohmann::ordered_json;

namespace {

ordered_json pose_json(const AgentPose& p) { return {p.position.x(), p.position.y(), p.heading}; }

ordered_json path_json(const Path& p) {
    ordered_json pts = ordered_json::array();
    for (const auto& w : p.waypoints) pts.push_back({w.x(), w.y()});
    return pts;
}

template <class T>
ordered_json opt(const std::optional<T>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json opt_point(const std::optional<Point3>& p) {
    return p ? ordered_json{p->x(), p->y(), p->z()} : ordered_json(nullptr);
}

}  // namespace

NavigationEpisode::Status status_from_string(const std::string& s) {
    using S = NavigationEpisode::Status;
    for (const auto st : {S::searching, S::success, S::exhausted, S::planning_failure}) {
        if (s == to_string(st)) return st;
    }
    throw DataError("unknown episode status '" + s + "'");
}

std::string episode_log_lines(const NavigationEpisode& e, const EpisodeContext& ctx) {
    std::ostringstream out;
    ordered_json h;
    h["event"] = "episode";
    h["scenario"] = ctx.scenario;
    h["query"] = ctx.query;
    h["item"] = ctx.item;
    h["text"] = e.query.text;
    h["strategy"] = to_string(e.strategy);
    h["attempt_limit"] = e.attempt_limit;
    h["start"] = pose_json(e.start_pose);
    h["target"] = opt_point(ctx.target);
    h["config"] = ordered_json::parse(ctx.config_json);
    out << h.dump() << '\n';

    std::size_t next_frame = 0;
    auto flush_frames = [&](std::size_t attempt) {
        while (next_frame < e.frames.size() && e.frames[next_frame].attempt <= attempt) {
            const auto& f = e.frames[next_frame++];
            ordered_json j;
            j["event"] = "frame";
            j["tick"] = f.tick;
            j["attempt"] = f.attempt;
            j["pose"] = pose_json(f.pose);
            j["observations"] = f.observations;
            j["local_objects"] = f.local_objects;
            j["near"] = f.near;
            j["best_score"] = opt(f.best_score);
            out << j.dump() << '\n';
        }
    };
    for (std::size_t k = 0; k < e.attempts.size(); ++k) {
        flush_frames(k);
        const auto& a = e.attempts[k];
        ordered_json j;
        j["event"] = "attempt";
        j["index"] = k;
        j["anchor"] = a.anchor;
        j["score"] = a.score;
        j["outcome"] = to_string(a.outcome);
        j["failure"] = a.failure;
        j["path"] = path_json(a.path);
        j["path_length"] = a.path.length;
        j["matched_object"] = opt(a.matched_object);
        j["matched_centroid"] = opt_point(a.matched_centroid);
        j["local_path"] = path_json(a.local_path);
        j["end_pose"] = pose_json(a.end_pose);
        out << j.dump() << '\n';
    }
    flush_frames(static_cast<std::size_t>(-1));
    ordered_json r;
    r["event"] = "result";
    r["status"] = to_string(e.status);
    r["pinned_score"] = opt(e.pinned_score);
    r["attempts"] = e.attempts.size();
    r["final_pose"] = pose_json(e.final_pose);
    out << r.dump() << '\n';
    return out.str();
}

std::vector<LoggedEpisode> parse_episode_log(const std::string& text) {
    std::vector<LoggedEpisode> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool open = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = "episode log line " + std::to_string(lineno) + ": ";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + "invalid JSON: " + e.what());
        }
        try {
            const auto ev = j.at("event").get<std::string>();
            if (ev == "episode") {
                if (open) throw DataError(where + "episode starts before the previous one has a result");
                LoggedEpisode e;
                e.scenario = j.at("scenario").get<std::string>();
                e.query = j.at("query").get<std::size_t>();
                e.item = j.at("item").get<std::string>();
                e.strategy = strategy_from_string(j.at("strategy").get<std::string>());
                const auto& t = j.at("target");
                if (!t.is_null()) e.target = Point3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
                out.push_back(std::move(e));
                open = true;
            } else if (ev == "frame" || ev == "attempt") {
                if (!open) throw DataError(where + ev + " outside an episode");
                if (ev == "frame") ++out.back().frames;
            } else if (ev == "result") {
                if (!open) throw DataError(where + "result outside an episode");
                auto& e = out.back();
                e.status = status_from_string(j.at("status").get<std::string>());
                e.attempts = j.at("attempts").get<std::size_t>();
                const auto& p = j.at("final_pose");
                e.final_position = {p.at(0).get<double>(), p.at(1).get<double>()};
                open = false;
            } else {
                throw DataError(where + "unknown event '" + ev + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + e.what());
        } catch (const UsageError& e) {
            throw DataError(where + e.what());
        }
    }
    if (open) throw DataError("episode log ends inside an episode");
    return out;
}

}  // namespace dualmap
