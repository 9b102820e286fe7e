#pragma once

// Line-delimited JSON episode log. Every line is one event object whose
// "event" field is one of: episode, frame, attempt, result.
// See docs/formats.md for the field list.

#include "dualmap/query_nav.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dualmap {

struct EpisodeContext {
    std::string scenario;
    std::size_t query = 0;
    std::string item;
    std::optional<Point3> target;  ///< ground-truth position when known
    std::string config_json = "{}";
};

/// Episode header, one line per frame and attempt, and the result line.
std::string episode_log_lines(const NavigationEpisode& e, const EpisodeContext& ctx);

struct LoggedEpisode {
    std::string scenario;
    std::size_t query = 0;
    std::string item;
    Strategy strategy = Strategy::updated;
    NavigationEpisode::Status status = NavigationEpisode::Status::searching;
    Point2 final_position = Point2::Zero();
    std::size_t attempts = 0;
    std::size_t frames = 0;
    std::optional<Point3> target;
};

/// Parses a log holding any number of episodes. Throws DataError naming the
/// offending line on malformed input or out-of-order events.
std::vector<LoggedEpisode> parse_episode_log(const std::string& text);

NavigationEpisode::Status status_from_string(const std::string& s);

}  // namespace dualmap
