#pragma once

#include "dualmap/abstract_map.hpp"
#include "dualmap/config.hpp"
#include "dualmap/query_nav.hpp"
#include "dualmap/scenario.hpp"
#include "dualmap/sim.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dualmap {

struct BenchmarkConfig {
    RunConfig run;
    std::vector<Strategy> strategies{Strategy::random_pick, Strategy::stale, Strategy::updated};
};

/// Scenario with the run's sensor and feature overrides applied.
Scenario apply_overrides(Scenario s, const RunConfig& run);

struct EpisodeRecord {
    std::string scenario;
    std::size_t query = 0;  ///< index within the scenario's query list
    std::string item;
    std::optional<RelocationKind> kind;
    Strategy strategy = Strategy::updated;
    NavigationEpisode episode;
    Point3 target = Point3::Zero();  ///< ground-truth centroid after relocation
    double final_distance = 0.0;
    bool success = false;
    /// Empty on success; otherwise false_match, attempt_limit or planning.
    std::string failure;
};

struct ScenarioSummary {
    std::string id;
    std::size_t frames = 0;
    std::size_t objects = 0;       ///< concrete-map objects after the tour
    std::size_t observed = 0;      ///< ground-truth objects seen during the tour
    std::size_t ground_truth = 0;  ///< all ground-truth objects
    double odr = 0.0;              ///< objects / observed
    std::size_t anchors = 0;
    std::size_t layout_cells = 0;
};

struct StrategyStats {
    std::size_t episodes = 0;
    std::size_t successes = 0;
    double sr = 0.0;
    std::vector<std::size_t> attempts;  ///< attempts[k]: episodes that used k attempts
    std::map<std::string, std::size_t> failures;
};

struct BenchmarkReport {
    std::vector<ScenarioSummary> scenarios;  ///< sorted by id
    std::vector<EpisodeRecord> episodes;     ///< sorted by scenario, query, strategy order
    std::map<std::string, StrategyStats> by_strategy;
    /// Keyed by relocation kind ("static" for targets that never move), then strategy.
    std::map<std::string, std::map<std::string, StrategyStats>> by_kind;
    std::string config_json;

    double sr(Strategy s) const;
    std::string to_json() const;
    std::string to_table() const;
};

/// Called once per finished episode, in report order.
using EpisodeSink = std::function<void(const EpisodeRecord&)>;

/// Maps each scenario along its tour, abstracts the map, applies the
/// relocation script and runs every query under every strategy. Every episode
/// starts from the freshly abstracted map at the scenario start pose.
/// All scenarios are validated before any is run.
BenchmarkReport run_benchmark(const std::vector<Scenario>& scenarios, const BenchmarkConfig& config,
                              const EpisodeSink& sink = {});

/// Classifies a finished episode against the target's true position.
void score_episode(EpisodeRecord& r, double success_radius, std::size_t attempt_limit);

}  // namespace dualmap
