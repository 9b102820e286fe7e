#pragma once

#include "dualmap/abstract_map.hpp"
#include "dualmap/concrete_map.hpp"
#include "dualmap/observation.hpp"
#include "dualmap/planner.hpp"
#include "dualmap/query_nav.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dualmap {

/// Every tunable of the pipeline. Serialized as a flat JSON object whose keys
/// are listed by `RunConfig::keys()`.
struct RunConfig {
    AssociationConfig association;
    AbstractionConfig abstraction;
    KeyframePolicy keyframe;
    PlannerConfig planner;
    double epsilon = 0.05;
    std::size_t attempt_limit = 3;
    double near_gate = 3.0;
    double success_radius = 1.0;
    double step = 0.25;
    std::size_t dim = 512;
    double match_radius = 0.1;
    std::uint64_t seed = 0;
    /// Sensor overrides applied to simulated worlds (unset: scenario value).
    std::optional<double> spurious_prob;
    std::optional<double> null_class_prob;
    std::optional<double> drop_prob;

    static std::vector<std::string> keys();

    /// Sets one key from its text form. Throws UsageError for unknown keys,
    /// unparsable values or values out of range.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    /// Applies a JSON object of keys; unknown keys are rejected.
    void merge_json(const std::string& json_text);
    void load_file(const std::string& path);

    /// Flat JSON with sorted keys.
    std::string to_json() const;

    /// Range checks across fields. Throws UsageError.
    void validate() const;

    EpisodeConfig episode(Strategy strategy) const;
};

}  // namespace dualmap
