#include "dualmap/config.hpp"

#include "dualmap/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <type_traits>
#include <variant>

namespace dualmap {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "config fields assume a 64-bit size_t");

namespace {

using Field = std::variant<double*, std::size_t*, bool*, std::optional<double>*>;

struct Entry {
    const char* key;
    Field (*field)(RunConfig&);
    double lo;
    double hi;
    bool lo_open = false;
};

constexpr double kBig = std::numeric_limits<double>::max();

// Sorted by key so that listings and serialization agree.
const Entry kEntries[] = {
    {"abstraction.containment", [](RunConfig& c) -> Field { return &c.abstraction.containment; }, 0.0, 1.0, true},
    {"abstraction.delta", [](RunConfig& c) -> Field { return &c.abstraction.on_delta; }, 0.0, kBig},
    {"abstraction.layout_percentile", [](RunConfig& c) -> Field { return &c.abstraction.layout_percentile; }, 0.0, 1.0, true},
    {"abstraction.min_plane_points", [](RunConfig& c) -> Field { return &c.abstraction.min_plane_points; }, 1, kBig},
    {"abstraction.plane_bin", [](RunConfig& c) -> Field { return &c.abstraction.plane_bin; }, 0.0, kBig, true},
    {"abstraction.resolution", [](RunConfig& c) -> Field { return &c.abstraction.resolution; }, 0.0, kBig, true},
    {"abstraction.tau1", [](RunConfig& c) -> Field { return &c.abstraction.merge_threshold; }, 0.0, 1.0},
    {"abstraction.tau2", [](RunConfig& c) -> Field { return &c.abstraction.replace_threshold; }, 0.0, 1.0},
    {"abstraction.tau_a", [](RunConfig& c) -> Field { return &c.abstraction.anchor_threshold; }, -1.0, 1.0},
    {"abstraction.voxel", [](RunConfig& c) -> Field { return &c.abstraction.voxel; }, 0.0, kBig, true},
    {"association.min_observations", [](RunConfig& c) -> Field { return &c.association.min_observations; }, 1, kBig},
    {"association.split", [](RunConfig& c) -> Field { return &c.association.split_enabled; }, 0, 1},
    {"association.split_persistence", [](RunConfig& c) -> Field { return &c.association.split_persistence; }, 1, kBig},
    {"association.stability", [](RunConfig& c) -> Field { return &c.association.stability_enabled; }, 0, 1},
    {"association.stability_window", [](RunConfig& c) -> Field { return &c.association.stability_window; }, 0, kBig},
    {"association.tau", [](RunConfig& c) -> Field { return &c.association.match_threshold; }, -1.0, 2.0},
    {"association.voxel", [](RunConfig& c) -> Field { return &c.association.voxel; }, 0.0, kBig, true},
    {"eval.match_radius", [](RunConfig& c) -> Field { return &c.match_radius; }, 0.0, kBig, true},
    {"features.dim", [](RunConfig& c) -> Field { return &c.dim; }, 1, kBig},
    {"keyframe.rotation_deg", [](RunConfig& c) -> Field { return &c.keyframe.min_rotation_deg; }, 0.0, 360.0},
    {"keyframe.translation", [](RunConfig& c) -> Field { return &c.keyframe.min_translation; }, 0.0, kBig},
    {"nav.attempt_limit", [](RunConfig& c) -> Field { return &c.attempt_limit; }, 1, kBig},
    {"nav.epsilon", [](RunConfig& c) -> Field { return &c.epsilon; }, 0.0, 2.0},
    {"nav.near_gate", [](RunConfig& c) -> Field { return &c.near_gate; }, 0.0, kBig, true},
    {"nav.step", [](RunConfig& c) -> Field { return &c.step; }, 0.0, kBig, true},
    {"nav.success_radius", [](RunConfig& c) -> Field { return &c.success_radius; }, 0.0, kBig, true},
    {"planner.goal_bias", [](RunConfig& c) -> Field { return &c.planner.rrt_goal_bias; }, 0.0, 1.0},
    {"planner.goal_reach", [](RunConfig& c) -> Field { return &c.planner.goal_reach; }, 0.0, kBig},
    {"planner.inflation", [](RunConfig& c) -> Field { return &c.planner.inflation; }, 0.0, kBig},
    {"planner.pad", [](RunConfig& c) -> Field { return &c.planner.pad; }, 0.0, kBig},
    {"planner.rrt_budget", [](RunConfig& c) -> Field { return &c.planner.rrt_budget; }, 1, kBig},
    {"planner.rrt_margin", [](RunConfig& c) -> Field { return &c.planner.rrt_margin; }, 0.0, kBig},
    {"planner.rrt_step", [](RunConfig& c) -> Field { return &c.planner.rrt_step; }, 0.0, kBig, true},
    {"planner.snap_radius", [](RunConfig& c) -> Field { return &c.planner.snap_radius; }, 0.0, kBig},
    {"seed", [](RunConfig& c) -> Field { return &c.seed; }, 0, kBig},
    {"sim.drop_prob", [](RunConfig& c) -> Field { return &c.drop_prob; }, 0.0, 1.0},
    {"sim.null_class_prob", [](RunConfig& c) -> Field { return &c.null_class_prob; }, 0.0, 1.0},
    {"sim.spurious_prob", [](RunConfig& c) -> Field { return &c.spurious_prob; }, 0.0, 1.0},
};

const Entry& entry(const std::string& key) {
    for (const auto& e : kEntries) {
        if (key == e.key) return e;
    }
    throw UsageError("unknown config key '" + key + "'");
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end || !std::isfinite(out)) {
        throw UsageError("config key '" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

void check_range(const Entry& e, double v) {
    const bool low_ok = e.lo_open ? v > e.lo : v >= e.lo;
    if (!low_ok || v > e.hi) {
        std::ostringstream msg;
        msg << "config key '" << e.key << "' out of range: " << v;
        throw UsageError(msg.str());
    }
}

std::string format_double(double v) {
    // Shortest round-trip representation.
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& e : kEntries) out.emplace_back(e.key);
    return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& e = entry(key);
    const Field f = e.field(*this);
    if (auto* d = std::get_if<double*>(&f)) {
        const double v = parse_double(key, value);
        check_range(e, v);
        **d = v;
    } else if (auto* n = std::get_if<std::size_t*>(&f)) {
        std::size_t v = 0;
        const auto* end = value.data() + value.size();
        const auto [p, ec] = std::from_chars(value.data(), end, v);
        if (ec != std::errc() || p != end) {
            throw UsageError("config key '" + key + "' expects a non-negative integer, got '" + value + "'");
        }
        check_range(e, static_cast<double>(v));
        **n = v;
    } else if (auto* b = std::get_if<bool*>(&f)) {
        if (value == "true" || value == "1") {
            **b = true;
        } else if (value == "false" || value == "0") {
            **b = false;
        } else {
            throw UsageError("config key '" + key + "' expects true or false, got '" + value + "'");
        }
    } else if (auto* o = std::get_if<std::optional<double>*>(&f)) {
        if (value.empty() || value == "null") {
            (*o)->reset();
        } else {
            const double v = parse_double(key, value);
            check_range(e, v);
            **o = v;
        }
    }
}

std::string RunConfig::get(const std::string& key) const {
    const auto& e = entry(key);
    const Field f = e.field(const_cast<RunConfig&>(*this));
    if (auto* d = std::get_if<double*>(&f)) return format_double(**d);
    if (auto* n = std::get_if<std::size_t*>(&f)) return std::to_string(**n);
    if (auto* b = std::get_if<bool*>(&f)) return **b ? "true" : "false";
    const auto* o = std::get<std::optional<double>*>(f);
    return *o ? format_double(**o) : "null";
}

void RunConfig::merge_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (v.is_null()) {
            set(k, "null");
        } else if (v.is_boolean()) {
            set(k, v.get<bool>() ? "true" : "false");
        } else if (v.is_number_integer() || v.is_number_unsigned()) {
            set(k, v.dump());
        } else if (v.is_number_float()) {
            set(k, format_double(v.get<double>()));
        } else {
            throw UsageError("config key '" + k + "' must be a number, boolean or null");
        }
    }
    validate();
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        merge_json(ss.str());
    } catch (const UsageError& e) {
        throw UsageError(path + ": " + e.what());
    }
}

std::string RunConfig::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& e : kEntries) {
        const Field f = e.field(const_cast<RunConfig&>(*this));
        if (auto* d = std::get_if<double*>(&f)) {
            j[e.key] = **d;
        } else if (auto* n = std::get_if<std::size_t*>(&f)) {
            j[e.key] = **n;
        } else if (auto* b = std::get_if<bool*>(&f)) {
            j[e.key] = **b;
        } else {
            const auto* o = std::get<std::optional<double>*>(f);
            j[e.key] = *o ? nlohmann::ordered_json(**o) : nlohmann::ordered_json(nullptr);
        }
    }
    return j.dump();
}

void RunConfig::validate() const {
    if (abstraction.replace_threshold < abstraction.merge_threshold) {
        throw UsageError("abstraction.tau2 must not be below abstraction.tau1");
    }
}

EpisodeConfig RunConfig::episode(Strategy strategy) const {
    EpisodeConfig e;
    e.strategy = strategy;
    e.attempt_limit = attempt_limit;
    e.epsilon = epsilon;
    e.near_gate = near_gate;
    e.success_radius = success_radius;
    e.step = step;
    e.containment = abstraction.containment;
    e.association = association;
    e.planner = planner;
    e.seed = seed;
    return e;
}

}  // namespace dualmap
