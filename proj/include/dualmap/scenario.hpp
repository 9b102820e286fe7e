#pragma once

#include "dualmap/features.hpp"
#include "dualmap/geometry.hpp"
#include "dualmap/observation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dualmap {

struct WallSpec {
    Point2 a = Point2::Zero();
    Point2 b = Point2::Zero();
};

struct FurnitureSpec {
    std::string id;
    std::string cls;
    std::vector<Point2> polygon;  ///< counter-clockwise, convex
    double height = 0.0;          ///< top surface height
};

struct ItemSpec {
    std::string id;
    std::string cls;
    std::optional<std::string> carrier;  ///< furniture id; nullopt = floor
    Point2 position = Point2::Zero();    ///< footprint center
    Eigen::Vector3d size{0.2, 0.2, 0.2};  ///< box extents
};

enum class RelocationKind { in_anchor, cross_anchor };
const char* to_string(RelocationKind k);

struct RelocationEvent {
    Timestamp time = 0;  ///< order of application after mapping
    std::string item;
    std::optional<std::string> carrier;
    Point2 position = Point2::Zero();
    RelocationKind kind = RelocationKind::in_anchor;
};

struct QuerySpec {
    std::string item;  ///< ground-truth target; the query feature is its class text feature
};

struct TourStop {
    Point2 at = Point2::Zero();
    bool spin = false;
};

struct SensorSpec {
    double fov_deg = 90.0;
    double range = 4.0;
    std::size_t points_per_face = 50;
    double lattice = 0.05;            ///< surface sample spacing
    double null_class_prob = 0.0;
    double spurious_prob = 0.0;       ///< per-frame probability of one spurious segment
    std::size_t spurious_points = 30;
    double drop_prob = 0.0;           ///< per-observation drop probability
    double floor_spacing = 0.3;       ///< full-frame floor sampling
    double wall_spacing = 0.05;
    double wall_vertical_spacing = 0.1;
};

/// Two objects emitted as a single segment while `from <= tick < until`.
struct UndersegmentSpec {
    std::string a;
    std::string b;
    Timestamp from = 0;
    Timestamp until = 0;
};

struct Scenario {
    std::string id;
    std::uint64_t seed = 0;
    std::vector<SyntheticClass> classes;
    SyntheticVocabulary::Options vocabulary;
    std::vector<std::string> anchor_classes;  ///< phrases averaged into the anchor template
    double wall_height = 2.5;
    std::vector<WallSpec> walls;
    std::vector<FurnitureSpec> furniture;
    std::vector<ItemSpec> items;
    Point2 start = Point2::Zero();
    double start_heading = 0.0;
    std::vector<TourStop> tour;
    std::size_t spin_steps = 16;
    std::vector<RelocationEvent> relocations;
    std::vector<QuerySpec> queries;
    SensorSpec sensor;
    std::vector<UndersegmentSpec> undersegments;

    const FurnitureSpec* find_furniture(const std::string& id) const;
    const ItemSpec* find_item(const std::string& id) const;
};

/// Throws DataError describing the first violated constraint.
void validate(const Scenario& s);

Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& s);

/// Relocation kind of a query's target (nullopt when it never moves).
std::optional<RelocationKind> query_kind(const Scenario& s, const QuerySpec& q);

/// Point-in-convex-polygon test (boundary counts as inside).
bool polygon_contains(std::span<const Point2> polygon, const Point2& p);

struct GeneratorOptions {
    enum class Suite { static_world, in_anchor, cross_anchor };
    Suite suite = Suite::static_world;
    std::uint64_t seed = 1;
    std::size_t queries = 5;
    double same_room_bias = 0.7;  ///< share of cross-anchor moves that stay in the room
};

/// Four-room apartment with four furniture islands per room.
Scenario generate_apartment(const GeneratorOptions& options);

/// Chair with a cushion on it, under-segmented for the first ticks.
Scenario split_fixture();

}  // namespace dualmap
