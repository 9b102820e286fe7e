#pragma once

#include "dualmap/concrete_map.hpp"
#include "dualmap/features.hpp"
#include "dualmap/geometry.hpp"
#include "dualmap/observation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dualmap {

using AnchorId = std::uint64_t;

struct AbstractionConfig {
    double anchor_threshold = 0.6;   ///< tau_a on cos(f_o, template)
    double on_delta = 0.1;           ///< max gap between object bottom and supporting plane
    double containment = 0.6;        ///< share of volatile cells inside the anchor footprint
    double merge_threshold = 0.3;    ///< tau_1
    double replace_threshold = 0.7;  ///< tau_2
    double resolution = 0.1;         ///< footprint and layout cell size
    double voxel = 0.05;             ///< projected-cloud downsampling
    double plane_bin = 0.05;
    std::size_t min_plane_points = 50;
    double layout_percentile = 0.9;

    bool operator==(const AbstractionConfig&) const = default;
};

struct Anchor {
    AnchorId id = 0;
    std::vector<Point2> projected;           ///< downsampled 2D projection of P_a
    Footprint2D footprint;
    FeatureVec feature;
    std::optional<std::string> class_id;
    std::vector<FeatureVec> volatile_features;  ///< L_a
    std::optional<double> support_z;
    std::size_t cloud_size = 0;              ///< |P_a| used for size weighting

    bool operator==(const Anchor&) const = default;
};

/// Binary bird's-eye-view occupancy over a rectangular cell range.
class OccupancyLayout {
public:
    OccupancyLayout() = default;
    /// `origin` is the lowest cell of the raster; `width`/`height` in cells.
    OccupancyLayout(double resolution, Cell2 origin, std::int32_t width, std::int32_t height,
                    std::vector<std::uint8_t> occupied);
    static OccupancyLayout from_cells(double resolution, std::span<const Cell2> cells, std::int32_t pad = 0);

    double resolution() const { return resolution_; }
    Cell2 origin() const { return origin_; }
    std::int32_t width() const { return width_; }
    std::int32_t height() const { return height_; }
    bool in_bounds(Cell2 c) const;
    bool occupied(Cell2 c) const;  ///< false outside bounds
    std::vector<Cell2> occupied_cells() const;
    std::size_t occupied_count() const;
    const std::vector<std::uint8_t>& raster() const { return raster_; }

    /// Same raster extended to include `cells` (new area is free).
    OccupancyLayout expanded_to(std::span<const Cell2> cells, std::int32_t pad) const;

    /// Portable graymap (P5): occupied cells black, free white, +y up.
    std::string to_pgm() const;

    bool operator==(const OccupancyLayout&) const = default;

private:
    double resolution_ = 0.1;
    Cell2 origin_{};
    std::int32_t width_ = 0;
    std::int32_t height_ = 0;
    std::vector<std::uint8_t> raster_;  // row-major, y outer
};

struct AbstractMap {
    std::vector<Anchor> anchors;  ///< sorted by id
    OccupancyLayout layout;
    AbstractionConfig config;
    AnchorId next_id = 0;

    const Anchor* find(AnchorId id) const;
    bool operator==(const AbstractMap&) const = default;
};

enum class AnchorKind { anchor, volatile_object };

AnchorKind classify_anchor(const MapObject& o, const FeatureVec& template_feat, double anchor_threshold);

/// Normalized mean of the static-category phrase features.
FeatureVec anchor_template(std::span<const FeatureVec> static_phrase_feats);

/// Candidate anchor built from a concrete-map object.
Anchor make_anchor(AnchorId id, const MapObject& o, const AbstractionConfig& config);

/// True when `v` rests on `a`: its footprint lies mostly inside the anchor's
/// and its bottom is within [0, delta] above the supporting plane.
bool on_relation(const MapObject& v, const Anchor& a, const AbstractionConfig& config);
bool on_relation(const MapObject& v, const Anchor& a, double delta);

/// BEV point-count histogram thresholded at the configured percentile of
/// non-zero cells. Fewer than 10 distinct non-zero counts: threshold = max count.
OccupancyLayout compute_layout(const PointCloud& scene, double resolution, double percentile = 0.9);

AbstractMap abstract(const ConcreteMap& map, const FeatureVec& template_feat, const PointCloud& scene,
                     const AbstractionConfig& config = {});

struct AnchorChange {
    enum class Kind { preserved, merged, inserted };
    AnchorId anchor = 0;
    Kind kind = Kind::preserved;
    bool volatile_list_replaced = false;
    std::vector<std::size_t> sources;  ///< indices of the local candidates absorbed
};

struct UpdateResult {
    AbstractMap map;
    std::vector<AnchorChange> changes;  ///< one per anchor of the updated map
};

/// Point-count weighted feature merge, renormalized.
FeatureVec size_weighted_feature(const FeatureVec& a, std::size_t size_a, const FeatureVec& b,
                                 std::size_t size_b);

/// Folds a stability-checked local map into the abstract map.
UpdateResult update_abstract(const AbstractMap& map, const ConcreteMap& local,
                             const FeatureVec& template_feat);

const char* to_string(AnchorChange::Kind kind);

}  // namespace dualmap
