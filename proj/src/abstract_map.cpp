#include "dualmap/abstract_map.hpp"

#include "dualmap/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace dualmap {

OccupancyLayout::OccupancyLayout(double resolution, Cell2 origin, std::int32_t width,
                                 std::int32_t height, std::vector<std::uint8_t> occupied)
    : resolution_(resolution), origin_(origin), width_(width), height_(height), raster_(std::move(occupied)) {
    if (!(resolution > 0.0)) throw UsageError("layout resolution must be positive");
    if (width < 0 || height < 0 ||
        raster_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DataError("layout raster size does not match its extent");
    }
    for (auto& v : raster_) v = v ? 1 : 0;
}

OccupancyLayout OccupancyLayout::from_cells(double resolution, std::span<const Cell2> cells, std::int32_t pad) {
    if (cells.empty()) return OccupancyLayout(resolution, {}, 0, 0, {});
    Cell2 lo = cells.front(), hi = cells.front();
    for (const auto& c : cells) {
        lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
        hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
    }
    lo = {lo.x - pad, lo.y - pad};
    hi = {hi.x + pad, hi.y + pad};
    const std::int32_t w = hi.x - lo.x + 1, h = hi.y - lo.y + 1;
    std::vector<std::uint8_t> raster(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
    for (const auto& c : cells) {
        raster[static_cast<std::size_t>(c.y - lo.y) * static_cast<std::size_t>(w) +
               static_cast<std::size_t>(c.x - lo.x)] = 1;
    }
    return OccupancyLayout(resolution, lo, w, h, std::move(raster));
}

bool OccupancyLayout::in_bounds(Cell2 c) const {
    return c.x >= origin_.x && c.y >= origin_.y && c.x < origin_.x + width_ && c.y < origin_.y + height_;
}

bool OccupancyLayout::occupied(Cell2 c) const {
    if (!in_bounds(c)) return false;
    return raster_[static_cast<std::size_t>(c.y - origin_.y) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(c.x - origin_.x)] != 0;
}

std::vector<Cell2> OccupancyLayout::occupied_cells() const {
    std::vector<Cell2> out;
    for (std::int32_t y = 0; y < height_; ++y) {
        for (std::int32_t x = 0; x < width_; ++x) {
            if (raster_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)]) {
                out.push_back({origin_.x + x, origin_.y + y});
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t OccupancyLayout::occupied_count() const {
    return static_cast<std::size_t>(std::count(raster_.begin(), raster_.end(), std::uint8_t{1}));
}

OccupancyLayout OccupancyLayout::expanded_to(std::span<const Cell2> cells, std::int32_t pad) const {
    std::vector<Cell2> all = occupied_cells();
    Cell2 lo = origin_, hi = {origin_.x + width_ - 1, origin_.y + height_ - 1};
    bool have = width_ > 0 && height_ > 0;
    for (const auto& c : cells) {
        if (!have) {
            lo = hi = c;
            have = true;
        }
        lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
        hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
    }
    if (!have) return *this;
    lo = {lo.x - pad, lo.y - pad};
    hi = {hi.x + pad, hi.y + pad};
    const std::int32_t w = hi.x - lo.x + 1, h = hi.y - lo.y + 1;
    std::vector<std::uint8_t> raster(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
    for (const auto& c : all) {
        raster[static_cast<std::size_t>(c.y - lo.y) * static_cast<std::size_t>(w) +
               static_cast<std::size_t>(c.x - lo.x)] = 1;
    }
    return OccupancyLayout(resolution_, lo, w, h, std::move(raster));
}

std::string OccupancyLayout::to_pgm() const {
    std::string out = "P5\n" + std::to_string(width_) + " " + std::to_string(height_) + "\n255\n";
    out.reserve(out.size() + raster_.size());
    for (std::int32_t y = height_ - 1; y >= 0; --y) {
        for (std::int32_t x = 0; x < width_; ++x) {
            out.push_back(raster_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                                  static_cast<std::size_t>(x)]
                              ? static_cast<char>(0)
                              : static_cast<char>(255));
        }
    }
    return out;
}

const Anchor* AbstractMap::find(AnchorId id) const {
    for (const auto& a : anchors) {
        if (a.id == id) return &a;
    }
    return nullptr;
}

AnchorKind classify_anchor(const MapObject& o, const FeatureVec& template_feat, double anchor_threshold) {
    return cosine(o.feature, template_feat) > anchor_threshold ? AnchorKind::anchor
                                                               : AnchorKind::volatile_object;
}

FeatureVec anchor_template(std::span<const FeatureVec> static_phrase_feats) {
    return normalized_mean(static_phrase_feats);
}

Anchor make_anchor(AnchorId id, const MapObject& o, const AbstractionConfig& config) {
    Anchor a;
    a.id = id;
    std::vector<Point2> xy;
    xy.reserve(o.cloud.size());
    for (const auto& p : o.cloud.points()) xy.emplace_back(p.head<2>());
    a.projected = downsample_2d(xy, config.voxel);
    a.cloud_size = a.projected.size();
    a.support_z = supporting_plane_z(o.cloud, config.plane_bin, config.min_plane_points);
    a.footprint = footprint(a.projected, config.resolution);
    a.footprint.set_z_support(a.support_z);
    a.feature = o.feature;
    a.class_id = o.class_id;
    return a;
}

bool on_relation(const MapObject& v, const Anchor& a, const AbstractionConfig& config) {
    if (!a.support_z || v.cloud.empty() || a.footprint.empty()) return false;
    const auto fp = footprint(v.cloud, a.footprint.resolution());
    if (fp.fraction_inside(a.footprint) < config.containment) return false;
    const double gap = v.cloud.min_z() - *a.support_z;
    return gap >= 0.0 && gap <= config.on_delta;
}

bool on_relation(const MapObject& v, const Anchor& a, double delta) {
    AbstractionConfig c;
    c.on_delta = delta;
    return on_relation(v, a, c);
}

OccupancyLayout compute_layout(const PointCloud& scene, double resolution, double percentile) {
    if (!(resolution > 0.0)) throw UsageError("layout resolution must be positive");
    if (!(percentile > 0.0 && percentile <= 1.0)) throw UsageError("percentile must be in (0, 1]");
    if (scene.empty()) return OccupancyLayout(resolution, {}, 0, 0, {});

    std::map<Cell2, std::size_t> counts;
    for (const auto& p : scene.points()) ++counts[cell_of(p.head<2>(), resolution)];

    std::vector<std::size_t> values;
    values.reserve(counts.size());
    for (const auto& [c, n] : counts) values.push_back(n);
    std::sort(values.begin(), values.end());
    const auto distinct = std::set<std::size_t>(values.begin(), values.end()).size();
    std::size_t threshold = values.back();
    if (distinct >= 10) {
        // Nearest-rank percentile.
        const auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(values.size())));
        threshold = values[std::max<std::size_t>(rank, 1) - 1];
    }

    std::vector<Cell2> all, occupied;
    for (const auto& [c, n] : counts) {
        all.push_back(c);
        if (n >= threshold) occupied.push_back(c);
    }
    auto layout = OccupancyLayout::from_cells(resolution, all, 0);
    std::vector<std::uint8_t> raster(layout.raster().size(), 0);
    for (const auto& c : occupied) {
        raster[static_cast<std::size_t>(c.y - layout.origin().y) * static_cast<std::size_t>(layout.width()) +
               static_cast<std::size_t>(c.x - layout.origin().x)] = 1;
    }
    return OccupancyLayout(resolution, layout.origin(), layout.width(), layout.height(), std::move(raster));
}

namespace {


// Anchors plus their attached volatile features, in object-id order.
std::vector<Anchor> build_anchors(const ConcreteMap& map, const FeatureVec& template_feat,
                                  const AbstractionConfig& config, AnchorId first_id) {
    std::vector<Anchor> anchors;
    std::vector<const MapObject*> volatiles;
    for (const auto& o : map.objects()) {
        if (classify_anchor(o, template_feat, config.anchor_threshold) == AnchorKind::anchor) {
            anchors.push_back(make_anchor(first_id + anchors.size(), o, config));
        } else {
            volatiles.push_back(&o);
        }
    }
    for (const auto* v : volatiles) {
        Anchor* carrier = nullptr;
        double best = -1.0;
        for (auto& a : anchors) {
            if (!on_relation(*v, a, config)) continue;
            const double inside = footprint(v->cloud, a.footprint.resolution()).fraction_inside(a.footprint);
            if (inside > best) {
                best = inside;
                carrier = &a;
            }
        }
        if (carrier) carrier->volatile_features.push_back(v->feature);
    }
    return anchors;
}

}  // namespace

AbstractMap abstract(const ConcreteMap& map, const FeatureVec& template_feat, const PointCloud& scene,
                     const AbstractionConfig& config) {
    AbstractMap out;
    out.config = config;
    out.anchors = build_anchors(map, template_feat, config, 0);
    out.next_id = out.anchors.size();
    out.layout = compute_layout(scene, config.resolution, config.layout_percentile);
    return out;
}

FeatureVec size_weighted_feature(const FeatureVec& a, std::size_t size_a, const FeatureVec& b,
                                 std::size_t size_b) {
    if (size_a + size_b == 0) throw UsageError("size-weighted merge of two empty clouds");
    if (a == b) return a;
    const double na = static_cast<double>(size_a), nb = static_cast<double>(size_b);
    return FeatureVec::normalized((na * a.values() + nb * b.values()) / (na + nb));
}

UpdateResult update_abstract(const AbstractMap& map, const ConcreteMap& local,
                             const FeatureVec& template_feat) {
    const auto& cfg = map.config;
    UpdateResult result;
    result.map = map;
    auto& anchors = result.map.anchors;
    for (const auto& a : anchors) result.changes.push_back({a.id, AnchorChange::Kind::preserved, false, {}});

    const auto candidates = build_anchors(local, template_feat, cfg, 0);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const auto& cand = candidates[k];
        std::optional<std::size_t> best;
        double best_overlap = 0.0;
        for (std::size_t i = 0; i < anchors.size(); ++i) {
            const double s = cand.footprint.overlap(anchors[i].footprint);
            if (!best || s > best_overlap) {
                best = i;
                best_overlap = s;
            }
        }
        if (best && best_overlap > cfg.merge_threshold) {
            auto& a = anchors[*best];
            auto& change = result.changes[*best];
            a.feature = size_weighted_feature(a.feature, a.cloud_size, cand.feature, cand.cloud_size);
            std::vector<Point2> merged = a.projected;
            merged.insert(merged.end(), cand.projected.begin(), cand.projected.end());
            a.projected = downsample_2d(merged, cfg.voxel);
            a.cloud_size = a.projected.size();
            if (!a.support_z) a.support_z = cand.support_z;
            a.footprint = footprint(a.projected, cfg.resolution);
            a.footprint.set_z_support(a.support_z);
            if (best_overlap > cfg.replace_threshold) {
                a.volatile_features = cand.volatile_features;
                change.volatile_list_replaced = true;
            }
            if (change.kind == AnchorChange::Kind::preserved) change.kind = AnchorChange::Kind::merged;
            change.sources.push_back(k);
        } else {
            Anchor fresh = cand;
            fresh.id = result.map.next_id++;
            anchors.push_back(std::move(fresh));
            result.changes.push_back({anchors.back().id, AnchorChange::Kind::inserted, false, {k}});
        }
    }
    return result;
}

const char* to_string(AnchorChange::Kind kind) {
    switch (kind) {
        case AnchorChange::Kind::preserved: return "preserved";
        case AnchorChange::Kind::merged: return "merged";
        case AnchorChange::Kind::inserted: return "inserted";
    }
    return "unknown";
}

}  // namespace dualmap
