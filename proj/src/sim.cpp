#include "dualmap/sim.hpp"

#include "dualmap/error.hpp"
#include "dualmap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dualmap {

namespace {

constexpr std::uint64_t kSpuriousTag = 0x5350u;
constexpr std::uint64_t kImageTag = 0x494du;

double wrap_angle(double a) {
    while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
    while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Proper or touching intersection of segments pq and rs.
bool segments_intersect(const Point2& p, const Point2& q, const Point2& r, const Point2& s) {
    const Point2 d1 = q - p, d2 = s - r;
    const double denom = cross(d1, d2);
    if (std::abs(denom) < 1e-12) return false;  // parallel: treat as not blocking
    const double t = cross(r - p, d2) / denom;
    const double u = cross(r - p, d1) / denom;
    return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

Point2 polygon_centroid(std::span<const Point2> poly) {
    Point2 c = Point2::Zero();
    for (const auto& p : poly) c += p;
    return c / static_cast<double>(poly.size());
}

std::size_t steps_for(double length, double spacing) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(length / spacing)));
}

}  // namespace

SimWorld::SimWorld(Scenario scenario) : scenario_(std::move(scenario)) {
    validate(scenario_);
    vocab_ = std::make_shared<const SyntheticVocabulary>(scenario_.classes, scenario_.vocabulary);

    for (const auto& f : scenario_.furniture) {
        Body b;
        b.id = f.id;
        b.cls = f.cls;
        b.polygon = f.polygon;
        b.z0 = 0.0;
        b.z1 = f.height;
        bodies_.push_back(std::move(b));
    }
    for (const auto& it : scenario_.items) {
        Body b;
        b.id = it.id;
        b.cls = it.cls;
        b.item = true;
        bodies_.push_back(std::move(b));
    }
    for (const auto& it : scenario_.items) {
        relocate({0, it.id, it.carrier, it.position, RelocationKind::in_anchor});
    }
    for (std::size_t i = 0; i < scenario_.furniture.size(); ++i) rebuild_body(i);

    const auto& sn = scenario_.sensor;
    Point2 lo = Point2::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    for (const auto& w : scenario_.walls) {
        lo = lo.cwiseMin(w.a).cwiseMin(w.b);
        hi = hi.cwiseMax(w.a).cwiseMax(w.b);
        const double len = (w.b - w.a).norm();
        const auto nu = steps_for(len, sn.wall_spacing);
        const auto nv = steps_for(scenario_.wall_height, sn.wall_vertical_spacing);
        for (std::size_t i = 0; i <= nu; ++i) {
            const Point2 p = w.a + (w.b - w.a) * (static_cast<double>(i) / static_cast<double>(nu));
            for (std::size_t k = 0; k <= nv; ++k) {
                wall_points_.emplace_back(p.x(), p.y(), scenario_.wall_height * static_cast<double>(k) / static_cast<double>(nv));
            }
        }
    }
    for (const auto& f : scenario_.furniture) {
        for (const auto& p : f.polygon) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
    }
    if (lo.allFinite()) {
        for (double y = lo.y() + sn.floor_spacing / 2; y < hi.y(); y += sn.floor_spacing) {
            for (double x = lo.x() + sn.floor_spacing / 2; x < hi.x(); x += sn.floor_spacing) {
                const Point2 p(x, y);
                const bool under = std::any_of(scenario_.furniture.begin(), scenario_.furniture.end(),
                                               [&](const FurnitureSpec& f) { return polygon_contains(f.polygon, p); });
                if (!under) floor_points_.emplace_back(x, y, 0.0);
            }
        }
    }
}

std::size_t SimWorld::body_index(const std::string& id) const {
    for (std::size_t i = 0; i < bodies_.size(); ++i) {
        if (bodies_[i].id == id) return i;
    }
    throw UsageError("unknown object '" + id + "'");
}

void SimWorld::relocate(const RelocationEvent& e) {
    const std::size_t idx = body_index(e.item);
    auto& b = bodies_[idx];
    if (!b.item) throw UsageError("only items can be relocated");
    const auto* spec = scenario_.find_item(e.item);
    const double hx = spec->size.x() / 2, hy = spec->size.y() / 2;
    b.polygon = {e.position + Point2(-hx, -hy), e.position + Point2(hx, -hy), e.position + Point2(hx, hy),
                 e.position + Point2(-hx, hy)};
    b.carrier.reset();
    b.z0 = 0.0;
    if (e.carrier) {
        b.carrier = body_index(*e.carrier);
        b.z0 = bodies_[*b.carrier].z1;
    }
    b.z1 = b.z0 + spec->size.z();
    rebuild_body(idx);
}

void SimWorld::apply_relocations() {
    auto events = scenario_.relocations;
    std::stable_sort(events.begin(), events.end(),
                     [](const RelocationEvent& a, const RelocationEvent& b) { return a.time < b.time; });
    for (const auto& e : events) relocate(e);
}

void SimWorld::rebuild_body(std::size_t i) {
    auto& b = bodies_[i];
    const double s = scenario_.sensor.lattice;
    b.faces.clear();

    Face top;
    Point2 lo = b.polygon.front(), hi = b.polygon.front();
    for (const auto& p : b.polygon) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const auto nx = steps_for(hi.x() - lo.x(), s), ny = steps_for(hi.y() - lo.y(), s);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const Point2 p{lo.x() + (hi.x() - lo.x()) * (static_cast<double>(ix) + 0.5) / static_cast<double>(nx),
                           lo.y() + (hi.y() - lo.y()) * (static_cast<double>(iy) + 0.5) / static_cast<double>(ny)};
            if (polygon_contains(b.polygon, p)) top.lattice.emplace_back(p.x(), p.y(), b.z1);
        }
    }
    top.mid = polygon_centroid(b.polygon);
    b.faces.push_back(std::move(top));

    for (std::size_t k = 0; k < b.polygon.size(); ++k) {
        const Point2 a = b.polygon[k], c = b.polygon[(k + 1) % b.polygon.size()];
        Face f;
        const Point2 d = (c - a).normalized();
        f.normal = Point2(d.y(), -d.x());  // outward for counter-clockwise polygons
        f.mid = (a + c) / 2.0;
        const auto nu = steps_for((c - a).norm(), s);
        const auto nv = steps_for(b.z1 - b.z0, s);
        for (std::size_t iv = 0; iv < nv; ++iv) {
            const double z = b.z0 + (b.z1 - b.z0) * (static_cast<double>(iv) + 0.5) / static_cast<double>(nv);
            for (std::size_t iu = 0; iu < nu; ++iu) {
                const Point2 p = a + (c - a) * ((static_cast<double>(iu) + 0.5) / static_cast<double>(nu));
                f.lattice.emplace_back(p.x(), p.y(), z);
            }
        }
        b.faces.push_back(std::move(f));
    }
}

bool SimWorld::in_view(const AgentPose& pose, const Point2& p) const {
    const Point2 d = p - pose.position;
    const double r = d.norm();
    if (r > scenario_.sensor.range) return false;
    if (r < 1e-9) return true;
    const double half = scenario_.sensor.fov_deg * std::numbers::pi / 360.0;
    return std::abs(wrap_angle(std::atan2(d.y(), d.x()) - pose.heading)) <= half;
}

bool SimWorld::occluded(const Point2& from, const Point2& to, std::size_t target) const {
    for (const auto& w : scenario_.walls) {
        if (segments_intersect(from, to, w.a, w.b)) return true;
    }
    const auto& t = bodies_[target];
    for (std::size_t i = 0; i < bodies_.size(); ++i) {
        const auto& b = bodies_[i];
        if (i == target || b.item || (t.carrier && *t.carrier == i)) continue;
        if (!(b.z1 > t.z1)) continue;
        if (polygon_contains(b.polygon, from)) return true;
        for (std::size_t k = 0; k < b.polygon.size(); ++k) {
            if (segments_intersect(from, to, b.polygon[k], b.polygon[(k + 1) % b.polygon.size()])) return true;
        }
    }
    return false;
}

bool SimWorld::body_visible(const AgentPose& pose, std::size_t i) const {
    const auto& b = bodies_[i];
    const Point2 c = polygon_centroid(b.polygon);
    std::vector<Point2> probes{c};
    for (const auto& v : b.polygon) probes.push_back(v + (c - v) * 0.05);
    for (const auto& p : probes) {
        if (in_view(pose, p) && !occluded(pose.position, p, i)) return true;
    }
    return false;
}

std::vector<std::string> SimWorld::visible(const AgentPose& pose) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < bodies_.size(); ++i) {
        if (body_visible(pose, i)) out.push_back(bodies_[i].id);
    }
    return out;
}

std::vector<Point3> SimWorld::sample_body(const AgentPose& pose, std::size_t i, Rng& rng) const {
    const auto& b = bodies_[i];
    std::vector<Point3> pts;
    for (const auto& f : b.faces) {
        const bool top = f.normal.isZero();
        if (!top && f.normal.dot(pose.position - f.mid) <= 0.0) continue;
        const std::size_t k = std::min(scenario_.sensor.points_per_face, f.lattice.size());
        std::vector<std::size_t> idx(f.lattice.size());
        for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
        for (std::size_t j = 0; j < k; ++j) std::swap(idx[j], idx[j + rng.below(idx.size() - j)]);
        std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
        for (std::size_t j = 0; j < k; ++j) pts.push_back(f.lattice[idx[j]]);
    }
    return pts;
}

FrameRecord SimWorld::sense(const AgentPose& pose, Timestamp tick, bool full_cloud) const {
    const auto& sn = scenario_.sensor;
    const std::uint64_t frame_seed = hash_combine(scenario_.seed, tick);
    FrameRecord fr;
    fr.frame_id = tick;
    fr.pose = Pose::planar(pose.position.x(), pose.position.y(), pose.heading);

    struct Pending {
        std::size_t body;
        std::vector<Point3> points;
        FeatureVec image;
        Rng rng;
    };
    std::vector<Pending> seen;
    for (std::size_t i = 0; i < bodies_.size(); ++i) {
        if (!body_visible(pose, i)) continue;
        Rng rng(hash_combine(frame_seed, i));
        auto pts = sample_body(pose, i, rng);
        auto img = vocab_->embed(bodies_[i].cls, hash_combine(hash_combine(frame_seed, kImageTag), i));
        seen.push_back({i, std::move(pts), std::move(img), rng});
    }

    const auto emit = [&](std::vector<Point3> pts, const FeatureVec& img, const std::string& cls, Rng& rng) {
        if (rng.bernoulli(sn.drop_prob)) return;
        Observation z;
        z.timestamp = tick;
        z.cloud = PointCloud(std::move(pts));
        if (rng.bernoulli(sn.null_class_prob)) {
            z.feature = combine(img, vocab_->null_text());
        } else {
            z.class_id = cls;
            z.feature = combine(img, vocab_->base(cls));
        }
        fr.observations.push_back(std::move(z));
    };

    std::vector<bool> consumed(seen.size(), false);
    for (std::size_t a = 0; a < seen.size(); ++a) {
        if (consumed[a]) continue;
        const auto& ba = bodies_[seen[a].body];
        std::optional<std::size_t> partner;
        for (const auto& u : scenario_.undersegments) {
            if (tick < u.from || tick >= u.until) continue;
            const std::string* other = u.a == ba.id ? &u.b : u.b == ba.id ? &u.a : nullptr;
            if (!other) continue;
            for (std::size_t b = a + 1; b < seen.size(); ++b) {
                if (!consumed[b] && bodies_[seen[b].body].id == *other) partner = b;
            }
        }
        if (!partner) {
            emit(std::move(seen[a].points), seen[a].image, ba.cls, seen[a].rng);
            continue;
        }
        // Under-segmented pair: one segment, class label alternating per tick.
        consumed[*partner] = true;
        auto pts = std::move(seen[a].points);
        pts.insert(pts.end(), seen[*partner].points.begin(), seen[*partner].points.end());
        const FeatureVec imgs[] = {seen[a].image, seen[*partner].image};
        const auto& bp = bodies_[seen[*partner].body];
        const auto& cls = tick % 2 == 0 ? (ba.id < bp.id ? ba.cls : bp.cls) : (ba.id < bp.id ? bp.cls : ba.cls);
        emit(std::move(pts), normalized_mean(imgs), cls, seen[a].rng);
    }

    Rng frng(hash_combine(frame_seed, kSpuriousTag));
    if (frng.bernoulli(sn.spurious_prob)) {
        const double half = sn.fov_deg * std::numbers::pi / 360.0;
        const double ang = pose.heading + frng.uniform(-half, half);
        const double r = frng.uniform(0.8, std::max(0.8, 0.8 * sn.range));
        const Point3 c{pose.position.x() + r * std::cos(ang), pose.position.y() + r * std::sin(ang), frng.uniform(0.1, 1.0)};
        std::vector<Point3> pts;
        for (std::size_t k = 0; k < sn.spurious_points; ++k) {
            pts.push_back(c + Point3(frng.uniform(-0.1, 0.1), frng.uniform(-0.1, 0.1), frng.uniform(-0.1, 0.1)));
        }
        Observation z;
        z.timestamp = tick;
        z.cloud = PointCloud(std::move(pts));
        z.feature = combine(random_unit_feature(vocab_->dim(), hash_combine(frame_seed, kSpuriousTag + 1)),
                            vocab_->null_text());
        fr.observations.push_back(std::move(z));
    }

    if (full_cloud) {
        std::vector<Point3> pts;
        const auto take = [&](const Point3& p) {
            if (in_view(pose, p.head<2>())) pts.push_back(p);
        };
        for (const auto& p : wall_points_) take(p);
        for (const auto& p : floor_points_) take(p);
        for (const auto& b : bodies_) {
            for (const auto& f : b.faces) {
                for (const auto& p : f.lattice) take(p);
            }
        }
        fr.full_cloud = PointCloud(std::move(pts));
    }
    return fr;
}

Point3 SimWorld::centroid(const std::string& id) const {
    const auto& b = bodies_[body_index(id)];
    const Point2 c = polygon_centroid(b.polygon);
    return {c.x(), c.y(), (b.z0 + b.z1) / 2.0};
}

std::optional<std::string> SimWorld::carrier_of(const std::string& item) const {
    const auto& b = bodies_[body_index(item)];
    if (!b.carrier) return std::nullopt;
    return bodies_[*b.carrier].id;
}

FeatureVec SimWorld::anchor_template() const {
    std::vector<FeatureVec> feats;
    for (const auto& c : scenario_.anchor_classes) feats.push_back(vocab_->base(c));
    if (feats.empty()) throw DataError("scenario " + scenario_.id + " defines no anchor classes");
    return normalized_mean(feats);
}

Query SimWorld::query_for(const QuerySpec& q) const {
    const auto& b = bodies_[body_index(q.item)];
    return {vocab_->base(b.cls), b.cls};
}

std::vector<LabeledPoint> SimWorld::ground_truth_points() const {
    std::vector<LabeledPoint> out;
    for (const auto& b : bodies_) {
        for (const auto& f : b.faces) {
            for (const auto& p : f.lattice) out.push_back({p, b.cls});
        }
    }
    return out;
}

std::vector<AgentPose> tour_poses(const Scenario& s, double step) {
    if (!(step > 0.0)) throw UsageError("tour step must be positive");
    std::vector<AgentPose> out;
    AgentPose pose{s.start, s.start_heading};
    out.push_back(pose);
    for (const auto& stop : s.tour) {
        const Point2 a = pose.position, b = stop.at;
        const double len = (b - a).norm();
        if (len > 1e-9) {
            pose.heading = std::atan2(b.y() - a.y(), b.x() - a.x());
            const auto n = static_cast<std::size_t>(std::ceil(len / step));
            for (std::size_t i = 1; i <= n; ++i) {
                pose.position = a + (b - a) * (static_cast<double>(i) / static_cast<double>(n));
                out.push_back(pose);
            }
        }
        if (stop.spin) {
            const double base = pose.heading;
            for (std::size_t k = 1; k <= s.spin_steps; ++k) {
                pose.heading = wrap_angle(base + 2.0 * std::numbers::pi * static_cast<double>(k) /
                                                     static_cast<double>(s.spin_steps));
                out.push_back(pose);
            }
            pose.heading = base;
        }
    }
    return out;
}

MappingResult map_tour(const SimWorld& world, const AssociationConfig& config, bool finalize, const FrameSink& sink,
                       double step, const KeyframePolicy& keyframe) {
    MappingResult r{ConcreteMap(config), SceneCloud{}, 0, 0, {}};
    r.scene.voxel = config.voxel;
    const auto poses = tour_poses(world.scenario(), step);
    Timestamp tick = 0;
    for (const auto& pose : poses) {
        const Pose p3 = Pose::planar(pose.position.x(), pose.position.y(), pose.heading);
        const bool key = is_keyframe(r.scene, p3, keyframe);
        const auto frame = world.sense(pose, tick, key);
        for (const auto& id : world.visible(pose)) r.observed.insert(id);
        if (sink) sink(frame);
        r.map.process_frame(frame);
        if (frame.full_cloud) r.scene = update_scene_cloud(r.scene, frame.pose, *frame.full_cloud, keyframe);
        ++tick;
    }
    if (finalize && config.stability_enabled) r.map.finalize();
    r.frames = poses.size();
    r.next_tick = tick;
    return r;
}

}  // namespace dualmap
