#include "dualmap/map_io.hpp"

#include "dualmap/binary_io.hpp"
#include "dualmap/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace dualmap {

using nlohmann::json;

namespace {

void write_header(bin::Writer& w, const char* magic, std::uint32_t version, const json& header) {
    w.raw(std::string(magic, 4));
    w.u32(version);
    w.str(header.dump());
}

json read_header(bin::Reader& r, const char* magic, std::uint32_t version) {
    if (r.remaining() < 4 || r.raw(4) != std::string(magic, 4)) {
        throw DataError(std::string("not a ") + magic + " file (bad magic)");
    }
    const auto v = r.u32();
    if (v != version) {
        throw DataError(std::string(magic) + " version " + std::to_string(v) + " is not supported");
    }
    try {
        return json::parse(r.str());
    } catch (const json::exception& e) {
        throw DataError(std::string(magic) + " header is not valid JSON: " + e.what());
    }
}

json parse_config(const std::string& config_json) {
    try {
        return json::parse(config_json);
    } catch (const json::exception& e) {
        throw UsageError(std::string("embedded config is not valid JSON: ") + e.what());
    }
}

void put_class(bin::Writer& w, const std::optional<std::string>& c) {
    w.u8(c ? 1 : 0);
    if (c) w.str(*c);
}

std::optional<std::string> get_class(bin::Reader& r) {
    const auto flag = r.u8();
    if (flag > 1) throw DataError("bad class flag at byte offset " + std::to_string(r.position() - 1));
    if (!flag) return std::nullopt;
    return r.str();
}

void put_points(bin::Writer& w, std::span<const Point3> pts) {
    w.u32(static_cast<std::uint32_t>(pts.size()));
    for (const auto& p : pts) {
        w.f64(p.x());
        w.f64(p.y());
        w.f64(p.z());
    }
}

PointCloud get_points(bin::Reader& r) {
    const auto n = r.u32();
    r.need(static_cast<std::size_t>(n) * 24);
    std::vector<Point3> pts(n);
    for (auto& p : pts) {
        const double x = r.f64(), y = r.f64(), z = r.f64();
        p = {x, y, z};
    }
    return PointCloud(std::move(pts));
}

void put_vector(bin::Writer& w, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v[i]);
}

Eigen::VectorXd get_vector(bin::Reader& r, std::size_t dim) {
    r.need(dim * 8);
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) v[static_cast<Eigen::Index>(i)] = r.f64();
    return v;
}

json association_json(const AssociationConfig& c) {
    return {{"match_threshold", c.match_threshold}, {"voxel", c.voxel},
            {"stability_window", c.stability_window}, {"min_observations", c.min_observations},
            {"split_persistence", c.split_persistence}, {"stability_enabled", c.stability_enabled},
            {"split_enabled", c.split_enabled}};
}

AssociationConfig association_from(const json& j) {
    AssociationConfig c;
    c.match_threshold = j.at("match_threshold").get<double>();
    c.voxel = j.at("voxel").get<double>();
    c.stability_window = j.at("stability_window").get<Timestamp>();
    c.min_observations = j.at("min_observations").get<std::size_t>();
    c.split_persistence = j.at("split_persistence").get<std::size_t>();
    c.stability_enabled = j.at("stability_enabled").get<bool>();
    c.split_enabled = j.at("split_enabled").get<bool>();
    return c;
}

json abstraction_json(const AbstractionConfig& c) {
    return {{"anchor_threshold", c.anchor_threshold}, {"on_delta", c.on_delta},
            {"containment", c.containment}, {"merge_threshold", c.merge_threshold},
            {"replace_threshold", c.replace_threshold}, {"resolution", c.resolution},
            {"voxel", c.voxel}, {"plane_bin", c.plane_bin},
            {"min_plane_points", c.min_plane_points}, {"layout_percentile", c.layout_percentile}};
}

AbstractionConfig abstraction_from(const json& j) {
    AbstractionConfig c;
    c.anchor_threshold = j.at("anchor_threshold").get<double>();
    c.on_delta = j.at("on_delta").get<double>();
    c.containment = j.at("containment").get<double>();
    c.merge_threshold = j.at("merge_threshold").get<double>();
    c.replace_threshold = j.at("replace_threshold").get<double>();
    c.resolution = j.at("resolution").get<double>();
    c.voxel = j.at("voxel").get<double>();
    c.plane_bin = j.at("plane_bin").get<double>();
    c.min_plane_points = j.at("min_plane_points").get<std::size_t>();
    c.layout_percentile = j.at("layout_percentile").get<double>();
    return c;
}

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw DataError(std::string(what) + " header is missing a field: " + e.what());
    }
}

}  // namespace

std::vector<std::uint8_t> encode_concrete_map(const ConcreteMap& map, const std::string& config_json) {
    std::size_t dim = 0;
    if (!map.empty()) dim = map.objects().front().feature.dim();
    json h{{"format", "dmcm"},
           {"version", kConcreteMapVersion},
           {"config", parse_config(config_json)},
           {"association", association_json(map.config())},
           {"dim", dim},
           {"next_id", map.next_id()},
           {"last_timestamp", map.last_timestamp() ? json(*map.last_timestamp()) : json(nullptr)},
           {"objects", map.size()}};
    bin::Writer w;
    write_header(w, "DMCM", kConcreteMapVersion, h);
    for (const auto& o : map.objects()) {
        if (o.feature.dim() != dim) throw UsageError("objects have inconsistent feature dimensions");
        w.u64(o.id);
        put_class(w, o.class_id);
        w.u64(o.last_update);
        put_vector(w, o.feature.values());
        put_vector(w, o.feature_sum);
        put_points(w, o.cloud.points());
        w.u32(static_cast<std::uint32_t>(o.history.size()));
        for (const auto& hentry : o.history) {
            const auto& z = *hentry.observation;
            w.u64(hentry.timestamp);
            put_class(w, hentry.class_id);
            w.u64(z.timestamp);
            put_class(w, z.class_id);
            put_points(w, z.cloud.points());
            put_vector(w, z.feature.values());
        }
    }
    return std::move(w.buffer());
}

ConcreteMap decode_concrete_map(std::span<const std::uint8_t> bytes) {
    bin::Reader r(bytes);
    const json h = read_header(r, "DMCM", kConcreteMapVersion);
    return guarded("DMCM", [&] {
        const auto config = association_from(h.at("association"));
        const auto dim = h.at("dim").get<std::size_t>();
        const auto count = h.at("objects").get<std::size_t>();
        std::optional<Timestamp> last;
        if (!h.at("last_timestamp").is_null()) last = h.at("last_timestamp").get<Timestamp>();
        std::vector<MapObject> objects;
        for (std::size_t i = 0; i < count; ++i) {
            MapObject o;
            o.id = r.u64();
            o.class_id = get_class(r);
            o.last_update = r.u64();
            o.feature = FeatureVec(get_vector(r, dim));
            o.feature_sum = get_vector(r, dim);
            o.cloud = get_points(r);
            const auto nh = r.u32();
            for (std::uint32_t k = 0; k < nh; ++k) {
                HistoryEntry e;
                e.timestamp = r.u64();
                e.class_id = get_class(r);
                auto z = std::make_shared<Observation>();
                z->timestamp = r.u64();
                z->class_id = get_class(r);
                z->cloud = get_points(r);
                z->feature = FeatureVec(get_vector(r, dim));
                e.observation = std::move(z);
                o.history.push_back(std::move(e));
            }
            objects.push_back(std::move(o));
        }
        if (!r.at_end()) throw DataError("trailing bytes after the last object at offset " + std::to_string(r.position()));
        return ConcreteMap::from_parts(config, std::move(objects), h.at("next_id").get<ObjectId>(), last);
    });
}

std::vector<std::uint8_t> encode_abstract_map(const AbstractMap& map, const std::string& config_json) {
    std::size_t dim = 0;
    if (!map.anchors.empty()) dim = map.anchors.front().feature.dim();
    const auto& L = map.layout;
    json h{{"format", "dmam"},
           {"version", kAbstractMapVersion},
           {"config", parse_config(config_json)},
           {"abstraction", abstraction_json(map.config)},
           {"dim", dim},
           {"next_id", map.next_id},
           {"anchors", map.anchors.size()},
           {"layout",
            {{"resolution", L.resolution()},
             {"origin", {L.origin().x, L.origin().y}},
             {"width", L.width()},
             {"height", L.height()}}}};
    bin::Writer w;
    write_header(w, "DMAM", kAbstractMapVersion, h);
    for (const auto& a : map.anchors) {
        if (a.feature.dim() != dim) throw UsageError("anchors have inconsistent feature dimensions");
        w.u64(a.id);
        put_class(w, a.class_id);
        w.u8(a.support_z ? 1 : 0);
        w.f64(a.support_z.value_or(0.0));
        w.u64(a.cloud_size);
        w.u32(static_cast<std::uint32_t>(a.projected.size()));
        for (const auto& p : a.projected) {
            w.f64(p.x());
            w.f64(p.y());
        }
        w.f64(a.footprint.resolution());
        w.u8(a.footprint.z_support() ? 1 : 0);
        w.f64(a.footprint.z_support().value_or(0.0));
        w.u32(static_cast<std::uint32_t>(a.footprint.size()));
        for (const auto& c : a.footprint.cells()) {
            w.i32(c.x);
            w.i32(c.y);
        }
        put_vector(w, a.feature.values());
        w.u32(static_cast<std::uint32_t>(a.volatile_features.size()));
        for (const auto& v : a.volatile_features) put_vector(w, v.values());
    }
    w.bytes(L.raster());
    return std::move(w.buffer());
}

AbstractMap decode_abstract_map(std::span<const std::uint8_t> bytes) {
    bin::Reader r(bytes);
    const json h = read_header(r, "DMAM", kAbstractMapVersion);
    return guarded("DMAM", [&] {
        AbstractMap m;
        m.config = abstraction_from(h.at("abstraction"));
        m.next_id = h.at("next_id").get<AnchorId>();
        const auto dim = h.at("dim").get<std::size_t>();
        const auto count = h.at("anchors").get<std::size_t>();
        for (std::size_t i = 0; i < count; ++i) {
            Anchor a;
            a.id = r.u64();
            a.class_id = get_class(r);
            const bool has_support = r.u8() != 0;
            const double support = r.f64();
            if (has_support) a.support_z = support;
            a.cloud_size = r.u64();
            const auto np = r.u32();
            r.need(static_cast<std::size_t>(np) * 16);
            for (std::uint32_t k = 0; k < np; ++k) {
                const double x = r.f64(), y = r.f64();
                a.projected.emplace_back(x, y);
            }
            const double res = r.f64();
            const bool has_fz = r.u8() != 0;
            const double fz = r.f64();
            const auto nc = r.u32();
            r.need(static_cast<std::size_t>(nc) * 8);
            std::vector<Cell2> cells(nc);
            for (auto& c : cells) {
                c.x = r.i32();
                c.y = r.i32();
            }
            a.footprint = Footprint2D(res, std::move(cells), has_fz ? std::optional<double>(fz) : std::nullopt);
            a.feature = FeatureVec(get_vector(r, dim));
            const auto nv = r.u32();
            for (std::uint32_t k = 0; k < nv; ++k) a.volatile_features.emplace_back(get_vector(r, dim));
            if (!m.anchors.empty() && a.id <= m.anchors.back().id) throw DataError("anchor ids are not increasing");
            if (a.id >= m.next_id) throw DataError("anchor id exceeds next id");
            m.anchors.push_back(std::move(a));
        }
        const auto& L = h.at("layout");
        const auto w = L.at("width").get<std::int32_t>(), ht = L.at("height").get<std::int32_t>();
        if (w < 0 || ht < 0) throw DataError("negative layout extent");
        const auto raster = r.span(static_cast<std::size_t>(w) * static_cast<std::size_t>(ht));
        for (const auto b : raster) {
            if (b > 1) throw DataError("layout raster holds a value other than 0 or 1");
        }
        m.layout = OccupancyLayout(L.at("resolution").get<double>(),
                                   {L.at("origin").at(0).get<std::int32_t>(), L.at("origin").at(1).get<std::int32_t>()},
                                   w, ht, std::vector<std::uint8_t>(raster.begin(), raster.end()));
        if (!r.at_end()) throw DataError("trailing bytes after the layout at offset " + std::to_string(r.position()));
        return m;
    });
}

std::vector<std::uint8_t> encode_scene_cloud(const SceneCloud& scene, const std::string& config_json) {
    json h{{"format", "dmsc"},
           {"version", kSceneCloudVersion},
           {"config", parse_config(config_json)},
           {"voxel", scene.voxel},
           {"points", scene.cloud.size()}};
    if (scene.last_keyframe_pose) {
        const auto& p = *scene.last_keyframe_pose;
        h["last_keyframe"] = {p.translation.x(), p.translation.y(), p.translation.z(),
                              p.rotation.w(),    p.rotation.x(),    p.rotation.y(),
                              p.rotation.z()};
    } else {
        h["last_keyframe"] = nullptr;
    }
    bin::Writer w;
    write_header(w, "DMSC", kSceneCloudVersion, h);
    for (const auto& p : scene.cloud.points()) {
        w.f64(p.x());
        w.f64(p.y());
        w.f64(p.z());
    }
    return std::move(w.buffer());
}

SceneCloud decode_scene_cloud(std::span<const std::uint8_t> bytes) {
    bin::Reader r(bytes);
    const json h = read_header(r, "DMSC", kSceneCloudVersion);
    return guarded("DMSC", [&] {
        SceneCloud s;
        s.voxel = h.at("voxel").get<double>();
        const auto n = h.at("points").get<std::size_t>();
        r.need(n * 24);
        std::vector<Point3> pts(n);
        for (auto& p : pts) {
            const double x = r.f64(), y = r.f64(), z = r.f64();
            p = {x, y, z};
        }
        s.cloud = PointCloud(std::move(pts));
        if (!h.at("last_keyframe").is_null()) {
            const auto v = h.at("last_keyframe").get<std::vector<double>>();
            if (v.size() != 7) throw DataError("DMSC last_keyframe must hold 7 numbers");
            Pose p;
            p.translation = {v[0], v[1], v[2]};
            p.rotation = Eigen::Quaterniond(v[3], v[4], v[5], v[6]);
            s.last_keyframe_pose = p;
        }
        if (!r.at_end()) throw DataError("trailing bytes after the scene points");
        return s;
    });
}

std::string header_json(std::span<const std::uint8_t> bytes) {
    bin::Reader r(bytes);
    if (r.remaining() < 4) throw DataError("file too short for a header");
    const std::string magic = r.raw(4);
    if (magic != "DMCM" && magic != "DMAM" && magic != "DMSC" && magic != "DMOS") {
        throw DataError("unrecognized magic '" + magic + "'");
    }
    r.u32();
    return r.str();
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes) {
    const std::string tmp = path + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw DataError("failed writing " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw DataError("cannot move " + tmp + " to " + path + ": " + ec.message());
    }
}

void write_file_atomic(const std::string& path, const std::string& text) {
    write_file_atomic(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace dualmap
