#include "dualmap/scenario.hpp"

#include "dualmap/error.hpp"
#include "dualmap/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace dualmap {

using nlohmann::json;

const char* to_string(RelocationKind k) {
    return k == RelocationKind::in_anchor ? "in_anchor" : "cross_anchor";
}

const FurnitureSpec* Scenario::find_furniture(const std::string& fid) const {
    for (const auto& f : furniture) {
        if (f.id == fid) return &f;
    }
    return nullptr;
}

const ItemSpec* Scenario::find_item(const std::string& iid) const {
    for (const auto& i : items) {
        if (i.id == iid) return &i;
    }
    return nullptr;
}

bool polygon_contains(std::span<const Point2> polygon, const Point2& p) {
    if (polygon.size() < 3) return false;
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const Point2& a = polygon[i];
        const Point2& b = polygon[(i + 1) % polygon.size()];
        const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
        if (cross < -1e-9) return false;
    }
    return true;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw DataError("scenario: " + msg); }

bool item_fits(const FurnitureSpec& f, const Point2& pos, const Eigen::Vector3d& size) {
    const double hx = size.x() / 2, hy = size.y() / 2;
    for (const auto& c : {Point2(pos.x() - hx, pos.y() - hy), Point2(pos.x() + hx, pos.y() - hy),
                          Point2(pos.x() + hx, pos.y() + hy), Point2(pos.x() - hx, pos.y() + hy)}) {
        if (!polygon_contains(f.polygon, c)) return false;
    }
    return true;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) fail(where + " must be an object");
    for (const auto& [k, v] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end()) {
            fail("unknown key '" + k + "' in " + where);
        }
    }
}

Point2 point2(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) fail(where + " must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const Point2& p) { return json::array({p.x(), p.y()}); }

}  // namespace

void validate(const Scenario& s) {
    if (s.id.empty()) fail("missing id");
    std::set<std::string> classes;
    for (const auto& c : s.classes) {
        if (!classes.insert(c.name).second) fail("duplicate class '" + c.name + "'");
    }
    const auto known = [&](const std::string& c, const std::string& where) {
        if (!classes.contains(c)) fail(where + " references unknown class '" + c + "'");
    };
    for (const auto& c : s.anchor_classes) known(c, "anchor_classes");
    if (!(s.wall_height > 0.0)) fail("wall_height must be positive");

    std::set<std::string> ids;
    for (const auto& f : s.furniture) {
        if (f.id.empty() || !ids.insert(f.id).second) fail("furniture id '" + f.id + "' empty or duplicated");
        known(f.cls, "furniture " + f.id);
        if (f.polygon.size() < 3) fail("furniture " + f.id + " polygon needs at least 3 vertices");
        for (std::size_t i = 0; i < f.polygon.size(); ++i) {
            const Point2& a = f.polygon[i];
            const Point2& b = f.polygon[(i + 1) % f.polygon.size()];
            const Point2& c = f.polygon[(i + 2) % f.polygon.size()];
            const double cross = (b.x() - a.x()) * (c.y() - b.y()) - (b.y() - a.y()) * (c.x() - b.x());
            if (!(cross > 0.0)) fail("furniture " + f.id + " polygon must be convex and counter-clockwise");
        }
        if (!(f.height > 0.0)) fail("furniture " + f.id + " height must be positive");
    }
    for (const auto& it : s.items) {
        if (it.id.empty() || !ids.insert(it.id).second) fail("item id '" + it.id + "' empty or duplicated");
        known(it.cls, "item " + it.id);
        if (!(it.size.minCoeff() > 0.0)) fail("item " + it.id + " size must be positive");
        if (it.carrier) {
            const auto* f = s.find_furniture(*it.carrier);
            if (!f) fail("item " + it.id + " carrier '" + *it.carrier + "' is not furniture");
            if (!item_fits(*f, it.position, it.size)) fail("item " + it.id + " does not lie within its carrier");
        }
    }

    // Relocations are applied in time order; kinds must agree with the carrier change.
    std::map<std::string, std::optional<std::string>> carrier;
    for (const auto& it : s.items) carrier[it.id] = it.carrier;
    auto events = s.relocations;
    std::stable_sort(events.begin(), events.end(),
                     [](const RelocationEvent& a, const RelocationEvent& b) { return a.time < b.time; });
    for (const auto& e : events) {
        const auto* it = s.find_item(e.item);
        if (!it) fail("relocation references unknown item '" + e.item + "'");
        if (e.carrier) {
            const auto* f = s.find_furniture(*e.carrier);
            if (!f) fail("relocation of " + e.item + " names unknown carrier '" + *e.carrier + "'");
            if (!item_fits(*f, e.position, it->size)) fail("relocation of " + e.item + " does not fit its carrier");
        }
        const bool same = carrier[e.item] == e.carrier;
        if (same != (e.kind == RelocationKind::in_anchor)) {
            fail("relocation of " + e.item + " kind does not match its carrier change");
        }
        carrier[e.item] = e.carrier;
    }
    for (const auto& q : s.queries) {
        if (!s.find_item(q.item)) fail("query references unknown item '" + q.item + "'");
    }
    for (const auto& u : s.undersegments) {
        if (!ids.contains(u.a) || !ids.contains(u.b) || u.a == u.b) fail("undersegment pair must name two objects");
        if (u.until < u.from) fail("undersegment window is inverted");
    }
    const auto& sn = s.sensor;
    if (!(sn.fov_deg > 0.0 && sn.fov_deg <= 360.0)) fail("sensor fov_deg must be in (0, 360]");
    if (!(sn.range > 0.0)) fail("sensor range must be positive");
    if (sn.points_per_face == 0) fail("sensor points_per_face must be positive");
    if (!(sn.lattice > 0.0 && sn.floor_spacing > 0.0 && sn.wall_spacing > 0.0 && sn.wall_vertical_spacing > 0.0)) {
        fail("sensor spacings must be positive");
    }
    for (const double p : {sn.null_class_prob, sn.spurious_prob, sn.drop_prob}) {
        if (!(p >= 0.0 && p <= 1.0)) fail("sensor probabilities must be in [0, 1]");
    }
    if (s.spin_steps == 0) fail("spin_steps must be positive");
}

Scenario parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    Scenario s;
    try {
        check_keys(j, {"id", "seed", "vocabulary", "anchor_classes", "wall_height", "walls", "furniture", "items",
                       "start", "tour", "relocations", "queries", "sensor", "undersegment"},
                   "scenario");
        s.id = j.at("id").get<std::string>();
        s.seed = j.value("seed", std::uint64_t{0});
        const auto& v = j.at("vocabulary");
        check_keys(v, {"dim", "seed", "noise", "ceiling", "classes"}, "vocabulary");
        s.vocabulary.dim = v.value("dim", s.vocabulary.dim);
        s.vocabulary.seed = v.value("seed", s.vocabulary.seed);
        s.vocabulary.noise = v.value("noise", s.vocabulary.noise);
        s.vocabulary.ceiling = v.value("ceiling", s.vocabulary.ceiling);
        for (const auto& c : v.at("classes")) {
            check_keys(c, {"name", "groups"}, "class");
            SyntheticClass sc;
            sc.name = c.at("name").get<std::string>();
            if (c.contains("groups")) sc.groups = c.at("groups").get<std::map<std::string, double>>();
            s.classes.push_back(std::move(sc));
        }
        s.anchor_classes = j.value("anchor_classes", std::vector<std::string>{});
        s.wall_height = j.value("wall_height", s.wall_height);
        for (const auto& w : j.value("walls", json::array())) {
            if (!w.is_array() || w.size() != 4) fail("wall must be [x0, y0, x1, y1]");
            s.walls.push_back({{w[0].get<double>(), w[1].get<double>()}, {w[2].get<double>(), w[3].get<double>()}});
        }
        for (const auto& f : j.value("furniture", json::array())) {
            check_keys(f, {"id", "class", "polygon", "height"}, "furniture");
            FurnitureSpec fs;
            fs.id = f.at("id").get<std::string>();
            fs.cls = f.at("class").get<std::string>();
            for (const auto& p : f.at("polygon")) fs.polygon.push_back(point2(p, "polygon vertex"));
            fs.height = f.at("height").get<double>();
            s.furniture.push_back(std::move(fs));
        }
        for (const auto& i : j.value("items", json::array())) {
            check_keys(i, {"id", "class", "carrier", "position", "size"}, "item");
            ItemSpec is;
            is.id = i.at("id").get<std::string>();
            is.cls = i.at("class").get<std::string>();
            if (i.contains("carrier") && !i.at("carrier").is_null()) is.carrier = i.at("carrier").get<std::string>();
            is.position = point2(i.at("position"), "item position");
            const auto sz = i.at("size").get<std::vector<double>>();
            if (sz.size() != 3) fail("item size must be [sx, sy, sz]");
            is.size = {sz[0], sz[1], sz[2]};
            s.items.push_back(std::move(is));
        }
        if (j.contains("start")) {
            const auto st = j.at("start").get<std::vector<double>>();
            if (st.size() != 3) fail("start must be [x, y, heading]");
            s.start = {st[0], st[1]};
            s.start_heading = st[2];
        }
        if (j.contains("tour")) {
            const auto& t = j.at("tour");
            check_keys(t, {"spin_steps", "stops"}, "tour");
            s.spin_steps = t.value("spin_steps", s.spin_steps);
            for (const auto& st : t.value("stops", json::array())) {
                check_keys(st, {"at", "spin"}, "tour stop");
                s.tour.push_back({point2(st.at("at"), "tour stop"), st.value("spin", false)});
            }
        }
        for (const auto& r : j.value("relocations", json::array())) {
            check_keys(r, {"time", "item", "carrier", "position", "kind"}, "relocation");
            RelocationEvent e;
            e.time = r.value("time", Timestamp{0});
            e.item = r.at("item").get<std::string>();
            if (r.contains("carrier") && !r.at("carrier").is_null()) e.carrier = r.at("carrier").get<std::string>();
            e.position = point2(r.at("position"), "relocation position");
            const auto kind = r.at("kind").get<std::string>();
            if (kind == "in_anchor") {
                e.kind = RelocationKind::in_anchor;
            } else if (kind == "cross_anchor") {
                e.kind = RelocationKind::cross_anchor;
            } else {
                fail("relocation kind must be in_anchor or cross_anchor");
            }
            s.relocations.push_back(std::move(e));
        }
        for (const auto& q : j.value("queries", json::array())) {
            check_keys(q, {"item"}, "query");
            s.queries.push_back({q.at("item").get<std::string>()});
        }
        if (j.contains("sensor")) {
            const auto& sn = j.at("sensor");
            check_keys(sn, {"fov_deg", "range", "points_per_face", "lattice", "null_class_prob", "spurious_prob",
                            "spurious_points", "drop_prob", "floor_spacing", "wall_spacing", "wall_vertical_spacing"},
                       "sensor");
            auto& o = s.sensor;
            o.fov_deg = sn.value("fov_deg", o.fov_deg);
            o.range = sn.value("range", o.range);
            o.points_per_face = sn.value("points_per_face", o.points_per_face);
            o.lattice = sn.value("lattice", o.lattice);
            o.null_class_prob = sn.value("null_class_prob", o.null_class_prob);
            o.spurious_prob = sn.value("spurious_prob", o.spurious_prob);
            o.spurious_points = sn.value("spurious_points", o.spurious_points);
            o.drop_prob = sn.value("drop_prob", o.drop_prob);
            o.floor_spacing = sn.value("floor_spacing", o.floor_spacing);
            o.wall_spacing = sn.value("wall_spacing", o.wall_spacing);
            o.wall_vertical_spacing = sn.value("wall_vertical_spacing", o.wall_vertical_spacing);
        }
        for (const auto& u : j.value("undersegment", json::array())) {
            check_keys(u, {"a", "b", "from", "until"}, "undersegment");
            s.undersegments.push_back({u.at("a").get<std::string>(), u.at("b").get<std::string>(),
                                       u.at("from").get<Timestamp>(), u.at("until").get<Timestamp>()});
        }
    } catch (const json::exception& e) {
        fail(std::string("malformed field: ") + e.what());
    }
    validate(s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open scenario file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_scenario(ss.str());
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["id"] = s.id;
    j["seed"] = s.seed;
    json classes = json::array();
    for (const auto& c : s.classes) {
        json cj{{"name", c.name}};
        if (!c.groups.empty()) cj["groups"] = c.groups;
        classes.push_back(cj);
    }
    j["vocabulary"] = {{"dim", s.vocabulary.dim},
                       {"seed", s.vocabulary.seed},
                       {"noise", s.vocabulary.noise},
                       {"ceiling", s.vocabulary.ceiling},
                       {"classes", classes}};
    j["anchor_classes"] = s.anchor_classes;
    j["wall_height"] = s.wall_height;
    j["walls"] = json::array();
    for (const auto& w : s.walls) j["walls"].push_back({w.a.x(), w.a.y(), w.b.x(), w.b.y()});
    j["furniture"] = json::array();
    for (const auto& f : s.furniture) {
        json poly = json::array();
        for (const auto& p : f.polygon) poly.push_back(to_json(p));
        j["furniture"].push_back({{"id", f.id}, {"class", f.cls}, {"polygon", poly}, {"height", f.height}});
    }
    j["items"] = json::array();
    for (const auto& i : s.items) {
        j["items"].push_back({{"id", i.id},
                              {"class", i.cls},
                              {"carrier", i.carrier ? json(*i.carrier) : json(nullptr)},
                              {"position", to_json(i.position)},
                              {"size", {i.size.x(), i.size.y(), i.size.z()}}});
    }
    j["start"] = {s.start.x(), s.start.y(), s.start_heading};
    json stops = json::array();
    for (const auto& t : s.tour) stops.push_back({{"at", to_json(t.at)}, {"spin", t.spin}});
    j["tour"] = {{"spin_steps", s.spin_steps}, {"stops", stops}};
    j["relocations"] = json::array();
    for (const auto& r : s.relocations) {
        j["relocations"].push_back({{"time", r.time},
                                    {"item", r.item},
                                    {"carrier", r.carrier ? json(*r.carrier) : json(nullptr)},
                                    {"position", to_json(r.position)},
                                    {"kind", to_string(r.kind)}});
    }
    j["queries"] = json::array();
    for (const auto& q : s.queries) j["queries"].push_back({{"item", q.item}});
    const auto& o = s.sensor;
    j["sensor"] = {{"fov_deg", o.fov_deg},
                   {"range", o.range},
                   {"points_per_face", o.points_per_face},
                   {"lattice", o.lattice},
                   {"null_class_prob", o.null_class_prob},
                   {"spurious_prob", o.spurious_prob},
                   {"spurious_points", o.spurious_points},
                   {"drop_prob", o.drop_prob},
                   {"floor_spacing", o.floor_spacing},
                   {"wall_spacing", o.wall_spacing},
                   {"wall_vertical_spacing", o.wall_vertical_spacing}};
    j["undersegment"] = json::array();
    for (const auto& u : s.undersegments) {
        j["undersegment"].push_back({{"a", u.a}, {"b", u.b}, {"from", u.from}, {"until", u.until}});
    }
    return j.dump(2) + "\n";
}

std::optional<RelocationKind> query_kind(const Scenario& s, const QuerySpec& q) {
    const auto* it = s.find_item(q.item);
    if (!it) return std::nullopt;
    auto events = s.relocations;
    std::stable_sort(events.begin(), events.end(),
                     [](const RelocationEvent& a, const RelocationEvent& b) { return a.time < b.time; });
    bool moved = false;
    std::optional<std::string> final_carrier = it->carrier;
    for (const auto& e : events) {
        if (e.item != q.item) continue;
        moved = true;
        final_carrier = e.carrier;
    }
    if (!moved) return std::nullopt;
    // Judged by the net carrier change.
    return final_carrier == it->carrier ? RelocationKind::in_anchor : RelocationKind::cross_anchor;
}

namespace {

struct RoomDef {
    const char* name;
    Point2 origin;
    std::array<const char*, 4> furniture;
    std::array<const char*, 6> items;
};

const std::array<RoomDef, 4> kRooms{{
    {"kitchen", {0.0, 0.0}, {"counter", "dining_table", "cabinet", "island"},
     {"mug", "bowl", "kettle", "toaster", "plate", "cutting_board"}},
    {"study", {5.0, 0.0}, {"desk", "bookshelf", "filing_cabinet", "side_table"},
     {"book", "laptop", "stapler", "lamp", "pen_holder", "notebook"}},
    {"bedroom", {0.0, 5.0}, {"bed", "nightstand", "dresser", "wardrobe"},
     {"pillow", "alarm_clock", "phone", "glasses", "jewelry_box", "hairbrush"}},
    {"living", {5.0, 5.0}, {"sofa", "coffee_table", "tv_stand", "armchair"},
     {"remote", "vase", "plant", "speaker", "photo_frame", "candle"}},
}};

std::vector<SyntheticClass> apartment_classes() {
    std::vector<SyntheticClass> out;
    for (const auto& r : kRooms) {
        for (const auto* f : r.furniture) out.push_back({f, {{"static", 0.75}, {r.name, 0.3}}});
    }
    for (const auto& r : kRooms) {
        for (const auto* i : r.items) out.push_back({i, {{r.name, 0.45}}});
    }
    return out;
}

double round_to(double v, double step) { return std::round(v / step) * step; }

// Samples an item position on `f` keeping clear of `taken`.
std::optional<Point2> place_on(const FurnitureSpec& f, const Eigen::Vector3d& size, const std::vector<Point2>& taken,
                               Rng& rng) {
    Point2 lo = f.polygon.front(), hi = f.polygon.front();
    for (const auto& p : f.polygon) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    for (int attempt = 0; attempt < 200; ++attempt) {
        const Point2 p{round_to(rng.uniform(lo.x(), hi.x()), 0.01), round_to(rng.uniform(lo.y(), hi.y()), 0.01)};
        Eigen::Vector3d padded = size;
        padded.x() += 0.1;
        padded.y() += 0.1;
        if (!item_fits(f, p, padded)) continue;
        const bool clear = std::all_of(taken.begin(), taken.end(), [&](const Point2& t) { return (t - p).norm() >= 0.3; });
        if (clear) return p;
    }
    return std::nullopt;
}

}  // namespace

Scenario generate_apartment(const GeneratorOptions& options) {
    Rng rng(hash_combine(options.seed, 0xa11u));
    Scenario s;
    const char* suite = options.suite == GeneratorOptions::Suite::static_world ? "static"
                        : options.suite == GeneratorOptions::Suite::in_anchor  ? "in_anchor"
                                                                               : "cross_anchor";
    s.id = std::string(suite) + "_" + std::to_string(options.seed);
    s.seed = options.seed;
    s.classes = apartment_classes();
    for (const auto& r : kRooms) {
        for (const auto* f : r.furniture) s.anchor_classes.push_back(f);
    }

    // Outer box and two inner walls with 1 m doors at the middle of each room side.
    s.walls = {{{0, 0}, {10, 0}}, {{10, 0}, {10, 10}}, {{10, 10}, {0, 10}}, {{0, 10}, {0, 0}},
               {{5, 0}, {5, 2}},  {{5, 3}, {5, 7}},     {{5, 8}, {5, 10}},   {{0, 5}, {2, 5}},
               {{3, 5}, {7, 5}},  {{8, 5}, {10, 5}}};

    const std::array<Point2, 4> slots{{{1.3, 1.3}, {3.7, 1.3}, {1.3, 3.7}, {3.7, 3.7}}};
    std::map<std::string, std::size_t> room_of;  // furniture id -> room index
    for (std::size_t r = 0; r < kRooms.size(); ++r) {
        for (std::size_t k = 0; k < slots.size(); ++k) {
            const Point2 c = kRooms[r].origin + slots[k] +
                             Point2(round_to(rng.uniform(-0.15, 0.15), 0.01), round_to(rng.uniform(-0.15, 0.15), 0.01));
            const double len = round_to(rng.uniform(0.9, 1.2), 0.01), dep = round_to(rng.uniform(0.5, 0.7), 0.01);
            FurnitureSpec f;
            f.id = kRooms[r].furniture[k];
            f.cls = kRooms[r].furniture[k];
            f.polygon = {c + Point2(-len / 2, -dep / 2), c + Point2(len / 2, -dep / 2), c + Point2(len / 2, dep / 2),
                         c + Point2(-len / 2, dep / 2)};
            f.height = round_to(rng.uniform(0.45, 0.9), 0.05);
            room_of[f.id] = r;
            s.furniture.push_back(std::move(f));
        }
    }

    // One or two items per piece, item classes drawn from the room's pool.
    std::map<std::string, std::vector<Point2>> taken;
    for (std::size_t r = 0; r < kRooms.size(); ++r) {
        std::vector<std::string> pool(kRooms[r].items.begin(), kRooms[r].items.end());
        for (std::size_t k = 0; k < slots.size(); ++k) {
            const auto& f = s.furniture[r * slots.size() + k];
            const std::size_t n = 1 + rng.below(2);
            for (std::size_t m = 0; m < n && !pool.empty(); ++m) {
                const auto pick = rng.below(pool.size());
                const Eigen::Vector3d size{round_to(rng.uniform(0.12, 0.2), 0.01), round_to(rng.uniform(0.12, 0.2), 0.01),
                                           round_to(rng.uniform(0.1, 0.25), 0.01)};
                const auto pos = place_on(f, size, taken[f.id], rng);
                if (!pos) continue;
                taken[f.id].push_back(*pos);
                s.items.push_back({pool[pick], pool[pick], f.id, *pos, size});
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
            }
        }
    }

    s.start = {2.5, 2.5};
    s.start_heading = 0.0;
    s.tour = {{{2.5, 2.5}, true}, {{5.0, 2.5}, false}, {{7.5, 2.5}, true}, {{7.5, 5.0}, false},
              {{7.5, 7.5}, true}, {{5.0, 7.5}, false}, {{2.5, 7.5}, true}, {{2.5, 5.0}, false},
              {{2.5, 2.5}, false}};
    s.spin_steps = 32;

    // Query targets.
    std::vector<std::size_t> order(s.items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    // Items whose relocation cannot be placed are skipped.
    Timestamp t = 0;
    std::vector<std::size_t> targets;
    for (const auto idx : order) {
        if (targets.size() == options.queries) break;
        const auto& item = s.items[idx];
        if (options.suite == GeneratorOptions::Suite::static_world) {
            targets.push_back(idx);
            continue;
        }
        const auto& from = *s.find_furniture(*item.carrier);
        std::vector<const FurnitureSpec*> dests;
        if (options.suite == GeneratorOptions::Suite::in_anchor) {
            dests.push_back(&from);
        } else {
            const bool same_room = rng.bernoulli(options.same_room_bias);
            for (const auto& f : s.furniture) {
                if (f.id == from.id) continue;
                if ((room_of[f.id] == room_of[from.id]) == same_room) dests.push_back(&f);
            }
        }
        for (std::size_t tries = 0; tries < 16 && !dests.empty(); ++tries) {
            const auto* dest = dests[rng.below(dests.size())];
            auto occupied = taken[dest->id];
            if (dest->id == from.id) {
                std::erase_if(occupied, [&](const Point2& p) { return p == item.position; });
            }
            const auto pos = place_on(*dest, item.size, occupied, rng);
            if (!pos || (dest->id == from.id && (*pos - item.position).norm() < 0.15)) continue;
            taken[dest->id].push_back(*pos);
            s.relocations.push_back({t++, item.id, dest->id, *pos,
                                     dest->id == from.id ? RelocationKind::in_anchor : RelocationKind::cross_anchor});
            targets.push_back(idx);
            break;
        }
    }
    std::sort(targets.begin(), targets.end());
    for (const auto idx : targets) s.queries.push_back({s.items[idx].id});
    validate(s);
    return s;
}

Scenario split_fixture() {
    Scenario s;
    s.id = "split_chair_cushion";
    s.seed = 3;
    s.classes = {{"chair", {{"static", 0.75}, {"seat", 0.4}}}, {"cushion", {{"seat", 0.5}}}};
    s.anchor_classes = {"chair"};
    s.furniture = {{"chair", "chair", {{-0.25, -0.25}, {0.25, -0.25}, {0.25, 0.25}, {-0.25, 0.25}}, 0.45}};
    s.items = {{"cushion", "cushion", std::string("chair"), {0.0, 0.0}, {0.36, 0.36, 0.1}}};
    s.start = {1.5, 0.0};
    s.start_heading = std::numbers::pi;
    for (int k = 0; k < 8; ++k) {
        const double a = k * std::numbers::pi / 4.0;
        s.tour.push_back({{round_to(1.5 * std::cos(a), 0.001), round_to(1.5 * std::sin(a), 0.001)}, true});
    }
    s.spin_steps = 8;
    s.queries = {{"cushion"}};
    s.undersegments = {{"chair", "cushion", 0, 30}};
    validate(s);
    return s;
}

}  // namespace dualmap
