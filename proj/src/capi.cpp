#include "dualmap/dualmap.h"

#include "dualmap/benchmark.hpp"
#include "dualmap/config.hpp"
#include "dualmap/episode_log.hpp"
#include "dualmap/error.hpp"
#include "dualmap/map_io.hpp"
#include "dualmap/metrics.hpp"
#include "dualmap/rng.hpp"
#include "dualmap/scenario.hpp"
#include "dualmap/sim.hpp"
#include "dualmap/stream_io.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

struct dm_config {
    dualmap::RunConfig run;
};

struct dm_concrete_map {
    dualmap::ConcreteMap map;
};

struct dm_abstract_map {
    dualmap::AbstractMap map;
};

namespace {

using namespace dualmap;

thread_local std::string g_last_error;

template <class F>
dm_status guard(F&& f) {
    try {
        f();
        g_last_error.clear();
        return DM_OK;
    } catch (const UsageError& e) {
        g_last_error = e.what();
        return DM_ERR_USAGE;
    } catch (const DataError& e) {
        g_last_error = e.what();
        return DM_ERR_DATA;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return DM_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = std::string("internal error: ") + e.what();
        return DM_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "internal error: unknown exception";
        return DM_ERR_INTERNAL;
    }
}

char* dup(const std::string& s) {
    auto* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void put(char** out, const std::string& s) {
    if (out) *out = dup(s);
}

void need(const void* p, const char* what) {
    if (!p) throw UsageError(std::string(what) + " must not be null");
}

const RunConfig& cfg(const dm_config* c) {
    static const RunConfig defaults;
    return c ? c->run : defaults;
}

std::string config_line(const RunConfig& run) { return "# config " + run.to_json() + "\n"; }

Scenario load_for_run(const std::string& path, const RunConfig& run) {
    try {
        return apply_overrides(load_scenario(path), run);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::string read_text(const std::string& path) {
    const auto bytes = read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

// Whitespace-separated numbers; normalized to unit length.
FeatureVec read_feature_file(const std::string& path) {
    std::istringstream in(read_text(path));
    std::vector<double> v;
    std::string tok;
    while (in >> tok) {
        char* end = nullptr;
        const double d = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0' || !std::isfinite(d)) {
            throw DataError(path + ": '" + tok + "' is not a number");
        }
        v.push_back(d);
    }
    if (v.empty()) throw DataError(path + ": empty feature file");
    return FeatureVec::normalized(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

std::string fmt(double v, int precision = 6) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v;
    return s.str();
}

std::string anchor_label(const Anchor& a) { return a.class_id.value_or("null"); }

std::string ranking_text(const std::vector<Candidate>& ranked, const AbstractMap& m, std::size_t k) {
    std::ostringstream out;
    out << "rank anchor class score\n";
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        out << i + 1 << ' ' << ranked[i].anchor << ' ' << anchor_label(*m.find(ranked[i].anchor)) << ' '
            << fmt(ranked[i].score) << '\n';
    }
    return out.str();
}

GeneratorOptions::Suite suite_from_string(const std::string& s) {
    if (s == "static") return GeneratorOptions::Suite::static_world;
    if (s == "in_anchor") return GeneratorOptions::Suite::in_anchor;
    if (s == "cross_anchor") return GeneratorOptions::Suite::cross_anchor;
    throw UsageError("unknown suite '" + s + "' (expected static, in_anchor or cross_anchor)");
}

std::vector<Strategy> strategies_from_list(const std::string& list) {
    std::vector<Strategy> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto s = strategy_from_string(item);
        if (std::find(out.begin(), out.end(), s) != out.end()) throw UsageError("strategy '" + item + "' listed twice");
        out.push_back(s);
    }
    if (out.empty()) throw UsageError("empty strategy list");
    return out;
}

std::uint64_t episode_seed(const RunConfig& run, const Scenario& s, std::size_t query) {
    return hash_combine(hash_combine(run.seed, s.seed), query);
}

}  // namespace

extern "C" {

const char* dm_last_error(void) { return g_last_error.c_str(); }

void dm_free(void* p) { std::free(p); }

const char* dm_version(void) { return "1.0.0"; }

dm_status dm_config_new(dm_config** out) {
    return guard([&] {
        need(out, "out");
        *out = new dm_config{};
    });
}

void dm_config_free(dm_config* c) { delete c; }

dm_status dm_config_load_file(dm_config* c, const char* path) {
    return guard([&] {
        need(c, "config");
        need(path, "path");
        auto next = c->run;
        next.load_file(path);
        c->run = next;
    });
}

dm_status dm_config_merge_json(dm_config* c, const char* json) {
    return guard([&] {
        need(c, "config");
        need(json, "json");
        auto next = c->run;
        next.merge_json(json);
        c->run = next;
    });
}

dm_status dm_config_set(dm_config* c, const char* key, const char* value) {
    return guard([&] {
        need(c, "config");
        need(key, "key");
        need(value, "value");
        auto next = c->run;
        next.set(key, value);
        next.validate();
        c->run = next;
    });
}

dm_status dm_config_get(const dm_config* c, const char* key, char** value) {
    return guard([&] {
        need(c, "config");
        need(key, "key");
        need(value, "value");
        *value = dup(c->run.get(key));
    });
}

dm_status dm_config_to_json(const dm_config* c, char** json) {
    return guard([&] {
        need(json, "json");
        *json = dup(cfg(c).to_json());
    });
}

dm_status dm_config_keys(char** keys) {
    return guard([&] {
        need(keys, "keys");
        std::string out;
        for (const auto& k : RunConfig::keys()) out += k + "\n";
        *keys = dup(out);
    });
}

dm_status dm_concrete_map_load(const char* path, dm_concrete_map** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new dm_concrete_map{decode_concrete_map(read_file(path))};
    });
}

void dm_concrete_map_free(dm_concrete_map* m) { delete m; }

size_t dm_concrete_map_size(const dm_concrete_map* m) { return m ? m->map.size() : 0; }

dm_status dm_abstract_map_load(const char* path, dm_abstract_map** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new dm_abstract_map{decode_abstract_map(read_file(path))};
    });
}

void dm_abstract_map_free(dm_abstract_map* m) { delete m; }

size_t dm_abstract_map_anchor_count(const dm_abstract_map* m) { return m ? m->map.anchors.size() : 0; }

dm_status dm_abstract_map_rank(const dm_abstract_map* m, const double* feature, size_t dim, const uint64_t* excluded,
                               size_t n_excluded, size_t k, uint64_t* ids, double* scores, size_t* written) {
    return guard([&] {
        need(m, "map");
        need(feature, "feature");
        need(written, "written");
        if (k > 0) {
            need(ids, "ids");
            need(scores, "scores");
        }
        if (n_excluded > 0) need(excluded, "excluded");
        Query q{FeatureVec(std::span<const double>(feature, dim)), ""};
        if (!m->map.anchors.empty() && m->map.anchors.front().feature.dim() != dim) {
            throw UsageError("query dimension " + std::to_string(dim) + " does not match the map");
        }
        const std::set<AnchorId> ex(excluded, excluded + n_excluded);
        const auto ranked = rank_anchors(q, m->map, ex);
        const auto n = std::min(k, ranked.size());
        for (std::size_t i = 0; i < n; ++i) {
            ids[i] = ranked[i].anchor;
            scores[i] = ranked[i].score;
        }
        *written = n;
    });
}

dm_status dm_record(const dm_config* c, const char* scenario_path, const char* stream_out, const char* gt_cloud_out,
                    char** report) {
    return guard([&] {
        need(scenario_path, "scenario path");
        need(stream_out, "stream path");
        const auto& run = cfg(c);
        const SimWorld world(load_for_run(scenario_path, run));
        StreamHeader header;
        header.dim = world.vocabulary().dim();
        header.voxel = run.association.voxel;
        header.vocabulary = world.vocabulary().names();
        header.config_json = run.to_json();
        std::ostringstream buf;
        StreamWriter writer(buf, header);
        const auto mapping = map_tour(world, run.association, true, [&](const FrameRecord& f) { writer.write(f); },
                                      run.step, run.keyframe);
        write_file_atomic(stream_out, buf.str());
        std::ostringstream out;
        out << config_line(run);
        out << "scenario " << world.scenario().id << '\n';
        out << "frames " << mapping.frames << '\n';
        out << "records " << writer.records() << '\n';
        out << "observed_objects " << mapping.observed.size() << '\n';
        out << "ground_truth_objects " << world.object_count() << '\n';
        if (gt_cloud_out) {
            LabeledCloud gt;
            gt.label_set = world.vocabulary().names();
            for (const auto& p : world.ground_truth_points()) {
                gt.points.push_back(p.position);
                gt.labels.push_back(static_cast<std::uint32_t>(world.vocabulary().index_of(p.cls)));
            }
            write_file_atomic(gt_cloud_out, labeled_cloud_to_text(gt));
            out << "ground_truth_points " << gt.points.size() << '\n';
        }
        put(report, out.str());
    });
}

dm_status dm_build(const dm_config* c, const char* stream_path, const char* map_out, const char* scene_out,
                   char** report, double* seconds_per_frame) {
    return guard([&] {
        need(stream_path, "stream path");
        need(map_out, "map path");
        const auto& run = cfg(c);
        const auto contents = read_stream_file(stream_path);
        ConcreteMap map(run.association);
        SceneCloud scene;
        scene.voxel = run.association.voxel;
        std::size_t keyframes = 0;
        const auto t0 = std::chrono::steady_clock::now();
        for (const auto& f : contents.frames) {
            map.process_frame(f);
            if (f.full_cloud && is_keyframe(scene, f.pose, run.keyframe)) {
                scene = update_scene_cloud(scene, f.pose, *f.full_cloud, run.keyframe);
                ++keyframes;
            }
        }
        if (run.association.stability_enabled) map.finalize();
        const auto t1 = std::chrono::steady_clock::now();
        if (seconds_per_frame) {
            const double secs = std::chrono::duration<double>(t1 - t0).count();
            *seconds_per_frame = contents.frames.empty() ? 0.0 : secs / static_cast<double>(contents.frames.size());
        }
        const auto cfg_json = run.to_json();
        write_file_atomic(map_out, encode_concrete_map(map, cfg_json));
        if (scene_out) write_file_atomic(scene_out, encode_scene_cloud(scene, cfg_json));
        std::ostringstream out;
        out << config_line(run);
        out << "frames " << contents.frames.size() << '\n';
        out << "rejections " << contents.rejections.size() << '\n';
        for (const auto& r : contents.rejections) {
            out << "  rejected frame " << r.frame_id;
            if (r.observation) out << " observation " << *r.observation;
            out << " at byte " << r.offset << ": " << r.reason << '\n';
        }
        out << "objects " << map.size() << '\n';
        out << "keyframes " << keyframes << '\n';
        out << "scene_points " << scene.cloud.size() << '\n';
        put(report, out.str());
    });
}

dm_status dm_abstract(const dm_config* c, const char* map_path, const char* scene_path, const char* scenario_path,
                      const char* template_path, const char* map_out, const char* pgm_out, char** report) {
    return guard([&] {
        need(map_path, "map path");
        need(scene_path, "scene path");
        need(map_out, "output path");
        if (!scenario_path == !template_path) throw UsageError("give exactly one of a scenario or a template file");
        const auto& run = cfg(c);
        const auto map = decode_concrete_map(read_file(map_path));
        const auto scene = decode_scene_cloud(read_file(scene_path));
        const FeatureVec tmpl = scenario_path ? SimWorld(load_for_run(scenario_path, run)).anchor_template()
                                              : read_feature_file(template_path);
        const auto amap = abstract(map, tmpl, scene.cloud, run.abstraction);
        write_file_atomic(map_out, encode_abstract_map(amap, run.to_json()));
        if (pgm_out) write_file_atomic(pgm_out, amap.layout.to_pgm());
        std::ostringstream out;
        out << config_line(run);
        out << "objects " << map.size() << '\n';
        out << "anchors " << amap.anchors.size() << '\n';
        std::size_t volatiles = 0;
        for (const auto& a : amap.anchors) volatiles += a.volatile_features.size();
        out << "volatile_features " << volatiles << '\n';
        out << "layout " << amap.layout.width() << 'x' << amap.layout.height() << " occupied "
            << amap.layout.occupied_count() << '\n';
        out << "anchor class cells volatiles\n";
        for (const auto& a : amap.anchors) {
            out << a.id << ' ' << anchor_label(a) << ' ' << a.footprint.size() << ' ' << a.volatile_features.size()
                << '\n';
        }
        put(report, out.str());
    });
}

dm_status dm_query(const dm_config* c, const char* abstract_path, const char* scenario_path, const char* class_name,
                   const char* feature_path, size_t k, const uint64_t* excluded, size_t n_excluded, char** report) {
    return guard([&] {
        need(abstract_path, "map path");
        if (n_excluded > 0) need(excluded, "excluded");
        if (!class_name == !feature_path) throw UsageError("give exactly one of a class name or a feature file");
        if (class_name && !scenario_path) throw UsageError("a class-name query needs a scenario for its vocabulary");
        const auto& run = cfg(c);
        const auto amap = decode_abstract_map(read_file(abstract_path));
        Query q;
        if (class_name) {
            const SimWorld world(load_for_run(scenario_path, run));
            const auto names = world.vocabulary().names();
            if (std::find(names.begin(), names.end(), class_name) == names.end()) {
                throw UsageError(std::string("class '") + class_name + "' is not in the scenario vocabulary");
            }
            q = {world.vocabulary().base(class_name), class_name};
        } else {
            q = {read_feature_file(feature_path), feature_path};
        }
        if (!amap.anchors.empty() && amap.anchors.front().feature.dim() != q.feature.dim()) {
            throw UsageError("query dimension " + std::to_string(q.feature.dim()) + " does not match the map");
        }
        const std::set<AnchorId> ex(excluded, excluded + n_excluded);
        for (const auto id : ex) {
            if (!amap.find(id)) throw UsageError("excluded anchor " + std::to_string(id) + " is not in the map");
        }
        const auto ranked = rank_anchors(q, amap, ex);
        std::ostringstream out;
        out << config_line(run);
        out << "query " << q.text << '\n';
        out << ranking_text(ranked, amap, k);
        put(report, out.str());
    });
}

dm_status dm_navigate(const dm_config* c, const char* abstract_path, const char* scenario_path, size_t query_index,
                      const char* strategy, uint64_t first_tick, const char* log_out, char** report) {
    return guard([&] {
        need(abstract_path, "map path");
        need(scenario_path, "scenario path");
        const auto& run = cfg(c);
        const auto strat = strategy ? strategy_from_string(strategy) : Strategy::updated;
        const auto amap = decode_abstract_map(read_file(abstract_path));
        SimWorld world(load_for_run(scenario_path, run));
        const auto& sc = world.scenario();
        if (query_index >= sc.queries.size()) {
            throw UsageError("query index " + std::to_string(query_index) + " out of range (scenario has " +
                             std::to_string(sc.queries.size()) + ")");
        }
        world.apply_relocations();
        const auto& qs = sc.queries[query_index];
        const auto query = world.query_for(qs);
        auto ec = run.episode(strat);
        ec.seed = episode_seed(run, sc, query_index);
        const auto result = run_episode(query, amap, world.anchor_template(), world, {sc.start, sc.start_heading},
                                        first_tick, ec);
        EpisodeRecord rec;
        rec.scenario = sc.id;
        rec.query = query_index;
        rec.item = qs.item;
        rec.strategy = strat;
        rec.episode = result.episode;
        rec.target = world.centroid(qs.item);
        score_episode(rec, run.success_radius, run.attempt_limit);
        if (log_out) {
            write_file_atomic(log_out, episode_log_lines(rec.episode, {sc.id, query_index, qs.item, rec.target,
                                                                       run.to_json()}));
        }
        std::ostringstream out;
        out << config_line(run);
        out << "scenario " << sc.id << '\n';
        out << "query " << query_index << ' ' << qs.item << '\n';
        out << "strategy " << to_string(strat) << '\n';
        out << "attempt anchor class score outcome\n";
        for (std::size_t k = 0; k < rec.episode.attempts.size(); ++k) {
            const auto& a = rec.episode.attempts[k];
            const auto* an = amap.find(a.anchor);
            out << k + 1 << ' ' << a.anchor << ' ' << (an ? anchor_label(*an) : "?") << ' ' << fmt(a.score) << ' '
                << to_string(a.outcome);
            if (!a.failure.empty()) out << " (" << a.failure << ')';
            out << '\n';
        }
        out << "status " << to_string(rec.episode.status) << '\n';
        out << "final_distance " << fmt(rec.final_distance, 3) << '\n';
        out << "success " << (rec.success ? "true" : "false") << '\n';
        if (!rec.success) out << "failure " << rec.failure << '\n';
        put(report, out.str());
    });
}

dm_status dm_simulate(const dm_config* c, const char* const* scenario_paths, size_t n_scenarios,
                      const char* strategies, const char* report_out, const char* log_out, char** report) {
    return guard([&] {
        if (n_scenarios == 0) throw UsageError("no scenarios given");
        need(scenario_paths, "scenario paths");
        const auto& run = cfg(c);
        std::vector<Scenario> scenarios;
        for (size_t i = 0; i < n_scenarios; ++i) {
            need(scenario_paths[i], "scenario path");
            try {
                scenarios.push_back(load_scenario(scenario_paths[i]));
            } catch (const DataError& e) {
                throw DataError(std::string(scenario_paths[i]) + ": " + e.what());
            }
        }
        BenchmarkConfig bc;
        bc.run = run;
        if (strategies) bc.strategies = strategies_from_list(strategies);
        std::ostringstream log;
        EpisodeSink sink;
        if (log_out) {
            const auto cfg_json = run.to_json();
            sink = [&](const EpisodeRecord& r) {
                log << episode_log_lines(r.episode, {r.scenario, r.query, r.item, r.target, cfg_json});
            };
        }
        const auto result = run_benchmark(scenarios, bc, sink);
        if (report_out) write_file_atomic(report_out, result.to_json());
        if (log_out) write_file_atomic(log_out, log.str());
        put(report, config_line(run) + result.to_table());
    });
}

dm_status dm_eval(const dm_config* c, const char* pred_map, const char* gt_cloud, size_t gt_objects,
                  const char* log_path, const char* report_out, char** report) {
    return guard([&] {
        if (!pred_map && !log_path) throw UsageError("nothing to evaluate: give a map or an episode log");
        if (gt_cloud && !pred_map) throw UsageError("a ground-truth cloud needs a predicted map");
        if (gt_objects > 0 && !pred_map) throw UsageError("a ground-truth object count needs a predicted map");
        const auto& run = cfg(c);
        nlohmann::ordered_json j;
        j["format"] = "dualmap-metrics";
        j["version"] = 1;
        j["config"] = nlohmann::ordered_json::parse(run.to_json());
        std::ostringstream out;
        out << config_line(run);
        if (pred_map) {
            const auto map = decode_concrete_map(read_file(pred_map));
            j["objects"] = map.size();
            out << "objects " << map.size() << '\n';
            if (gt_cloud) {
                const auto gt = labeled_cloud_from_text(read_text(gt_cloud));
                const auto pred = labeled_cloud(map, gt.label_set);
                const auto seg = segmentation_metrics(pred, gt, run.match_radius);
                j["miou"] = seg.miou;
                j["fmiou"] = seg.fmiou;
                j["macc"] = seg.macc;
                j["unmatched"] = seg.unmatched;
                auto& per = j["classes"] = nlohmann::ordered_json::object();
                for (const auto& [cls, iou] : seg.iou) per[cls] = {{"iou", iou}, {"support", seg.support.at(cls)}};
                out << "miou " << fmt(seg.miou) << '\n';
                out << "fmiou " << fmt(seg.fmiou) << '\n';
                out << "macc " << fmt(seg.macc) << '\n';
                out << "unmatched " << seg.unmatched << '\n';
                out << "class iou support\n";
                for (const auto& [cls, iou] : seg.iou) out << cls << ' ' << fmt(iou) << ' ' << seg.support.at(cls) << '\n';
            }
            if (gt_objects > 0) {
                const double r = odr(map.size(), gt_objects);
                j["odr"] = r;
                out << "odr " << fmt(r) << '\n';
            }
        }
        if (log_path) {
            const auto episodes = parse_episode_log(read_text(log_path));
            std::vector<EpisodeSummary> summaries;
            std::map<std::string, Point3> gt;
            for (const auto& e : episodes) {
                if (!e.target) throw DataError("episode '" + e.scenario + "' query " + std::to_string(e.query) +
                                               " has no target position");
                const auto key = e.scenario + "/" + std::to_string(e.query);
                gt[key] = *e.target;
                summaries.push_back({key, e.status, e.final_position, e.attempts});
            }
            const double sr = success_rate(summaries, gt, run.success_radius, run.attempt_limit);
            j["episodes"] = episodes.size();
            j["sr"] = sr;
            out << "episodes " << episodes.size() << '\n';
            out << "sr " << fmt(sr) << '\n';
        }
        if (report_out) write_file_atomic(report_out, j.dump(2) + "\n");
        put(report, out.str());
    });
}

dm_status dm_generate(const char* suite, uint64_t first_seed, size_t count, size_t queries, const char* dir,
                      char** report) {
    return guard([&] {
        need(suite, "suite");
        need(dir, "directory");
        if (count == 0) throw UsageError("count must be positive");
        const auto kind = suite_from_string(suite);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw DataError(std::string("cannot create ") + dir + ": " + ec.message());
        std::ostringstream out;
        for (size_t i = 0; i < count; ++i) {
            GeneratorOptions g;
            g.suite = kind;
            g.seed = first_seed + i;
            g.queries = queries;
            const auto s = generate_apartment(g);
            const auto path = (std::filesystem::path(dir) / (s.id + ".json")).string();
            write_file_atomic(path, scenario_to_json(s) + "\n");
            out << path << ' ' << s.items.size() << " items " << s.relocations.size() << " relocations "
                << s.queries.size() << " queries\n";
        }
        put(report, out.str());
    });
}

}  // extern "C"
