#include "dualmap/benchmark.hpp"

#include "dualmap/error.hpp"
#include "dualmap/metrics.hpp"
#include "dualmap/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace dualmap {

namespace {

void add(StrategyStats& s, const EpisodeRecord& r, std::size_t attempt_limit) {
    ++s.episodes;
    if (s.attempts.size() < attempt_limit + 1) s.attempts.resize(attempt_limit + 1, 0);
    const auto used = std::min(r.episode.attempts.size(), attempt_limit);
    ++s.attempts[used];
    if (r.success) {
        ++s.successes;
    } else {
        ++s.failures[r.failure];
    }
    s.sr = static_cast<double>(s.successes) / static_cast<double>(s.episodes);
}

nlohmann::ordered_json stats_json(const StrategyStats& s) {
    nlohmann::ordered_json j;
    j["episodes"] = s.episodes;
    j["successes"] = s.successes;
    j["sr"] = s.sr;
    j["attempts"] = s.attempts;
    j["failures"] = s.failures;
    return j;
}

nlohmann::ordered_json point_json(const Point2& p) { return {p.x(), p.y()}; }

}  // namespace

Scenario apply_overrides(Scenario s, const RunConfig& run) {
    s.vocabulary.dim = run.dim;
    if (run.spurious_prob) s.sensor.spurious_prob = *run.spurious_prob;
    if (run.null_class_prob) s.sensor.null_class_prob = *run.null_class_prob;
    if (run.drop_prob) s.sensor.drop_prob = *run.drop_prob;
    return s;
}

void score_episode(EpisodeRecord& r, double success_radius, std::size_t attempt_limit) {
    const auto& e = r.episode;
    r.final_distance = (e.final_pose.position - r.target.head<2>()).norm();
    r.success = e.status == NavigationEpisode::Status::success && e.attempts.size() <= attempt_limit &&
                r.final_distance <= success_radius;
    if (r.success) {
        r.failure.clear();
    } else if (e.status == NavigationEpisode::Status::success) {
        r.failure = "false_match";
    } else if (e.status == NavigationEpisode::Status::planning_failure) {
        r.failure = "planning";
    } else {
        r.failure = "attempt_limit";
    }
}

BenchmarkReport run_benchmark(const std::vector<Scenario>& scenarios, const BenchmarkConfig& config,
                              const EpisodeSink& sink) {
    config.run.validate();
    if (config.strategies.empty()) throw UsageError("benchmark needs at least one strategy");
    std::vector<Scenario> prepared;
    prepared.reserve(scenarios.size());
    for (const auto& s : scenarios) {
        auto p = apply_overrides(s, config.run);
        try {
            validate(p);
        } catch (const DataError& e) {
            throw DataError("scenario '" + s.id + "': " + e.what());
        }
        prepared.push_back(std::move(p));
    }
    std::sort(prepared.begin(), prepared.end(), [](const Scenario& a, const Scenario& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < prepared.size(); ++i) {
        if (prepared[i].id == prepared[i - 1].id) throw DataError("duplicate scenario id '" + prepared[i].id + "'");
    }

    const auto& run = config.run;
    BenchmarkReport report;
    report.config_json = run.to_json();
    for (const auto& sc : prepared) {
        SimWorld world(sc);
        const auto mapping = map_tour(world, run.association, true, {}, run.step, run.keyframe);
        const auto tmpl = world.anchor_template();
        const auto amap = abstract(mapping.map, tmpl, mapping.scene.cloud, run.abstraction);

        ScenarioSummary sum;
        sum.id = sc.id;
        sum.frames = mapping.frames;
        sum.objects = mapping.map.size();
        sum.observed = mapping.observed.size();
        sum.ground_truth = world.object_count();
        sum.odr = sum.observed ? odr(sum.objects, sum.observed) : 0.0;
        sum.anchors = amap.anchors.size();
        sum.layout_cells = amap.layout.occupied_count();
        report.scenarios.push_back(sum);

        world.apply_relocations();
        const AgentPose start{sc.start, sc.start_heading};
        for (std::size_t qi = 0; qi < sc.queries.size(); ++qi) {
            const auto& qs = sc.queries[qi];
            const auto query = world.query_for(qs);
            const auto target = world.centroid(qs.item);
            const auto kind = query_kind(sc, qs);
            for (const auto strategy : config.strategies) {
                auto ec = run.episode(strategy);
                ec.seed = hash_combine(hash_combine(run.seed, sc.seed), qi);
                auto result = run_episode(query, amap, tmpl, world, start, mapping.next_tick, ec);
                EpisodeRecord rec;
                rec.scenario = sc.id;
                rec.query = qi;
                rec.item = qs.item;
                rec.kind = kind;
                rec.strategy = strategy;
                rec.episode = std::move(result.episode);
                rec.target = target;
                score_episode(rec, run.success_radius, run.attempt_limit);

                const std::string kind_key = kind ? to_string(*kind) : "static";
                add(report.by_strategy[to_string(strategy)], rec, run.attempt_limit);
                add(report.by_kind[kind_key][to_string(strategy)], rec, run.attempt_limit);
                if (sink) sink(rec);
                rec.episode.frames.clear();
                report.episodes.push_back(std::move(rec));
            }
        }
    }
    return report;
}

double BenchmarkReport::sr(Strategy s) const {
    const auto it = by_strategy.find(to_string(s));
    return it == by_strategy.end() ? 0.0 : it->second.sr;
}

std::string BenchmarkReport::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "dualmap-benchmark";
    j["version"] = 1;
    j["config"] = nlohmann::ordered_json::parse(config_json);
    auto& sj = j["scenarios"] = nlohmann::ordered_json::array();
    for (const auto& s : scenarios) {
        sj.push_back({{"id", s.id},
                      {"frames", s.frames},
                      {"objects", s.objects},
                      {"observed", s.observed},
                      {"ground_truth", s.ground_truth},
                      {"odr", s.odr},
                      {"anchors", s.anchors},
                      {"layout_cells", s.layout_cells}});
    }
    auto& bs = j["by_strategy"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : by_strategy) bs[k] = stats_json(v);
    auto& bk = j["by_kind"] = nlohmann::ordered_json::object();
    for (const auto& [kind, m] : by_kind) {
        auto& o = bk[kind] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : m) o[k] = stats_json(v);
    }
    auto& ej = j["episodes"] = nlohmann::ordered_json::array();
    for (const auto& r : episodes) {
        nlohmann::ordered_json e;
        e["scenario"] = r.scenario;
        e["query"] = r.query;
        e["item"] = r.item;
        e["kind"] = r.kind ? to_string(*r.kind) : "static";
        e["strategy"] = to_string(r.strategy);
        e["status"] = to_string(r.episode.status);
        e["success"] = r.success;
        e["failure"] = r.failure;
        e["attempts"] = r.episode.attempts.size();
        e["anchors"] = nlohmann::ordered_json::array();
        for (const auto& a : r.episode.attempts) e["anchors"].push_back(a.anchor);
        e["final_position"] = point_json(r.episode.final_pose.position);
        e["target"] = {r.target.x(), r.target.y(), r.target.z()};
        e["final_distance"] = r.final_distance;
        ej.push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

std::string BenchmarkReport::to_table() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(3);
    out << "scenario                 frames objects observed    odr anchors\n";
    for (const auto& s : scenarios) {
        out << std::left << std::setw(24) << s.id << std::right << ' ' << std::setw(6) << s.frames << ' '
            << std::setw(7) << s.objects << ' ' << std::setw(8) << s.observed << ' ' << std::setw(6) << s.odr << ' '
            << std::setw(7) << s.anchors << '\n';
    }
    auto row = [&](const std::string& label, const std::string& strategy, const StrategyStats& st) {
        out << std::left << std::setw(14) << label << std::setw(9) << strategy << std::right << std::setw(6)
            << st.sr << std::setw(5) << st.successes << '/' << std::left << std::setw(5) << st.episodes
            << std::right << " attempts";
        for (std::size_t k = 1; k < st.attempts.size(); ++k) out << ' ' << k << ':' << st.attempts[k];
        out << "  failures";
        for (const char* f : {"false_match", "attempt_limit", "planning"}) {
            const auto it = st.failures.find(f);
            out << ' ' << f << ':' << (it == st.failures.end() ? 0 : it->second);
        }
        out << '\n';
    };
    out << "\nkind          strategy     SR  succ/total\n";
    for (const auto& [strategy, st] : by_strategy) row("all", strategy, st);
    for (const auto& [kind, m] : by_kind) {
        for (const auto& [strategy, st] : m) row(kind, strategy, st);
    }
    return out.str();
}

}  // namespace dualmap
