#include "dualmap/dualmap.h"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

struct ConfigDeleter {
    void operator()(dm_config* c) const { dm_config_free(c); }
};
using ConfigPtr = std::unique_ptr<dm_config, ConfigDeleter>;

struct CommonOptions {
    std::string config_file;
    std::vector<std::string> sets;
};

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config_file, "JSON config file (flat object of keys)")->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "Override one key, as key=value (repeatable)");
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int fail(dm_status st) {
    std::cerr << "dualmap: " << dm_last_error() << '\n';
    return static_cast<int>(st);
}

// Takes ownership of a library string and prints it to stdout.
void emit(char* text) {
    if (!text) return;
    std::fputs(text, stdout);
    dm_free(text);
}

dm_status make_config(const CommonOptions& o, ConfigPtr& out) {
    dm_config* raw = nullptr;
    if (const auto st = dm_config_new(&raw); st != DM_OK) return st;
    out.reset(raw);
    if (!o.config_file.empty()) {
        if (const auto st = dm_config_load_file(raw, o.config_file.c_str()); st != DM_OK) return st;
    }
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "dualmap: --set expects key=value, got '" << kv << "'\n";
            return DM_ERR_USAGE;
        }
        const auto key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (const auto st = dm_config_set(raw, key.c_str(), value.c_str()); st != DM_OK) return st;
    }
    return DM_OK;
}

std::vector<uint64_t> parse_ids(const std::vector<std::string>& items) {
    std::vector<uint64_t> out;
    for (const auto& s : items) {
        std::size_t pos = 0;
        const auto v = std::stoull(s, &pos);
        if (pos != s.size()) throw CLI::ValidationError("--exclude", "'" + s + "' is not an anchor id");
        out.push_back(v);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online dual-map semantic mapping and object navigation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(dm_version()));

    CommonOptions common;
    std::function<dm_status(dm_config*)> action;

    auto* keys = app.add_subcommand("keys", "List config keys with their default values");
    keys->callback([&] {
        action = [](dm_config* c) {
            char* list = nullptr;
            if (const auto st = dm_config_keys(&list); st != DM_OK) return st;
            std::string all(list);
            dm_free(list);
            std::size_t start = 0;
            while (start < all.size()) {
                const auto end = all.find('\n', start);
                const auto key = all.substr(start, end - start);
                char* value = nullptr;
                if (const auto st = dm_config_get(c, key.c_str(), &value); st != DM_OK) return st;
                std::cout << key << " = " << value << '\n';
                dm_free(value);
                start = end + 1;
            }
            return DM_OK;
        };
    });
    add_common(keys, common);

    std::string scenario, stream, map, scene, out, gt, pgm, tmpl, feature, cls, log, report, strategy, suite, dir;
    std::vector<std::string> scenarios, exclude;
    std::size_t k = 5, query = 0, gt_objects = 0, count = 1, queries = 5;
    uint64_t first_tick = 0, seed = 1;
    std::optional<std::string> strategies;

    auto* record = app.add_subcommand("record", "Record a scenario's exploration tour as an observation stream");
    record->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    record->add_option("--out", stream, "Output .dmos stream")->required();
    record->add_option("--gt-out", gt, "Output labeled ground-truth cloud");
    add_common(record, common);
    record->callback([&] {
        action = [&](dm_config* c) {
            char* text = nullptr;
            const auto st = dm_record(c, scenario.c_str(), stream.c_str(), opt(gt), &text);
            emit(text);
            return st;
        };
    });

    auto* build = app.add_subcommand("build", "Build a concrete map from an observation stream");
    build->add_option("--stream", stream, "Input .dmos stream")->required();
    build->add_option("--out", map, "Output .dmcm concrete map")->required();
    build->add_option("--scene-out", scene, "Output .dmsc scene cloud");
    add_common(build, common);
    build->callback([&] {
        action = [&](dm_config* c) {
            char* text = nullptr;
            double tpf = 0.0;
            const auto st = dm_build(c, stream.c_str(), map.c_str(), opt(scene), &text, &tpf);
            emit(text);
            if (st == DM_OK) std::cerr << "tpf_seconds " << tpf << '\n';
            return st;
        };
    });

    auto* abs = app.add_subcommand("abstract", "Abstract a concrete map into anchors and a layout");
    abs->add_option("--map", map, "Input .dmcm concrete map")->required();
    abs->add_option("--scene", scene, "Input .dmsc scene cloud")->required();
    auto* abs_sc = abs->add_option("--scenario", scenario, "Scenario whose vocabulary gives the anchor template");
    auto* abs_t = abs->add_option("--template", tmpl, "Feature file holding the anchor template");
    abs_sc->excludes(abs_t);
    abs->add_option("--out", out, "Output .dmam abstract map")->required();
    abs->add_option("--pgm", pgm, "Output layout graymap");
    add_common(abs, common);
    abs->callback([&] {
        action = [&](dm_config* c) {
            char* text = nullptr;
            const auto st = dm_abstract(c, map.c_str(), scene.c_str(), opt(scenario), opt(tmpl), out.c_str(), opt(pgm),
                                        &text);
            emit(text);
            return st;
        };
    });

    auto* q = app.add_subcommand("query", "Rank anchors of an abstract map for a query");
    q->add_option("--map", map, "Input .dmam abstract map")->required();
    q->add_option("--scenario", scenario, "Scenario whose vocabulary encodes --class");
    auto* q_cls = q->add_option("--class", cls, "Query class name");
    auto* q_feat = q->add_option("--feature", feature, "Feature file holding the query");
    q_cls->excludes(q_feat);
    q->add_option("-k,--top", k, "Number of anchors to list");
    q->add_option("--exclude", exclude, "Anchor ids to leave out")->delimiter(',');
    add_common(q, common);
    q->callback([&] {
        action = [&](dm_config* c) {
            const auto ids = parse_ids(exclude);
            char* text = nullptr;
            const auto st = dm_query(c, map.c_str(), opt(scenario), opt(cls), opt(feature), k, ids.data(), ids.size(),
                                     &text);
            emit(text);
            return st;
        };
    });

    auto* nav = app.add_subcommand("navigate", "Run one navigation episode in a scenario's world");
    nav->add_option("--map", map, "Input .dmam abstract map")->required();
    nav->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    nav->add_option("--query", query, "Query index within the scenario");
    nav->add_option("--strategy", strategy, "random, stale or updated")->default_str("updated");
    nav->add_option("--first-tick", first_tick, "Timestamp of the first episode frame");
    nav->add_option("--log", log, "Output episode log (JSON lines)");
    add_common(nav, common);
    nav->callback([&] {
        action = [&](dm_config* c) {
            char* text = nullptr;
            const auto st = dm_navigate(c, map.c_str(), scenario.c_str(), query, opt(strategy), first_tick, opt(log),
                                        &text);
            emit(text);
            return st;
        };
    });

    auto* sim = app.add_subcommand("simulate", "Run the relocation benchmark over scenario files");
    sim->add_option("--scenario", scenarios, "Scenario files")->required()->check(CLI::ExistingFile);
    sim->add_option("--strategies", strategies, "Comma-separated strategies (default: random,stale,updated)");
    sim->add_option("--out", report, "Output benchmark report (JSON)");
    sim->add_option("--log", log, "Output episode logs (JSON lines)");
    add_common(sim, common);
    sim->callback([&] {
        action = [&](dm_config* c) {
            std::vector<const char*> paths;
            for (const auto& s : scenarios) paths.push_back(s.c_str());
            char* text = nullptr;
            const auto st = dm_simulate(c, paths.data(), paths.size(), strategies ? strategies->c_str() : nullptr,
                                        opt(report), opt(log), &text);
            emit(text);
            return st;
        };
    });

    auto* ev = app.add_subcommand("eval", "Segmentation, density and navigation metrics");
    ev->add_option("--pred", map, "Predicted .dmcm concrete map");
    ev->add_option("--gt", gt, "Labeled ground-truth cloud");
    ev->add_option("--gt-objects", gt_objects, "Ground-truth object count for the density ratio");
    ev->add_option("--logs", log, "Episode log (JSON lines)");
    ev->add_option("--out", report, "Output metric report (JSON)");
    add_common(ev, common);
    ev->callback([&] {
        action = [&](dm_config* c) {
            char* text = nullptr;
            const auto st = dm_eval(c, opt(map), opt(gt), gt_objects, opt(log), opt(report), &text);
            emit(text);
            return st;
        };
    });

    auto* gen = app.add_subcommand("generate", "Write generated apartment scenarios");
    gen->add_option("--suite", suite, "static, in_anchor or cross_anchor")->required();
    gen->add_option("--seed", seed, "Seed of the first scenario");
    gen->add_option("--count", count, "Number of scenarios");
    gen->add_option("--queries", queries, "Queries per scenario");
    gen->add_option("--dir", dir, "Output directory")->required();
    gen->callback([&] {
        action = [&](dm_config*) {
            char* text = nullptr;
            const auto st = dm_generate(suite.c_str(), seed, count, queries, dir.c_str(), &text);
            emit(text);
            return st;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(DM_ERR_USAGE);
    }

    ConfigPtr config;
    if (const auto st = make_config(common, config); st != DM_OK) return fail(st);
    try {
        if (const auto st = action(config.get()); st != DM_OK) return fail(st);
    } catch (const CLI::ParseError& e) {
        std::cerr << "dualmap: " << e.what() << '\n';
        return static_cast<int>(DM_ERR_USAGE);
    } catch (const std::exception& e) {
        std::cerr << "dualmap: " << e.what() << '\n';
        return static_cast<int>(DM_ERR_USAGE);
    }
    return 0;
}
