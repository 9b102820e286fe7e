#include "dualmap/abstract_map.hpp"
#include "dualmap/benchmark.hpp"
#include "dualmap/concrete_map.hpp"
#include "dualmap/error.hpp"
#include "dualmap/features.hpp"
#include "dualmap/map_io.hpp"
#include "dualmap/metrics.hpp"
#include "dualmap/query_nav.hpp"
#include "dualmap/scenario.hpp"
#include "dualmap/sim.hpp"
#include "dualmap/stream_io.hpp"

#include "test_util.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace dualmap;

namespace {

// Pinned thresholds.
constexpr double kOrderingGap = 0.25;
constexpr double kOrderingSeconds = 300.0;
constexpr double kStaticNoisySr = 0.85;
constexpr double kStaticSeconds = 120.0;
constexpr double kInAnchorBand = 0.05;
constexpr double kOdrLow = 0.9, kOdrHigh = 1.15, kOdrUnstable = 1.5;
constexpr double kNoise = 0.2;
constexpr std::size_t kOracleInstances = 1000;
constexpr double kNumericTol = 1e-9;
constexpr double kMinFramesPerSecond = 50.0;
constexpr std::size_t kMaxObjects = 50;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 3) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v;
    return s.str();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<Scenario> load_suite(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Scenario> out;
    for (const auto& f : files) out.push_back(load_scenario(f.string()));
    if (out.empty()) throw DataError("no scenarios in " + dir.string());
    return out;
}

std::size_t query_count(const std::vector<Scenario>& suite) {
    std::size_t n = 0;
    for (const auto& s : suite) n += s.queries.size();
    return n;
}

BenchmarkReport bench(const std::vector<Scenario>& suite, std::vector<Strategy> strategies,
                      std::optional<double> spurious = std::nullopt) {
    BenchmarkConfig c;
    c.strategies = std::move(strategies);
    c.run.spurious_prob = spurious;
    return run_benchmark(suite, c);
}

Outcome strategy_ordering(const std::vector<Scenario>& cross) {
    const auto t0 = Clock::now();
    const auto r = bench(cross, {Strategy::random_pick, Strategy::stale, Strategy::updated});
    const double secs = seconds_since(t0);
    const double rp = r.sr(Strategy::random_pick), st = r.sr(Strategy::stale), up = r.sr(Strategy::updated);
    const bool size_ok = cross.size() >= 10 && std::all_of(cross.begin(), cross.end(), [](const Scenario& s) {
        return s.queries.size() >= 5;
    });
    Outcome o;
    o.pass = size_ok && up > st && st > rp && up - rp >= kOrderingGap && secs < kOrderingSeconds;
    o.detail = std::to_string(cross.size()) + " scenarios x " + std::to_string(query_count(cross)) +
               " queries: updated " + fmt(up) + " > stale " + fmt(st) + " > random " + fmt(rp) + ", gap " +
               fmt(up - rp) + " (>= " + fmt(kOrderingGap, 2) + "), " + fmt(secs, 1) + " s (< " +
               fmt(kOrderingSeconds, 0) + " s)";
    return o;
}

struct StaticRuns {
    double clean = 0.0;
    double noisy = 0.0;
    double secs = 0.0;
};

StaticRuns updated_sr(const std::vector<Scenario>& suite) {
    const auto t0 = Clock::now();
    StaticRuns r;
    r.clean = bench(suite, {Strategy::updated}).sr(Strategy::updated);
    r.noisy = bench(suite, {Strategy::updated}, kNoise).sr(Strategy::updated);
    r.secs = seconds_since(t0);
    return r;
}

Outcome static_sanity(const StaticRuns& r, std::size_t queries) {
    Outcome o;
    o.pass = r.clean == 1.0 && r.noisy >= kStaticNoisySr && r.secs < kStaticSeconds;
    o.detail = std::to_string(queries) + " queries: SR " + fmt(r.clean) + " noise-free (= 1), " + fmt(r.noisy) +
               " with " + fmt(kNoise * 100, 0) + "% spurious segments (>= " + fmt(kStaticNoisySr, 2) + "), " +
               fmt(r.secs, 1) + " s (< " + fmt(kStaticSeconds, 0) + " s)";
    return o;
}

Outcome in_anchor_robustness(const StaticRuns& st, const StaticRuns& in) {
    const double d_clean = std::abs(in.clean - st.clean), d_noisy = std::abs(in.noisy - st.noisy);
    Outcome o;
    o.pass = d_clean <= kInAnchorBand + 1e-12 && d_noisy <= kInAnchorBand + 1e-12;
    o.detail = "in-anchor SR " + fmt(in.clean) + " vs static " + fmt(st.clean) + " noise-free, " + fmt(in.noisy) +
               " vs " + fmt(st.noisy) + " noisy (|diff| <= " + fmt(kInAnchorBand, 2) + ")";
    return o;
}

double tour_odr(const Scenario& s, bool stability, std::optional<double> spurious) {
    auto sc = s;
    if (spurious) sc.sensor.spurious_prob = *spurious;
    const SimWorld w(sc);
    AssociationConfig c;
    c.stability_enabled = stability;
    const auto m = map_tour(w, c);
    return odr(m.map.size(), m.observed.size());
}

Outcome odr_fidelity(const std::vector<Scenario>& statics) {
    double clean_lo = 1e9, clean_hi = -1e9, on_lo = 1e9, on_hi = -1e9, off_lo = 1e9;
    for (const auto& s : statics) {
        const double clean = tour_odr(s, true, std::nullopt);
        const double on = tour_odr(s, true, kNoise);
        const double off = tour_odr(s, false, kNoise);
        clean_lo = std::min(clean_lo, clean);
        clean_hi = std::max(clean_hi, clean);
        on_lo = std::min(on_lo, on);
        on_hi = std::max(on_hi, on);
        off_lo = std::min(off_lo, off);
    }
    Outcome o;
    o.pass = clean_lo == 1.0 && clean_hi == 1.0 && on_lo >= kOdrLow && on_hi <= kOdrHigh && off_lo > kOdrUnstable;
    o.detail = std::to_string(statics.size()) + " static tours: noise-free ODR in [" + fmt(clean_lo) + ", " +
               fmt(clean_hi) + "] (= 1), " + fmt(kNoise * 100, 0) + "% noise with stability [" + fmt(on_lo) + ", " +
               fmt(on_hi) + "] (within [" + fmt(kOdrLow, 2) + ", " + fmt(kOdrHigh, 2) +
               "]), without stability min " + fmt(off_lo) + " (> " + fmt(kOdrUnstable, 1) + ")";
    return o;
}

Outcome split_detection() {
    const SimWorld w(split_fixture());
    LabeledCloud gt;
    gt.label_set = w.vocabulary().names();
    for (const auto& p : w.ground_truth_points()) {
        gt.points.push_back(p.position);
        gt.labels.push_back(static_cast<std::uint32_t>(w.vocabulary().index_of(p.cls)));
    }
    AssociationConfig with, without;
    with.stability_enabled = without.stability_enabled = false;
    without.split_enabled = false;
    const auto a = map_tour(w, with).map, b = map_tour(w, without).map;
    std::vector<std::string> classes;
    for (const auto& o : a.objects()) classes.push_back(o.class_id.value_or("null"));
    std::sort(classes.begin(), classes.end());
    const double miou_with = segmentation_metrics(labeled_cloud(a, gt.label_set), gt).miou;
    const double miou_without = segmentation_metrics(labeled_cloud(b, gt.label_set), gt).miou;
    Outcome o;
    o.pass = a.size() == 2 && classes == std::vector<std::string>{"chair", "cushion"} && b.size() == 1 &&
             miou_without < miou_with;
    std::string cls;
    for (const auto& c : classes) cls += (cls.empty() ? "" : ", ") + c;
    o.detail = std::to_string(a.size()) + " objects (" + cls + ") with split, " + std::to_string(b.size()) +
               " without; mIoU " + fmt(miou_with) + " with, " + fmt(miou_without) + " without";
    return o;
}

// Brute-force references, written independently of the library code paths.
double similarity_oracle(const Observation& z, const MapObject& o, double r) {
    return test::cosine_oracle(z.feature, o.feature) + test::overlap_oracle(z.cloud, o.cloud, r);
}

double anchor_score_oracle(const Query& q, const Anchor& a) {
    double best = test::cosine_oracle(q.feature, a.feature);
    for (const auto& v : a.volatile_features) best = std::max(best, test::cosine_oracle(q.feature, v));
    return best;
}

Outcome oracle_equivalence() {
    Rng rng(20261014);
    std::array<std::size_t, 4> agree{}, total{};
    for (std::size_t i = 0; i < kOracleInstances; ++i) {
        const double r = rng.uniform(0.02, 0.2);
        const auto a = test::random_cloud(rng, 1 + rng.below(30), Point3::Zero(), Point3::Constant(0.5));
        const auto b = test::random_cloud(rng, 1 + rng.below(30), Point3::Zero(), Point3::Constant(0.5));
        ++total[0];
        if (overlap_ratio(a, b, r).ratio == test::overlap_oracle(a, b, r)) ++agree[0];

        const std::size_t dim = 2 + rng.below(10);
        const auto z = test::obs(a, test::random_feature(rng, dim), "x", 1);
        const auto o = make_object(0, {test::entry(test::obs(b, test::random_feature(rng, dim), "x", 1))}, r);
        ++total[1];
        if (similarity(z, o, r) == similarity_oracle(z, o, r)) ++agree[1];

        AbstractMap m;
        const auto n = 1 + rng.below(6);
        for (std::uint64_t k = 0; k < n; ++k) {
            Anchor an;
            an.id = k;
            an.feature = test::random_feature(rng, dim);
            const auto nv = rng.below(4);
            for (std::uint64_t v = 0; v < nv; ++v) an.volatile_features.push_back(test::random_feature(rng, dim));
            m.anchors.push_back(std::move(an));
        }
        // Duplicate an anchor now and then so that tie-breaking is exercised.
        if (n > 1 && rng.bernoulli(0.2)) {
            m.anchors.back().feature = m.anchors.front().feature;
            m.anchors.back().volatile_features = m.anchors.front().volatile_features;
        }
        const Query q{test::random_feature(rng, dim), ""};
        std::set<AnchorId> excluded;
        for (const auto& an : m.anchors) {
            if (rng.bernoulli(0.25)) excluded.insert(an.id);
        }
        const auto& an0 = m.anchors[rng.below(m.anchors.size())];
        ++total[2];
        if (anchor_score(q, an0) == anchor_score_oracle(q, an0)) ++agree[2];

        std::optional<Candidate> best;
        for (const auto& an : m.anchors) {
            if (excluded.count(an.id)) continue;
            const double s = anchor_score_oracle(q, an);
            if (!best || s > best->score) best = Candidate{an.id, s};
        }
        const auto got = retrieve_candidate(q, m, excluded);
        ++total[3];
        if (got.has_value() == best.has_value() &&
            (!got || (got->anchor == best->anchor && got->score == best->score))) {
            ++agree[3];
        }
    }
    const char* names[] = {"overlap_ratio", "similarity", "anchor_score", "retrieve_candidate"};
    Outcome out;
    out.pass = true;
    for (std::size_t k = 0; k < 4; ++k) {
        out.pass = out.pass && agree[k] == total[k] && total[k] >= kOracleInstances;
        out.detail += (k ? ", " : "") + std::string(names[k]) + " " + std::to_string(agree[k]) + "/" +
                      std::to_string(total[k]);
    }
    out.detail += " exact";
    return out;
}

Outcome numerical_contracts(const std::vector<Scenario>& statics) {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    };
    // Weighted combination against hand arithmetic.
    {
        const auto e0 = FeatureVec::basis(2, 0), e1 = FeatureVec::basis(2, 1);
        const auto f = combine(e0, e1);
        const double n = std::sqrt(0.7 * 0.7 + 0.3 * 0.3);
        check(std::abs(f.values()[0] - 0.7 / n) <= kNumericTol && std::abs(f.values()[1] - 0.3 / n) <= kNumericTol,
              "combine");
        const FeatureVec d(Eigen::Vector2d(std::sqrt(0.5), std::sqrt(0.5)));
        const auto g = combine(e0, d, 0.5, 0.5);
        const double gx = 0.5 + 0.5 * std::sqrt(0.5), gy = 0.5 * std::sqrt(0.5), gn = std::hypot(gx, gy);
        check(std::abs(g.values()[0] - gx / gn) <= kNumericTol && std::abs(g.values()[1] - gy / gn) <= kNumericTol,
              "combine (non-orthogonal)");
    }
    // Size-weighted merge against hand arithmetic.
    {
        const auto f = size_weighted_feature(FeatureVec::basis(2, 0), 100, FeatureVec::basis(2, 1), 300);
        const double n = std::hypot(0.25, 0.75);
        check(std::abs(f.values()[0] - 0.25 / n) <= kNumericTol && std::abs(f.values()[1] - 0.75 / n) <= kNumericTol,
              "size_weighted_feature");
    }
    // Every feature produced by a mapping run and its abstraction is unit-norm.
    std::size_t features = 0;
    double worst = 0.0;
    for (const auto& s : statics) {
        const SimWorld w(s);
        const auto m = map_tour(w, {});
        const auto a = abstract(m.map, w.anchor_template(), m.scene.cloud);
        auto note = [&](const FeatureVec& f) {
            ++features;
            worst = std::max(worst, std::abs(f.values().norm() - 1.0));
        };
        for (const auto& o : m.map.objects()) {
            note(o.feature);
            for (const auto& h : o.history) note(h.observation->feature);
        }
        for (const auto& an : a.anchors) {
            note(an.feature);
            for (const auto& v : an.volatile_features) note(v);
        }
    }
    check(worst <= kNumericTol, "unit norm");
    // Two-thirds rule at its exact boundary: 4 of 6 kept, 3 of 5 dropped.
    {
        auto run = [](std::size_t majority, std::size_t total) {
            AssociationConfig c;
            c.min_observations = 1;
            c.split_enabled = false;
            std::vector<HistoryEntry> h;
            const auto cloud = test::box(Point3::Zero(), Point3::Constant(0.1), 0.05);
            for (std::size_t t = 0; t < total; ++t) {
                h.push_back(test::entry(
                    test::obs(cloud, FeatureVec::basis(2, 0), t < majority ? "a" : "b", static_cast<Timestamp>(t))));
            }
            auto m = ConcreteMap::from_parts(c, {make_object(0, std::move(h), 0.05)}, 1,
                                             static_cast<Timestamp>(total - 1));
            m.finalize();
            return m.size() == 1;
        };
        check(run(4, 6) && !run(3, 5) && run(6, 9) && !run(5, 8), "two-thirds rule");
    }
    // Association threshold: a score equal to tau does not merge, the next double above does.
    {
        const auto cloud = test::box(Point3::Zero(), Point3::Constant(0.1), 0.05);
        const auto z = test::obs(cloud, FeatureVec::basis(2, 0), "a", 1);
        AssociationConfig c;
        c.stability_enabled = false;
        c.split_enabled = false;
        auto objects_after = [&](double tau) {
            c.match_threshold = tau;
            auto m = ConcreteMap::initialize(test::frame(1, {z}), c);
            m.process_frame(test::frame(2, {z}));
            return m.size();
        };
        const double s = similarity(z, make_object(0, {test::entry(z)}, c.voxel), c.voxel);
        check(objects_after(s) == 2 && objects_after(std::nextafter(s, -10.0)) == 1, "tau boundary");
    }
    Outcome o;
    o.pass = failed.empty();
    o.detail = "combine and size-weighted merge within 1e-9, " + std::to_string(features) +
               " features max |norm - 1| " + [&] {
                   std::ostringstream s;
                   s << std::scientific << std::setprecision(1) << worst;
                   return s.str();
               }() + ", two-thirds and tau boundaries exact";
    for (const auto& f : failed) o.detail += "; FAILED " + f;
    return o;
}

std::string slurp(const fs::path& p) {
    const auto bytes = read_file(p.string());
    return std::string(bytes.begin(), bytes.end());
}

// Runs a command and returns its standard output; standard error is discarded.
std::string capture(const std::string& cmd, int& status) {
    std::string out;
    FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
    if (!pipe) throw DataError("cannot run " + cmd);
    std::array<char, 4096> buf;
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    status = pclose(pipe);
    return out;
}

std::map<std::string, std::string> cli_session(const std::string& cli, const fs::path& dir, const fs::path& scenario,
                                               bool& all_ok) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = dir.string() + "/";
    const std::string sc = scenario.string();
    const std::vector<std::pair<std::string, std::string>> steps = {
        {"keys", "keys"},
        {"generate", "generate --suite cross_anchor --seed 7 --count 1 --queries 2 --dir " + d + "gen"},
        {"record", "record --scenario " + sc + " --out " + d + "s.dmos --gt-out " + d + "gt.txt --set features.dim=128"},
        {"build", "build --stream " + d + "s.dmos --out " + d + "m.dmcm --scene-out " + d + "s.dmsc"},
        {"abstract", "abstract --map " + d + "m.dmcm --scene " + d + "s.dmsc --scenario " + sc +
                         " --set features.dim=128 --out " + d + "m.dmam --pgm " + d + "m.pgm"},
        {"query", "query --map " + d + "m.dmam --scenario " + sc + " --set features.dim=128 --class " +
                      load_scenario(sc).queries.at(0).item + " -k 5"},
        {"navigate", "navigate --map " + d + "m.dmam --scenario " + sc +
                         " --set features.dim=128 --query 0 --strategy updated --log " + d + "ep.jsonl"},
        {"simulate", "simulate --scenario " + sc + " --set features.dim=128 --out " + d + "bench.json --log " + d +
                         "bench.jsonl"},
        {"eval", "eval --pred " + d + "m.dmcm --gt " + d + "gt.txt --gt-objects 38 --logs " + d + "ep.jsonl --out " +
                     d + "eval.json"},
    };
    std::map<std::string, std::string> out;
    for (const auto& [name, args] : steps) {
        int status = 0;
        out["stdout:" + name] = capture(cli + " " + args, status);
        if (status != 0) all_ok = false;
    }
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out["file:" + fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
    return out;
}

// Frames with single-precision features, so the stream's float encoding is exact.
std::vector<FrameRecord> random_frames(Rng& rng, const std::vector<std::string>& vocab, std::size_t dim) {
    std::vector<FrameRecord> frames;
    const auto n = rng.below(6);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::vector<Observation> obs;
        const auto k = rng.below(4);
        for (std::uint64_t j = 0; j < k; ++j) {
            Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
            for (auto& x : v) x = static_cast<double>(static_cast<float>(rng.uniform(-1, 1)));
            std::optional<std::string> cls;
            if (rng.bernoulli(0.8)) cls = vocab[rng.below(vocab.size())];
            obs.push_back(test::obs(test::random_cloud(rng, 10 + rng.below(20), Point3::Zero(), Point3::Ones()),
                                    FeatureVec(v), cls, 0));
        }
        auto f = test::frame(3 * i + rng.below(3), std::move(obs));
        f.pose = Pose::planar(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3, 3));
        if (rng.bernoulli(0.5)) f.full_cloud = test::random_cloud(rng, rng.below(30), Point3::Zero(), Point3::Ones());
        frames.push_back(std::move(f));
    }
    return frames;
}

Outcome determinism(const std::string& cli, const fs::path& scenario, const std::vector<Scenario>& statics) {
    std::vector<std::string> failed;
    // CLI: two sessions in the same directory.
    std::size_t compared = 0;
    if (cli.empty()) {
        failed.push_back("no CLI given");
    } else {
        const auto dir = fs::temp_directory_path() / "dualmap_acceptance_cli";
        bool ok1 = true, ok2 = true;
        const auto a = cli_session(cli, dir, scenario, ok1);
        const auto b = cli_session(cli, dir, scenario, ok2);
        fs::remove_all(dir);
        compared = a.size();
        if (!ok1 || !ok2) failed.push_back("a CLI command failed");
        if (a != b) {
            for (const auto& [k, v] : a) {
                const auto it = b.find(k);
                if (it == b.end() || it->second != v) failed.push_back("differs: " + k);
            }
        }
    }
    // Codecs on property-generated inputs.
    Rng rng(77);
    std::size_t cases = 0;
    const std::vector<std::string> vocab{"chair", "table", "mug", "lamp"};
    for (std::size_t i = 0; i < 200; ++i) {
        const std::size_t dim = 2 + rng.below(16);
        StreamHeader h;
        h.dim = dim;
        h.vocabulary = vocab;
        h.config_json = R"({"seed":)" + std::to_string(i) + "}";
        const auto frames = random_frames(rng, vocab, dim);
        const auto bytes = encode_stream(h, frames);
        std::istringstream in(std::string(bytes.begin(), bytes.end()));
        const auto back = read_stream(in);
        if (!(back.header == h) || back.frames != frames || !back.rejections.empty() ||
            encode_stream(back.header, back.frames) != bytes) {
            failed.push_back("dmos case " + std::to_string(i));
        }

        AssociationConfig c;
        c.match_threshold = rng.uniform(0.5, 1.5);
        c.stability_enabled = rng.bernoulli(0.5);
        ConcreteMap m(c);
        SceneCloud scene;
        for (const auto& f : frames) {
            m.process_frame(f);
            if (f.full_cloud && !f.full_cloud->empty()) scene = update_scene_cloud(scene, f.pose, *f.full_cloud, {});
        }
        const auto mb = encode_concrete_map(m, h.config_json);
        const auto m2 = decode_concrete_map(mb);
        if (!(m2 == m) || encode_concrete_map(m2, h.config_json) != mb) failed.push_back("dmcm case " + std::to_string(i));

        const auto a = abstract(m, test::random_feature(rng, dim), scene.cloud);
        const auto ab = encode_abstract_map(a);
        const auto a2 = decode_abstract_map(ab);
        if (!(a2 == a) || encode_abstract_map(a2) != ab) failed.push_back("dmam case " + std::to_string(i));
        ++cases;
    }
    // Codecs on mapped scenarios.
    for (const auto& s : statics) {
        const SimWorld w(s);
        const auto m = map_tour(w, {});
        const auto a = abstract(m.map, w.anchor_template(), m.scene.cloud);
        if (!(decode_concrete_map(encode_concrete_map(m.map)) == m.map)) failed.push_back("dmcm " + s.id);
        if (!(decode_abstract_map(encode_abstract_map(a)) == a)) failed.push_back("dmam " + s.id);
        ++cases;
    }
    Outcome o;
    o.pass = failed.empty();
    o.detail = "9 CLI commands run twice, " + std::to_string(compared) + " outputs compared byte for byte; " +
               std::to_string(cases) + " codec round-trip cases lossless";
    for (std::size_t i = 0; i < failed.size() && i < 5; ++i) o.detail += "; FAILED " + failed[i];
    return o;
}

Outcome throughput(const Scenario& s) {
    const SimWorld w(s);
    std::vector<FrameRecord> frames;
    map_tour(w, {}, true, [&](const FrameRecord& f) { frames.push_back(f); });
    // Best of three passes over the recorded stream.
    double best = 1e300;
    std::size_t peak = 0;
    for (int pass = 0; pass < 3; ++pass) {
        ConcreteMap m;
        SceneCloud scene;
        const auto t0 = Clock::now();
        for (const auto& f : frames) {
            m.process_frame(f);
            if (f.full_cloud && is_keyframe(scene, f.pose, {})) scene = update_scene_cloud(scene, f.pose, *f.full_cloud, {});
            peak = std::max(peak, m.size());
        }
        m.finalize();
        best = std::min(best, seconds_since(t0));
    }
    const double fps = static_cast<double>(frames.size()) / best;
    Outcome o;
    o.pass = fps >= kMinFramesPerSecond && peak <= kMaxObjects;
    o.detail = std::to_string(frames.size()) + " frames of " + s.id + " at " + fmt(fps, 0) + " frames/s (>= " +
               fmt(kMinFramesPerSecond, 0) + "), peak " + std::to_string(peak) + " objects (<= " +
               std::to_string(kMaxObjects) + ")";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks for the dualmap engine"};
    std::string data = std::string(DUALMAP_SOURCE_DIR) + "/data/scenarios";
    std::string cli;
    app.add_option("--data", data, "Directory holding the static, in_anchor and cross_anchor suites");
    app.add_option("--cli", cli, "Path of the dualmap command-line tool");
    CLI11_PARSE(app, argc, argv);

    const fs::path root(data);
    int failures = 0;
    auto report = [&](const std::string& name, const std::function<Outcome()>& run) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    };

    std::vector<Scenario> statics, in_anchor, cross;
    try {
        statics = load_suite(root / "static");
        in_anchor = load_suite(root / "in_anchor");
        cross = load_suite(root / "cross_anchor");
    } catch (const std::exception& e) {
        std::cout << "FAIL setup: " << e.what() << std::endl;
        return 1;
    }

    report("strategy_ordering", [&] { return strategy_ordering(cross); });
    StaticRuns st, in;
    report("static_navigation", [&] {
        st = updated_sr(statics);
        return static_sanity(st, query_count(statics));
    });
    report("in_anchor_robustness", [&] {
        in = updated_sr(in_anchor);
        return in_anchor_robustness(st, in);
    });
    report("odr_fidelity", [&] { return odr_fidelity(statics); });
    report("split_detection", split_detection);
    report("oracle_equivalence", oracle_equivalence);
    report("numerical_contracts", [&] { return numerical_contracts(statics); });
    report("determinism", [&] { return determinism(cli, root / "cross_anchor" / "cross_anchor_100.json", statics); });
    report("throughput", [&] { return throughput(statics.front()); });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
