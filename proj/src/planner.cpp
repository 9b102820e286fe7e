#include "dualmap/planner.hpp"

#include "dualmap/error.hpp"
#include "dualmap/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <queue>

namespace dualmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<Cell2, 8> kNeighbours8{{{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

// 1D squared Euclidean distance transform (lower envelope of parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& d) {
    const std::size_t n = f.size();
    std::vector<std::size_t> v(n);
    std::vector<double> z(n + 1);
    std::size_t k = 0;
    std::size_t first = n;
    for (std::size_t q = 0; q < n; ++q) {
        if (std::isfinite(f[q])) {
            first = q;
            break;
        }
    }
    d.assign(n, kInf);
    if (first == n) return;
    v[0] = first;
    z[0] = -kInf;
    z[1] = kInf;
    for (std::size_t q = first + 1; q < n; ++q) {
        if (!std::isfinite(f[q])) continue;
        const auto sq = [](double x) { return x * x; };
        double s = 0.0;
        while (true) {
            const double p = static_cast<double>(v[k]);
            const double qd = static_cast<double>(q);
            s = ((f[q] + sq(qd)) - (f[v[k]] + sq(p))) / (2.0 * (qd - p));
            if (s <= z[k] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        const double qd = static_cast<double>(q);
        while (z[k + 1] < qd) ++k;
        const double diff = qd - static_cast<double>(v[k]);
        d[q] = diff * diff + f[v[k]];
    }
}

}  // namespace

PlannerGrid::PlannerGrid(const OccupancyLayout& layout, double inflation, std::span<const Point2> must_include,
                         double pad)
    : resolution_(layout.resolution()), inflation_(inflation) {
    if (!(inflation >= 0.0)) throw UsageError("inflation must be non-negative");
    if (!(pad >= 0.0)) throw UsageError("pad must be non-negative");
    bool have = layout.width() > 0 && layout.height() > 0;
    Cell2 lo = layout.origin();
    Cell2 hi = {lo.x + layout.width() - 1, lo.y + layout.height() - 1};
    for (const auto& p : must_include) {
        if (!p.allFinite()) throw UsageError("planner point is not finite");
        const Cell2 c = cell_of(p, resolution_);
        if (!have) {
            lo = hi = c;
            have = true;
        }
        lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
        hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
    }
    if (!have) lo = hi = Cell2{0, 0};
    const auto p = static_cast<std::int32_t>(std::ceil(pad / resolution_));
    origin_ = {lo.x - p, lo.y - p};
    width_ = hi.x - lo.x + 1 + 2 * p;
    height_ = hi.y - lo.y + 1 + 2 * p;

    const std::size_t n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    raw_.assign(n, 0);
    for (std::int32_t y = 0; y < height_; ++y) {
        for (std::int32_t x = 0; x < width_; ++x) {
            if (layout.occupied({origin_.x + x, origin_.y + y})) {
                raw_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)] = 1;
            }
        }
    }

    // Separable squared distance transform in cell units.
    std::vector<double> d2(n, kInf);
    for (std::size_t i = 0; i < n; ++i) {
        if (raw_[i]) d2[i] = 0.0;
    }
    std::vector<double> f, out;
    const auto w = static_cast<std::size_t>(width_), h = static_cast<std::size_t>(height_);
    for (std::size_t x = 0; x < w; ++x) {
        f.assign(h, kInf);
        for (std::size_t y = 0; y < h; ++y) f[y] = d2[y * w + x];
        edt_1d(f, out);
        for (std::size_t y = 0; y < h; ++y) d2[y * w + x] = out[y];
    }
    for (std::size_t y = 0; y < h; ++y) {
        f.assign(d2.begin() + static_cast<std::ptrdiff_t>(y * w), d2.begin() + static_cast<std::ptrdiff_t>((y + 1) * w));
        edt_1d(f, out);
        std::copy(out.begin(), out.end(), d2.begin() + static_cast<std::ptrdiff_t>(y * w));
    }
    clearance_.resize(n);
    blocked_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        clearance_[i] = std::isfinite(d2[i]) ? std::sqrt(d2[i]) * resolution_ : kInf;
        blocked_[i] = raw_[i] || clearance_[i] <= inflation_ ? 1 : 0;
    }
}

bool PlannerGrid::in_bounds(Cell2 c) const {
    return c.x >= origin_.x && c.y >= origin_.y && c.x < origin_.x + width_ && c.y < origin_.y + height_;
}

bool PlannerGrid::raw_occupied(Cell2 c) const { return in_bounds(c) && raw_[index(c)] != 0; }

bool PlannerGrid::blocked(Cell2 c) const { return !in_bounds(c) || blocked_[index(c)] != 0; }

double PlannerGrid::clearance(Cell2 c) const { return in_bounds(c) ? clearance_[index(c)] : 0.0; }

namespace {

// Visits every cell the segment passes through (Amanatides-Woo traversal).
// Segments through a cell corner also visit both side cells.
template <typename Pred>
bool sweep(const PlannerGrid& g, const Point2& a, const Point2& b, Pred bad) {
    const double res = g.resolution();
    Cell2 c = g.cell(a);
    const Cell2 end = g.cell(b);
    if (bad(c)) return false;
    const Point2 d = b - a;
    const int sx = d.x() > 0 ? 1 : (d.x() < 0 ? -1 : 0);
    const int sy = d.y() > 0 ? 1 : (d.y() < 0 ? -1 : 0);
    auto boundary_t = [&](double p, double dir, std::int32_t cell, int step) {
        if (step == 0) return kInf;
        const double edge = (static_cast<double>(cell) + (step > 0 ? 1.0 : 0.0)) * res;
        return (edge - p) / dir;
    };
    double tx = boundary_t(a.x(), d.x(), c.x, sx), ty = boundary_t(a.y(), d.y(), c.y, sy);
    const double dtx = sx ? res / std::abs(d.x()) : kInf, dty = sy ? res / std::abs(d.y()) : kInf;
    constexpr double kTie = 1e-12;
    while (c.x != end.x || c.y != end.y) {
        if (std::abs(tx - ty) <= kTie) {
            if (tx > 1.0) break;
            if (bad(Cell2{c.x + sx, c.y}) || bad(Cell2{c.x, c.y + sy})) return false;
            c = {c.x + sx, c.y + sy};
            tx += dtx;
            ty += dty;
        } else if (tx < ty) {
            if (tx > 1.0) break;
            c.x += sx;
            tx += dtx;
        } else {
            if (ty > 1.0) break;
            c.y += sy;
            ty += dty;
        }
        if (bad(c)) return false;
    }
    return !bad(end);
}

}  // namespace

bool PlannerGrid::segment_free(const Point2& a, const Point2& b) const {
    return sweep(*this, a, b, [this](Cell2 c) { return blocked(c); });
}

bool PlannerGrid::segment_clear_of_raw(const Point2& a, const Point2& b) const {
    return sweep(*this, a, b, [this](Cell2 c) { return !in_bounds(c) || raw_occupied(c); });
}

Path Path::from_points(std::vector<Point2> pts) {
    Path p;
    p.waypoints = std::move(pts);
    for (std::size_t i = 1; i < p.waypoints.size(); ++i) p.length += (p.waypoints[i] - p.waypoints[i - 1]).norm();
    return p;
}

namespace {

Cell2 add(Cell2 a, Cell2 b) { return {a.x + b.x, a.y + b.y}; }

// Connectivity number for 8-connected foreground: 1 means the cell can be
// removed without changing topology.
bool simple_point(const PlannerGrid& g, const std::vector<std::uint8_t>& fg, Cell2 c, int& neighbours) {
    std::array<int, 9> x{};
    neighbours = 0;
    for (std::size_t k = 0; k < 8; ++k) {
        const Cell2 n = add(c, kNeighbours8[k]);
        x[k] = g.in_bounds(n) && fg[g.index(n)] ? 1 : 0;
        neighbours += x[k];
    }
    x[8] = x[0];
    int conn = 0;
    for (std::size_t k = 0; k < 8; k += 2) {
        const int a = 1 - x[k], b = 1 - x[k + 1], d = 1 - x[(k + 2) % 8];
        conn += a - a * b * d;
    }
    return conn == 1;
}

std::vector<std::uint8_t> thin(const PlannerGrid& g, std::vector<std::uint8_t> fg,
                               const std::vector<std::uint8_t>& protect) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < fg.size(); ++i) {
        if (fg[i]) order.push_back(i);
    }
    // The grid border bounds free space like an obstacle does.
    auto depth = [&](std::size_t i) {
        const Cell2 c = g.cell_at(i);
        const auto edge = std::min({c.x - g.origin().x, c.y - g.origin().y, g.origin().x + g.width() - 1 - c.x,
                                    g.origin().y + g.height() - 1 - c.y});
        return std::min(g.clearance(c), (static_cast<double>(edge) + 1.0) * g.resolution());
    };
    std::vector<double> key(fg.size(), 0.0);
    for (const auto i : order) key[i] = depth(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto i : order) {
            if (!fg[i] || protect[i]) continue;
            const Cell2 c = g.cell_at(i);
            int neighbours = 0;
            if (!simple_point(g, fg, c, neighbours)) continue;
            if (neighbours <= 1) continue;  // keep end points
            // Only peel cells that touch the background through an edge.
            bool border = false;
            for (std::size_t k = 0; k < 8; k += 2) {
                const Cell2 n = add(c, kNeighbours8[k]);
                if (!g.in_bounds(n) || !fg[g.index(n)]) border = true;
            }
            if (!border) continue;
            fg[i] = 0;
            changed = true;
        }
    }
    return fg;
}

std::vector<std::uint8_t> free_mask(const PlannerGrid& g) {
    std::vector<std::uint8_t> fg(g.cell_count(), 0);
    for (std::size_t i = 0; i < fg.size(); ++i) fg[i] = g.free(g.cell_at(i)) ? 1 : 0;
    return fg;
}

// 8-connected BFS over cells accepted by `pass`, returns the parent array
// (SIZE_MAX for unreached, self for the source).
template <typename Pass>
std::vector<std::size_t> bfs(const PlannerGrid& g, std::span<const std::size_t> sources, Pass pass,
                             std::vector<std::int32_t>* dist = nullptr) {
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> parent(g.cell_count(), none);
    if (dist) dist->assign(g.cell_count(), -1);
    std::deque<std::size_t> queue;
    for (const auto s : sources) {
        if (parent[s] != none) continue;
        parent[s] = s;
        if (dist) (*dist)[s] = 0;
        queue.push_back(s);
    }
    while (!queue.empty()) {
        const auto i = queue.front();
        queue.pop_front();
        const Cell2 c = g.cell_at(i);
        for (const auto& d : kNeighbours8) {
            const Cell2 n = add(c, d);
            if (!g.in_bounds(n)) continue;
            const auto j = g.index(n);
            if (parent[j] != none || !pass(j)) continue;
            parent[j] = i;
            if (dist) (*dist)[j] = (*dist)[i] + 1;
            queue.push_back(j);
        }
    }
    return parent;
}

std::vector<std::size_t> trace(const std::vector<std::size_t>& parent, std::size_t end) {
    std::vector<std::size_t> out{end};
    while (parent[out.back()] != out.back()) out.push_back(parent[out.back()]);
    std::reverse(out.begin(), out.end());
    return out;
}

// Dijkstra over cells accepted by `pass`; returns the cell sequence or empty.
template <typename Pass>
std::vector<std::size_t> dijkstra(const PlannerGrid& g, std::size_t from, std::size_t to, Pass pass) {
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    std::vector<double> cost(g.cell_count(), kInf);
    std::vector<std::size_t> parent(g.cell_count(), none);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    cost[from] = 0.0;
    parent[from] = from;
    heap.push({0.0, from});
    while (!heap.empty()) {
        const auto [c0, i] = heap.top();
        heap.pop();
        if (c0 > cost[i]) continue;
        if (i == to) break;
        const Cell2 c = g.cell_at(i);
        for (const auto& d : kNeighbours8) {
            const Cell2 n = add(c, d);
            if (!g.in_bounds(n)) continue;
            const auto j = g.index(n);
            if (!pass(j)) continue;
            const bool diagonal = d.x != 0 && d.y != 0;
            if (diagonal) {
                // No corner cutting between two blocked side cells.
                const Cell2 sx{c.x + d.x, c.y}, sy{c.x, c.y + d.y};
                if (!g.in_bounds(sx) || !g.in_bounds(sy) || !pass(g.index(sx)) || !pass(g.index(sy))) continue;
            }
            const double step = diagonal ? std::numbers::sqrt2 : 1.0;
            if (c0 + step < cost[j]) {
                cost[j] = c0 + step;
                parent[j] = i;
                heap.push({cost[j], j});
            }
        }
    }
    if (parent[to] == none) return {};
    return trace(parent, to);
}

std::vector<Point2> string_pull(const PlannerGrid& g, const std::vector<Point2>& pts) {
    if (pts.size() <= 2) return pts;
    std::vector<Point2> out{pts.front()};
    std::size_t i = 0;
    while (i + 1 < pts.size()) {
        std::size_t j = pts.size() - 1;
        while (j > i + 1 && !g.segment_free(pts[i], pts[j])) --j;
        out.push_back(pts[j]);
        i = j;
    }
    return out;
}

}  // namespace

std::vector<Cell2> voronoi_skeleton(const PlannerGrid& grid) {
    const auto fg = thin(grid, free_mask(grid), std::vector<std::uint8_t>(grid.cell_count(), 0));
    std::vector<Cell2> out;
    for (std::size_t i = 0; i < fg.size(); ++i) {
        if (fg[i]) out.push_back(grid.cell_at(i));
    }
    std::sort(out.begin(), out.end());
    return out;
}

PlanResult plan_global(const PlannerGrid& grid, const Point2& start, const Footprint2D& goal_footprint,
                       double goal_reach) {
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    if (!start.allFinite()) throw UsageError("start is not finite");
    if (!(goal_reach >= 0.0)) throw UsageError("goal reach must be non-negative");
    const Cell2 sc = grid.cell(start);
    if (!grid.in_bounds(sc)) throw UsageError("start lies outside the planning grid");
    if (grid.raw_occupied(sc)) throw UsageError("start lies inside an obstacle");
    if (std::abs(goal_footprint.resolution() - grid.resolution()) > 1e-12) {
        throw UsageError("goal footprint resolution differs from the planning grid");
    }
    PlanResult result;
    if (goal_footprint.empty()) {
        result.failure = "empty goal footprint";
        return result;
    }

    std::vector<Point2> prefix{start};
    std::size_t s = grid.index(sc);
    if (grid.blocked(sc)) {
        // Start within the inflation band: step out to the nearest free cell.
        const std::size_t src[] = {s};
        std::vector<std::int32_t> dist;
        const auto parent =
            bfs(grid, src, [&](std::size_t j) { return !grid.raw_occupied(grid.cell_at(j)); }, &dist);
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < grid.cell_count(); ++i) {
            if (dist[i] < 0 || grid.blocked(grid.cell_at(i))) continue;
            if (!best || dist[i] < dist[*best]) best = i;
        }
        if (!best) {
            result.failure = "start is enclosed by inflated obstacles";
            return result;
        }
        for (const auto i : trace(parent, *best)) {
            if (i != s) prefix.push_back(grid.center(grid.cell_at(i)));
        }
        s = *best;
    }

    // Component reachable from the start through free cells.
    const std::size_t src[] = {s};
    const auto reach = bfs(grid, src, [&](std::size_t j) { return grid.free(grid.cell_at(j)); });

    // Rings around the footprint; the goal is the innermost reachable free ring cell.
    std::vector<std::size_t> seeds;
    for (const auto& c : goal_footprint.cells()) {
        if (grid.in_bounds(c)) seeds.push_back(grid.index(c));
    }
    if (seeds.empty()) {
        result.failure = "goal footprint outside the planning grid";
        return result;
    }
    std::vector<std::int32_t> ring;
    bfs(grid, seeds, [](std::size_t) { return true; }, &ring);
    const auto max_ring = static_cast<std::int32_t>(std::ceil((grid.inflation() + goal_reach) / grid.resolution()));
    std::optional<std::size_t> goal;
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        const Cell2 c = grid.cell_at(i);
        if (reach[i] == none || ring[i] <= 0 || ring[i] > max_ring || goal_footprint.contains(c)) continue;
        if (!goal) {
            goal = i;
            continue;
        }
        const double di = (grid.center(c) - start).squaredNorm();
        const double dg = (grid.center(grid.cell_at(*goal)) - start).squaredNorm();
        if (ring[i] < ring[*goal] || (ring[i] == ring[*goal] && di < dg)) goal = i;
    }
    if (!goal) {
        result.failure = "goal unreachable";
        return result;
    }
    const Point2 goal_pt = grid.center(grid.cell_at(*goal));
    result.goal = goal_pt;

    if (ring[s] == ring[*goal] && !goal_footprint.contains(grid.cell_at(s))) {
        result.goal = prefix.back();
        result.path = Path::from_points(prefix);
        return result;
    }
    const Point2 from = prefix.back();
    if (grid.segment_free(from, goal_pt)) {
        prefix.push_back(goal_pt);
        result.path = Path::from_points(prefix);
        return result;
    }

    // Skeleton restricted to the start component; start and goal cells are
    // protected so that thinning keeps them attached.
    std::vector<std::uint8_t> fg(grid.cell_count(), 0), protect(grid.cell_count(), 0);
    for (std::size_t i = 0; i < fg.size(); ++i) fg[i] = reach[i] != none ? 1 : 0;
    protect[s] = protect[*goal] = 1;
    const auto skel = thin(grid, fg, protect);

    std::vector<std::size_t> cells = dijkstra(grid, s, *goal, [&](std::size_t j) { return skel[j] != 0; });
    if (cells.empty()) {
        // Thinning keeps protected cells attached, so this is a safety net.
        cells = dijkstra(grid, s, *goal, [&](std::size_t j) { return reach[j] != none; });
    }
    if (cells.empty()) {
        result.failure = "goal unreachable";
        return result;
    }
    // The skeleton fixes the route; the shortest path is then taken inside the
    // union of free discs centered on the route cells.
    std::vector<std::size_t> owner(grid.cell_count(), none);
    std::deque<std::size_t> queue;
    for (const auto i : cells) {
        owner[i] = i;
        queue.push_back(i);
    }
    while (!queue.empty()) {
        const auto i = queue.front();
        queue.pop_front();
        const Cell2 c = grid.cell_at(i);
        const auto o = owner[i];
        const double radius = grid.clearance(grid.cell_at(o)) - grid.inflation() + grid.resolution();
        for (const auto& d : kNeighbours8) {
            const Cell2 n = add(c, d);
            if (!grid.in_bounds(n)) continue;
            const auto j = grid.index(n);
            if (owner[j] != none || reach[j] == none) continue;
            if ((grid.center(n) - grid.center(grid.cell_at(o))).norm() > radius) continue;
            owner[j] = o;
            queue.push_back(j);
        }
    }
    const auto tight = dijkstra(grid, s, *goal, [&](std::size_t j) { return owner[j] != none; });
    if (!tight.empty()) cells = tight;
    std::vector<Point2> pts{from};
    for (std::size_t k = 1; k < cells.size(); ++k) pts.push_back(grid.center(grid.cell_at(cells[k])));
    pts = string_pull(grid, pts);
    prefix.insert(prefix.end(), pts.begin() + 1, pts.end());
    result.path = Path::from_points(prefix);
    return result;
}

PlanResult plan_local(const PlannerGrid& grid, const Point2& start, const Point2& goal_in, std::size_t budget,
                      std::uint64_t seed, const PlannerConfig& config) {
    if (!start.allFinite() || !goal_in.allFinite()) throw UsageError("plan_local endpoints must be finite");
    if (grid.blocked(grid.cell(start))) throw UsageError("plan_local start is not free");
    PlanResult result;
    if (start == goal_in) {
        result.goal = goal_in;
        result.path = Path{};
        return result;
    }

    Point2 goal = goal_in;
    if (grid.blocked(grid.cell(goal))) {
        const Cell2 gc = grid.cell(goal);
        const auto r = static_cast<std::int32_t>(std::ceil(config.snap_radius / grid.resolution())) + 1;
        std::optional<Point2> best;
        double best_d = kInf;
        for (std::int32_t dy = -r; dy <= r; ++dy) {
            for (std::int32_t dx = -r; dx <= r; ++dx) {
                const Cell2 c{gc.x + dx, gc.y + dy};
                if (grid.blocked(c)) continue;
                const double d = (grid.center(c) - goal).norm();
                if (d <= config.snap_radius && d < best_d) {
                    best_d = d;
                    best = grid.center(c);
                }
            }
        }
        if (!best) {
            result.failure = "goal in obstacle with no free cell within snap radius";
            return result;
        }
        goal = *best;
    }
    result.goal = goal;

    // Sampling box around start and goal, clipped to the grid.
    const double res = grid.resolution();
    const Point2 glo{grid.origin().x * res, grid.origin().y * res};
    const Point2 ghi{(grid.origin().x + grid.width()) * res, (grid.origin().y + grid.height()) * res};
    const Point2 lo = start.cwiseMin(goal).array() - config.rrt_margin;
    const Point2 hi = start.cwiseMax(goal).array() + config.rrt_margin;
    const Point2 blo = lo.cwiseMax(glo), bhi = hi.cwiseMin(ghi);
    const double area = std::max((bhi - blo).prod(), res * res);
    const double gamma = 2.0 * std::sqrt(1.5 * area / std::numbers::pi);

    struct Node {
        Point2 p;
        std::size_t parent;
        double cost;
        std::vector<std::size_t> children;
    };
    std::vector<Node> nodes;
    nodes.reserve(budget + 1);
    nodes.push_back({start, 0, 0.0, {}});

    const auto propagate = [&](std::size_t root, double delta) {
        std::vector<std::size_t> stack{root};
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            for (const auto c : nodes[i].children) {
                nodes[c].cost -= delta;
                stack.push_back(c);
            }
        }
    };

    Rng rng(seed);
    std::vector<std::size_t> near;
    for (std::size_t it = 0; it < budget; ++it) {
        Point2 sample;
        if (rng.uniform() < config.rrt_goal_bias) {
            sample = goal;
        } else {
            const double x = rng.uniform(blo.x(), bhi.x());
            const double y = rng.uniform(blo.y(), bhi.y());
            sample = {x, y};
        }
        std::size_t nearest = 0;
        double nd = kInf;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double d = (nodes[i].p - sample).squaredNorm();
            if (d < nd) {
                nd = d;
                nearest = i;
            }
        }
        nd = std::sqrt(nd);
        if (nd <= 1e-12) continue;
        const Point2 q = nd <= config.rrt_step ? sample : Point2(nodes[nearest].p + (sample - nodes[nearest].p) * (config.rrt_step / nd));
        if (!grid.segment_free(nodes[nearest].p, q)) continue;

        const double n = static_cast<double>(nodes.size() + 1);
        const double radius = std::min(gamma * std::sqrt(std::log(n) / n), config.rrt_step);
        near.clear();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if ((nodes[i].p - q).norm() <= radius) near.push_back(i);
        }
        std::size_t parent = nearest;
        double cost = nodes[nearest].cost + (q - nodes[nearest].p).norm();
        for (const auto i : near) {
            const double c = nodes[i].cost + (q - nodes[i].p).norm();
            if (c < cost && grid.segment_free(nodes[i].p, q)) {
                cost = c;
                parent = i;
            }
        }
        const std::size_t id = nodes.size();
        nodes.push_back({q, parent, cost, {}});
        nodes[parent].children.push_back(id);

        for (const auto i : near) {
            if (i == parent) continue;
            const double c = cost + (nodes[i].p - q).norm();
            if (c + 1e-12 < nodes[i].cost && grid.segment_free(q, nodes[i].p)) {
                auto& siblings = nodes[nodes[i].parent].children;
                siblings.erase(std::find(siblings.begin(), siblings.end(), i));
                const double delta = nodes[i].cost - c;
                nodes[i].parent = id;
                nodes[i].cost = c;
                nodes[id].children.push_back(i);
                propagate(i, delta);
            }
        }
    }

    std::optional<std::size_t> best;
    double best_cost = kInf;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double d = (nodes[i].p - goal).norm();
        if (d > config.rrt_step) continue;
        const double c = nodes[i].cost + d;
        if (c < best_cost && grid.segment_free(nodes[i].p, goal)) {
            best_cost = c;
            best = i;
        }
    }
    if (!best) {
        result.failure = "no path within budget";
        return result;
    }
    std::vector<Point2> pts;
    if ((nodes[*best].p - goal).norm() > 0.0) pts.push_back(goal);
    for (std::size_t i = *best;; i = nodes[i].parent) {
        pts.push_back(nodes[i].p);
        if (i == 0) break;
    }
    std::reverse(pts.begin(), pts.end());
    result.path = Path::from_points(std::move(pts));
    return result;
}

}  // namespace dualmap
