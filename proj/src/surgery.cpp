#include "fpd/surgery.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

namespace fpd {

namespace {

constexpr int kUnreached = -1;

std::vector<int> inverse_perm(const std::vector<int>& p) {
    std::vector<int> out(p.size());
    for (std::size_t v = 0; v < p.size(); ++v) out[static_cast<std::size_t>(p[v])] = static_cast<int>(v);
    return out;
}

bool is_bijection(const std::vector<int>& p, int n) {
    if (static_cast<int>(p.size()) != n) return false;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int x : p) {
        if (x < 0 || x >= n || seen[static_cast<std::size_t>(x)]) return false;
        seen[static_cast<std::size_t>(x)] = 1;
    }
    return true;
}

std::vector<std::vector<int>> cycles_of(const std::vector<int>& p) {
    std::vector<std::vector<int>> out;
    std::vector<char> seen(p.size(), 0);
    for (std::size_t v = 0; v < p.size(); ++v) {
        if (seen[v]) continue;
        std::vector<int> c;
        for (int x = static_cast<int>(v); !seen[static_cast<std::size_t>(x)]; x = p[static_cast<std::size_t>(x)]) {
            seen[static_cast<std::size_t>(x)] = 1;
            c.push_back(x);
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<int> cycle_through(const std::vector<int>& p, int v) {
    std::vector<int> c{v};
    for (int x = p[static_cast<std::size_t>(v)]; x != v; x = p[static_cast<std::size_t>(x)]) c.push_back(x);
    return c;
}

// Breadth-first distances; directed graphs follow a and b forward only.
std::vector<int> bfs(const GraphAction& act, const std::vector<int>& sources, bool directed,
                     const std::vector<char>* blocked = nullptr, int max_depth = std::numeric_limits<int>::max()) {
    std::vector<int> dist(static_cast<std::size_t>(act.size()), kUnreached);
    std::deque<int> queue;
    for (int s : sources) {
        if (dist[static_cast<std::size_t>(s)] == kUnreached) {
            dist[static_cast<std::size_t>(s)] = 0;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        const int dv = dist[static_cast<std::size_t>(v)];
        if (dv >= max_depth) continue;
        const std::array<int, 4> nb = act.neighbours(v);
        const std::size_t count = directed ? 2 : 4;
        for (std::size_t i = 0; i < count; ++i) {
            const int w = nb[i];
            if (dist[static_cast<std::size_t>(w)] != kUnreached) continue;
            if (blocked && (*blocked)[static_cast<std::size_t>(w)]) continue;
            dist[static_cast<std::size_t>(w)] = dv + 1;
            queue.push_back(w);
        }
    }
    return dist;
}

// Points of the cycle with cyclic gaps in [lo, hi], fewest ineligible positions first and then fewest
// points; ties go to the earliest start. Empty when no gap sequence fits the length.
std::vector<int> eligible_points(const std::vector<int>& cycle, const std::vector<char>& ok, int lo, int hi) {
    const int L = static_cast<int>(cycle.size());
    constexpr long kNone = std::numeric_limits<long>::max();
    const long penalty = L + 1;
    auto cost_at = [&](int pos) { return ok[static_cast<std::size_t>(pos % L)] ? 1L : 1L + penalty; };
    long best = kNone;
    std::vector<int> out;
    for (int s = 0; s < L; ++s) {
        // cost[j]: cheapest chain of points from s to s + j.
        std::vector<long> cost(static_cast<std::size_t>(L), kNone);
        std::vector<int> from(static_cast<std::size_t>(L), -1);
        cost[0] = cost_at(s);
        if (cost[0] >= best) continue;
        for (int j = 0; j < L; ++j) {
            if (cost[static_cast<std::size_t>(j)] == kNone) continue;
            for (int gap = lo; gap <= hi && j + gap < L; ++gap) {
                const int t = j + gap;
                const long c = cost[static_cast<std::size_t>(j)] + cost_at(s + t);
                if (c < cost[static_cast<std::size_t>(t)]) {
                    cost[static_cast<std::size_t>(t)] = c;
                    from[static_cast<std::size_t>(t)] = j;
                }
            }
        }
        int end = -1;
        for (int j = std::max(1, L - hi); j <= L - lo; ++j) {
            if (cost[static_cast<std::size_t>(j)] == kNone) continue;
            if (end < 0 || cost[static_cast<std::size_t>(j)] < cost[static_cast<std::size_t>(end)]) end = j;
        }
        if (end < 0 || cost[static_cast<std::size_t>(end)] >= best) continue;
        best = cost[static_cast<std::size_t>(end)];
        out.clear();
        for (int j = end; j > 0; j = from[static_cast<std::size_t>(j)]) out.push_back(cycle[static_cast<std::size_t>((s + j) % L)]);
        out.push_back(cycle[static_cast<std::size_t>(s)]);
        std::reverse(out.begin(), out.end());
        if (best == static_cast<long>(L + hi - 1) / hi) break;
    }
    return out;
}

struct Bypass {
    std::vector<int> near, far;
};

// Cuts each cycle of p into arcs and inserts bypass vertices into the q-edges leaving each cut point
// u and p^2 u. Points are evenly spaced when every u and p^2 u on the cycle is below n_orig, and
// otherwise restricted to such positions when possible.
Bypass shorten(std::vector<int>& p, std::vector<int>& q, int R, int n_orig, const std::string& stage) {
    const std::vector<int> p0 = p;
    const int n0 = static_cast<int>(p.size());
    std::vector<std::vector<int>> groups;
    std::size_t m = 0;
    for (const auto& c : cycles_of(p0)) {
        if (static_cast<int>(c.size()) < 4 * R)
            throw SurgeryConflict(stage + ": cycle through " + std::to_string(c.front()) + " has length " +
                                  std::to_string(c.size()) + " < 4R");
        const std::size_t L = c.size();
        std::vector<char> ok(L);
        for (std::size_t i = 0; i < L; ++i) ok[i] = c[i] < n_orig && c[(i + 2) % L] < n_orig;
        std::vector<int> s;
        if (std::find(ok.begin(), ok.end(), 0) != ok.end()) s = eligible_points(c, ok, std::max(R, 3), 2 * R);
        if (s.empty()) s = r_separated(c, R);
        const std::size_t k = s.size();
        for (std::size_t i = 0; i < k; ++i)
            p[static_cast<std::size_t>(s[i])] = p0[static_cast<std::size_t>(s[(i + k - 1) % k])];
        m += k;
        groups.push_back(std::move(s));
    }
    const std::size_t total = static_cast<std::size_t>(n0) + 2 * m;
    p.resize(total);
    q.resize(total);
    std::vector<char> cut(static_cast<std::size_t>(n0), 0);
    auto insert = [&](int x, int mid) {
        if (cut[static_cast<std::size_t>(x)])
            throw SurgeryConflict(stage + ": edge out of " + std::to_string(x) + " cut twice");
        cut[static_cast<std::size_t>(x)] = 1;
        q[static_cast<std::size_t>(mid)] = q[static_cast<std::size_t>(x)];
        q[static_cast<std::size_t>(x)] = mid;
    };
    Bypass out;
    int next = 0;
    for (const auto& s : groups) {
        const int first = next;
        for (int u : s) {
            const int f = n0 + next;
            const int fp = n0 + static_cast<int>(m) + next;
            insert(u, f);
            insert(p0[static_cast<std::size_t>(p0[static_cast<std::size_t>(u)])], fp);
            p[static_cast<std::size_t>(f)] = fp;
            out.near.push_back(f);
            out.far.push_back(fp);
            ++next;
        }
        // Pairs of consecutive points, the last three forming a triple when the count is odd.
        const int k = static_cast<int>(s.size());
        for (int start = 0; start < k;) {
            const int size = (k - start == 3) ? 3 : 2;
            for (int t = 0; t < size; ++t) {
                const int from = n0 + static_cast<int>(m) + first + start + t;
                const int to = n0 + first + start + (t + 1) % size;
                p[static_cast<std::size_t>(from)] = to;
            }
            start += size;
        }
    }
    return out;
}

LabeledGraph make_graph(const std::vector<int>& a, const std::vector<int>& b) {
    return {static_cast<int>(a.size()), a, b};
}

}  // namespace

bool LabeledGraph::valid() const { return n >= 0 && is_bijection(perm_a, n) && is_bijection(perm_b, n); }

void LabeledGraph::validate() const {
    if (n < 1) throw InputError("n", "n: must be positive");
    if (!is_bijection(perm_a, n)) throw InputError("perm_a", "perm_a: not a permutation of [n]");
    if (!is_bijection(perm_b, n)) throw InputError("perm_b", "perm_b: not a permutation of [n]");
}

GraphAction::GraphAction(const LabeledGraph& g) {
    fwd_[0] = g.perm_a;
    fwd_[1] = g.perm_b;
    fwd_[2] = inverse_perm(g.perm_a);
    fwd_[3] = inverse_perm(g.perm_b);
}

int GraphAction::step(Gen x, int v) const { return fwd_[static_cast<std::size_t>(x)][static_cast<std::size_t>(v)]; }

int GraphAction::apply(const Word& g, int v) const {
    const auto& l = g.letters();
    for (auto it = l.rbegin(); it != l.rend(); ++it) v = step(*it, v);
    return v;
}

std::array<int, 4> GraphAction::neighbours(int v) const {
    const auto i = static_cast<std::size_t>(v);
    return {fwd_[0][i], fwd_[1][i], fwd_[2][i], fwd_[3][i]};
}

std::vector<std::vector<int>> cycles(const LabeledGraph& g, Label l) { return cycles_of(g.perm(l)); }

std::vector<int> r_separated(const std::vector<int>& cycle, int R) {
    if (R < 1) throw InputError("R", "R: must be positive");
    const auto L = static_cast<int>(cycle.size());
    if (L <= 2 * R)
        throw InputError("cycle", "cycle of length " + std::to_string(L) + " admits no two points " +
                                      std::to_string(R) + " apart with gaps at most " + std::to_string(2 * R));
    const int k = (L + 2 * R - 1) / (2 * R);
    const int base = L / k;
    const int extra = L % k;
    std::vector<int> out;
    int pos = 0;
    for (int i = 0; i < k; ++i) {
        out.push_back(cycle[static_cast<std::size_t>(pos)]);
        pos += base + (i < extra ? 1 : 0);
    }
    return out;
}

std::size_t SurgeryResult::inserted_count() const {
    std::size_t total = 0;
    for (const auto& [name, ids] : inserted) total += ids.size();
    return total;
}

SurgeryResult perform_surgery(const LabeledGraph& g, int R, int r) {
    g.validate();
    if (R < 2) throw InputError("R", "R: must be at least 2");
    if (r < 0) throw InputError("r", "r: must be non-negative");
    for (Label l : {Label::a, Label::b}) {
        for (const auto& c : cycles(g, l)) {
            if (static_cast<int>(c.size()) < 4 * R)
                throw InputError(l == Label::a ? "perm_a" : "perm_b",
                                 std::string(l == Label::a ? "a" : "b") + "-cycle through vertex " +
                                     std::to_string(c.front()) + " has length " + std::to_string(c.size()) +
                                     " < 4R = " + std::to_string(4 * R));
        }
    }
    SurgeryResult res;
    res.original.resize(static_cast<std::size_t>(g.n));
    std::iota(res.original.begin(), res.original.end(), 0);
    std::vector<int> a = g.perm_a;
    std::vector<int> b = g.perm_b;

    const Bypass first = shorten(a, b, R, g.n, "stage 1");
    res.inserted["D"] = first.near;
    res.inserted["D'"] = first.far;
    res.snapshots[0] = make_graph(a, b);

    const Bypass second = shorten(b, a, R, g.n, "stage 2");
    res.inserted["E"] = second.near;
    res.inserted["E'"] = second.far;
    res.snapshots[1] = make_graph(a, b);

    // Maximal 10R-separated set, greedy in vertex order, so originals are tried first.
    const GraphAction act3(res.snapshots[1]);
    const int N = act3.size();
    std::vector<char> covered(static_cast<std::size_t>(N), 0);
    for (int v = 0; v < N; ++v) {
        if (covered[static_cast<std::size_t>(v)]) continue;
        res.A.push_back(v);
        const std::vector<int> dist = bfs(act3, {v}, false, nullptr, 10 * R - 1);
        for (int w = 0; w < N; ++w)
            if (dist[static_cast<std::size_t>(w)] != kUnreached) covered[static_cast<std::size_t>(w)] = 1;
    }
    const std::size_t nA = res.A.size();
    a.resize(static_cast<std::size_t>(N) + nA);
    b.resize(static_cast<std::size_t>(N) + nA);
    std::vector<int> before(nA);
    for (std::size_t i = 0; i < nA; ++i) {
        const int v = res.A[i];
        const int id = N + static_cast<int>(i);
        before[i] = act3.step(Gen::A, v);
        a[static_cast<std::size_t>(before[i])] = id;
        a[static_cast<std::size_t>(id)] = v;
        b[static_cast<std::size_t>(id)] = N + static_cast<int>((i + 1) % nA);
        res.B.push_back(id);
    }
    res.inserted["B"] = res.B;
    res.snapshots[2] = make_graph(a, b);

    // Join the b-cycle of v with the b-cycle of a^-2 v.
    std::vector<char> in_A(b.size(), 0);
    for (int v : res.A) in_A[static_cast<std::size_t>(v)] = 1;
    for (std::size_t i = 0; i < nA; ++i) {
        const std::vector<int> Cv = cycle_through(b, res.A[i]);
        if (std::find(Cv.begin(), Cv.end(), before[i]) != Cv.end()) {
            ++res.already_joined;
            continue;
        }
        const std::vector<int> Cp = cycle_through(b, before[i]);
        auto pick = [&](const std::vector<int>& c) {
            int best = -1;
            for (int x : c) {
                if (x >= N) throw SurgeryConflict("stage 3: splice cycle meets B at " + std::to_string(x));
                if (!in_A[static_cast<std::size_t>(x)] && (best < 0 || x < best)) best = x;
            }
            if (best < 0) throw SurgeryConflict("stage 3: b-cycle through " + std::to_string(c.front()) + " lies in A");
            return best;
        };
        const int w = pick(Cv);
        const int wp = pick(Cp);
        std::swap(b[static_cast<std::size_t>(w)], b[static_cast<std::size_t>(wp)]);
        ++res.merged;
    }
    res.graph = make_graph(a, b);
    if (!res.graph.valid()) throw std::logic_error("perform_surgery: result is not a permutation pair");

    // Undisturbed originals: no modified vertex within distance r in the input graph.
    const GraphAction act0(g);
    const GraphAction act(res.graph);
    std::vector<int> modified;
    for (int x = 0; x < g.n; ++x) {
        const std::array<int, 4> now = act.neighbours(x);
        if (now != act0.neighbours(x)) modified.push_back(x);
    }
    const std::vector<int> dist = bfs(act0, modified, false, nullptr, r);
    for (int x = 0; x < g.n; ++x)
        if (dist[static_cast<std::size_t>(x)] == kUnreached) res.W.push_back(x);
    return res;
}

bool SurgeryReport::all() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const ConditionCheck& c) { return c.pass; });
}

namespace {

// tau(g) v for every g in a ball, words ordered as in ball().
struct BallImages {
    std::vector<Word> words;
    std::vector<int> parent;  // index of g without its first letter
    std::vector<Gen> head;

    explicit BallImages(int radius) : words(ball(radius)) {
        std::unordered_map<Word, int> index;
        for (std::size_t i = 0; i < words.size(); ++i) index[words[i]] = static_cast<int>(i);
        parent.assign(words.size(), -1);
        head.assign(words.size(), Gen::a);
        for (std::size_t i = 1; i < words.size(); ++i) {
            const auto& l = words[i].letters();
            head[i] = l.front();
            parent[i] = index.at(Word::from_letters({l.begin() + 1, l.end()}));
        }
    }

    std::vector<int> images(const GraphAction& act, int v) const {
        std::vector<int> out(words.size());
        out[0] = v;
        for (std::size_t i = 1; i < words.size(); ++i)
            out[i] = act.step(head[i], out[static_cast<std::size_t>(parent[i])]);
        return out;
    }
};

double as_distance(int d) { return d == kUnreached ? std::numeric_limits<double>::infinity() : d; }

}  // namespace

SurgeryReport verify_conditions(const LabeledGraph& original, const SurgeryResult& result, int r, int R,
                                std::uint64_t seed) {
    const int n = original.n;
    const LabeledGraph& G = result.graph;
    const GraphAction act0(original);
    const GraphAction act(G);
    const int N = G.n;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<char> in_B(static_cast<std::size_t>(N), 0);
    for (int x : result.B) in_B[static_cast<std::size_t>(x)] = 1;
    SurgeryReport rep;
    auto& c = rep.conditions;
    for (int i = 0; i < 7; ++i) c[static_cast<std::size_t>(i)].name = "G-" + std::to_string(i + 1);

    // G-1: labelled r-balls agree when coincidences among B_r x B_{r+1} images agree.
    {
        const BallImages imgs(r + 1);
        const std::size_t inner = ball(r).size();
        auto identified = [&](int w) {
            const std::vector<int> x = imgs.images(act, w);
            const std::vector<int> y = imgs.images(act0, w);
            for (std::size_t i = 0; i < x.size(); ++i)
                for (std::size_t j = 0; j < inner; ++j)
                    if ((x[i] == x[j]) != (y[i] == y[j])) return false;
            return true;
        };
        int census = 0;
        for (int w = 0; w < n; ++w) census += identified(w) ? 1 : 0;
        const bool claimed = std::all_of(result.W.begin(), result.W.end(), [&](int w) { return w < n && identified(w); });
        const double K = static_cast<double>(inner);
        c[0].measured = census;
        c[0].bound = (1.0 - 20.0 * K / R) * n;
        c[0].pass = claimed && static_cast<double>(result.W.size()) >= c[0].bound && census >= c[0].bound;
    }

    // G-2: B is one b-cycle and every other cycle is short.
    {
        bool ring = !result.B.empty();
        if (ring) {
            const std::vector<int> cyc = cycle_through(G.perm_b, result.B.front());
            ring = cyc.size() == result.B.size() &&
                   std::all_of(cyc.begin(), cyc.end(), [&](int x) { return in_B[static_cast<std::size_t>(x)] != 0; });
        }
        std::size_t longest = 0;
        for (Label l : {Label::a, Label::b})
            for (const auto& cyc : cycles(G, l))
                if (!(l == Label::b && ring && in_B[static_cast<std::size_t>(cyc.front())]))
                    longest = std::max(longest, cyc.size());
        c[1].measured = static_cast<double>(longest);
        c[1].bound = 2.0 * (4 * R + 1);
        c[1].pass = ring && static_cast<double>(result.B.size()) <= static_cast<double>(n) / R && c[1].measured <= c[1].bound;
    }

    std::mt19937_64 rng(seed);
    // G-3: distance distortion from sampled original sources to every original target.
    {
        std::vector<int> sources(static_cast<std::size_t>(n));
        std::iota(sources.begin(), sources.end(), 0);
        std::shuffle(sources.begin(), sources.end(), rng);
        sources.resize(std::min<std::size_t>(sources.size(), kDistanceSamples));
        double worst = 0;
        for (int v : sources) {
            const std::vector<int> d0 = bfs(act0, {v}, false);
            const std::vector<int> d = bfs(act, {v}, false, &in_B);
            for (int w = 0; w < n; ++w) {
                if (w == v || d[static_cast<std::size_t>(w)] == kUnreached) continue;
                worst = std::max(worst, as_distance(d0[static_cast<std::size_t>(w)]) / d[static_cast<std::size_t>(w)]);
            }
        }
        c[2].measured = worst;
        c[2].bound = static_cast<double>(4 * R + 1) * R * R;
        c[2].pass = worst <= c[2].bound;
    }

    // G-4: directed reach from B.
    {
        const std::vector<int> d = bfs(act, result.B, true);
        double worst = result.B.empty() ? inf : 0.0;
        for (int x : d) worst = std::max(worst, as_distance(x));
        c[3].measured = worst;
        c[3].bound = 8.0 * (4 * R + 1) * (4 * R + 1) * (10 * R + 1);
        c[3].pass = worst <= c[3].bound;
    }

    // G-5: directed paths avoiding B from v to tau(g) v and to tau_0(g) v, both endpoints original.
    {
        const BallImages imgs(r);
        double worst = 0;
        for (int v = 0; v < n; ++v) {
            if (in_B[static_cast<std::size_t>(v)]) continue;
            const std::vector<int> d = bfs(act, {v}, true, &in_B);
            const std::vector<int> now = imgs.images(act, v);
            const std::vector<int> old = imgs.images(act0, v);
            for (std::size_t i = 0; i < now.size(); ++i) {
                for (int t : {now[i], old[i]})
                    if (t < n) worst = std::max(worst, as_distance(d[static_cast<std::size_t>(t)]));
            }
        }
        c[4].measured = worst;
        c[4].bound = 256.0 * r * (4 * R + 1) * (4 * R + 1);
        c[4].pass = worst <= c[4].bound;
    }

    // G-6: inserted vertices touch an original one.
    {
        int bad = 0;
        for (int x = n; x < N; ++x) {
            const std::array<int, 4> nb = act.neighbours(x);
            if (std::none_of(nb.begin(), nb.end(), [&](int y) { return y < n; })) ++bad;
        }
        c[5].measured = bad;
        c[5].bound = 0;
        c[5].pass = bad == 0;
    }

    // G-7: no a- or b-cycle shorter than 4.
    {
        std::size_t shortest = std::numeric_limits<std::size_t>::max();
        for (Label l : {Label::a, Label::b})
            for (const auto& cyc : cycles(G, l)) shortest = std::min(shortest, cyc.size());
        c[6].measured = static_cast<double>(shortest);
        c[6].bound = 4;
        c[6].pass = shortest >= 4;
    }
    return rep;
}

LabeledGraph random_labeled_graph(int n, int min_cycle, std::uint64_t seed) {
    if (n < 1) throw InputError("n", "n: must be positive");
    if (min_cycle > n) throw InputError("min_cycle", "min_cycle exceeds n");
    std::mt19937_64 rng(seed);
    auto draw = [&] {
        std::vector<int> p(static_cast<std::size_t>(n));
        std::iota(p.begin(), p.end(), 0);
        std::shuffle(p.begin(), p.end(), rng);
        for (;;) {
            auto cyc = cycles_of(p);
            std::sort(cyc.begin(), cyc.end(), [](const auto& x, const auto& y) { return x.size() < y.size(); });
            if (static_cast<int>(cyc.front().size()) >= min_cycle) return p;
            std::uniform_int_distribution<std::size_t> other(1, cyc.size() - 1);
            const auto& small = cyc.front();
            const auto& big = cyc[other(rng)];
            std::swap(p[static_cast<std::size_t>(small.front())], p[static_cast<std::size_t>(big.front())]);
        }
    };
    LabeledGraph g;
    g.n = n;
    g.perm_a = draw();
    g.perm_b = draw();
    return g;
}

namespace {

std::vector<int> int_array(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_array()) throw InputError(key, key + ": expected an integer array");
    std::vector<int> out;
    for (const auto& x : j[key]) {
        if (!x.is_number_integer()) throw InputError(key, key + ": expected integers");
        out.push_back(x.get<int>());
    }
    return out;
}

}  // namespace

nlohmann::json to_json(const LabeledGraph& g) { return {{"n", g.n}, {"perm_a", g.perm_a}, {"perm_b", g.perm_b}}; }

LabeledGraph graph_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("", "top level must be an object");
    if (!j.contains("n") || !j["n"].is_number_integer()) throw InputError("n", "n: expected an integer");
    LabeledGraph g;
    g.n = j["n"].get<int>();
    g.perm_a = int_array(j, "perm_a");
    g.perm_b = int_array(j, "perm_b");
    g.validate();
    return g;
}

nlohmann::json to_json(const SurgeryResult& res) {
    nlohmann::json j = to_json(res.graph);
    j["original"] = res.original;
    j["W"] = res.W;
    j["B"] = res.B;
    j["A"] = res.A;
    j["inserted"] = res.inserted;
    return j;
}

nlohmann::json to_json(const SurgeryReport& rep) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& c : rep.conditions) j[c.name] = {{"pass", c.pass}, {"measured", c.measured}, {"bound", c.bound}};
    return j;
}

}  // namespace fpd
