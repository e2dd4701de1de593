#pragma once

#include "degree.hpp"
#include "trivium.hpp"

#include <absl/container/flat_hash_map.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cubeforge {

// Monomial pattern over one layer's variables (up to 320 of them).
struct Mask {
    std::array<std::uint64_t, 5> w{};

    static Mask of(std::initializer_list<int> bits)
    {
        Mask m;
        for (int b : bits)
            m.set(b);
        return m;
    }
    void set(int i) { w[i >> 6] |= std::uint64_t(1) << (i & 63); }
    void reset(int i) { w[i >> 6] &= ~(std::uint64_t(1) << (i & 63)); }
    bool test(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }
    bool empty() const { return !(w[0] | w[1] | w[2] | w[3] | w[4]); }
    int count() const
    {
        int c = 0;
        for (auto x : w)
            c += std::popcount(x);
        return c;
    }
    Mask &operator|=(const Mask &o)
    {
        for (int i = 0; i < 5; ++i)
            w[i] |= o.w[i];
        return *this;
    }
    friend Mask operator|(Mask a, const Mask &b) { return a |= b; }
    bool subset_of(const Mask &o) const
    {
        for (int i = 0; i < 5; ++i)
            if (w[i] & ~o.w[i])
                return false;
        return true;
    }
    template <class F>
    void for_each(F &&f) const
    {
        for (int i = 0; i < 5; ++i)
            for (std::uint64_t x = w[i]; x; x &= x - 1)
                f(64 * i + std::countr_zero(x));
    }
    std::vector<int> bits() const
    {
        std::vector<int> v;
        for_each([&](int i) { v.push_back(i); });
        return v;
    }
    friend bool operator==(const Mask &, const Mask &) = default;
    // lexicographic on the bit lists
    friend bool operator<(const Mask &a, const Mask &b)
    {
        for (int i = 0; i < 5; ++i)
            if (a.w[i] != b.w[i]) {
                std::uint64_t d = a.w[i] ^ b.w[i];
                return (a.w[i] >> std::countr_zero(d)) & 1;
            }
        return false;
    }
    template <class H>
    friend H AbslHashValue(H h, const Mask &m)
    {
        return H::combine(std::move(h), m.w);
    }
};

// One layer maps state l to state l+1: output cell j is the XOR of AND-terms
// over the input cells (Copy fans each input out to the terms using it).
struct Layer {
    int in_width = 0;
    std::vector<std::vector<Mask>> cells;
};

// states 0..layers.size(); state 0 is the source layer
struct PropGraph {
    int r_start = 0;
    std::vector<Layer> layers;

    int states() const { return int(layers.size()) + 1; }
    int width(int state) const
    {
        return state < int(layers.size()) ? layers[state].in_width : int(layers.back().cells.size());
    }
};

struct EnumerationBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kDefaultNodeBudget = 1'000'000'000;

struct Budget {
    std::uint64_t limit = kDefaultNodeBudget;
    std::uint64_t used = 0;

    void charge(std::uint64_t n = 1)
    {
        used += n;
        if (used > limit)
            throw EnumerationBudgetExceeded("trail enumeration exceeded " + std::to_string(limit) + " nodes");
    }
};

// Trail count kept mod 2^64 (so parity is exact) plus an overflow flag.
struct TrailCount {
    std::uint64_t n = 0;
    bool saturated = false;

    TrailCount &operator+=(const TrailCount &o)
    {
        saturated |= o.saturated | __builtin_add_overflow(n, o.n, &n);
        return *this;
    }
    TrailCount operator*(const TrailCount &o) const
    {
        TrailCount r;
        r.saturated = saturated | o.saturated | __builtin_mul_overflow(n, o.n, &r.n);
        return r;
    }
    bool parity() const { return n & 1; }
};

using LayerMap = absl::flat_hash_map<Mask, TrailCount>;
// keep(state, pattern): false drops a pattern that cannot reach the source side
using Prune = std::function<bool(int, const Mask &)>;

// All preimage patterns of `p` (a pattern on state l+1) through layer l.
template <class F>
void layer_preimages(const Layer &L, const Mask &p, F &&emit)
{
    Mask fixed;
    std::vector<const std::vector<Mask> *> multi;
    bool dead = false;
    p.for_each([&](int j) {
        const auto &terms = L.cells[j];
        if (terms.empty())
            dead = true;
        else if (terms.size() == 1)
            fixed |= terms[0];
        else
            multi.push_back(&terms);
    });
    if (dead)
        return;
    std::vector<Mask> acc(multi.size() + 1);
    acc[0] = fixed;
    auto rec = [&](auto &&self, std::size_t q) -> void {
        if (q == multi.size()) {
            emit(acc[q]);
            return;
        }
        for (const auto &t : *multi[q]) {
            acc[q + 1] = acc[q] | t;
            self(self, q + 1);
        }
    };
    rec(rec, 0);
}

// Backward layered expansion from `at` (patterns on state `to`) down to
// state `from`. Identical patterns within a layer are merged, so every
// (layer, pattern) subproblem is expanded once.
inline LayerMap expand_backward(const PropGraph &g, LayerMap at, int to, int from, const Prune &keep, Budget &budget)
{
    for (int s = to; s > from; --s) {
        const Layer &L = g.layers[s - 1];
        LayerMap next;
        next.reserve(at.size() * 2);
        for (const auto &[p, c] : at)
            layer_preimages(L, p, [&](const Mask &q) {
                budget.charge();
                if (keep && !keep(s - 1, q))
                    return;
                next[q] += c;
            });
        at = std::move(next);
    }
    return at;
}

// Layers from..to-1 of g as a graph of their own.
inline PropGraph subgraph(const PropGraph &g, int from, int to)
{
    PropGraph h;
    h.r_start = g.r_start + from;
    h.layers.assign(g.layers.begin() + from, g.layers.begin() + to);
    return h;
}

struct TrailResult {
    bool parity = false;
    std::uint64_t count = 0;
    bool count_exact = true;
};

inline TrailResult count_trails_parity(const PropGraph &g, const Mask &source, const Mask &sink, Budget budget = {})
{
    LayerMap at{{sink, {1, false}}};
    auto m = expand_backward(g, std::move(at), g.states() - 1, 0, {}, budget);
    auto it = m.find(source);
    if (it == m.end())
        return {};
    return {it->second.parity(), it->second.n, !it->second.saturated};
}

// Layer whose cell j is the polynomial ps[j] over inputs x_0..x_{in_width-1}
// (any space letter; only indices matter).
inline Layer layer_from_polys(const std::vector<Poly> &ps, int in_width)
{
    Layer L{in_width, {}};
    for (const auto &p : ps) {
        std::vector<Mask> terms;
        for (const auto &t : p.sorted_terms()) {
            Mask m;
            t.for_each_var([&](Var v) {
                if (int(v.index) >= in_width)
                    throw std::out_of_range("layer_from_polys: variable outside input width");
                m.set(int(v.index));
            });
            terms.push_back(m);
        }
        L.cells.push_back(std::move(terms));
    }
    return L;
}

// ---- Trivium

// One update in rotation form: s'_0 = t3, s'_93 = t1, s'_177 = t2, else s'_j = s_{j-1}.
inline Layer trivium_layer()
{
    Layer L{288, std::vector<std::vector<Mask>>(288)};
    for (int j = 1; j < 288; ++j)
        if (j != 93 && j != 177)
            L.cells[j] = {Mask::of({j - 1})};
    L.cells[93] = {Mask::of({65}), Mask::of({92}), Mask::of({90, 91}), Mask::of({170})};
    L.cells[177] = {Mask::of({161}), Mask::of({176}), Mask::of({174, 175}), Mask::of({263})};
    L.cells[0] = {Mask::of({242}), Mask::of({287}), Mask::of({285, 286}), Mask::of({68})};
    return L;
}

inline Layer trivium_output_layer()
{
    Layer L{288, {{}}};
    for (int t : kOutputTaps)
        L.cells[0].push_back(Mask::of({t}));
    return L;
}

// States 0..R-r_start are the register after r_start..R rounds; the last
// state is the single output bit z.
inline PropGraph build_graph(int R, int r_start)
{
    if (r_start < 0 || r_start > R)
        throw std::invalid_argument("build_graph: need 0 <= r_start <= R");
    PropGraph g;
    g.r_start = r_start;
    auto L = trivium_layer();
    for (int r = r_start; r < R; ++r)
        g.layers.push_back(L);
    g.layers.push_back(trivium_output_layer());
    return g;
}

inline const Mask &output_sink()
{
    static const Mask m = Mask::of({0});
    return m;
}

// Degree prune for cube u: a pattern whose summed per-cell x-degree bound is
// below |u| (or that touches a cell that is identically zero) cannot reach x^u.
inline Prune degree_prune(const PropGraph &g, const Isoc &u, const std::vector<std::array<Degree, 288>> &bounds)
{
    const int need = int(u.size());
    const int last = g.states() - 1;
    auto rows = std::make_shared<std::vector<std::array<std::int16_t, 288>>>();
    for (const auto &b : bounds) {
        std::array<std::int16_t, 288> row;
        for (int i = 0; i < 288; ++i)
            row[i] = b[i].is_neg_inf() ? -1 : std::int16_t(std::min(b[i].value(), 1000));
        rows->push_back(row);
    }
    const int r_start = g.r_start;
    return [rows, need, last, r_start](int s, const Mask &p) {
        if (s >= last)
            return true;
        const auto &row = (*rows)[r_start + s];
        int sum = 0;
        bool dead = false;
        p.for_each([&](int i) {
            if (row[i] < 0)
                dead = true;
            sum += row[i];
        });
        return !dead && sum >= need;
    };
}

// Map a round-0 pattern to its monomial; nullopt if it hits a zero cell or a
// non-cube IV.
inline std::optional<Monomial> initial_monomial(const Mask &p, const Mask &cube_cells)
{
    Monomial m;
    bool ok = true;
    p.for_each([&](int i) {
        if (i < 80)
            m = m * Monomial::k(i);
        else if (i >= 93 && i < 173 && cube_cells.test(i))
            m = m * Monomial::x(i - 93);
        else if (i < 285)
            ok = false;
    });
    if (!ok)
        return std::nullopt;
    return m;
}

inline Mask cube_cells(const Isoc &I)
{
    Mask m;
    for (int i : I)
        m.set(93 + i);
    return m;
}

// Exact superpoly: odd-parity k^w with k^w x^u ~> z, expanded down to round 0.
inline Poly superpoly_direct(const Isoc &I, int R, Budget budget = {})
{
    check_isoc(I);
    auto g = build_graph(R, 0);
    auto bounds = bit_degree_bounds(I, R);
    auto keep = degree_prune(g, I, bounds);
    auto m = expand_backward(g, {{output_sink(), {1, false}}}, g.states() - 1, 0, keep, budget);
    const Mask cells = cube_cells(I);
    Monomial cube;
    for (int i : I)
        cube = cube * Monomial::x(i);
    Poly out;
    for (const auto &[p, c] : m) {
        if (!c.parity())
            continue;
        auto mono = initial_monomial(p, cells);
        if (mono && mono->part(Space::x) == cube)
            out.toggle(mono->part(Space::k));
    }
    return out;
}

// x-supports of a middle-round cell restricted to subsets of the cube,
// encoded as bitmasks over the cube positions.
inline std::vector<std::uint32_t> cube_support(const Poly &cell, const Isoc &u)
{
    std::vector<std::uint32_t> s;
    for (const auto &t : cell.sorted_terms()) {
        std::uint32_t b = 0;
        bool inside = true;
        t.for_each_var([&](Var v) {
            if (v.space != Space::x)
                return;
            auto it = std::lower_bound(u.begin(), u.end(), int(v.index));
            if (it == u.end() || *it != int(v.index))
                inside = false;
            else
                b |= std::uint32_t(1) << (it - u.begin());
        });
        if (inside)
            s.push_back(b);
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

// Whether a trail from some k^w x^u reaches the product of the cells in `term`:
// OR-closure of the cells' cube supports must contain the full cube.
inline bool reachable_from_cube(const Mask &term, const std::vector<std::vector<std::uint32_t>> &supports, int cube_size)
{
    if (cube_size > 24)
        throw std::invalid_argument("reachability check limited to cubes of size <= 24");
    const std::uint32_t full = (std::uint32_t(1) << cube_size) - 1;
    std::vector<std::uint8_t> cur(std::size_t(full) + 1, 0), nxt(cur.size());
    cur[0] = 1;
    bool ok = true;
    term.for_each([&](int i) {
        if (!ok)
            return;
        std::fill(nxt.begin(), nxt.end(), 0);
        bool any = false;
        for (std::uint32_t a = 0; a <= full; ++a)
            if (cur[a])
                for (auto b : supports[i]) {
                    nxt[a | b] = 1;
                    any = true;
                }
        std::swap(cur, nxt);
        ok = any;
    });
    return ok && cur[full];
}

using ValuableTerms = std::vector<Mask>;

// Valuable terms at round r_m: odd trail parity to z at round R and reachable
// from the cube. Each middle pattern is finalized exactly once (the merged
// layer map doubles as the exclusion set).
inline ValuableTerms obtain_valuable_terms(const Isoc &u, int r_m, int R, const SymbolicState &mid, Budget budget = {})
{
    if (!(0 < r_m && r_m < R))
        throw std::invalid_argument("obtain_valuable_terms: need 0 < r_m < R");
    check_isoc(u);
    auto g = build_graph(R, r_m);
    auto bounds = bit_degree_bounds(u, R);
    auto keep = degree_prune(g, u, bounds);
    auto m = expand_backward(g, {{output_sink(), {1, false}}}, g.states() - 1, 0, keep, budget);
    std::vector<std::vector<std::uint32_t>> supports(288);
    for (int i = 0; i < 288; ++i)
        supports[i] = cube_support(mid[i], u);
    ValuableTerms out;
    for (const auto &[p, c] : m)
        if (c.parity() && reachable_from_cube(p, supports, int(u.size())))
            out.push_back(p);
    std::sort(out.begin(), out.end());
    return out;
}

inline ValuableTerms obtain_valuable_terms(const Isoc &u, int r_m, int R, Budget budget = {})
{
    return obtain_valuable_terms(u, r_m, R, symbolic_state(r_m, Assignment::cube(u)), budget);
}

} // namespace cubeforge
