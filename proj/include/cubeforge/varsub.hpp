#pragma once

#include "parallel.hpp"
#include "trails.hpp"

#include <absl/container/flat_hash_map.h>

#include <map>
#include <string>
#include <vector>

namespace cubeforge {

// z_i stands for entries[i], a non-constant polynomial in k
struct SubstitutionMap {
    std::vector<Poly> entries;

    std::size_t size() const { return entries.size(); }
};

struct MidRoundFunction {
    SymbolicState cells;
    int source_round = 0;
};

struct Substitution {
    MidRoundFunction g;
    SubstitutionMap map;
};

// Group each cell by x-part and replace every non-constant key coefficient
// with a z shared across all cells. Fresh z's are numbered in cell order, then
// canonical x-part order.
inline Substitution extract_substitution(const SymbolicState &state, int source_round = 0)
{
    Substitution out;
    out.g.source_round = source_round;
    absl::flat_hash_map<std::string, std::uint32_t> ids;
    for (int i = 0; i < 288; ++i) {
        std::map<Monomial, Poly, decltype(&canonical_less)> groups(&canonical_less);
        for (const auto &t : state[i].terms())
            groups[t.part(Space::x)].toggle(t.without(Space::x));
        Poly cell;
        for (auto &[v, h] : groups) {
            if (h.is_zero())
                continue;
            if (h.is_one()) {
                cell.toggle(v);
                continue;
            }
            if (degree(h, Space::x) > 0 || degree(h, Space::z) > 0)
                throw std::invalid_argument("extract_substitution: coefficient outside key space");
            auto [it, fresh] = ids.try_emplace(to_string(h), std::uint32_t(out.map.entries.size()));
            if (fresh)
                out.map.entries.push_back(h);
            Monomial zm = Monomial::z(it->second);
            cell.toggle(zm * v);
        }
        out.g.cells[i] = std::move(cell);
    }
    return out;
}

inline Poly expand_z(const Poly &p, const SubstitutionMap &map)
{
    return substitute(p, [&](Var v) -> std::optional<Poly> {
        if (v.space != Space::z)
            return std::nullopt;
        if (v.index >= map.entries.size())
            throw std::out_of_range("expand_z: z" + std::to_string(v.index) + " is not mapped");
        return map.entries[v.index];
    });
}

namespace detail {
    inline bool x_within(const Monomial &m, const Monomial &u) { return m.part(Space::x).divides(u); }

    inline Monomial cube_monomial(const Isoc &u)
    {
        Monomial m;
        for (int i : u)
            m = m * Monomial::x(i);
        return m;
    }
}

// Coe(prod of target cells, x^u) over g: multiplies the cells one at a time,
// dropping terms whose x-part leaves u. In GF(2) this is the parity table over
// z-patterns of the Copy-And-Xor trails into the target.
inline Poly coefficient_recovery(const Isoc &u, const Mask &target, const SymbolicState &cells)
{
    const Monomial cube = detail::cube_monomial(u);
    Poly acc = Poly::one();
    bool zero = false;
    target.for_each([&](int i) {
        if (zero)
            return;
        Poly f;
        for (const auto &t : cells[i].terms())
            if (detail::x_within(t, cube))
                f.toggle(t);
        Poly next;
        for (const auto &a : acc.terms())
            for (const auto &b : f.terms()) {
                Monomial m = a * b;
                if (detail::x_within(m, cube))
                    next.toggle(std::move(m));
            }
        acc = std::move(next);
        zero = acc.is_zero();
    });
    Poly out;
    for (const auto &t : acc.terms())
        if (t.part(Space::x) == cube)
            out.toggle(t.without(Space::x));
    return out;
}

inline Poly coefficient_recovery(const Isoc &u, const Mask &target, const MidRoundFunction &g)
{
    return coefficient_recovery(u, target, g.cells);
}

// Total number of trails from any monomial with x-part exactly x^u into the
// target product (counted over Z, before any GF(2) cancellation).
inline TrailCount coefficient_trail_count(const Isoc &u, const Mask &target, const SymbolicState &cells)
{
    const Monomial cube = detail::cube_monomial(u);
    absl::flat_hash_map<Monomial, TrailCount> acc{{Monomial{}, {1, false}}};
    target.for_each([&](int i) {
        absl::flat_hash_map<Monomial, TrailCount> next;
        for (const auto &[a, c] : acc)
            for (const auto &b : cells[i].terms()) {
                Monomial m = a * b;
                if (detail::x_within(m, cube))
                    next[m] += c;
            }
        acc = std::move(next);
    });
    TrailCount total;
    for (const auto &[m, c] : acc)
        if (m.part(Space::x) == cube)
            total += c;
    return total;
}

struct RecoveredSuperpoly {
    Poly z_poly;
    SubstitutionMap map;
    std::size_t valuable_terms = 0;
};

inline RecoveredSuperpoly recover_superpoly(const Isoc &I, int R, int r_m, Budget budget = {},
                                            std::size_t term_budget = kDefaultTermBudget)
{
    check_isoc(I);
    auto mid = symbolic_state(r_m, Assignment::cube(I), term_budget);
    auto sub = extract_substitution(mid, r_m);
    auto vt = obtain_valuable_terms(I, r_m, R, mid, budget);
    RecoveredSuperpoly out{{}, std::move(sub.map), vt.size()};
    std::vector<Poly> parts(vt.size());
    parallel_for(vt.size(), [&](std::size_t q) { parts[q] = coefficient_recovery(I, vt[q], sub.g); });
    for (auto &p : parts)
        out.z_poly += p;
    return out;
}

} // namespace cubeforge
