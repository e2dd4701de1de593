#pragma once

#include "corr_attack.hpp"
#include "isoc_search.hpp"
#include "varsub.hpp"

#include <random>
#include <vector>

namespace cubeforge {

struct CorpusParams {
    int rounds = 0;
    SearchParams search;
    int mode = 3;
    int r_m = 0;              // 0: 200 when rounds > 200, else rounds / 2
    int screen_keys = 64;     // cube sums per ISoC before recovery
    std::uint64_t seed = 0;
    std::uint64_t budget = kDefaultNodeBudget;
};

struct CorpusResult {
    std::vector<SpecialCube> cubes; // nonzero superpolys, search order
    std::size_t good = 0;
    std::size_t screened_nonzero = 0;
    std::size_t over_budget = 0;
    std::uint64_t estimator_calls = 0;
};

inline int default_middle_round(int R) { return R > 200 ? 200 : R / 2; }

// isoc search, then a cube-sum screen (zero on every screening key means
// the superpoly is skipped), then superpoly recovery in the substituted form.
inline CorpusResult build_corpus(const CorpusParams &p)
{
    CorpusResult out;
    auto found = search(p.search, {p.rounds, p.mode});
    out.good = found.good.size();
    out.estimator_calls = found.estimator_calls;
    const int r_m = p.r_m ? p.r_m : default_middle_round(p.rounds);

    std::vector<std::optional<SpecialCube>> cubes(found.good.size());
    std::vector<char> nonzero(found.good.size(), 0), over(found.good.size(), 0);
    parallel_for(found.good.size(), [&](std::size_t q) {
        const Isoc &I = found.good[q].isoc;
        std::mt19937_64 rng(p.seed ^ (0x9e3779b97f4a7c15ULL * (q + 1)));
        bool any = false;
        for (int t = 0; t < p.screen_keys && !any; ++t) {
            Key80 k;
            for (int i = 0; i < 80; ++i)
                k[i] = rng() & 1;
            any = cube_sum(k, I, p.rounds);
        }
        if (!any)
            return;
        nonzero[q] = 1;
        try {
            auto rec = recover_superpoly(I, p.rounds, r_m, Budget{p.budget});
            Poly f = expand_z(rec.z_poly, rec.map);
            if (!f.is_zero())
                cubes[q] = SpecialCube{I, std::move(f)};
        } catch (const EnumerationBudgetExceeded &) {
            over[q] = 1;
        } catch (const TermBudgetExceeded &) {
            over[q] = 1;
        }
    }, p.search.threads);
    for (std::size_t q = 0; q < cubes.size(); ++q) {
        out.screened_nonzero += nonzero[q];
        out.over_budget += over[q];
        if (cubes[q])
            out.cubes.push_back(std::move(*cubes[q]));
    }
    return out;
}

} // namespace cubeforge
