#pragma once

#include "anf.hpp"
#include "parallel.hpp"
#include "trivium.hpp"

#include <absl/container/flat_hash_map.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cubeforge {

// ---- key-space evaluation, 64 keys per word

using KeyLanes = std::array<Lanes, 80>;

// A polynomial over k compiled to index lists for bitsliced evaluation.
class KeyPoly {
public:
    KeyPoly() = default;
    explicit KeyPoly(const Poly &p)
    {
        for (const auto &m : p.terms()) {
            if (m.degree(Space::x) || m.degree(Space::z))
                throw std::invalid_argument("KeyPoly: polynomial must be over k only");
            if (m.is_one()) {
                constant_ = !constant_;
                continue;
            }
            std::vector<std::uint8_t> vars;
            m.for_each_var([&](Var v) { vars.push_back(std::uint8_t(v.index)); });
            terms_.push_back(std::move(vars));
        }
    }

    Lanes operator()(const KeyLanes &k) const
    {
        Lanes acc = broadcast(constant_);
        for (const auto &t : terms_) {
            Lanes w = ~Lanes(0);
            for (auto i : t)
                w &= k[i];
            acc ^= w;
        }
        return acc;
    }

    bool operator()(const Key80 &k) const
    {
        bool acc = constant_;
        for (const auto &t : terms_) {
            bool w = true;
            for (auto i : t)
                w = w && k[i];
            acc ^= w;
        }
        return acc;
    }

private:
    std::vector<std::vector<std::uint8_t>> terms_;
    bool constant_ = false;
};

inline KeyLanes random_key_lanes(std::mt19937_64 &rng)
{
    KeyLanes k;
    for (auto &w : k)
        w = rng();
    return k;
}

inline Key80 key_from_lane(const KeyLanes &k, int lane)
{
    Key80 key;
    for (int i = 0; i < 80; ++i)
        key[i] = (k[i] >> lane) & 1;
    return key;
}

// ---- preprocessing

struct CandidateFamily {
    std::vector<Poly> polys;

    // k_i + k_{i+25}k_{i+26} + k_{i+27} (0 <= i <= 52), k_53 + k_78k_79, k_i (54 <= i <= 65)
    static CandidateFamily trivium_default()
    {
        CandidateFamily f;
        for (int i = 0; i <= 52; ++i)
            f.polys.push_back(Poly::k(i) + Poly::k(i + 25) * Poly::k(i + 26) + Poly::k(i + 27));
        f.polys.push_back(Poly::k(53) + Poly::k(78) * Poly::k(79));
        for (int i = 54; i <= 65; ++i)
            f.polys.push_back(Poly::k(i));
        return f;
    }

    void validate() const
    {
        if (polys.empty())
            throw std::invalid_argument("candidate family is empty");
        for (const auto &h : polys) {
            if (h.is_constant())
                throw std::invalid_argument("candidate family: constant polynomial");
            if (h.degree() > 2)
                throw std::invalid_argument("candidate family: degree above 2 in " + to_string(h));
            if (degree(h, Space::x) > 0 || degree(h, Space::z) > 0)
                throw std::invalid_argument("candidate family: non-key variable in " + to_string(h));
        }
    }
};

struct SpecialCube {
    Isoc isoc;
    Poly superpoly; // over k
};

struct FactorEntry {
    Poly h;
    std::vector<Isoc> isocs;
    double pr00 = 0;      // Pr(h = 0 | every f_I = 0)
    double pr_f1 = 0;     // Pr(some f_I != 0)
    std::uint64_t samples = 0;
    std::uint64_t conditioned = 0; // samples with every f_I = 0
};

struct FactorTable {
    int rounds = 0;
    double p = 0.77;
    std::uint64_t seed = 0;
    std::vector<FactorEntry> T, T1;
    std::vector<std::string> warnings;
};

struct PreprocessOptions {
    double p = 0.77;
    std::uint64_t samples = 10000;
    std::uint64_t seed = 0;
    int rounds = 0;
    unsigned threads = 0;
};

// T_h = cubes whose superpoly h divides; pr00 is sampled over random keys and
// routes h to T (pr00 > p) or T1. Zero superpolys carry no information and are
// skipped, as are h with an empty T_h.
inline FactorTable preprocess(const std::vector<SpecialCube> &cubes, const CandidateFamily &family,
                              const PreprocessOptions &opt = {})
{
    family.validate();
    if (opt.samples < 1000)
        throw std::invalid_argument("preprocess: need at least 1000 samples");
    FactorTable out;
    out.rounds = opt.rounds;
    out.p = opt.p;
    out.seed = opt.seed;

    const std::size_t batches = (opt.samples + 63) / 64;
    std::mt19937_64 rng(opt.seed);
    std::vector<KeyLanes> keys(batches);
    for (auto &k : keys)
        k = random_key_lanes(rng);
    auto lane_mask = [&](std::size_t b) {
        std::uint64_t rest = opt.samples - 64 * b;
        return rest >= 64 ? ~Lanes(0) : (Lanes(1) << rest) - 1;
    };

    // nonzero-superpoly cube values, evaluated once per sampled key
    std::vector<std::size_t> live;
    for (std::size_t c = 0; c < cubes.size(); ++c)
        if (!cubes[c].superpoly.is_zero())
            live.push_back(c);
    std::vector<std::vector<Lanes>> fval(cubes.size());
    parallel_for(live.size(), [&](std::size_t q) {
        std::size_t c = live[q];
        KeyPoly f(cubes[c].superpoly);
        fval[c].resize(batches);
        for (std::size_t b = 0; b < batches; ++b)
            fval[c][b] = f(keys[b]);
    }, opt.threads);

    std::vector<std::optional<FactorEntry>> entries(family.polys.size());
    parallel_for(family.polys.size(), [&](std::size_t j) {
        const Poly &h = family.polys[j];
        std::vector<std::size_t> Th;
        for (std::size_t c : live)
            if (divides(h, cubes[c].superpoly))
                Th.push_back(c);
        if (Th.empty())
            return;
        KeyPoly hk(h);
        std::uint64_t cond = 0, h0 = 0;
        for (std::size_t b = 0; b < batches; ++b) {
            Lanes all_zero = lane_mask(b);
            for (std::size_t c : Th)
                all_zero &= ~fval[c][b];
            cond += std::popcount(all_zero);
            h0 += std::popcount(all_zero & ~hk(keys[b]));
        }
        FactorEntry e;
        e.h = h;
        for (std::size_t c : Th)
            e.isocs.push_back(cubes[c].isoc);
        e.samples = opt.samples;
        e.conditioned = cond;
        e.pr00 = cond ? double(h0) / double(cond) : 0;
        e.pr_f1 = 1 - double(cond) / double(opt.samples);
        entries[j] = std::move(e);
    }, opt.threads);

    for (auto &e : entries) {
        if (!e)
            continue;
        if (e->conditioned == 0) {
            out.warnings.push_back("dropped " + to_string(e->h) + ": no sampled key makes every superpoly zero");
            continue;
        }
        (e->pr00 > opt.p ? out.T : out.T1).push_back(std::move(*e));
    }
    auto by_pr = [](const FactorEntry &a, const FactorEntry &b) {
        if (a.pr00 != b.pr00)
            return a.pr00 > b.pr00;
        return to_string(a.h) < to_string(b.h);
    };
    std::sort(out.T.begin(), out.T.end(), by_pr);
    std::sort(out.T1.begin(), out.T1.end(), by_pr);
    return out;
}

// ---- online phase

struct Equation {
    Poly h;
    bool value = false;

    friend bool operator==(const Equation &, const Equation &) = default;
};

struct EquationSets {
    std::vector<Equation> G0, G1;
};

using CubeOracle = std::function<bool(const Isoc &)>;

// G0/G1 from the cube values supplied by `f` (memoized per ISoC).
inline EquationSets online_equations(const FactorTable &table, const CubeOracle &f)
{
    std::map<Isoc, bool> memo;
    auto value = [&](const Isoc &I) {
        auto it = memo.find(I);
        if (it == memo.end())
            it = memo.emplace(I, f(I)).first;
        return it->second;
    };
    auto any_nonzero = [&](const FactorEntry &e) {
        for (const auto &I : e.isocs)
            if (value(I))
                return true;
        return false;
    };
    EquationSets g;
    for (const auto &e : table.T) {
        if (any_nonzero(e))
            g.G1.push_back({e.h, true});
        else
            g.G0.push_back({e.h, false});
    }
    for (const auto &e : table.T1)
        if (any_nonzero(e))
            g.G1.push_back({e.h, true});
    return g;
}

// Online phase against a local victim: real cube sums at R rounds.
inline EquationSets online_simulate(const Key80 &true_key, const FactorTable &table, int R)
{
    return online_equations(table, [&](const Isoc &I) { return cube_sum(true_key, I, R); });
}

// ---- key recovery

// Victim keystream used to check candidates.
struct KeyCheck {
    IV80 iv;
    std::vector<bool> keystream;
    int init_rounds = kInitRounds;
};

inline KeyCheck make_key_check(const Key80 &key, const IV80 &iv = {}, int nbits = 160, int init_rounds = kInitRounds)
{
    if (nbits < 1)
        throw std::invalid_argument("make_key_check: need keystream bits");
    return {iv, keystream(key, iv, nbits, init_rounds), init_rounds};
}

// Lanes whose candidate key reproduces the whole check keystream.
inline Lanes check_keys(const KeyCheck &c, const KeyLanes &k)
{
    KeyLanes iv;
    for (int i = 0; i < 80; ++i)
        iv[i] = broadcast(c.iv[i]);
    auto reg = batch_init(k, iv);
    for (int r = 0; r < c.init_rounds; ++r)
        reg.step();
    Lanes ok = ~Lanes(0);
    for (bool z : c.keystream) {
        ok &= ~(reg.output() ^ broadcast(z));
        if (!ok)
            return 0;
        reg.step();
    }
    return ok;
}

// Equations solved top-down: an equation pivots on k_i when k_i appears only
// as a linear term and every other variable has a larger index. For the
// default family every equation pivots; duplicates and non-triangular
// equations are kept as consistency checks.
class SolvePlan {
public:
    // eqs = G1 followed by G0
    explicit SolvePlan(const std::vector<Equation> &eqs)
    {
        pivot_.fill(-1);
        rest_.resize(eqs.size());
        for (std::size_t q = 0; q < eqs.size(); ++q) {
            const Poly &h = eqs[q].h;
            int low = 80;
            for (const auto &m : h.terms())
                m.for_each_var([&](Var v) {
                    if (v.space != Space::k)
                        throw std::invalid_argument("solve: equation outside key space");
                    low = std::min(low, int(v.index));
                });
            bool pivots = low < 80 && h.contains(Monomial::k(low));
            for (const auto &m : h.terms()) {
                if (m == Monomial::k(low))
                    continue;
                if (m.has({Space::k, std::uint32_t(low)}))
                    pivots = false;
                std::vector<std::uint8_t> vars;
                m.for_each_var([&](Var v) { vars.push_back(std::uint8_t(v.index)); });
                rest_[q].push_back(std::move(vars));
            }
            if (pivots && pivot_[low] < 0) {
                pivot_[low] = int(q);
            } else {
                checks_.push_back(q);
                rest_[q] = {};
                whole_.emplace(q, KeyPoly(h));
            }
        }
        for (int i = 79; i >= 0; --i)
            if (pivot_[i] < 0)
                free_.push_back(i);
    }

    const std::vector<int> &free_bits() const { return free_; }

    // Builds the key for one guess of the free bits under equation values
    // `rhs`; false when a check equation fails.
    bool build(std::uint64_t guess, const std::vector<bool> &rhs, Key80 &k) const
    {
        std::size_t g = 0;
        for (int i = 79; i >= 0; --i) {
            int q = pivot_[i];
            if (q < 0) {
                k[i] = g < 64 && ((guess >> g) & 1);
                ++g;
                continue;
            }
            bool v = rhs[q];
            for (const auto &t : rest_[q]) {
                bool w = true;
                for (auto j : t)
                    w = w && k[j];
                v ^= w;
            }
            k[i] = v;
        }
        for (auto q : checks_)
            if (whole_.at(q)(k) != rhs[q])
                return false;
        return true;
    }

private:
    std::array<int, 80> pivot_;
    std::vector<std::vector<std::vector<std::uint8_t>>> rest_;
    std::vector<int> free_;
    std::vector<std::size_t> checks_;
    absl::flat_hash_map<std::size_t, KeyPoly> whole_;
};

inline std::uint64_t kDefaultCandidateCap = std::uint64_t(1) << 32;

// Visits candidate keys for exactly `e` flipped G0 equations, flip sets in
// lexicographic order and free-bit guesses ascending within each. fn returns
// true to stop. Returns false when the candidate cap was hit.
template <class Fn>
bool for_each_candidate(const EquationSets &g, int e, Fn &&fn, std::uint64_t cap = kDefaultCandidateCap)
{
    std::vector<Equation> eqs = g.G1;
    eqs.insert(eqs.end(), g.G0.begin(), g.G0.end());
    SolvePlan plan(eqs);
    const std::size_t b = g.G1.size(), a = g.G0.size();
    if (e < 0 || std::size_t(e) > a)
        return true;
    const int f = int(plan.free_bits().size());
    if (f > 63)
        return false;
    std::vector<bool> rhs(eqs.size());
    std::vector<std::size_t> flip(e);
    for (int i = 0; i < e; ++i)
        flip[i] = i;
    std::uint64_t visited = 0;
    Key80 k;
    for (;;) {
        for (std::size_t q = 0; q < eqs.size(); ++q)
            rhs[q] = eqs[q].value;
        for (auto i : flip)
            rhs[b + i] = !rhs[b + i];
        for (std::uint64_t guess = 0; guess < (std::uint64_t(1) << f); ++guess) {
            if (visited++ >= cap)
                return false;
            if (plan.build(guess, rhs, k) && fn(k))
                return true;
        }
        int i = e - 1;
        while (i >= 0 && flip[i] == a - e + i)
            --i;
        if (i < 0)
            return true;
        ++flip[i];
        for (int j = i + 1; j < e; ++j)
            flip[j] = flip[j - 1] + 1;
    }
}

struct SolveResult {
    std::optional<Key80> key;
    int e = -1;                    // flips at which the key was found
    std::uint64_t candidates = 0;  // keys checked against the keystream
    bool capped = false;
};

// Tries e = 0, 1, ..., e_max; candidates are checked 64 at a time.
inline SolveResult solve_keys(const EquationSets &g, int e_max, const KeyCheck &check,
                              std::uint64_t cap = kDefaultCandidateCap)
{
    SolveResult res;
    for (int e = 0; e <= e_max && !res.key; ++e) {
        std::vector<Key80> batch;
        auto flush = [&] {
            KeyLanes kl{};
            for (std::size_t l = 0; l < batch.size(); ++l)
                for (int i = 0; i < 80; ++i)
                    if (batch[l][i])
                        kl[i] |= Lanes(1) << l;
            Lanes ok = check_keys(check, kl);
            if (batch.size() < 64)
                ok &= (Lanes(1) << batch.size()) - 1;
            res.candidates += batch.size();
            batch.clear();
            if (!ok)
                return false;
            res.key = key_from_lane(kl, std::countr_zero(ok));
            res.e = e;
            return true;
        };
        bool complete = for_each_candidate(g, e, [&](const Key80 &k) {
            batch.push_back(k);
            return batch.size() == 64 && flush();
        }, cap);
        if (!res.key && !batch.empty())
            flush();
        if (!complete && !res.key) {
            res.capped = true;
            break;
        }
    }
    return res;
}

// ---- complexity accounting

struct AttackCost {
    double precompute_log2 = 0; // cube sums
    double online_log2 = 0;     // exhaustive search over free bits and flips
    double total_log2 = 0;
};

inline double log2_sum(double a, double b)
{
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log2(1 + std::exp2(lo - hi));
}

// log2 of sum_{i<=e} C(a, i)
inline double log2_binomial_prefix(int a, int e)
{
    double acc = 0; // log2 C(a, 0)
    double term = 0;
    for (int i = 1; i <= std::min(a, e); ++i) {
        term += std::log2(double(a - i + 1)) - std::log2(double(i));
        acc = log2_sum(acc, term);
    }
    return acc;
}

// C_k = cube_count * 2^cube_size + 2^(80-a-b) * sum_{i<=e} C(a, i), in log2.
inline AttackCost complexity_estimate(int a, int b, int e, double cube_count, int cube_size)
{
    if (a < 0 || b < 0 || e < 0 || cube_count <= 0)
        throw std::invalid_argument("complexity_estimate: negative parameter");
    AttackCost c;
    c.precompute_log2 = std::log2(cube_count) + cube_size;
    c.online_log2 = double(80 - a - b) + log2_binomial_prefix(a, e);
    c.total_log2 = log2_sum(c.precompute_log2, c.online_log2);
    return c;
}

// ---- simulation over many keys

struct TrialOutcome {
    int a = 0, b = 0, e = 0;
    double log2_cost = 0;
    std::uint64_t g1_false = 0; // must stay 0
};

inline TrialOutcome score_trial(const Key80 &key, const EquationSets &g, double cube_count, int cube_size)
{
    TrialOutcome t;
    t.a = int(g.G0.size());
    t.b = int(g.G1.size());
    for (const auto &q : g.G0)
        t.e += KeyPoly(q.h)(key) != q.value;
    for (const auto &q : g.G1)
        t.g1_false += KeyPoly(q.h)(key) != q.value;
    t.log2_cost = complexity_estimate(t.a, t.b, t.e, cube_count, cube_size).total_log2;
    return t;
}

// Pr(h = 0 | every cube sum of T_h is 0): G0 outcomes against the table's pr00.
struct G0Calibration {
    std::uint64_t events = 0, correct = 0;
    double predicted_sum = 0;

    double empirical() const { return events ? double(correct) / double(events) : 0; }
    double predicted() const { return events ? predicted_sum / double(events) : 0; }
};

inline void calibrate_g0(const FactorTable &table, const Key80 &key, const EquationSets &g, G0Calibration &acc)
{
    for (const auto &q : g.G0)
        for (const auto &e : table.T)
            if (e.h == q.h) {
                ++acc.events;
                acc.correct += KeyPoly(q.h)(key) == q.value;
                acc.predicted_sum += e.pr00;
                break;
            }
}

// Share of trials with log2 cost <= each threshold.
inline std::vector<double> cost_proportions(const std::vector<TrialOutcome> &trials, const std::vector<double> &log2_thresholds)
{
    std::vector<double> out;
    for (double c : log2_thresholds) {
        std::size_t n = 0;
        for (const auto &t : trials)
            n += t.log2_cost <= c + 1e-9;
        out.push_back(trials.empty() ? 0 : double(n) / double(trials.size()));
    }
    return out;
}

// ---- exact two-sided binomial test

inline double binomial_log_pmf(std::uint64_t k, std::uint64_t n, double p)
{
    return std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) - std::lgamma(double(n - k) + 1) +
           double(k) * std::log(p) + double(n - k) * std::log1p(-p);
}

// p-value: total probability of outcomes no more likely than the observed one.
inline double binomial_two_sided_p(std::uint64_t successes, std::uint64_t trials, double p0)
{
    if (trials < 1 || successes > trials || !(p0 > 0 && p0 < 1))
        throw std::invalid_argument("binomial test: need trials >= 1, successes <= trials, 0 < p0 < 1");
    const double obs = binomial_log_pmf(successes, trials, p0);
    const double tol = std::log1p(1e-7);
    double total = 0;
    for (std::uint64_t k = 0; k <= trials; ++k) {
        double l = binomial_log_pmf(k, trials, p0);
        if (l <= obs + tol)
            total += std::exp(l);
    }
    return std::min(1.0, total);
}

// True when the null hypothesis (success rate p0) is not rejected at alpha.
inline bool binomial_check(std::uint64_t successes, std::uint64_t trials, double p0, double alpha = 0.01)
{
    return binomial_two_sided_p(successes, trials, p0) >= alpha;
}

} // namespace cubeforge
