// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.

#include "cubeforge/corr_attack.hpp"
#include "cubeforge/degree.hpp"
#include "cubeforge/fixtures.hpp"
#include "cubeforge/isoc_search.hpp"
#include "cubeforge/pipeline.hpp"
#include "cubeforge/trails.hpp"
#include "cubeforge/varsub.hpp"
#include "cases.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

using namespace cubeforge;

namespace {

using Clock = std::chrono::steady_clock;
const Degree NI = Degree::neg_inf();

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string &why)
    {
        if (!ok && pass) {
            pass = false;
            detail = why;
        }
    }
};

template <class... A>
std::string fmt(const char *f, A... a)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

VectorDegree random_vdeg(std::mt19937_64 &rng, int d)
{
    VectorDegree v(d);
    for (auto &e : v.entries)
        e = rng() % 4 == 0 ? NI : Degree(int(rng() % 5));
    return v;
}

// ---- 1: worked example for the vector numeric mapping

Verdict golden_example()
{
    Verdict v;
    auto t0 = Clock::now();
    auto f = parse_poly("x0x1");
    std::vector<Degree> d{2, 2};
    std::vector<Poly> g{parse_poly("x0x2+x1"), parse_poly("x0x1+x3")};
    auto map_under = [&](std::vector<int> J) {
        std::vector<VectorDegree> V{vector_degree(g[0], J), vector_degree(g[1], J)};
        return vdeg_map(f, V);
    };
    auto w0 = map_under({0});
    auto w1 = map_under({1});
    auto w01 = map_under({0, 1});
    double us = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    v.require(numeric_deg(f, d) == Degree(4), "DEG(f,(2,2)) != 4");
    v.require(w0 == VectorDegree(1, {2, 2}) && degree_from_vdeg(w0) == Degree(3), "I={0}: " + w0.str());
    v.require(w1 == VectorDegree(1, {3, 3}) && degree_from_vdeg(w1) == Degree(4), "I={1}: " + w1.str());
    v.require(w01 == VectorDegree(2, {NI, 2, 1, 1}) && degree_from_vdeg(w01) == Degree(3), "I={0,1}: " + w01.str());
    v.require(us < 1000, fmt("took %.0f us", us));
    if (v.pass)
        v.detail = fmt("(2,2)/3, (3,3)/4, (-inf,2,1,1)/3 in %.0f us", us);
    return v;
}

// ---- 2: substituted recovery against trail enumeration and cube sums

Verdict superpoly_equivalence()
{
    Verdict v;
    std::mt19937_64 rng(2002);
    int nonzero = 0;
    for (int q = 0; q < 50 && v.pass; ++q) {
        // uniform draws are nearly always trivially zero, so most cases are filtered
        Case c = q % 5 == 0 ? uniform_case(rng, 100, 450, 4, 12)
               : q % 5 < 3  ? nontrivial_case(rng, 100, 450, 4, 12)
                            : nonzero_case(rng, 100, 450, 4, 12);
        int r_m = default_middle_round(c.R);
        auto rec = recover_superpoly(c.I, c.R, r_m);
        Poly f = expand_z(rec.z_poly, rec.map);
        Poly direct = superpoly_direct(c.I, c.R);
        std::ostringstream where;
        where << "case " << q << " R=" << c.R << " |I|=" << c.I.size();
        v.require(f == direct, where.str() + ": recovered != direct");
        nonzero += !f.is_zero();
        KeyPoly kp(f);
        for (int t = 0; t < 200 && v.pass; ++t) {
            Key80 k = oracle::random_key(rng);
            v.require(kp(k) == cube_sum(k, c.I, c.R), where.str() + ": evaluation != cube sum");
        }
    }
    if (v.pass)
        v.detail = fmt("50 cases equal, %d non-zero superpolys, 200 keys each", nonzero);
    return v;
}

// ---- 3: estimate never below the exact degree

int x_degree(const Poly &p)
{
    int d = -1;
    for (const auto &m : p.terms())
        d = std::max(d, m.degree(Space::x));
    return d;
}

// Exact from the key-symbolic state while it fits; otherwise a truth-table
// lower bound over 8 keys (a violation against a lower bound is still real).
int exact_degree(const Isoc &I, int R, std::mt19937_64 &rng, bool &symbolic)
{
    try {
        auto s = symbolic_state(R, Assignment::cube(I), std::size_t(1) << 22);
        symbolic = true;
        return x_degree(output_poly(s));
    } catch (const TermBudgetExceeded &) {
    }
    symbolic = false;
    int best = -1;
    for (int key = 0; key < 8; ++key) {
        Key80 k = oracle::random_key(rng);
        std::vector<std::uint8_t> tt(std::size_t(1) << I.size());
        for (std::size_t p = 0; p < tt.size(); ++p) {
            IV80 iv;
            for (std::size_t j = 0; j < I.size(); ++j)
                iv[I[j]] = (p >> j) & 1;
            tt[p] = oracle::output_after(k, iv, R);
        }
        best = std::max(best, oracle::anf_from_truth_table(tt, int(I.size())).degree());
    }
    return best;
}

Verdict degree_soundness()
{
    Verdict v;
    std::mt19937_64 rng(3003);
    int tight = 0, sym = 0;
    for (int t = 0; t < 100 && v.pass; ++t) {
        auto I = oracle::random_subset(rng, 80, 1 + int(rng() % 12));
        std::vector<int> J;
        for (int i : I)
            if (rng() % 3 == 0)
                J.push_back(i);
        int R = int(rng() % 351);
        bool symbolic = false;
        int exact = exact_degree(I, R, rng, symbolic);
        sym += symbolic;
        Degree bound = estimate_trivium(I, J, R, 1);
        tight += bound < Degree(int(I.size()));
        v.require(exact < 0 || Degree(exact) <= bound,
                  fmt("R=%d |I|=%zu |J|=%zu exact %d > bound %s", R, I.size(), J.size(), exact, bound.str().c_str()));
    }
    if (v.pass)
        v.detail = fmt("0 violations in 100 cases (%d below |I|, %d exact symbolic)", tight, sym);
    return v;
}

// ---- 4: vector numeric mapping against numeric mapping

// 36 pairwise non-adjacent indices, then l more so that exactly l adjacent pairs exist.
Isoc adjacent_isoc(std::mt19937_64 &rng, int l)
{
    auto pairs = [](const std::set<int> &s) {
        int p = 0;
        for (int i : s)
            p += s.count(i + 1);
        return p;
    };
    for (;;) {
        std::vector<int> order(80);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::set<int> I;
        for (int i : order)
            if (I.size() < 36 && !I.count(i - 1) && !I.count(i + 1))
                I.insert(i);
        if (I.size() < 36)
            continue;
        std::shuffle(order.begin(), order.end(), rng);
        for (int j : order) {
            if (int(I.size()) == 36 + l)
                break;
            if (I.count(j))
                continue;
            auto T = I;
            T.insert(j);
            if (pairs(T) == int(T.size()) - 36)
                I = std::move(T);
        }
        if (int(I.size()) == 36 + l && pairs(I) == l)
            return Isoc(I.begin(), I.end());
    }
}

Verdict tightness()
{
    Verdict v;
    std::mt19937_64 rng(4004);
    const int per_l = 100, rmax = 900, cap = 8;
    std::string means;
    double mid = 0;
    for (int l = 0; l <= 8 && v.pass; ++l) {
        double sum = 0;
        for (int q = 0; q < per_l && v.pass; ++q) {
            Isoc I = adjacent_isoc(rng, l);
            int n = int(I.size());
            auto J = choose_index_set(I, rmax, cap, rng);
            int vnm = max_zero_sum_round(estimate_trivium_series(I, J, rmax, 1), n);
            int nm = max_zero_sum_round(estimate_trivium_series(I, {}, rmax, 1), n);
            v.require(vnm >= nm, fmt("l=%d: vector %d < numeric %d", l, vnm, nm));
            sum += vnm - nm;
        }
        means += fmt("%s%.1f", l ? " " : "", sum / per_l);
        if (l >= 2 && l <= 5)
            mid += sum / per_l / 4;
    }
    v.require(mid >= 20, fmt("mean improvement at l=2..5 is %.1f", mid));
    if (v.pass)
        v.detail = fmt("mean gain l=0..8: %s; l=2..5 mean %.1f rounds", means.c_str(), mid);
    return v;
}

// ---- 5: property suites

Verdict properties()
{
    Verdict v;
    std::mt19937_64 rng(5005);
    int violations = 0;
    // domination under composition
    for (int t = 0; t < 500; ++t) {
        int n = 1 + int(rng() % 4), m = 4 + int(rng() % 9);
        auto f = oracle::random_poly(rng, n, 1 + int(rng() % 5), 3);
        std::vector<Poly> g;
        for (int i = 0; i < n; ++i)
            g.push_back(oracle::random_poly(rng, m, 1 + int(rng() % 6), 4));
        auto J = oracle::random_subset(rng, m, int(rng() % 5));
        std::vector<VectorDegree> V;
        for (auto &gi : g)
            V.push_back(vector_degree(gi, J));
        violations += !vector_degree(compose(f, g), J).dominated_by(vdeg_map(f, V));
    }
    v.require(!violations, fmt("%d composition domination violations", violations));
    // folded domination
    for (int t = 0; t < 500; ++t) {
        int n = 1 + int(rng() % 4), d = 1 + int(rng() % 5), k = int(rng() % (d + 1));
        auto f = oracle::random_poly(rng, n, 1 + int(rng() % 5), 3);
        std::vector<VectorDegree> V2, V1;
        for (int i = 0; i < n; ++i) {
            V2.push_back(random_vdeg(rng, d));
            VectorDegree w(k);
            for (std::size_t j = 0; j < w.size(); ++j)
                for (std::size_t jp = 0; jp < (std::size_t(1) << (d - k)); ++jp)
                    w[j] = max(w[j], V2.back()[(jp << k) + j] + Degree(std::popcount(jp)));
            V1.push_back(w);
        }
        auto w1 = vdeg_map(f, V1), w2 = vdeg_map(f, V2);
        for (std::size_t j = 0; j < w1.size(); ++j) {
            Degree folded = NI;
            for (std::size_t jp = 0; jp < (std::size_t(1) << (d - k)); ++jp)
                folded = max(folded, w2[(jp << k) + j] + Degree(std::popcount(jp)));
            violations += w1[j] < folded;
        }
    }
    v.require(!violations, fmt("%d folded domination violations", violations));
    // ISoC monotonicity
    for (int t = 0; t < 100; ++t) {
        auto I = oracle::random_subset(rng, 80, 6 + int(rng() % 12));
        std::vector<int> K, J;
        for (int i : I)
            if (rng() % 3)
                K.push_back(i);
        for (int i : K)
            if (rng() % 3 == 0 && J.size() < 5)
                J.push_back(i);
        int R = int(rng() % 500);
        violations += !estimate_trivium_vector(K, J, R).dominated_by(estimate_trivium_vector(I, J, R));
        for (int mode : {1, 2, 3})
            violations += estimate_trivium(K, J, R, mode) > estimate_trivium(I, J, R, mode);
    }
    v.require(!violations, fmt("%d monotonicity violations", violations));
    // |J| = 0 is the numeric mapping
    for (int t = 0; t < 500; ++t) {
        int n = 1 + int(rng() % 6);
        auto f = oracle::random_poly(rng, n, int(rng() % 8), 4);
        std::vector<Degree> d;
        std::vector<VectorDegree> V;
        for (int i = 0; i < n; ++i) {
            d.push_back(rng() % 5 == 0 ? NI : Degree(int(rng() % 7)));
            V.push_back(VectorDegree(0, {d.back()}));
        }
        violations += vdeg_map(f, V)[0] != numeric_deg(f, d);
    }
    v.require(!violations, fmt("%d degeneracy violations", violations));
    // h | f  <=>  f vanishes wherever h does
    int laws = 0;
    while (laws < 60) {
        int n = 6 + int(rng() % 15);
        auto h = oracle::random_poly(rng, n, 1 + int(rng() % 3), 2);
        if (h.is_zero())
            continue;
        ++laws;
        Poly f = laws % 2 ? h * oracle::random_poly(rng, n, 4, 3) : oracle::random_poly(rng, n, 5, 3);
        bool contained = true;
        for (std::uint64_t m = 0; m < (std::uint64_t(1) << n) && contained; ++m) {
            Point pt;
            pt.xk[0] = m;
            contained = evaluate(h, pt) || !evaluate(f, pt);
        }
        violations += divides(h, f) != contained;
    }
    v.require(!violations, fmt("%d divisibility violations", violations));
    if (v.pass)
        v.detail = "0 violations (500 + 500 + 100 + 500 + 60 cases)";
    return v;
}

// ---- 6: pruned search against exhaustive classification

Verdict search_equivalence()
{
    Verdict v;
    SearchParams p;
    p.J = {4, 5};
    p.k = 8;
    p.d = 5;
    p.a = 3;
    p.width = 20;
    p.seed = 1;
    EstimatorConfig cfg{480, 1};
    auto pruned = search(p, cfg), full = exhaustive_classification(p, cfg);
    std::vector<Isoc> a, b;
    for (auto &g : pruned.good)
        a.push_back(g.isoc);
    for (auto &g : full.good)
        b.push_back(g.isoc);
    v.require(a == b, fmt("pruned %zu good vs exhaustive %zu", a.size(), b.size()));
    double ratio = double(pruned.estimator_calls) / double(full.estimator_calls);
    v.require(ratio < 0.25, fmt("call ratio %.3f", ratio));
    if (v.pass)
        v.detail = fmt("%zu good ISoCs, %llu vs %llu calls (%.1f%%)", a.size(),
                       (unsigned long long)pruned.estimator_calls, (unsigned long long)full.estimator_calls,
                       100 * ratio);
    return v;
}

// ---- 7: reduced-round attack

Verdict attack_simulation()
{
    Verdict v;
    const int R = 590;
    CorpusParams cp;
    cp.rounds = R;
    cp.search.J = {0, 1, 2, 5, 6};
    cp.search.k = 10;
    cp.search.d = 11;
    cp.search.a = 2;
    cp.search.width = 24;
    cp.search.seed = 1;
    cp.mode = 3;
    cp.seed = 1;
    auto corpus = build_corpus(cp);
    PreprocessOptions po;
    po.rounds = R;
    po.seed = 7;
    auto table = preprocess(corpus.cubes, CandidateFamily::trivium_default(), po);
    v.require(!table.T.empty(), "no factor reached the threshold");

    std::mt19937_64 rng(7007);
    G0Calibration cal;
    std::uint64_t g1_false = 0, g1_total = 0;
    std::optional<std::pair<Key80, EquationSets>> clean;
    for (int t = 0; t < 200; ++t) {
        Key80 key = oracle::random_key(rng);
        auto g = online_simulate(key, table, R);
        for (const auto &q : g.G1)
            g1_false += KeyPoly(q.h)(key) != q.value;
        g1_total += g.G1.size();
        calibrate_g0(table, key, g, cal);
        bool all_true = true;
        for (const auto &q : g.G0)
            all_true &= KeyPoly(q.h)(key) == q.value;
        if (!clean && all_true && g.G0.size() >= 2)
            clean = {key, g};
    }
    v.require(g1_false == 0, fmt("%llu of %llu G1 equations false", (unsigned long long)g1_false,
                                 (unsigned long long)g1_total));
    double gap = std::abs(cal.empirical() - cal.predicted());
    v.require(cal.events > 0 && gap <= 0.05, fmt("Pr(correct | G0) %.4f vs table %.4f over %llu events",
                                                 cal.empirical(), cal.predicted(), (unsigned long long)cal.events));

    // planted errors: a trial with two or more correct G0 equations, topped up with
    // true equations on the rest of the family until 8 key bits are left to guess
    v.require(bool(clean), "no trial with two correct G0 equations");
    int found_e = -1;
    if (clean) {
        auto [key, g] = *clean;
        auto fam = CandidateFamily::trivium_default();
        for (int i = 66; i < 72; ++i)
            fam.polys.push_back(Poly::k(i));
        for (const auto &h : fam.polys) {
            bool present = false;
            for (const auto *s : {&g.G0, &g.G1})
                for (const auto &q : *s)
                    present |= q.h == h;
            if (!present)
                g.G1.push_back({h, KeyPoly(h)(key)});
        }
        g.G0[0].value ^= true;
        g.G0[1].value ^= true;
        auto check = make_key_check(key);
        auto r1 = solve_keys(g, 1, check);
        auto r2 = solve_keys(g, 2, check);
        v.require(!r1.key && !r1.capped, "a key was accepted with one flip");
        v.require(r2.key && *r2.key == key && r2.e == 2, "true key not recovered at e = 2");
        found_e = r2.e;
    }
    if (v.pass)
        v.detail = fmt("%zu cubes, |T|=%zu |T1|=%zu; %llu G1 equations all true; Pr(correct | G0) %.4f vs %.4f "
                       "(%llu events); planted key found at e=%d",
                       corpus.cubes.size(), table.T.size(), table.T1.size(), (unsigned long long)g1_total,
                       cal.empirical(), cal.predicted(), (unsigned long long)cal.events, found_e);
    return v;
}

// ---- 8: success counts behind the proportion tables

Verdict binomial_fixtures()
{
    Verdict v;
    auto t0 = Clock::now();
    auto rows = fixtures::parse_proportions(fixtures::read_file(std::string(CUBEFORGE_DATA_DIR) + "/proportions.csv"));
    for (const auto &r : rows)
        v.require(binomial_check(r.successes, r.trials, r.p(), 0.01),
                  fmt("%d rounds, 2^%d: %llu/%llu rejected at p=%s", r.rounds, r.log2_cost,
                      (unsigned long long)r.successes, (unsigned long long)r.trials, r.proportion.c_str()));
    double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    v.require(rows.size() == 15, fmt("%zu rows", rows.size()));
    v.require(ms < 1000, fmt("took %.0f ms", ms));
    if (v.pass)
        v.detail = fmt("%zu rows accepted at alpha 0.01 in %.1f ms", rows.size(), ms);
    return v;
}

} // namespace

int main(int argc, char **argv)
{
    const std::vector<std::pair<const char *, std::function<Verdict()>>> criteria{
        {"golden example", golden_example},
        {"superpoly oracle equivalence", superpoly_equivalence},
        {"degree-bound soundness", degree_soundness},
        {"tightness vs numeric mapping", tightness},
        {"property suites", properties},
        {"search equivalence", search_equivalence},
        {"reduced-round attack simulation", attack_simulation},
        {"binomial fixtures", binomial_fixtures},
    };
    std::set<int> pick;
    for (int i = 1; i < argc; ++i)
        pick.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        int n = int(c) + 1;
        if (!pick.empty() && !pick.count(n))
            continue;
        auto t0 = Clock::now();
        Verdict v;
        try {
            v = criteria[c].second();
        } catch (const std::exception &e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        double s = std::chrono::duration<double>(Clock::now() - t0).count();
        failed += !v.pass;
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", n, criteria[c].first,
                    v.detail.c_str(), s);
        std::fflush(stdout);
    }
    if (pick.empty() || pick.count(9))
        std::printf("SKIP criterion 9 (full-round zero-sum and proportion tables): extended-only, "
                    "run `cubeforge verify-zero-sum --extended`\n");
    return failed ? 1 : 0;
}
