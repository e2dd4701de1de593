#pragma once

#include "degree.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <atomic>
#include <bitset>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>
#include <vector>

namespace cubeforge {

struct EstimatorConfig {
    int rounds = 0;
    int mode = 1;
};

// Estimates are taken with the required subset J as the vector-degree index set.
class CountingEstimator {
public:
    explicit CountingEstimator(EstimatorConfig cfg) : cfg_(cfg) {}

    Degree operator()(const Isoc &I, const std::vector<int> &J)
    {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return estimate_trivium(I, J, cfg_.rounds, cfg_.mode);
    }
    std::uint64_t calls() const { return calls_.load(); }
    const EstimatorConfig &config() const { return cfg_; }

private:
    EstimatorConfig cfg_;
    std::atomic<std::uint64_t> calls_{0};
};

using IndexBits = std::bitset<80>;

inline IndexBits bits_of(const Isoc &I)
{
    IndexBits b;
    for (int i : I)
        b[i] = true;
    return b;
}

// Trie of sorted witness sets; answers "does S contain some witness".
class WitnessTrie {
public:
    void insert(const Isoc &K)
    {
        Node *n = &root_;
        for (int i : K) {
            auto &c = n->children[i];
            if (!c)
                c = std::make_unique<Node>();
            n = c.get();
        }
        n->terminal = true;
        ++size_;
    }

    bool covers(const IndexBits &S) const { return covers(root_, S); }
    std::size_t size() const { return size_; }

private:
    struct Node {
        bool terminal = false;
        std::map<int, std::unique_ptr<Node>> children;
    };

    static bool covers(const Node &n, const IndexBits &S)
    {
        if (n.terminal)
            return true;
        for (const auto &[i, c] : n.children)
            if (S[i] && covers(*c, S))
                return true;
        return false;
    }

    Node root_;
    std::size_t size_ = 0;
};

// Randomized descent: drop one index of K\J at a time while the estimate stays
// >= d; a level gives up after `a` failed drops (distinct indices per level).
template <class Est>
Isoc prune_witness(const Isoc &I, const std::vector<int> &J, int d, int a, Est &est, std::mt19937_64 &rng)
{
    if (a < 1)
        throw std::invalid_argument("prune_witness: need a >= 1");
    Isoc K = I;
    for (;;) {
        std::vector<int> free;
        for (int i : K)
            if (!std::binary_search(J.begin(), J.end(), i))
                free.push_back(i);
        std::shuffle(free.begin(), free.end(), rng);
        bool shrunk = false;
        for (int t = 0; t < a && t < int(free.size()); ++t) {
            Isoc cand;
            for (int i : K)
                if (i != free[t])
                    cand.push_back(i);
            if (est(cand, J) >= Degree(d)) {
                K = std::move(cand);
                shrunk = true;
                break;
            }
        }
        if (!shrunk)
            return K;
    }
}

struct GoodIsoc {
    Isoc isoc;
    Degree estimate;
    std::uint64_t seed = 0;
};

struct SearchResult {
    std::vector<GoodIsoc> good;
    std::vector<Isoc> witnesses;
    std::uint64_t estimator_calls = 0;
};

struct SearchParams {
    std::vector<int> J;
    int k = 0;
    int d = 0;
    int a = 1;
    int width = kWidth; // IV positions 0..width-1; the rest stay zero
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

// Every size-k ISoC containing J with estimate < d. Bad candidates yield a
// witness K whose supersets are all skipped. The space is sharded by the
// smallest index outside J; witnesses are shared between shards best-effort.
inline SearchResult search(const SearchParams &p, const EstimatorConfig &cfg)
{
    std::vector<int> J = p.J;
    std::sort(J.begin(), J.end());
    check_isoc(J, p.width);
    if (p.d <= int(J.size()))
        throw std::invalid_argument("search: need d > |J|");
    if (p.k < int(J.size()) || p.k > p.width)
        throw std::invalid_argument("search: need |J| <= k <= width");
    std::vector<int> pool;
    for (int i = 0; i < p.width; ++i)
        if (!std::binary_search(J.begin(), J.end(), i))
            pool.push_back(i);
    const int need = p.k - int(J.size());

    CountingEstimator est(cfg);
    std::mutex m;
    std::vector<Isoc> shared;
    std::vector<std::vector<GoodIsoc>> shard_good;

    auto merged = [&](Isoc chosen) {
        Isoc I = J;
        I.insert(I.end(), chosen.begin(), chosen.end());
        std::sort(I.begin(), I.end());
        return I;
    };

    auto run_shard = [&](std::size_t lead, std::vector<GoodIsoc> &good) {
        std::mt19937_64 rng(p.seed ^ (0x9e3779b97f4a7c15ULL * (lead + 1)));
        WitnessTrie trie;
        std::size_t imported = 0;
        auto sync = [&] {
            std::lock_guard lk(m);
            for (; imported < shared.size(); ++imported)
                trie.insert(shared[imported]);
        };
        std::vector<int> chosen;
        IndexBits S = bits_of(J);
        auto visit = [&](auto &&self, std::size_t from) -> void {
            sync();
            if (trie.covers(S))
                return;
            if (int(chosen.size()) == need) {
                Isoc I = merged(chosen);
                Degree e = est(I, J);
                if (e < Degree(p.d)) {
                    good.push_back({I, e, p.seed});
                    return;
                }
                Isoc K = prune_witness(I, J, p.d, p.a, est, rng);
                std::lock_guard lk(m);
                shared.push_back(K);
                return;
            }
            for (std::size_t q = from; q + (need - chosen.size()) <= pool.size(); ++q) {
                chosen.push_back(pool[q]);
                S[pool[q]] = true;
                self(self, q + 1);
                S[pool[q]] = false;
                chosen.pop_back();
            }
        };
        if (need == 0) {
            visit(visit, 0);
            return;
        }
        chosen.push_back(pool[lead]);
        S[pool[lead]] = true;
        visit(visit, lead + 1);
    };

    std::size_t shards = need == 0 ? 1 : pool.size() - need + 1;
    shard_good.resize(shards);
    parallel_for(shards, [&](std::size_t s) { run_shard(s, shard_good[s]); }, p.threads);

    SearchResult out;
    for (auto &g : shard_good)
        out.good.insert(out.good.end(), g.begin(), g.end());
    std::sort(out.good.begin(), out.good.end(), [](auto &x, auto &y) { return x.isoc < y.isoc; });
    out.witnesses = std::move(shared);
    std::sort(out.witnesses.begin(), out.witnesses.end());
    out.witnesses.erase(std::unique(out.witnesses.begin(), out.witnesses.end()), out.witnesses.end());
    out.estimator_calls = est.calls();
    return out;
}

// Reference: classify every candidate with one estimator call each.
inline SearchResult exhaustive_classification(const SearchParams &p, const EstimatorConfig &cfg)
{
    std::vector<int> J = p.J;
    std::sort(J.begin(), J.end());
    std::vector<int> pool;
    for (int i = 0; i < p.width; ++i)
        if (!std::binary_search(J.begin(), J.end(), i))
            pool.push_back(i);
    const int need = p.k - int(J.size());
    std::vector<Isoc> all;
    std::vector<int> sel(pool.size(), 0);
    std::fill(sel.begin(), sel.begin() + need, 1);
    do {
        Isoc I = J;
        for (std::size_t q = 0; q < pool.size(); ++q)
            if (sel[q])
                I.push_back(pool[q]);
        std::sort(I.begin(), I.end());
        all.push_back(I);
    } while (std::prev_permutation(sel.begin(), sel.end()));
    CountingEstimator est(cfg);
    std::vector<Degree> e(all.size());
    parallel_for(all.size(), [&](std::size_t q) { e[q] = est(all[q], J); }, p.threads);
    SearchResult out;
    for (std::size_t q = 0; q < all.size(); ++q)
        if (e[q] < Degree(p.d))
            out.good.push_back({all[q], e[q], p.seed});
    std::sort(out.good.begin(), out.good.end(), [](auto &x, auto &y) { return x.isoc < y.isoc; });
    out.estimator_calls = est.calls();
    return out;
}

} // namespace cubeforge
