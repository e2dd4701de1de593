#pragma once

#include "anf.hpp"
#include "trivium.hpp"

#include <algorithm>
#include <bit>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace cubeforge {

// DEG(f, d): f's variables x_i are the y-variables with degrees d[i].
inline Degree numeric_deg(const Poly &f, std::span<const Degree> d)
{
    Degree best = Degree::neg_inf();
    for (const auto &m : f.terms()) {
        Degree s = 0;
        m.for_each_var([&](Var v) {
            if (v.space != Space::x || v.index >= d.size())
                throw std::invalid_argument("numeric_deg: no degree for variable");
            s = s + d[v.index];
        });
        best = max(best, s);
    }
    return best;
}

namespace detail {

    // Hot-loop encoding of degrees: kNI stands for NEG_INF. Finite values stay
    // far above kNI / 2, sums involving kNI stay at or below it, and `norm`
    // maps them back, so NEG_INF can never turn into a finite value.
    using Raw = std::int32_t;
    inline constexpr Raw kNI = -(Raw(1) << 28);
    inline Raw norm(Raw v) { return v <= kNI / 2 ? kNI : v; }
    inline Raw to_raw(Degree d) { return d.is_neg_inf() ? kNI : d.value(); }
    inline Degree from_raw(Raw r) { return r <= kNI / 2 ? Degree::neg_inf() : Degree(r); }

    // Base-3 encoding of disjoint subset pairs (x, y): trit 1 marks x, trit 2 marks y.
    struct TritTables {
        std::size_t pow3;
        std::vector<std::uint32_t> pow3sum; // sum of 3^b over b in mask

        explicit TritTables(int d) : pow3sum(std::size_t(1) << d)
        {
            std::vector<std::uint32_t> p3(d + 1, 1);
            for (int b = 1; b <= d; ++b)
                p3[b] = p3[b - 1] * 3;
            pow3 = p3[d];
            for (std::size_t m = 1; m < pow3sum.size(); ++m)
                pow3sum[m] = pow3sum[m & (m - 1)] + p3[std::countr_zero(m)];
        }
    };

    inline const TritTables &trit_tables(int d)
    {
        static std::mutex mu;
        static std::vector<std::unique_ptr<TritTables>> cache(32);
        std::lock_guard lock(mu);
        if (!cache[d])
            cache[d] = std::make_unique<TritTables>(d);
        return *cache[d];
    }

    // M(x, y) = max over c <= y of B[x | c], for disjoint x, y
    inline void interval_table(const Raw *B, Raw *M, int d)
    {
        const auto &T = trit_tables(d).pow3sum;
        const std::size_t S = std::size_t(1) << d, full = S - 1;
        for (std::size_t x = 0; x < S; ++x)
            M[T[x]] = B[x];
        for (std::size_t y = 1; y < S; ++y) {
            std::size_t p = y & (~y + 1), comp = full ^ y;
            const Raw *lo = M + 2 * T[y ^ p];
            Raw *out = M + 2 * T[y];
            for (std::size_t x = comp;; x = (x - 1) & comp) {
                out[T[x]] = std::max(lo[T[x]], lo[T[x | p]]);
                if (x == 0)
                    break;
            }
        }
    }

    // w[j] = max over a | b = j of A[a] + B[b], with M the interval table of B
    inline void query_interval(const Raw *A, const Raw *M, Raw *w, int d)
    {
        const auto &T = trit_tables(d).pow3sum;
        const std::size_t S = std::size_t(1) << d, full = S - 1;
        std::fill(w, w + S, kNI);
        for (std::size_t a = 0; a < S; ++a) {
            if (A[a] == kNI)
                continue;
            const Raw va = A[a];
            const Raw *row = M + 2 * T[a];
            std::size_t comp = full ^ a;
            for (std::size_t rest = comp;; rest = (rest - 1) & comp) {
                Raw s = va + row[T[rest]];
                Raw &dst = w[a | rest];
                dst = std::max(dst, s);
                if (rest == 0)
                    break;
            }
        }
        for (std::size_t j = 0; j < S; ++j)
            w[j] = norm(w[j]);
    }

    inline std::size_t finite_count(const Raw *A, std::size_t S)
    {
        std::size_t c = 0;
        for (std::size_t j = 0; j < S; ++j)
            c += A[j] != kNI;
        return c;
    }

    // Pairs of finite entries when that is cheaper than the interval table.
    inline bool try_sparse(const Raw *A, const Raw *B, Raw *w, int d)
    {
        const std::size_t S = std::size_t(1) << d;
        std::size_t ca = finite_count(A, S), cb = finite_count(B, S);
        if (ca * cb > 2 * trit_tables(d).pow3)
            return false;
        std::fill(w, w + S, kNI);
        for (std::size_t a = 0; a < S; ++a) {
            if (A[a] == kNI)
                continue;
            for (std::size_t b = 0; b < S; ++b)
                if (B[b] != kNI)
                    w[a | b] = std::max(w[a | b], A[a] + B[b]);
        }
        return true;
    }

    inline void or_maxplus_raw(const Raw *A, const Raw *B, Raw *w, int d, std::vector<Raw> &scratch)
    {
        if (try_sparse(A, B, w, d))
            return;
        scratch.resize(trit_tables(d).pow3);
        interval_table(B, scratch.data(), d);
        query_interval(A, scratch.data(), w, d);
    }

} // namespace detail

// w[j] = max over a | b = j of A[a] + B[b] (exact OR max-plus convolution;
// the vector degree of a product of two factors).
inline void or_maxplus(const Degree *A, const Degree *B, Degree *w, int d)
{
    const std::size_t S = std::size_t(1) << d;
    std::vector<detail::Raw> a(S), b(S), r(S), scratch;
    for (std::size_t j = 0; j < S; ++j) {
        a[j] = detail::to_raw(A[j]);
        b[j] = detail::to_raw(B[j]);
    }
    detail::or_maxplus_raw(a.data(), b.data(), r.data(), d, scratch);
    for (std::size_t j = 0; j < S; ++j)
        w[j] = detail::from_raw(r[j]);
}

inline VectorDegree vdegm(std::span<const VectorDegree> vs)
{
    if (vs.empty())
        return VectorDegree::unit(0);
    VectorDegree acc = vs[0];
    for (std::size_t i = 1; i < vs.size(); ++i) {
        if (vs[i].dim != acc.dim)
            throw std::invalid_argument("vdegm: vector degrees over different index sets");
        VectorDegree next(acc.dim);
        or_maxplus(acc.entries.data(), vs[i].entries.data(), next.entries.data(), acc.dim);
        acc = std::move(next);
    }
    return acc;
}

inline VectorDegree vdegm(std::initializer_list<VectorDegree> vs)
{
    return vdegm(std::span<const VectorDegree>(vs.begin(), vs.size()));
}

// Vector numeric mapping: f's variables x_i take vector degrees V[i].
inline VectorDegree vdeg_map(const Poly &f, std::span<const VectorDegree> V)
{
    if (V.empty())
        throw std::invalid_argument("vdeg_map: empty V");
    const int d = V[0].dim;
    for (const auto &v : V)
        if (v.dim != d)
            throw std::invalid_argument("vdeg_map: rows of V over different index sets");
    VectorDegree out(d);
    for (const auto &m : f.terms()) {
        std::vector<VectorDegree> factors;
        m.for_each_var([&](Var v) {
            if (v.space != Space::x || v.index >= V.size())
                throw std::invalid_argument("vdeg_map: no vector degree for variable");
            factors.push_back(V[v.index]);
        });
        VectorDegree t = factors.empty() ? VectorDegree::unit(d) : vdegm(factors);
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] = max(out[j], t[j]);
    }
    return out;
}

// ---- Trivium recursion

enum class IvRole : std::uint8_t { zero, active, indexed, parameter };

class TriviumDegreeEstimator {
public:
    static constexpr std::array<int, 3> kN{92, 176, 287};
    static constexpr std::array<int, 3> kCycle{93, 84, 111};
    static constexpr std::array<std::array<int, 3>, 3> kLinear{{{65, 92, 170}, {161, 176, 263}, {242, 287, 68}}};

    // roles[i] for IV bit i; J lists the indexed IV bits in vector-degree order.
    TriviumDegreeEstimator(const std::array<IvRole, 80> &roles, std::vector<int> J)
        : J_(std::move(J)), d_(int(J_.size())), S_(std::size_t(1) << d_)
    {
        if (d_ > 16)
            throw std::invalid_argument("index set for vector degree too large");
        for (auto r : roles)
            active_ += r == IvRole::active || r == IvRole::indexed;
        for (auto *a : {&V_, &Vl_, &Vm_, &Vs_})
            a->assign(288 * S_, detail::kNI);
        for (int i = 0; i < 80; ++i)
            row(V_, i)[0] = 0; // key bits
        for (int i : {285, 286, 287})
            row(V_, i)[0] = 0;
        for (int i = 0; i < 80; ++i) {
            detail::Raw *r = row(V_, 93 + i);
            switch (roles[i]) {
            case IvRole::zero:
                break;
            case IvRole::active:
                r[0] = 1;
                break;
            case IvRole::parameter:
                r[0] = 0;
                break;
            case IvRole::indexed: {
                auto it = std::find(J_.begin(), J_.end(), i);
                if (it == J_.end())
                    throw std::invalid_argument("indexed IV bit missing from J");
                r[std::size_t(1) << (it - J_.begin())] = 0;
                break;
            }
            }
        }
        if (d_ > 0)
            pow3_ = detail::trit_tables(d_).pow3;
        for (auto &c : cache_)
            c.owner = std::size_t(-1);
    }

    static TriviumDegreeEstimator for_cube(const Isoc &I, const std::vector<int> &J)
    {
        check_isoc(I);
        std::array<IvRole, 80> roles{};
        for (int i : I)
            roles[i] = IvRole::active;
        for (int j : J) {
            if (j < 0 || j >= 80 || roles[j] != IvRole::active)
                throw std::invalid_argument("J must be a subset of I");
            roles[j] = IvRole::indexed;
        }
        return TriviumDegreeEstimator(roles, J);
    }

    int round() const { return t_; }
    int dim() const { return d_; }
    int active() const { return active_; }

    void step()
    {
        ++t_;
        tmp_.resize(S_);
        for (int i = 0; i < 3; ++i) {
            int n = kN[i];
            detail::Raw *vl = row(Vl_, n);
            const detail::Raw *a = row(V_, kLinear[i][0]), *b = row(V_, kLinear[i][1]), *c = row(V_, kLinear[i][2]);
            for (std::size_t j = 0; j < S_; ++j)
                vl[j] = std::max({a[j], b[j], c[j]});
            degree_mul(i, tmp_.data());
            std::copy_n(tmp_.data(), S_, row(Vm_, n));
            detail::Raw *v = row(V_, n);
            for (std::size_t j = 0; j < S_; ++j)
                v[j] = std::max(vl[j], tmp_[j]);
            std::copy_n(row(V_, n - 1), S_, row(Vs_, n));
            invalidate(slot(n));
        }
        base_ = base_ == 287 ? 0 : base_ + 1;
    }

    VectorDegree bit(int pos) const { return to_vector(row(V_, pos)); }

    VectorDegree output_vdeg() const
    {
        VectorDegree w(d_);
        for (int t : kOutputTaps) {
            auto b = bit(t);
            for (std::size_t j = 0; j < S_; ++j)
                w[j] = max(w[j], b[j]);
        }
        return w;
    }

    Degree output_degree(int mode) const { return apply_mode(output_vdeg(), mode, active_); }

    static Degree apply_mode(const VectorDegree &w, int mode, int cube_size)
    {
        const int d = w.dim;
        Degree best = Degree::neg_inf();
        switch (mode) {
        case 1:
            for (std::size_t j = 0; j < w.size(); ++j)
                best = max(best, min(w[j], Degree(cube_size - d)) + Degree(std::popcount(j)));
            return best;
        case 2:
            return w[w.size() - 1] + Degree(d);
        case 3:
            return degree_from_vdeg(w);
        }
        throw std::invalid_argument("mode must be 1, 2 or 3");
    }

private:
    using Raw = detail::Raw;

    VectorDegree to_vector(const Raw *r) const
    {
        VectorDegree v(d_);
        for (std::size_t j = 0; j < S_; ++j)
            v[j] = detail::from_raw(r[j]);
        return v;
    }

    Raw *row(std::vector<Raw> &a, int pos) { return a.data() + slot(pos) * S_; }
    const Raw *row(const std::vector<Raw> &a, int pos) const { return a.data() + slot(pos) * S_; }
    std::size_t slot(int pos) const
    {
        std::size_t p = base_ + 287 - pos;
        return p >= 288 ? p - 288 : p;
    }

    // Interval tables of V_s rows: each such row is a factor at n-1 and again
    // two rounds later at n-3, so its table is built once for both uses.
    struct CachedTable {
        std::size_t owner;
        std::vector<Raw> M;
    };

    const Raw *vs_table(int pos)
    {
        std::size_t s = slot(pos);
        for (auto &c : cache_)
            if (c.owner == s)
                return c.M.data();
        auto &c = cache_[next_++ % cache_.size()];
        c.owner = s;
        c.M.resize(pow3_);
        detail::interval_table(row(Vs_, pos), c.M.data(), d_);
        return c.M.data();
    }

    void invalidate(std::size_t s)
    {
        for (auto &c : cache_)
            if (c.owner == s)
                c.owner = std::size_t(-1);
    }

    // product with a V_s row as the second factor
    void mul_vs(const Raw *A, int pos, Raw *out)
    {
        if (!detail::try_sparse(A, row(Vs_, pos), out, d_))
            detail::query_interval(A, vs_table(pos), out, d_);
    }

    void mul(const Raw *A, const Raw *B, Raw *out) { detail::or_maxplus_raw(A, B, out, d_, scratch_); }

    // bound for s_{n-1} s_{n-2}; once the feeding register has cycled, both
    // factors are themselves products q1q2 + l1 and q2q3 + l2 sharing q2
    void degree_mul(int i, Raw *out)
    {
        const int n = kN[i];
        if (t_ - kCycle[i] < 0) {
            mul(row(V_, n - 1), row(V_, n - 2), out);
            return;
        }
        work_.resize(5 * S_);
        Raw *v1 = work_.data(), *v2 = v1 + S_, *v3 = v2 + S_, *q12 = v3 + S_, *v5 = q12 + S_;
        mul_vs(row(Vm_, n - 1), n - 3, v1);
        mul_vs(row(Vm_, n - 2), n - 1, v2);
        mul_vs(row(Vs_, n - 2), n - 1, q12);
        mul_vs(q12, n - 3, v3);
        mul(row(Vm_, n - 1), row(Vl_, n - 2), v5);
        mul(row(Vl_, n - 1), row(V_, n - 2), out);
        for (std::size_t j = 0; j < S_; ++j)
            out[j] = std::max({std::min({v1[j], v2[j], v3[j]}), v5[j], out[j]});
    }

    std::vector<int> J_;
    int d_;
    std::size_t S_;
    std::size_t pow3_ = 1;
    int active_ = 0;
    int t_ = 0;
    std::size_t base_ = 0;
    std::vector<Raw> V_, Vl_, Vm_, Vs_, tmp_, work_, scratch_;
    std::array<CachedTable, 8> cache_;
    std::size_t next_ = 0;
};

inline Degree estimate_trivium(const Isoc &I, const std::vector<int> &J, int R, int mode)
{
    auto e = TriviumDegreeEstimator::for_cube(I, J);
    for (int r = 0; r < R; ++r)
        e.step();
    return e.output_degree(mode);
}

inline VectorDegree estimate_trivium_vector(const Isoc &I, const std::vector<int> &J, int R)
{
    auto e = TriviumDegreeEstimator::for_cube(I, J);
    for (int r = 0; r < R; ++r)
        e.step();
    return e.output_vdeg();
}

// bound[r] for every r in 0..R in a single pass
inline std::vector<Degree> estimate_trivium_series(const Isoc &I, const std::vector<int> &J, int R, int mode)
{
    auto e = TriviumDegreeEstimator::for_cube(I, J);
    std::vector<Degree> out{e.output_degree(mode)};
    for (int r = 0; r < R; ++r) {
        e.step();
        out.push_back(e.output_degree(mode));
    }
    return out;
}

// Largest R <= Rmax whose bound stays below |I| (superpoly provably zero).
inline int max_zero_sum_round(const std::vector<Degree> &series, int cube_size)
{
    int best = -1;
    for (std::size_t r = 0; r < series.size(); ++r)
        if (series[r] < Degree(cube_size))
            best = int(r);
    return best;
}

// Per-round, per-position bounds on the degree in the cube variables (|J| = 0).
// bounds[r][i] covers s_i after r rounds.
inline std::vector<std::array<Degree, 288>> bit_degree_bounds(const Isoc &I, int R)
{
    auto e = TriviumDegreeEstimator::for_cube(I, {});
    std::vector<std::array<Degree, 288>> out(R + 1);
    for (int r = 0;; ++r) {
        for (int i = 0; i < 288; ++i)
            out[r][i] = e.bit(i)[0];
        if (r == R)
            break;
        e.step();
    }
    return out;
}

// Strategy 1 (adjacent indices, trimmed at random) then Strategy 2 (largest
// single-index mode-3 estimates, the other cube bits acting as constants).
inline std::vector<int> choose_index_set(const Isoc &I, int R, int cap, std::mt19937_64 &rng)
{
    check_isoc(I);
    if (cap < 0)
        throw std::invalid_argument("cap must be non-negative");
    std::vector<int> J;
    for (std::size_t q = 0; q < I.size(); ++q) {
        bool left = q > 0 && I[q - 1] == I[q] - 1;
        bool right = q + 1 < I.size() && I[q + 1] == I[q] + 1;
        if (left || right)
            J.push_back(I[q]);
    }
    while (int(J.size()) > cap)
        J.erase(J.begin() + std::uniform_int_distribution<std::size_t>(0, J.size() - 1)(rng));
    if (int(J.size()) < cap) {
        std::vector<std::pair<Degree, int>> scored;
        for (int i : I) {
            if (std::find(J.begin(), J.end(), i) != J.end())
                continue;
            std::array<IvRole, 80> roles{};
            for (int j : I)
                roles[j] = IvRole::parameter;
            roles[i] = IvRole::active;
            TriviumDegreeEstimator e(roles, {});
            for (int r = 0; r < R; ++r)
                e.step();
            scored.push_back({e.output_degree(3), i});
        }
        std::shuffle(scored.begin(), scored.end(), rng);
        std::stable_sort(scored.begin(), scored.end(), [](auto &a, auto &b) { return b.first < a.first; });
        for (std::size_t q = 0; q < scored.size() && int(J.size()) < cap; ++q)
            J.push_back(scored[q].second);
    }
    std::sort(J.begin(), J.end());
    return J;
}

} // namespace cubeforge
