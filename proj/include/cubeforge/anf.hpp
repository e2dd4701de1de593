#pragma once

#include <absl/container/flat_hash_set.h>
#include <absl/hash/hash.h>

#include <algorithm>
#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cubeforge {

// Variable spaces: IV bits x, key bits k, substituted key polynomials z.
enum class Space : std::uint8_t { x = 0, k = 1, z = 2 };

struct Var {
    Space space;
    std::uint32_t index;
    friend constexpr auto operator<=>(const Var &, const Var &) = default;
};

inline constexpr int kWidth = 80;

inline char space_letter(Space s)
{
    return s == Space::x ? 'x' : s == Space::k ? 'k' : 'z';
}

// Degree value in Z u {NEG_INF}. NEG_INF is a tagged state: arithmetic checks
// the tag, so adding weights to it can never produce a finite value.
class Degree {
public:
    constexpr Degree() = default;
    constexpr Degree(int v) : finite_(true), v_(v) {}

    static constexpr Degree neg_inf() { return Degree(); }
    constexpr bool is_neg_inf() const { return !finite_; }
    constexpr int value() const { return v_; }

    friend constexpr Degree operator+(Degree a, Degree b)
    {
        if (!a.finite_ || !b.finite_)
            return Degree();
        return Degree(a.v_ + b.v_);
    }
    friend constexpr bool operator==(Degree a, Degree b)
    {
        return a.finite_ == b.finite_ && (!a.finite_ || a.v_ == b.v_);
    }
    friend constexpr std::strong_ordering operator<=>(Degree a, Degree b)
    {
        if (!a.finite_ || !b.finite_)
            return a.finite_ <=> b.finite_;
        return a.v_ <=> b.v_;
    }

    std::string str() const { return finite_ ? std::to_string(v_) : std::string("-inf"); }

private:
    bool finite_ = false;
    int v_ = 0;
};

inline constexpr Degree max(Degree a, Degree b) { return a < b ? b : a; }
inline constexpr Degree min(Degree a, Degree b) { return b < a ? b : a; }

// Entries indexed by subsets j of an ordered index set J; bit p of j is J[p].
struct VectorDegree {
    int dim = 0;
    std::vector<Degree> entries;

    VectorDegree() : entries(1) {}
    explicit VectorDegree(int d) : dim(d), entries(std::size_t(1) << d) {}
    VectorDegree(int d, std::vector<Degree> e) : dim(d), entries(std::move(e))
    {
        if (entries.size() != (std::size_t(1) << d))
            throw std::invalid_argument("VectorDegree: entry count is not 2^|J|");
    }

    static VectorDegree unit(int d)
    {
        VectorDegree v(d);
        v.entries[0] = 0;
        return v;
    }

    std::size_t size() const { return entries.size(); }
    Degree &operator[](std::size_t j) { return entries[j]; }
    Degree operator[](std::size_t j) const { return entries[j]; }
    friend bool operator==(const VectorDegree &, const VectorDegree &) = default;

    // componentwise a <= b
    bool dominated_by(const VectorDegree &o) const
    {
        for (std::size_t j = 0; j < entries.size(); ++j)
            if (o.entries[j] < entries[j])
                return false;
        return true;
    }

    std::string str() const
    {
        std::string s = "(";
        for (std::size_t j = 0; j < entries.size(); ++j)
            s += (j ? "," : "") + entries[j].str();
        return s + ")";
    }
};

inline Degree degree_from_vdeg(const VectorDegree &v)
{
    Degree best = Degree::neg_inf();
    for (std::size_t j = 0; j < v.size(); ++j)
        best = max(best, v[j] + Degree(std::popcount(j)));
    return best;
}

// x_i lives at bit i, k_i at bit 80 + i of a 160-bit field; z indices are kept
// sorted in a side vector.
class Monomial {
public:
    using Words = std::array<std::uint64_t, 3>;

    Monomial() = default;
    explicit Monomial(Words xk, std::vector<std::uint32_t> z = {}) : xk_(xk), z_(std::move(z)) {}

    static Monomial of(Var v)
    {
        Monomial m;
        if (v.space == Space::z)
            m.z_.push_back(v.index);
        else
            m.set_bit(bit_of(v));
        return m;
    }
    static Monomial x(int i) { return of({Space::x, std::uint32_t(i)}); }
    static Monomial k(int i) { return of({Space::k, std::uint32_t(i)}); }
    static Monomial z(int i) { return of({Space::z, std::uint32_t(i)}); }

    static int bit_of(Var v)
    {
        if (v.index >= std::uint32_t(kWidth))
            throw std::out_of_range("variable index out of range");
        return v.space == Space::x ? int(v.index) : kWidth + int(v.index);
    }

    bool is_one() const { return xk_[0] == 0 && xk_[1] == 0 && xk_[2] == 0 && z_.empty(); }
    const Words &xk() const { return xk_; }
    const std::vector<std::uint32_t> &zs() const { return z_; }

    int degree() const { return degree(Space::x) + degree(Space::k) + int(z_.size()); }
    int degree(Space s) const
    {
        if (s == Space::z)
            return int(z_.size());
        Words m = space_mask(s);
        return std::popcount(xk_[0] & m[0]) + std::popcount(xk_[1] & m[1]) + std::popcount(xk_[2] & m[2]);
    }

    bool has(Var v) const
    {
        if (v.space == Space::z)
            return std::binary_search(z_.begin(), z_.end(), v.index);
        int b = bit_of(v);
        return (xk_[b >> 6] >> (b & 63)) & 1;
    }

    // Restriction of the monomial to one space.
    Monomial part(Space s) const
    {
        if (s == Space::z)
            return Monomial({}, z_);
        Words m = space_mask(s);
        return Monomial({xk_[0] & m[0], xk_[1] & m[1], xk_[2] & m[2]});
    }
    Monomial without(Space s) const
    {
        if (s == Space::z)
            return Monomial(xk_);
        Words m = space_mask(s);
        return Monomial({xk_[0] & ~m[0], xk_[1] & ~m[1], xk_[2] & ~m[2]}, z_);
    }

    friend Monomial operator*(const Monomial &a, const Monomial &b)
    {
        Monomial r({a.xk_[0] | b.xk_[0], a.xk_[1] | b.xk_[1], a.xk_[2] | b.xk_[2]});
        if (!a.z_.empty() || !b.z_.empty()) {
            r.z_.reserve(a.z_.size() + b.z_.size());
            std::set_union(a.z_.begin(), a.z_.end(), b.z_.begin(), b.z_.end(), std::back_inserter(r.z_));
        }
        return r;
    }

    // this | o as variable sets
    bool divides(const Monomial &o) const
    {
        for (int w = 0; w < 3; ++w)
            if (xk_[w] & ~o.xk_[w])
                return false;
        return std::includes(o.z_.begin(), o.z_.end(), z_.begin(), z_.end());
    }

    template <class F>
    void for_each_var(F &&f) const
    {
        for (int w = 0; w < 3; ++w)
            for (std::uint64_t bits = xk_[w]; bits; bits &= bits - 1) {
                int b = w * 64 + std::countr_zero(bits);
                f(b < kWidth ? Var{Space::x, std::uint32_t(b)} : Var{Space::k, std::uint32_t(b - kWidth)});
            }
        for (auto i : z_)
            f(Var{Space::z, i});
    }

    std::vector<Var> vars() const
    {
        std::vector<Var> v;
        for_each_var([&](Var x) { v.push_back(x); });
        return v;
    }

    friend bool operator==(const Monomial &, const Monomial &) = default;

    template <typename H>
    friend H AbslHashValue(H h, const Monomial &m)
    {
        return H::combine(std::move(h), m.xk_[0], m.xk_[1], m.xk_[2], m.z_);
    }

    static Words space_mask(Space s)
    {
        // x: bits 0..79, k: bits 80..159
        if (s == Space::x)
            return {~0ULL, 0xFFFFULL, 0};
        return {0, ~0xFFFFULL, 0xFFFFFFFFULL};
    }

private:
    void set_bit(int b) { xk_[b >> 6] |= 1ULL << (b & 63); }

    Words xk_{};
    std::vector<std::uint32_t> z_;
};

// Serialization order: higher degree first, then variable sequences compared
// lexicographically (x before k before z, then by index).
inline bool canonical_less(const Monomial &a, const Monomial &b)
{
    int da = a.degree(), db = b.degree();
    if (da != db)
        return da > db;
    auto va = a.vars(), vb = b.vars();
    return va < vb;
}

using TermSet = absl::flat_hash_set<Monomial>;

class Poly {
public:
    Poly() = default;
    Poly(const Monomial &m) { terms_.insert(m); }

    static Poly zero() { return {}; }
    static Poly one() { return Poly(Monomial()); }
    static Poly var(Var v) { return Poly(Monomial::of(v)); }
    static Poly x(int i) { return Poly(Monomial::x(i)); }
    static Poly k(int i) { return Poly(Monomial::k(i)); }
    static Poly z(int i) { return Poly(Monomial::z(i)); }
    static Poly constant(bool b) { return b ? one() : zero(); }

    bool is_zero() const { return terms_.empty(); }
    bool is_one() const { return terms_.size() == 1 && terms_.begin()->is_one(); }
    bool is_constant() const { return is_zero() || is_one(); }
    std::size_t size() const { return terms_.size(); }
    const TermSet &terms() const { return terms_; }
    bool contains(const Monomial &m) const { return terms_.contains(m); }

    void toggle(const Monomial &m)
    {
        auto [it, inserted] = terms_.insert(m);
        if (!inserted)
            terms_.erase(it);
    }
    void toggle(Monomial &&m)
    {
        auto it = terms_.find(m);
        if (it == terms_.end())
            terms_.insert(std::move(m));
        else
            terms_.erase(it);
    }
    void reserve(std::size_t n) { terms_.reserve(n); }

    Poly &operator+=(const Poly &o)
    {
        for (const auto &m : o.terms_)
            toggle(m);
        return *this;
    }
    friend Poly operator+(Poly a, const Poly &b) { return a += b; }
    friend Poly operator^(Poly a, const Poly &b) { return a += b; }

    friend Poly operator*(const Poly &a, const Poly &b)
    {
        if (a.is_zero() || b.is_zero())
            return {};
        if (a.is_one())
            return b;
        if (b.is_one())
            return a;
        Poly r;
        r.reserve(a.size() * b.size() / 2 + 1);
        for (const auto &ma : a.terms_)
            for (const auto &mb : b.terms_)
                r.toggle(ma * mb);
        return r;
    }
    friend Poly operator&(const Poly &a, const Poly &b) { return a * b; }
    Poly &operator*=(const Poly &o) { return *this = *this * o; }

    friend bool operator==(const Poly &a, const Poly &b) { return a.terms_ == b.terms_; }

    std::vector<Monomial> sorted_terms() const
    {
        std::vector<Monomial> v(terms_.begin(), terms_.end());
        std::sort(v.begin(), v.end(), canonical_less);
        return v;
    }

    int degree() const
    {
        int d = -1;
        for (const auto &m : terms_)
            d = std::max(d, m.degree());
        return d;
    }

private:
    TermSet terms_;
};

// Total degree as a Degree value (NEG_INF for the zero polynomial).
inline Degree degree(const Poly &p)
{
    return p.is_zero() ? Degree::neg_inf() : Degree(p.degree());
}

inline Degree degree(const Poly &p, Space s)
{
    Degree d = Degree::neg_inf();
    for (const auto &m : p.terms())
        d = max(d, Degree(m.degree(s)));
    return d;
}

// A point assigns x/k through a 160-bit field and z through a byte vector.
struct Point {
    Monomial::Words xk{};
    std::vector<std::uint8_t> z;

    void set(Var v, bool b)
    {
        if (v.space == Space::z) {
            if (z.size() <= v.index)
                z.resize(v.index + 1);
            z[v.index] = b;
            return;
        }
        int bit = Monomial::bit_of(v);
        auto mask = 1ULL << (bit & 63);
        xk[bit >> 6] = b ? (xk[bit >> 6] | mask) : (xk[bit >> 6] & ~mask);
    }
};

inline bool evaluate(const Monomial &m, const Point &pt)
{
    const auto &w = m.xk();
    for (int i = 0; i < 3; ++i)
        if (w[i] & ~pt.xk[i])
            return false;
    for (auto i : m.zs())
        if (i >= pt.z.size() || !pt.z[i])
            return false;
    return true;
}

inline bool evaluate(const Poly &p, const Point &pt)
{
    bool r = false;
    for (const auto &m : p.terms())
        r ^= evaluate(m, pt);
    return r;
}

// Substitute variables for which `sub` yields a polynomial; others are kept.
inline Poly substitute(const Poly &p, const std::function<std::optional<Poly>(Var)> &sub)
{
    Poly r;
    for (const auto &m : p.terms()) {
        Poly term = Poly::one();
        Monomial kept;
        m.for_each_var([&](Var v) {
            if (term.is_zero())
                return;
            if (auto s = sub(v))
                term = term * *s;
            else
                kept = kept * Monomial::of(v);
        });
        if (term.is_zero())
            continue;
        if (!kept.is_one())
            term = term * Poly(kept);
        r += term;
    }
    return r;
}

// f's variables x_0..x_{n-1} are the y-variables, replaced by g[0..n-1].
inline Poly compose(const Poly &f, const std::vector<Poly> &g)
{
    return substitute(f, [&](Var v) -> std::optional<Poly> {
        if (v.space != Space::x)
            return std::nullopt;
        if (v.index >= g.size())
            throw std::invalid_argument("compose: arity mismatch, no polynomial for x" + std::to_string(v.index));
        return g[v.index];
    });
}

inline Poly restrict(const Poly &p, const std::vector<std::pair<Var, bool>> &fixing)
{
    Monomial ones, zeros;
    for (auto [v, b] : fixing)
        (b ? ones : zeros) = (b ? ones : zeros) * Monomial::of(v);
    Poly r;
    for (const auto &m : p.terms()) {
        bool killed = false;
        for (int w = 0; w < 3; ++w)
            killed |= (m.xk()[w] & zeros.xk()[w]) != 0;
        for (auto z : zeros.zs())
            killed |= m.has({Space::z, z});
        if (killed)
            continue;
        Monomial::Words xk;
        for (int w = 0; w < 3; ++w)
            xk[w] = m.xk()[w] & ~ones.xk()[w];
        std::vector<std::uint32_t> zs;
        std::set_difference(m.zs().begin(), m.zs().end(), ones.zs().begin(), ones.zs().end(), std::back_inserter(zs));
        r.toggle(Monomial(xk, std::move(zs)));
    }
    return r;
}

// Vector degree: entry j is the max degree over the other variables of terms
// whose J-part is the bit pattern j (J ordered, in `space`); -inf if none.
inline VectorDegree vector_degree(const Poly &p, const std::vector<int> &J, Space space = Space::x)
{
    VectorDegree v(int(J.size()));
    for (const auto &m : p.terms()) {
        std::size_t j = 0;
        for (std::size_t q = 0; q < J.size(); ++q)
            if (m.has({space, std::uint32_t(J[q])}))
                j |= std::size_t(1) << q;
        v[j] = max(v[j], Degree(m.degree(space) - std::popcount(j)));
    }
    return v;
}

// Boolean-ring divisibility: h | f iff h*f = f.
inline bool divides(const Poly &h, const Poly &f)
{
    if (h.is_zero())
        throw std::invalid_argument("divides: zero divisor");
    return h * f == f;
}

inline Poly quotient_witness(const Poly &h, const Poly &f)
{
    if (!divides(h, f))
        throw std::invalid_argument("quotient_witness: h does not divide f");
    return f;
}

inline std::string to_string(const Monomial &m)
{
    if (m.is_one())
        return "1";
    std::string s;
    m.for_each_var([&](Var v) {
        s += space_letter(v.space);
        s += std::to_string(v.index);
    });
    return s;
}

inline std::string to_string(const Poly &p)
{
    if (p.is_zero())
        return "0";
    std::string s;
    for (const auto &m : p.sorted_terms()) {
        if (!s.empty())
            s += '+';
        s += to_string(m);
    }
    return s;
}

inline Poly parse_poly(std::string_view text)
{
    std::string t;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c)))
            t += c;
    if (t.empty())
        throw std::invalid_argument("parse_poly: empty input");
    if (t == "0")
        return {};
    Poly p;
    std::size_t pos = 0;
    while (pos <= t.size()) {
        std::size_t end = t.find('+', pos);
        if (end == std::string::npos)
            end = t.size();
        std::string_view term(t.data() + pos, end - pos);
        if (term.empty())
            throw std::invalid_argument("parse_poly: empty term in '" + t + "'");
        Monomial m;
        if (term != "1") {
            std::size_t i = 0;
            while (i < term.size()) {
                if (term[i] == '*') {
                    ++i;
                    continue;
                }
                char c = term[i++];
                Space s;
                if (c == 'x')
                    s = Space::x;
                else if (c == 'k')
                    s = Space::k;
                else if (c == 'z')
                    s = Space::z;
                else
                    throw std::invalid_argument(std::string("parse_poly: unexpected '") + c + "'");
                std::size_t j = i;
                while (j < term.size() && std::isdigit(static_cast<unsigned char>(term[j])))
                    ++j;
                if (j == i)
                    throw std::invalid_argument("parse_poly: variable without index");
                auto idx = std::stoul(std::string(term.substr(i, j - i)));
                m = m * Monomial::of({s, std::uint32_t(idx)});
                i = j;
            }
        }
        p.toggle(m);
        pos = end + 1;
    }
    return p;
}

} // namespace cubeforge
