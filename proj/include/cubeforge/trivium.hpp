#pragma once

#include "anf.hpp"

#include <array>
#include <bitset>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cubeforge {

using Key80 = std::bitset<80>;
using IV80 = std::bitset<80>;
using State288 = std::bitset<288>;
using Isoc = std::vector<int>;

inline constexpr int kInitRounds = 1152;
inline constexpr std::array<int, 6> kOutputTaps{65, 92, 161, 176, 242, 287};

inline void check_isoc(const Isoc &I, int width = kWidth)
{
    for (std::size_t i = 0; i < I.size(); ++i) {
        if (I[i] < 0 || I[i] >= width)
            throw std::out_of_range("ISoC index " + std::to_string(I[i]) + " outside [0," + std::to_string(width) + ")");
        if (i && I[i] <= I[i - 1])
            throw std::invalid_argument("ISoC must be strictly increasing");
    }
}

// Circular view of the 288 cells: s_i(t) sits at buf[(t + 287 - i) mod 288], so
// the rotation s <- (s287, s0, ..., s286) is just t+1, and the new s_0 reuses
// the slot of the dropped s_287.
template <class T>
class Register288 {
public:
    Register288() = default;
    explicit Register288(const std::array<T, 288> &s)
    {
        for (int i = 0; i < 288; ++i)
            at(i) = s[i];
    }

    T &at(int i) { return buf_[slot(i)]; }
    const T &at(int i) const { return buf_[slot(i)]; }

    // s_{n_i} = s_{n_i-1} s_{n_i-2} + l_i for n = 92, 176, 287, then rotate
    void step()
    {
        T a = at(65) ^ at(92) ^ (at(90) & at(91)) ^ at(170);
        T b = at(161) ^ at(176) ^ (at(174) & at(175)) ^ at(263);
        T c = at(242) ^ at(287) ^ (at(285) & at(286)) ^ at(68);
        at(92) = std::move(a);
        at(176) = std::move(b);
        at(287) = std::move(c);
        t_ = t_ == 287 ? 0 : t_ + 1;
    }

    T output() const { return at(65) ^ at(92) ^ at(161) ^ at(176) ^ at(242) ^ at(287); }

    std::array<T, 288> cells() const
    {
        std::array<T, 288> s;
        for (int i = 0; i < 288; ++i)
            s[i] = at(i);
        return s;
    }

private:
    std::size_t slot(int i) const
    {
        std::size_t p = t_ + 287 - i;
        return p >= 288 ? p - 288 : p;
    }

    std::array<T, 288> buf_{};
    std::size_t t_ = 0;
};

inline State288 init_state(const Key80 &key, const IV80 &iv)
{
    State288 s;
    for (int i = 0; i < 80; ++i) {
        s[i] = key[i];
        s[i + 93] = iv[i];
    }
    s[285] = s[286] = s[287] = true;
    return s;
}

inline State288 update_rounds(const State288 &s, int R)
{
    if (R < 0)
        throw std::invalid_argument("update_rounds: negative round count");
    std::array<bool, 288> a;
    for (int i = 0; i < 288; ++i)
        a[i] = s[i];
    Register288<bool> reg(a);
    for (int r = 0; r < R; ++r)
        reg.step();
    State288 out;
    for (int i = 0; i < 288; ++i)
        out[i] = reg.at(i);
    return out;
}

inline bool output_bit(const State288 &s)
{
    bool z = false;
    for (int t : kOutputTaps)
        z ^= s[t];
    return z;
}

inline std::vector<bool> keystream(const Key80 &key, const IV80 &iv, int nbits, int init_rounds = kInitRounds)
{
    auto s = update_rounds(init_state(key, iv), init_rounds);
    std::array<bool, 288> a;
    for (int i = 0; i < 288; ++i)
        a[i] = s[i];
    Register288<bool> reg(a);
    std::vector<bool> z(nbits);
    for (int i = 0; i < nbits; ++i) {
        z[i] = reg.output();
        reg.step();
    }
    return z;
}

// Hex strings: byte b is digits 2b..2b+1 and its bit i (LSB = 0) is bit 8b+i,
// so the first digit carries bits 7..4.
template <std::size_t N>
std::bitset<N> parse_hex(std::string_view s)
{
    if (s.starts_with("0x") || s.starts_with("0X"))
        s.remove_prefix(2);
    if (s.size() * 4 != N)
        throw std::invalid_argument("hex value must have " + std::to_string(N / 4) + " digits, got " + std::to_string(s.size()));
    std::bitset<N> b;
    for (std::size_t byte = 0; byte < N / 8; ++byte) {
        int v = std::stoi(std::string(s.substr(2 * byte, 2)), nullptr, 16);
        for (int i = 0; i < 8; ++i)
            b[8 * byte + i] = (v >> i) & 1;
    }
    return b;
}

template <std::size_t N>
std::string to_hex(const std::bitset<N> &b)
{
    static const char *digits = "0123456789abcdef";
    std::string s;
    for (std::size_t byte = 0; byte < N / 8; ++byte) {
        int v = 0;
        for (int i = 0; i < 8; ++i)
            v |= int(b[8 * byte + i]) << i;
        s += digits[v >> 4];
        s += digits[v & 15];
    }
    return s;
}

inline std::string bits_to_hex(const std::vector<bool> &bits)
{
    std::bitset<8> byte;
    std::string s;
    for (std::size_t i = 0; i + 8 <= bits.size(); i += 8) {
        for (int j = 0; j < 8; ++j)
            byte[j] = bits[i + j];
        s += to_hex(byte);
    }
    return s;
}

// ---- bitsliced evaluation: lane l of every word is an independent instance

using Lanes = std::uint64_t;

inline constexpr std::array<Lanes, 6> kLanePatterns{
    0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
    0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL,
};

inline Lanes broadcast(bool b) { return b ? ~Lanes(0) : 0; }

inline Register288<Lanes> batch_init(const std::array<Lanes, 80> &key, const std::array<Lanes, 80> &iv)
{
    std::array<Lanes, 288> s{};
    for (int i = 0; i < 80; ++i) {
        s[i] = key[i];
        s[i + 93] = iv[i];
    }
    s[285] = s[286] = s[287] = ~Lanes(0);
    return Register288<Lanes>(s);
}

inline Lanes batch_output(const std::array<Lanes, 80> &key, const std::array<Lanes, 80> &iv, int R)
{
    auto reg = batch_init(key, iv);
    for (int r = 0; r < R; ++r)
        reg.step();
    return reg.output();
}

// XOR of z over the cube in one shard [lo, hi) of the high (non-lane) part.
inline Lanes cube_sum_lanes(const Key80 &key, const Isoc &I, const IV80 &noncube, int R, std::uint64_t lo, std::uint64_t hi)
{
    std::array<Lanes, 80> kw, iw;
    for (int i = 0; i < 80; ++i) {
        kw[i] = broadcast(key[i]);
        iw[i] = broadcast(noncube[i]);
    }
    const int d = int(I.size());
    const int low = std::min(d, 6);
    for (int j = 0; j < low; ++j)
        iw[I[j]] = kLanePatterns[j];
    Lanes acc = 0;
    for (std::uint64_t h = lo; h < hi; ++h) {
        for (int j = low; j < d; ++j)
            iw[I[j]] = broadcast((h >> (j - low)) & 1);
        acc ^= batch_output(kw, iw, R);
    }
    if (low < 6)
        acc &= (Lanes(1) << (1 << low)) - 1;
    return acc;
}

// Cube sum evaluated 64 cube points per pass.
inline bool cube_sum(const Key80 &key, const Isoc &I, const IV80 &noncube, int R)
{
    check_isoc(I);
    const int d = int(I.size());
    std::uint64_t high = d > 6 ? std::uint64_t(1) << (d - 6) : 1;
    return std::popcount(cube_sum_lanes(key, I, noncube, R, 0, high)) & 1;
}

inline bool cube_sum(const Key80 &key, const Isoc &I, int R) { return cube_sum(key, I, IV80{}, R); }

// One state evaluation per cube point; kept as the reference for the batch path.
inline bool cube_sum_scalar(const Key80 &key, const Isoc &I, const IV80 &noncube, int R)
{
    check_isoc(I);
    bool acc = false;
    for (std::uint64_t p = 0; p < (std::uint64_t(1) << I.size()); ++p) {
        IV80 iv = noncube;
        for (std::size_t j = 0; j < I.size(); ++j)
            iv[I[j]] = (p >> j) & 1;
        acc ^= output_bit(update_rounds(init_state(key, iv), R));
    }
    return acc;
}

// ---- symbolic evaluation

struct TermBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Cell : std::uint8_t { zero, one, symbol };

struct Assignment {
    std::array<Cell, 80> x{}, k{};

    static Assignment all_symbolic()
    {
        Assignment a;
        a.x.fill(Cell::symbol);
        a.k.fill(Cell::symbol);
        return a;
    }
    // x_I symbolic, other IVs zero, key symbolic
    static Assignment cube(const Isoc &I)
    {
        Assignment a;
        a.k.fill(Cell::symbol);
        for (int i : I)
            a.x[i] = Cell::symbol;
        return a;
    }
};

using SymbolicState = std::array<Poly, 288>;

inline constexpr std::size_t kDefaultTermBudget = std::size_t(1) << 24;

inline Poly cell_poly(Cell c, Var v)
{
    return c == Cell::symbol ? Poly::var(v) : Poly::constant(c == Cell::one);
}

inline SymbolicState symbolic_state(int R, const Assignment &a, std::size_t budget = kDefaultTermBudget)
{
    std::array<Poly, 288> s;
    for (int i = 0; i < 80; ++i) {
        s[i] = cell_poly(a.k[i], {Space::k, std::uint32_t(i)});
        s[i + 93] = cell_poly(a.x[i], {Space::x, std::uint32_t(i)});
    }
    s[285] = s[286] = s[287] = Poly::one();
    Register288<Poly> reg(s);
    for (int r = 0; r < R; ++r) {
        reg.step();
        std::size_t total = 0;
        for (int i = 0; i < 288; ++i)
            total += reg.at(i).size();
        if (total > budget)
            throw TermBudgetExceeded("symbolic state exceeds " + std::to_string(budget) + " terms at round " + std::to_string(r + 1));
    }
    return reg.cells();
}

inline Poly output_poly(const SymbolicState &s)
{
    Poly z;
    for (int t : kOutputTaps)
        z += s[t];
    return z;
}

} // namespace cubeforge
