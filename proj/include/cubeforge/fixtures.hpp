#pragma once

#include "anf.hpp"
#include "trivium.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cubeforge::fixtures {

// Line-oriented text: CSV with a header row, or "name idx idx ..." for ISoCs.
// Parsers keep the original field text so rendering is byte-exact.

inline std::vector<std::string> split(const std::string &line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::vector<std::string> lines_of(const std::string &text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        out.push_back(l);
    return out;
}

inline std::string read_file(const std::filesystem::path &p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct ParseError : std::runtime_error {
    ParseError(const std::string &what, std::size_t line) : std::runtime_error("line " + std::to_string(line) + ": " + what) {}
};

// Rows of CSV text after checking the header; `fields` per row is enforced.
inline std::vector<std::vector<std::string>> csv_rows(const std::string &text, const std::string &header)
{
    auto ls = lines_of(text);
    if (ls.empty() || ls[0] != header)
        throw ParseError("expected header '" + header + "'", 1);
    const std::size_t fields = split(header, ',').size();
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        if (ls[i].empty())
            continue;
        auto f = split(ls[i], ',');
        if (f.size() != fields)
            throw ParseError("expected " + std::to_string(fields) + " fields, got " + std::to_string(f.size()), i + 1);
        rows.push_back(std::move(f));
    }
    return rows;
}

inline int to_int(const std::string &s, std::size_t line)
{
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(s, &pos);
    } catch (const std::exception &) {
        pos = 0;
    }
    if (s.empty() || pos != s.size())
        throw ParseError("not an integer: '" + s + "'", line);
    return v;
}

inline double to_double(const std::string &s, std::size_t line)
{
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception &) {
        pos = 0;
    }
    if (s.empty() || pos != s.size())
        throw ParseError("not a number: '" + s + "'", line);
    return v;
}

// ---- factor tables (sets T and T1 per round count)

struct FactorRow {
    std::string set; // "T" or "T1"
    int no = 0;
    std::string name; // derived-variable label such as k103, empty for a key bit
    Poly h;
    std::string h_text;
    int isocs = 0;
    std::string pr00, pr_f1; // kept as printed
    int rounds = 0;
};

inline const char *kFactorHeader = "set,no,name,h,isocs,pr00,pr_f1,rounds";

inline std::vector<FactorRow> parse_factors(const std::string &text)
{
    std::vector<FactorRow> out;
    std::size_t line = 1;
    for (auto &f : csv_rows(text, kFactorHeader)) {
        ++line;
        FactorRow r;
        r.set = f[0];
        if (r.set != "T" && r.set != "T1")
            throw ParseError("set must be T or T1", line);
        r.no = to_int(f[1], line);
        r.name = f[2];
        r.h_text = f[3];
        try {
            r.h = parse_poly(r.h_text);
        } catch (const std::exception &e) {
            throw ParseError(e.what(), line);
        }
        r.isocs = to_int(f[4], line);
        r.pr00 = f[5];
        r.pr_f1 = f[6];
        to_double(r.pr00, line);
        to_double(r.pr_f1, line);
        r.rounds = to_int(f[7], line);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string render_factors_csv(const std::vector<FactorRow> &rows)
{
    std::string s = std::string(kFactorHeader) + "\n";
    for (const auto &r : rows)
        s += r.set + "," + std::to_string(r.no) + "," + r.name + "," + r.h_text + "," + std::to_string(r.isocs) + "," +
             r.pr00 + "," + r.pr_f1 + "," + std::to_string(r.rounds) + "\n";
    return s;
}

// Human-readable table for one set, one row per factor.
inline std::string render_factor_table(const std::vector<FactorRow> &rows, const std::string &set)
{
    std::string s = "No. | h | # of ISoCs | Pr(0|0) | Pr(f_I != 0 | exists I in T_h) | # of Rounds\n";
    for (const auto &r : rows) {
        if (r.set != set)
            continue;
        std::string h = r.name.empty() ? r.h_text : r.name + " = " + r.h_text;
        s += std::to_string(r.no) + " | " + h + " | " + std::to_string(r.isocs) + " | " + r.pr00 + " | " + r.pr_f1 +
             " | " + std::to_string(r.rounds) + "\n";
    }
    return s;
}

// ---- named ISoCs

struct NamedIsoc {
    std::string name;
    Isoc isoc;
};

inline std::vector<NamedIsoc> parse_isocs(const std::string &text)
{
    std::vector<NamedIsoc> out;
    std::size_t line = 0;
    for (const auto &l : lines_of(text)) {
        ++line;
        if (l.empty())
            continue;
        auto f = split(l, ' ');
        NamedIsoc n{f[0], {}};
        for (std::size_t i = 1; i < f.size(); ++i)
            n.isoc.push_back(to_int(f[i], line));
        try {
            check_isoc(n.isoc);
        } catch (const std::exception &e) {
            throw ParseError(e.what(), line);
        }
        out.push_back(std::move(n));
    }
    return out;
}

inline std::string render_isocs(const std::vector<NamedIsoc> &v)
{
    std::string s;
    for (const auto &n : v) {
        s += n.name;
        for (int i : n.isoc)
            s += " " + std::to_string(i);
        s += "\n";
    }
    return s;
}

inline const Isoc &find_isoc(const std::vector<NamedIsoc> &v, const std::string &name)
{
    for (const auto &n : v)
        if (n.name == name)
            return n.isoc;
    throw std::out_of_range("no ISoC named " + name);
}

// ---- keys that make a superpoly evaluate to 1

struct FoundKey {
    std::string isoc;
    int rounds = 0;
    std::string hex;
    std::optional<Key80> key; // empty when the printed value is not 20 hex digits
};

inline const char *kFoundKeyHeader = "isoc,rounds,key";

inline std::vector<FoundKey> parse_found_keys(const std::string &text)
{
    std::vector<FoundKey> out;
    std::size_t line = 1;
    for (auto &f : csv_rows(text, kFoundKeyHeader)) {
        ++line;
        FoundKey k{f[0], to_int(f[1], line), f[2], std::nullopt};
        try {
            k.key = parse_hex<80>(k.hex);
        } catch (const std::invalid_argument &) {
        }
        out.push_back(std::move(k));
    }
    return out;
}

inline std::string render_found_keys(const std::vector<FoundKey> &v)
{
    std::string s = std::string(kFoundKeyHeader) + "\n";
    for (const auto &k : v)
        s += k.isoc + "," + std::to_string(k.rounds) + "," + k.hex + "\n";
    return s;
}

// ---- zero-sum pattern; round labels are "N", "<=N" or "A-B"

struct ZeroSumCell {
    std::string isoc;
    std::string rounds_label;
    int lo = 0, hi = 0; // lo = 0 for "<=N"
    bool zero_sum = false;
};

inline const char *kZeroSumHeader = "isoc,rounds,zero_sum";

inline std::vector<ZeroSumCell> parse_zero_sum(const std::string &text)
{
    std::vector<ZeroSumCell> out;
    std::size_t line = 1;
    for (auto &f : csv_rows(text, kZeroSumHeader)) {
        ++line;
        ZeroSumCell c{f[0], f[1]};
        const std::string &r = f[1];
        if (r.starts_with("<=")) {
            c.lo = 0;
            c.hi = to_int(r.substr(2), line);
        } else if (auto dash = r.find('-'); dash != std::string::npos) {
            c.lo = to_int(r.substr(0, dash), line);
            c.hi = to_int(r.substr(dash + 1), line);
        } else {
            c.lo = c.hi = to_int(r, line);
        }
        if (f[2] != "Y" && f[2] != "N")
            throw ParseError("zero_sum must be Y or N", line);
        c.zero_sum = f[2] == "Y";
        out.push_back(std::move(c));
    }
    return out;
}

inline std::string render_zero_sum(const std::vector<ZeroSumCell> &v)
{
    std::string s = std::string(kZeroSumHeader) + "\n";
    for (const auto &c : v)
        s += c.isoc + "," + c.rounds_label + "," + (c.zero_sum ? "Y" : "N") + "\n";
    return s;
}

// Expected zero-sum bit at R, if the pattern covers R.
inline std::optional<bool> expected_zero_sum(const std::vector<ZeroSumCell> &v, const std::string &isoc, int R)
{
    for (const auto &c : v)
        if (c.isoc == isoc && c.lo <= R && R <= c.hi)
            return c.zero_sum;
    return std::nullopt;
}

// ---- share of keys with cost <= 2^log2_cost, and the success counts behind it

struct ProportionRow {
    int rounds = 0;
    int log2_cost = 0;
    std::string proportion; // e.g. "87.8%"
    std::uint64_t successes = 0, trials = 0;

    double p() const { return std::stod(proportion) / 100; }
};

inline const char *kProportionHeader = "rounds,log2_cost,proportion,successes,trials";

inline std::vector<ProportionRow> parse_proportions(const std::string &text)
{
    std::vector<ProportionRow> out;
    std::size_t line = 1;
    for (auto &f : csv_rows(text, kProportionHeader)) {
        ++line;
        if (!f[2].ends_with("%"))
            throw ParseError("proportion must end in %", line);
        to_double(f[2].substr(0, f[2].size() - 1), line);
        out.push_back({to_int(f[0], line), to_int(f[1], line), f[2], std::uint64_t(to_int(f[3], line)),
                       std::uint64_t(to_int(f[4], line))});
    }
    return out;
}

inline std::string render_proportions(const std::vector<ProportionRow> &v)
{
    std::string s = std::string(kProportionHeader) + "\n";
    for (const auto &r : v)
        s += std::to_string(r.rounds) + "," + std::to_string(r.log2_cost) + "," + r.proportion + "," +
             std::to_string(r.successes) + "," + std::to_string(r.trials) + "\n";
    return s;
}

// One-line-per-round summary: C thresholds and proportions.
inline std::string render_proportion_table(const std::vector<ProportionRow> &v, int rounds)
{
    std::string c = "C", p = "proportion";
    for (const auto &r : v)
        if (r.rounds == rounds) {
            c += " | 2^" + std::to_string(r.log2_cost);
            p += " | " + r.proportion;
        }
    return c + "\n" + p + "\n";
}

// ---- the shipped data set

struct DataSet {
    std::vector<NamedIsoc> isocs;
    std::vector<FoundKey> found_keys;
    std::vector<ZeroSumCell> zero_sum;
    std::vector<ProportionRow> proportions;
    std::map<int, std::vector<FactorRow>> factors; // by round count
};

inline DataSet load(const std::filesystem::path &dir)
{
    DataSet d;
    auto with_name = [&](const std::string &f, auto parse) {
        try {
            return parse(read_file(dir / f));
        } catch (const ParseError &e) {
            throw std::runtime_error(f + ": " + e.what());
        }
    };
    d.isocs = with_name("isocs.txt", parse_isocs);
    d.found_keys = with_name("found_keys.csv", parse_found_keys);
    d.zero_sum = with_name("zero_sum.csv", parse_zero_sum);
    d.proportions = with_name("proportions.csv", parse_proportions);
    for (int r : {820, 825, 830})
        d.factors[r] = with_name("factors_" + std::to_string(r) + ".csv", parse_factors);
    return d;
}

} // namespace cubeforge::fixtures
