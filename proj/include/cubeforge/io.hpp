#pragma once

#include "corr_attack.hpp"
#include "fixtures.hpp"
#include "varsub.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace cubeforge::io {

using fixtures::lines_of;
using fixtures::ParseError;
using fixtures::read_file;

inline void write_file(const std::filesystem::path &p, const std::string &s)
{
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << s;
}

// "3,5,9" or "3 5 9"
inline Isoc parse_index_list(const std::string &s)
{
    Isoc I;
    std::string cur;
    auto flush = [&] {
        if (cur.empty())
            return;
        std::size_t pos = 0;
        int v = std::stoi(cur, &pos);
        if (pos != cur.size())
            throw std::invalid_argument("bad index '" + cur + "'");
        I.push_back(v);
        cur.clear();
    };
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t')
            flush();
        else
            cur += c;
    }
    flush();
    std::sort(I.begin(), I.end());
    check_isoc(I);
    return I;
}

inline std::string format_index_list(const Isoc &I)
{
    std::string s;
    for (std::size_t q = 0; q < I.size(); ++q)
        s += (q ? "," : "") + std::to_string(I[q]);
    return s;
}

// ISoC files: one per line, indices separated by commas or spaces. A leading
// non-numeric name and trailing key=value tokens are ignored; '#' starts a comment.
inline std::vector<Isoc> parse_isoc_file(const std::string &text)
{
    std::vector<Isoc> out;
    std::size_t line = 0;
    for (auto l : lines_of(text)) {
        ++line;
        if (auto h = l.find('#'); h != std::string::npos)
            l.resize(h);
        std::string kept;
        bool first = true;
        for (const auto &tok : fixtures::split(l, ' ')) {
            if (tok.empty())
                continue;
            bool numeric = std::isdigit(static_cast<unsigned char>(tok[0]));
            if (first && !numeric) {
                first = false;
                continue;
            }
            first = false;
            if (tok.find('=') != std::string::npos)
                continue;
            kept += tok + " ";
        }
        if (kept.empty())
            continue;
        try {
            out.push_back(parse_index_list(kept));
        } catch (const std::exception &e) {
            throw ParseError(e.what(), line);
        }
    }
    return out;
}

// One polynomial per line in the text format; '#' lines are skipped.
inline std::vector<Poly> parse_poly_lines(const std::string &text)
{
    std::vector<Poly> out;
    std::size_t line = 0;
    for (const auto &l : lines_of(text)) {
        ++line;
        if (l.empty() || l[0] == '#')
            continue;
        try {
            out.push_back(parse_poly(l));
        } catch (const std::exception &e) {
            throw ParseError(e.what(), line);
        }
    }
    return out;
}

inline CandidateFamily read_family(const std::filesystem::path &p)
{
    CandidateFamily f{parse_poly_lines(read_file(p))};
    f.validate();
    return f;
}

// Sidecar map: "z3 = k12+k37k38+k39"
inline std::string render_substitution_map(const SubstitutionMap &m)
{
    std::string s;
    for (std::size_t i = 0; i < m.size(); ++i)
        s += "z" + std::to_string(i) + " = " + to_string(m.entries[i]) + "\n";
    return s;
}

inline SubstitutionMap parse_substitution_map(const std::string &text)
{
    SubstitutionMap m;
    std::size_t line = 0;
    for (const auto &l : lines_of(text)) {
        ++line;
        if (l.empty())
            continue;
        auto eq = l.find(" = ");
        if (eq == std::string::npos || l[0] != 'z' || std::stoul(l.substr(1, eq - 1)) != m.size())
            throw ParseError("expected 'z" + std::to_string(m.size()) + " = <poly>'", line);
        m.entries.push_back(parse_poly(l.substr(eq + 3)));
    }
    return m;
}

// Corpus: "<indices> <k-space superpoly>" per line.
inline std::string render_corpus(const std::vector<SpecialCube> &cubes)
{
    std::string s;
    for (const auto &c : cubes)
        s += format_index_list(c.isoc) + " " + to_string(c.superpoly) + "\n";
    return s;
}

inline std::vector<SpecialCube> parse_corpus(const std::string &text)
{
    std::vector<SpecialCube> out;
    std::size_t line = 0;
    for (const auto &l : lines_of(text)) {
        ++line;
        if (l.empty() || l[0] == '#')
            continue;
        auto sp = l.find(' ');
        if (sp == std::string::npos)
            throw ParseError("expected '<indices> <poly>'", line);
        try {
            out.push_back({parse_index_list(l.substr(0, sp)), parse_poly(l.substr(sp + 1))});
        } catch (const std::exception &e) {
            throw ParseError(e.what(), line);
        }
    }
    return out;
}

// Derived-variable label k_{135-i} for a triple on pivot k_i, else empty.
inline std::string factor_label(const Poly &h)
{
    if (h.size() < 2)
        return "";
    int pivot = 80;
    for (const auto &m : h.terms())
        m.for_each_var([&](Var v) { pivot = std::min(pivot, int(v.index)); });
    return pivot <= 53 ? "k" + std::to_string(135 - pivot) : "";
}

inline std::string fixed(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Factor table directory: factors.csv (same columns as the shipped data),
// members.txt ("T 3 0,1,2,...") and meta.csv.
inline void write_factor_table(const std::filesystem::path &dir, const FactorTable &t)
{
    std::vector<fixtures::FactorRow> rows;
    std::string members;
    auto add = [&](const std::vector<FactorEntry> &v, const std::string &set) {
        int no = 0;
        for (const auto &e : v) {
            ++no;
            rows.push_back({set, no, factor_label(e.h), e.h, to_string(e.h), int(e.isocs.size()), fixed(e.pr00),
                            fixed(e.pr_f1), t.rounds});
            for (const auto &I : e.isocs)
                members += set + " " + std::to_string(no) + " " + format_index_list(I) + "\n";
        }
    };
    add(t.T, "T");
    add(t.T1, "T1");
    write_file(dir / "factors.csv", fixtures::render_factors_csv(rows));
    write_file(dir / "members.txt", members);
    std::string meta = "rounds,p,seed,samples\n" + std::to_string(t.rounds) + "," + fixed(t.p) + "," +
                       std::to_string(t.seed) + "," +
                       std::to_string(t.T.empty() ? (t.T1.empty() ? 0 : t.T1[0].samples) : t.T[0].samples) + "\n";
    write_file(dir / "meta.csv", meta);
}

inline FactorTable read_factor_table(const std::filesystem::path &dir)
{
    FactorTable t;
    auto meta = fixtures::csv_rows(read_file(dir / "meta.csv"), "rounds,p,seed,samples");
    if (meta.size() != 1)
        throw std::runtime_error("meta.csv: expected one row");
    t.rounds = std::stoi(meta[0][0]);
    t.p = std::stod(meta[0][1]);
    t.seed = std::stoull(meta[0][2]);
    std::uint64_t samples = std::stoull(meta[0][3]);
    for (const auto &r : fixtures::parse_factors(read_file(dir / "factors.csv"))) {
        FactorEntry e;
        e.h = r.h;
        e.pr00 = std::stod(r.pr00);
        e.pr_f1 = std::stod(r.pr_f1);
        e.samples = samples;
        e.conditioned = std::uint64_t(std::llround((1 - e.pr_f1) * double(samples)));
        (r.set == "T" ? t.T : t.T1).push_back(std::move(e));
    }
    std::size_t line = 0;
    for (const auto &l : lines_of(read_file(dir / "members.txt"))) {
        ++line;
        if (l.empty())
            continue;
        auto f = fixtures::split(l, ' ');
        if (f.size() != 3)
            throw ParseError("members.txt: expected '<set> <no> <indices>'", line);
        auto &v = f[0] == "T" ? t.T : t.T1;
        std::size_t no = std::stoul(f[1]);
        if (no < 1 || no > v.size())
            throw ParseError("members.txt: row number out of range", line);
        v[no - 1].isocs.push_back(parse_index_list(f[2]));
    }
    return t;
}

} // namespace cubeforge::io
