#include "cubeforge/corr_attack.hpp"
#include "cubeforge/degree.hpp"
#include "cubeforge/fixtures.hpp"
#include "cubeforge/io.hpp"
#include "cubeforge/isoc_search.hpp"
#include "cubeforge/pipeline.hpp"
#include "cubeforge/trails.hpp"
#include "cubeforge/trivium.hpp"
#include "cubeforge/varsub.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#ifndef CUBEFORGE_DATA_DIR
#define CUBEFORGE_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace cubeforge;
using json = nlohmann::ordered_json;

namespace {

constexpr const char *kVersion = "0.1.0";

std::uint64_t env_budget()
{
    if (const char *s = std::getenv("CUBEFORGE_BUDGET"))
        return std::stoull(s);
    return kDefaultNodeBudget;
}

Key80 random_key(std::mt19937_64 &rng)
{
    Key80 k;
    for (int i = 0; i < 80; ++i)
        k[i] = rng() & 1;
    return k;
}

// Shared state for one run: where results go and what the manifest records.
struct Job {
    std::string command;
    json options = json::object();
    json inputs = json::array();
    json summary = json::object();
    std::optional<std::uint64_t> seed;
    fs::path out;      // result file or directory; empty means stdout
    fs::path manifest; // explicit manifest path
    bool out_is_dir = false;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void input(const fs::path &p)
    {
        auto a = fs::absolute(p).lexically_normal();
        inputs.push_back({{"path", a.string()}, {"bytes", fs::is_regular_file(a) ? fs::file_size(a) : 0}});
    }

    // Result text goes to --out (or stdout).
    void emit(const std::string &text, const std::string &suffix = "") const
    {
        if (out.empty()) {
            std::cout << text;
            return;
        }
        io::write_file(out_is_dir || suffix.empty() ? out : fs::path(out.string() + suffix), text);
    }

    void finish(const CLI::App &app) const
    {
        fs::path where = manifest;
        if (where.empty() && !out.empty())
            where = out_is_dir ? out / "manifest.json" : fs::path(out.string() + ".manifest.json");
        if (where.empty())
            return;
        json opts = json::object();
        for (const auto *o : app.get_options()) {
            if (o->get_name() == "--help" || o->get_name().empty() || !o->count())
                continue;
            auto r = o->results();
            std::string k = o->get_name();
            while (!k.empty() && k[0] == '-')
                k.erase(0, 1);
            static const std::set<std::string> paths{"out", "manifest", "isoc", "corpus", "family",
                                                     "tables", "data", "checkpoint", "config"};
            if (paths.count(k))
                for (auto &x : r)
                    x = fs::absolute(x).lexically_normal().string();
            opts[k] = r.size() == 1 ? json(r[0]) : json(r);
        }
        std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        json m = {{"tool", "cubeforge"},
                  {"version", kVersion},
                  {"command", command},
                  {"options", opts},
                  {"inputs", inputs},
                  {"seed", seed ? json(*seed) : json(nullptr)},
                  {"threads", thread_count()},
                  {"node_budget", env_budget()},
                  {"summary", summary},
                  {"finished", stamp},
                  {"wall_time_s",
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
        io::write_file(where, m.dump(2) + "\n");
    }
};

std::vector<Isoc> read_isocs(Job &job, const std::string &path)
{
    job.input(path);
    auto v = io::parse_isoc_file(io::read_file(path));
    if (v.empty())
        throw std::runtime_error(path + ": no ISoCs");
    return v;
}

// "820" or "580-600" or "580,590,600"
std::vector<int> parse_rounds(const std::string &s)
{
    std::vector<int> out;
    for (const auto &part : fixtures::split(s, ',')) {
        auto dash = part.find('-');
        if (dash == std::string::npos) {
            out.push_back(std::stoi(part));
            continue;
        }
        int lo = std::stoi(part.substr(0, dash)), hi = std::stoi(part.substr(dash + 1));
        if (lo > hi)
            throw std::invalid_argument("bad round range " + part);
        for (int r = lo; r <= hi; ++r)
            out.push_back(r);
    }
    for (int r : out)
        if (r < 0)
            throw std::invalid_argument("rounds must be non-negative");
    return out;
}

// ---- trivium keystream

void run_keystream(Job &job, const std::string &key, const std::string &iv, int rounds, int bits)
{
    auto z = keystream(parse_hex<80>(key), parse_hex<80>(iv), bits, rounds);
    job.emit(bits_to_hex(z) + "\n");
}

// ---- degree estimate

struct DegreeArgs {
    int rounds = 0;
    std::string isoc_file, j;
    int j_cap = 8;
    int mode = 1;
    int repeats = 1;
    std::uint64_t seed = 0;
    bool summary = false;
};

void run_degree(Job &job, const DegreeArgs &a)
{
    job.seed = a.seed;
    auto isocs = read_isocs(job, a.isoc_file);
    std::mt19937_64 rng(a.seed);
    std::string csv = a.summary ? "isoc,size,max_zero_sum_round,baseline_max_zero_sum_round\n" : "isoc,round,bound\n";
    for (std::size_t q = 0; q < isocs.size(); ++q) {
        const Isoc &I = isocs[q];
        std::vector<Degree> best;
        int reps = a.j.empty() ? a.repeats : 1;
        for (int t = 0; t < reps; ++t) {
            std::vector<int> J = a.j.empty() ? choose_index_set(I, a.rounds, a.j_cap, rng) : io::parse_index_list(a.j);
            for (int j : J)
                if (!std::binary_search(I.begin(), I.end(), j))
                    throw std::invalid_argument("J must be a subset of the ISoC");
            auto s = estimate_trivium_series(I, J, a.rounds, a.mode);
            if (best.empty())
                best = s;
            else
                for (std::size_t r = 0; r < s.size(); ++r)
                    best[r] = std::min(best[r], s[r]);
        }
        if (a.summary) {
            auto base = estimate_trivium_series(I, {}, a.rounds, 1);
            csv += std::to_string(q) + "," + std::to_string(I.size()) + "," +
                   std::to_string(max_zero_sum_round(best, int(I.size()))) + "," +
                   std::to_string(max_zero_sum_round(base, int(I.size()))) + "\n";
        } else {
            for (std::size_t r = 0; r < best.size(); ++r)
                csv += std::to_string(q) + "," + std::to_string(r) + "," + best[r].str() + "\n";
        }
    }
    job.emit(csv);
}

// ---- isoc search

struct SearchArgs {
    int rounds = 0;
    std::string j;
    int size = 0, threshold = 0, attempts = 1, width = kWidth, mode = 1;
    std::uint64_t seed = 0;
    bool exhaustive = false;
};

SearchParams search_params(const SearchArgs &a)
{
    SearchParams p;
    p.J = io::parse_index_list(a.j);
    p.k = a.size;
    p.d = a.threshold;
    p.a = a.attempts;
    p.width = a.width;
    p.seed = a.seed;
    return p;
}

void run_search(Job &job, const SearchArgs &a)
{
    job.seed = a.seed;
    auto p = search_params(a);
    auto r = a.exhaustive ? exhaustive_classification(p, {a.rounds, a.mode}) : search(p, {a.rounds, a.mode});
    std::string s;
    for (const auto &g : r.good)
        s += io::format_index_list(g.isoc) + " estimate=" + g.estimate.str() + "\n";
    job.summary = {{"good", r.good.size()}, {"estimator_calls", r.estimator_calls}};
    std::cerr << r.good.size() << " good ISoCs, " << r.estimator_calls << " estimator calls\n";
    job.emit(s);
}

// ---- superpoly recover / recover-direct

void run_recover(Job &job, int rounds, int r_m, const std::string &isoc_file, bool direct)
{
    auto isocs = read_isocs(job, isoc_file);
    Budget budget{env_budget()};
    std::vector<SpecialCube> cubes;
    std::string zside;
    for (const auto &I : isocs) {
        if (direct) {
            cubes.push_back({I, superpoly_direct(I, rounds, budget)});
            continue;
        }
        int m = r_m ? r_m : default_middle_round(rounds);
        auto rec = recover_superpoly(I, rounds, m, budget);
        cubes.push_back({I, expand_z(rec.z_poly, rec.map)});
        zside += "# " + io::format_index_list(I) + " r_m=" + std::to_string(m) + "\n";
        zside += "f = " + to_string(rec.z_poly) + "\n" + io::render_substitution_map(rec.map);
    }
    job.emit(io::render_corpus(cubes));
    if (!direct && !job.out.empty())
        job.emit(zside, ".z");
}

// ---- attack corpus / preprocess / simulate

void run_corpus(Job &job, const SearchArgs &a, int r_m, int screen_keys)
{
    job.seed = a.seed;
    CorpusParams p;
    p.rounds = a.rounds;
    p.search = search_params(a);
    p.mode = a.mode;
    p.r_m = r_m;
    p.screen_keys = screen_keys;
    p.seed = a.seed;
    p.budget = env_budget();
    auto c = build_corpus(p);
    job.summary = {{"good", c.good},
                   {"screened_nonzero", c.screened_nonzero},
                   {"over_budget", c.over_budget},
                   {"cubes", c.cubes.size()}};
    std::cerr << c.good << " good ISoCs, " << c.screened_nonzero << " with a nonzero cube sum, " << c.cubes.size()
              << " superpolys recovered\n";
    job.emit(io::render_corpus(c.cubes));
}

void run_preprocess(Job &job, const std::string &corpus, const std::string &family, int rounds, double p,
                    std::uint64_t samples, std::uint64_t seed)
{
    job.seed = seed;
    job.input(corpus);
    auto cubes = io::parse_corpus(io::read_file(corpus));
    CandidateFamily fam = CandidateFamily::trivium_default();
    if (!family.empty()) {
        job.input(family);
        fam = io::read_family(family);
    }
    PreprocessOptions opt;
    opt.p = p;
    opt.samples = samples;
    opt.seed = seed;
    opt.rounds = rounds;
    auto t = preprocess(cubes, fam, opt);
    for (const auto &w : t.warnings)
        std::cerr << "warning: " << w << "\n";
    job.summary = {{"T", t.T.size()}, {"T1", t.T1.size()}};
    if (job.out.empty())
        throw std::invalid_argument("attack preprocess needs --out DIR");
    io::write_factor_table(job.out, t);
}

struct SimulateArgs {
    std::string tables;
    int trials = 200;
    std::uint64_t seed = 0;
    std::vector<double> thresholds;
};

void run_simulate(Job &job, const SimulateArgs &a)
{
    job.seed = a.seed;
    job.input(fs::path(a.tables) / "factors.csv");
    job.input(fs::path(a.tables) / "members.txt");
    auto table = io::read_factor_table(a.tables);
    std::set<Isoc> all;
    int cube_size = 0;
    for (const auto *v : {&table.T, &table.T1})
        for (const auto &e : *v)
            for (const auto &I : e.isocs) {
                all.insert(I);
                cube_size = std::max(cube_size, int(I.size()));
            }
    if (all.empty())
        throw std::invalid_argument("factor table has no cubes");

    std::mt19937_64 rng(a.seed);
    std::vector<TrialOutcome> trials;
    G0Calibration cal;
    std::string csv = "trial,a,b,e,log2_cost,g1_false\n";
    for (int t = 0; t < a.trials; ++t) {
        Key80 key = random_key(rng);
        auto g = online_simulate(key, table, table.rounds);
        auto o = score_trial(key, g, double(all.size()), cube_size);
        calibrate_g0(table, key, g, cal);
        trials.push_back(o);
        csv += std::to_string(t) + "," + std::to_string(o.a) + "," + std::to_string(o.b) + "," + std::to_string(o.e) +
               "," + io::fixed(o.log2_cost, 3) + "," + std::to_string(o.g1_false) + "\n";
    }
    std::vector<double> th = a.thresholds;
    if (th.empty())
        for (int c = 60; c <= 80; c += 4)
            th.push_back(c);
    auto prop = cost_proportions(trials, th);
    std::string ptab = "log2_cost,proportion\n";
    for (std::size_t i = 0; i < th.size(); ++i)
        ptab += io::fixed(th[i], 1) + "," + io::fixed(100 * prop[i], 1) + "%\n";
    std::uint64_t g1_false = 0;
    for (const auto &o : trials)
        g1_false += o.g1_false;
    std::string cal_csv = "g0_events,g0_correct,empirical,predicted,g1_false\n" + std::to_string(cal.events) + "," +
                          std::to_string(cal.correct) + "," + io::fixed(cal.empirical(), 4) + "," +
                          io::fixed(cal.predicted(), 4) + "," + std::to_string(g1_false) + "\n";
    job.summary = {{"trials", a.trials}, {"g0_events", cal.events}, {"g1_false", g1_false}};
    if (job.out.empty()) {
        std::cout << csv << "\n" << ptab << "\n" << cal_csv;
    } else {
        job.emit(csv);
        job.emit(ptab, ".proportions.csv");
        job.emit(cal_csv, ".g0.csv");
    }
}

// ---- verify-zero-sum

struct VerifyArgs {
    std::string isoc_file, name, rounds, key, data = CUBEFORGE_DATA_DIR, checkpoint;
    int keys = 8;
    std::uint64_t seed = 0;
    bool extended = false;
    int chunk_log2 = 30;
    int desk_max = 24;
};

// Cube sum at R with the accumulator checkpointed every 2^chunk_log2 evaluations.
bool checkpointed_cube_sum(const Key80 &key, const Isoc &I, int R, const fs::path &ckpt, int chunk_log2)
{
    const int d = int(I.size());
    const std::uint64_t high = d > 6 ? std::uint64_t(1) << (d - 6) : 1;
    const std::uint64_t step = std::max<std::uint64_t>(1, std::uint64_t(1) << std::max(0, chunk_log2 - 6));
    std::string tag = to_hex(key) + " " + std::to_string(R) + " " + io::format_index_list(I);
    std::uint64_t next = 0;
    Lanes acc = 0;
    if (!ckpt.empty() && fs::exists(ckpt)) {
        std::istringstream in(io::read_file(ckpt));
        std::string line;
        std::getline(in, line);
        if (line == tag) {
            in >> next >> acc;
            std::cerr << "resuming at " << next << "/" << high << "\n";
        }
    }
    while (next < high) {
        std::uint64_t hi = std::min(high, next + step);
        std::vector<Lanes> part(thread_count(), 0);
        std::uint64_t n = hi - next, per = (n + part.size() - 1) / part.size();
        parallel_for(part.size(), [&](std::size_t w) {
            std::uint64_t lo = next + w * per, up = std::min(hi, lo + per);
            if (lo < up)
                part[w] = cube_sum_lanes(key, I, IV80{}, R, lo, up);
        });
        for (auto p : part)
            acc ^= p;
        next = hi;
        if (!ckpt.empty())
            io::write_file(ckpt, tag + "\n" + std::to_string(next) + " " + std::to_string(acc) + "\n");
    }
    return std::popcount(acc) & 1;
}

int run_verify(Job &job, const VerifyArgs &a)
{
    job.seed = a.seed;
    std::vector<std::pair<std::string, Isoc>> isocs;
    if (!a.name.empty()) {
        job.input(fs::path(a.data) / "isocs.txt");
        auto named = fixtures::parse_isocs(io::read_file(fs::path(a.data) / "isocs.txt"));
        isocs.push_back({a.name, fixtures::find_isoc(named, a.name)});
    } else {
        for (auto &I : read_isocs(job, a.isoc_file))
            isocs.push_back({io::format_index_list(I), I});
    }
    for (const auto &[n, I] : isocs)
        if (int(I.size()) > a.desk_max && !a.extended)
            throw std::invalid_argument("ISoC " + n + " has size " + std::to_string(I.size()) +
                                        "; full-size cube sums need --extended");
    auto rounds = parse_rounds(a.rounds);
    std::mt19937_64 rng(a.seed);
    int failures = 0;
    std::string out;

    if (!a.extended) {
        // superpoly from the trail engine against bitsliced cube sums
        out = "isoc,round,keys,result\n";
        Budget budget{env_budget()};
        for (const auto &[n, I] : isocs)
            for (int R : rounds) {
                Poly f = superpoly_direct(I, R, budget);
                KeyPoly kp(f);
                bool ok = true;
                for (int t = 0; t < a.keys; ++t) {
                    Key80 k = random_key(rng);
                    ok &= kp(k) == cube_sum(k, I, R);
                }
                failures += !ok;
                out += n + "," + std::to_string(R) + "," + std::to_string(a.keys) + "," + (ok ? "PASS" : "FAIL") +
                       "\n";
            }
        job.emit(out);
        return failures ? 1 : 0;
    }

    std::vector<fixtures::ZeroSumCell> pattern;
    std::vector<fixtures::FoundKey> found;
    if (fs::exists(fs::path(a.data) / "zero_sum.csv")) {
        pattern = fixtures::parse_zero_sum(io::read_file(fs::path(a.data) / "zero_sum.csv"));
        found = fixtures::parse_found_keys(io::read_file(fs::path(a.data) / "found_keys.csv"));
    }
    out = "isoc,round,key,sum,expected,result\n";
    for (const auto &[n, I] : isocs)
        for (int R : rounds) {
            std::optional<bool> expect;
            std::optional<Key80> key;
            if (!a.key.empty())
                key = parse_hex<80>(a.key);
            for (const auto &f : found)
                if (f.isoc == n && f.rounds == R && f.key && (!key || *key == *f.key)) {
                    key = f.key;
                    expect = true;
                }
            if (!key)
                key = random_key(rng);
            if (auto z = fixtures::expected_zero_sum(pattern, n, R); z && *z)
                expect = false;
            fs::path ckpt = a.checkpoint.empty() ? fs::path()
                                                 : fs::path(a.checkpoint + "." + n + "." + std::to_string(R));
            bool s = checkpointed_cube_sum(*key, I, R, ckpt, a.chunk_log2);
            std::string res = !expect ? "UNKNOWN" : (*expect == s ? "PASS" : "FAIL");
            failures += res == "FAIL";
            out += n + "," + std::to_string(R) + "," + to_hex(*key) + "," + std::to_string(s) + "," +
                   (expect ? std::to_string(*expect) : std::string("?")) + "," + res + "\n";
        }
    job.emit(out);
    return failures ? 1 : 0;
}

// ---- report tables

void run_report(Job &job, const std::string &dir, int rounds, const std::string &set)
{
    auto d = fixtures::load(dir);
    job.input(dir);
    std::string s;
    for (const auto &[r, rows] : d.factors) {
        if (rounds && r != rounds)
            continue;
        for (const std::string st : {"T", "T1"}) {
            if (!set.empty() && st != set)
                continue;
            s += "== " + st + " at " + std::to_string(r) + " rounds\n" + fixtures::render_factor_table(rows, st) + "\n";
        }
    }
    std::set<int> pr;
    for (const auto &p : d.proportions)
        pr.insert(p.rounds);
    for (int r : pr)
        if (!rounds || r == rounds)
            s += "== proportions at " + std::to_string(r) + " rounds\n" +
                 fixtures::render_proportion_table(d.proportions, r) + "\n";
    job.emit(s);
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"cubeforge: cube-attack toolkit for Trivium"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "TOML/INI file with option values");
    app.require_subcommand(1);
    Job job;
    std::string out, manifest;
    int status = 0;
    std::function<void()> action;

    auto add_out = [&](CLI::App *c, const std::string &help = "result file (default stdout)") {
        c->add_option("--out", out, help);
        c->add_option("--manifest", manifest, "manifest path (default <out>.manifest.json)");
    };

    // trivium keystream
    auto *triv = app.add_subcommand("trivium", "reference cipher")->require_subcommand(1);
    auto *ks = triv->add_subcommand("keystream", "keystream bits as hex");
    std::string key, iv = std::string(20, '0');
    int ks_rounds = kInitRounds, bits = 64;
    ks->add_option("--key", key, "80-bit key, 20 hex digits")->required();
    ks->add_option("--iv", iv, "80-bit IV, 20 hex digits")->capture_default_str();
    ks->add_option("--rounds", ks_rounds, "initialization rounds")->capture_default_str()->check(CLI::NonNegativeNumber);
    ks->add_option("--bits", bits, "keystream bits")->capture_default_str()->check(CLI::PositiveNumber);
    add_out(ks);
    ks->callback([&] { action = [&] { run_keystream(job, key, iv, ks_rounds, bits); }; });

    // degree estimate
    auto *deg = app.add_subcommand("degree", "degree estimation")->require_subcommand(1);
    auto *est = deg->add_subcommand("estimate", "per-round degree bounds (CSV)");
    DegreeArgs da;
    est->add_option("--rounds", da.rounds)->required()->check(CLI::NonNegativeNumber);
    est->add_option("--isoc", da.isoc_file, "ISoC file")->required()->check(CLI::ExistingFile);
    est->add_option("--j", da.j, "explicit index set J (comma separated)");
    est->add_option("--j-cap", da.j_cap, "size cap for the chosen J")->capture_default_str();
    est->add_option("--mode", da.mode, "1, 2 or 3")->capture_default_str()->check(CLI::Range(1, 3));
    est->add_option("--repeats", da.repeats, "random J choices; the bound is the minimum")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    est->add_option("--seed", da.seed)->capture_default_str();
    est->add_flag("--summary", da.summary, "max zero-sum round per ISoC, with the |J|=0 baseline");
    add_out(est);
    est->callback([&] { action = [&] { run_degree(job, da); }; });

    // isoc search
    auto *isoc = app.add_subcommand("isoc", "ISoC search")->require_subcommand(1);
    auto *srch = isoc->add_subcommand("search", "all size-k ISoCs containing J with estimate < d");
    SearchArgs sa;
    auto add_search = [&](CLI::App *c) {
        c->add_option("--rounds", sa.rounds)->required()->check(CLI::NonNegativeNumber);
        c->add_option("--j", sa.j, "required subset J")->required();
        c->add_option("--size", sa.size, "ISoC size k")->required();
        c->add_option("--threshold", sa.threshold, "degree threshold d")->required();
        c->add_option("--attempts", sa.attempts, "shrink attempts a")->capture_default_str()->check(CLI::PositiveNumber);
        c->add_option("--width", sa.width, "free IV positions 0..width-1")->capture_default_str()->check(CLI::Range(1, 80));
        c->add_option("--mode", sa.mode, "estimator mode")->capture_default_str()->check(CLI::Range(1, 3));
        c->add_option("--seed", sa.seed)->capture_default_str();
    };
    add_search(srch);
    srch->add_flag("--exhaustive", sa.exhaustive, "classify every candidate instead");
    add_out(srch);
    srch->callback([&] { action = [&] { run_search(job, sa); }; });

    // superpoly recover / recover-direct
    auto *sp = app.add_subcommand("superpoly", "superpoly recovery")->require_subcommand(1);
    int sp_rounds = 0, r_m = 0;
    std::string sp_isoc;
    auto *rec = sp->add_subcommand("recover", "variable-substitution recovery");
    auto *rd = sp->add_subcommand("recover-direct", "trail enumeration from the key/IV state");
    for (auto *c : {rec, rd}) {
        c->add_option("--rounds", sp_rounds)->required()->check(CLI::NonNegativeNumber);
        c->add_option("--isoc", sp_isoc, "ISoC file")->required()->check(CLI::ExistingFile);
        add_out(c, "k-space superpolys, one '<indices> <poly>' line each");
    }
    rec->add_option("--rm", r_m, "middle round (default 200, or R/2 when R <= 200)");
    rec->callback([&] { action = [&] { run_recover(job, sp_rounds, r_m, sp_isoc, false); }; });
    rd->callback([&] { action = [&] { run_recover(job, sp_rounds, 0, sp_isoc, true); }; });

    // attack
    auto *atk = app.add_subcommand("attack", "correlation key recovery")->require_subcommand(1);
    auto *corpus = atk->add_subcommand("corpus", "search, screen and recover special-cube candidates");
    add_search(corpus);
    int screen = 64;
    corpus->add_option("--rm", r_m, "middle round");
    corpus->add_option("--screen-keys", screen, "cube sums per ISoC before recovery")->capture_default_str();
    add_out(corpus, "corpus file");
    corpus->callback([&] { action = [&] { run_corpus(job, sa, r_m, screen); }; });

    auto *pre = atk->add_subcommand("preprocess", "factor tables T and T1");
    std::string corpus_file, family;
    int pre_rounds = 0;
    double p = 0.77;
    std::uint64_t samples = 10000, pre_seed = 0;
    pre->add_option("--corpus", corpus_file, "corpus file")->required()->check(CLI::ExistingFile);
    pre->add_option("--family", family, "candidate factors, one polynomial per line (default built in)")
        ->check(CLI::ExistingFile);
    pre->add_option("--rounds", pre_rounds, "rounds the corpus was built for")->required();
    pre->add_option("--p", p, "threshold on Pr(h=0 | all f_I=0)")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    pre->add_option("--samples", samples)->capture_default_str();
    pre->add_option("--seed", pre_seed)->capture_default_str();
    add_out(pre, "output directory");
    pre->callback([&] {
        job.out_is_dir = true;
        action = [&] { run_preprocess(job, corpus_file, family, pre_rounds, p, samples, pre_seed); };
    });

    auto *sim = atk->add_subcommand("simulate", "online phase over random keys");
    SimulateArgs sma;
    sim->add_option("--tables", sma.tables, "directory written by attack preprocess")->required()->check(CLI::ExistingDirectory);
    sim->add_option("--trials", sma.trials)->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--seed", sma.seed)->capture_default_str();
    sim->add_option("--thresholds", sma.thresholds, "log2 cost thresholds")->delimiter(',');
    add_out(sim, "per-trial CSV; .proportions.csv and .g0.csv sit next to it");
    sim->callback([&] { action = [&] { run_simulate(job, sma); }; });

    // verify-zero-sum
    auto *ver = app.add_subcommand("verify-zero-sum", "cube sums against recovered superpolys or the shipped pattern");
    VerifyArgs va;
    auto *vi = ver->add_option("--isoc", va.isoc_file, "ISoC file")->check(CLI::ExistingFile);
    ver->add_option("--name", va.name, "named ISoC from the data directory (I1, I2, I3)")->excludes(vi);
    ver->add_option("--rounds", va.rounds, "N, A-B or a comma list")->required();
    ver->add_option("--keys", va.keys, "random keys per round")->capture_default_str();
    ver->add_option("--key", va.key, "key for --extended (20 hex digits)");
    ver->add_option("--seed", va.seed)->capture_default_str();
    ver->add_option("--data", va.data)->capture_default_str();
    ver->add_option("--checkpoint", va.checkpoint, "checkpoint file prefix for --extended");
    ver->add_option("--chunk-log2", va.chunk_log2, "evaluations between checkpoints (log2)")->capture_default_str();
    ver->add_flag("--extended", va.extended, "full-size cube sums (2^39 and more evaluations)");
    add_out(ver);
    ver->callback([&] {
        if (va.isoc_file.empty() && va.name.empty())
            throw CLI::RequiredError("--isoc or --name");
        action = [&] { status = run_verify(job, va); };
    });

    // report tables
    auto *rep = app.add_subcommand("report", "render shipped tables")->require_subcommand(1);
    auto *tab = rep->add_subcommand("tables", "factor and proportion tables");
    std::string data = CUBEFORGE_DATA_DIR, set;
    int rep_rounds = 0;
    tab->add_option("--data", data)->capture_default_str()->check(CLI::ExistingDirectory);
    tab->add_option("--rounds", rep_rounds, "only this round count");
    tab->add_option("--set", set, "T or T1")->check(CLI::IsMember({"T", "T1"}));
    add_out(tab);
    tab->callback([&] { action = [&] { run_report(job, data, rep_rounds, set); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    }

    const CLI::App *leaf = &app;
    while (!leaf->get_subcommands().empty())
        leaf = leaf->get_subcommands().front();
    for (const CLI::App *c = leaf; c && c != &app; c = c->get_parent())
        job.command = c->get_name() + (job.command.empty() ? "" : " " + job.command);
    job.out = out;
    job.manifest = manifest;
    try {
        action();
        job.finish(*leaf);
    } catch (const std::exception &e) {
        std::cerr << "cubeforge " << job.command << ": " << e.what() << "\n";
        return 1;
    }
    return status;
}
