#include "cubeforge/corr_attack.hpp"
#include "cubeforge/fixtures.hpp"

#include <gtest/gtest.h>

using namespace cubeforge;
namespace fx = cubeforge::fixtures;

namespace {

const std::filesystem::path kData = CUBEFORGE_DATA_DIR;

std::string file(const char *name) { return fx::read_file(kData / name); }

} // namespace

TEST(Fixtures, RoundTrip)
{
    EXPECT_EQ(fx::render_isocs(fx::parse_isocs(file("isocs.txt"))), file("isocs.txt"));
    EXPECT_EQ(fx::render_found_keys(fx::parse_found_keys(file("found_keys.csv"))), file("found_keys.csv"));
    EXPECT_EQ(fx::render_zero_sum(fx::parse_zero_sum(file("zero_sum.csv"))), file("zero_sum.csv"));
    EXPECT_EQ(fx::render_proportions(fx::parse_proportions(file("proportions.csv"))), file("proportions.csv"));
    for (const char *f : {"factors_820.csv", "factors_825.csv", "factors_830.csv"})
        EXPECT_EQ(fx::render_factors_csv(fx::parse_factors(file(f))), file(f)) << f;
}

TEST(Fixtures, Isocs)
{
    auto d = fx::load(kData);
    EXPECT_EQ(fx::find_isoc(d.isocs, "I1").size(), 39u);
    EXPECT_EQ(fx::find_isoc(d.isocs, "I2").size(), 39u);
    EXPECT_EQ(fx::find_isoc(d.isocs, "I3").size(), 40u);
    // I2 swaps 7 for 8; I3 adds 1 to I2
    auto I1 = fx::find_isoc(d.isocs, "I1"), I2 = fx::find_isoc(d.isocs, "I2"), I3 = fx::find_isoc(d.isocs, "I3");
    std::vector<int> d12, d32;
    std::set_symmetric_difference(I1.begin(), I1.end(), I2.begin(), I2.end(), std::back_inserter(d12));
    std::set_difference(I3.begin(), I3.end(), I2.begin(), I2.end(), std::back_inserter(d32));
    EXPECT_EQ(d12, (std::vector<int>{7, 8}));
    EXPECT_EQ(d32, std::vector<int>{1});
    EXPECT_THROW(fx::find_isoc(d.isocs, "I4"), std::out_of_range);
}

TEST(Fixtures, FoundKeys)
{
    auto d = fx::load(kData);
    ASSERT_EQ(d.found_keys.size(), 17u);
    std::size_t malformed = 0;
    for (const auto &k : d.found_keys) {
        if (!k.key) {
            ++malformed;
            EXPECT_EQ(k.isoc, "I3");
            EXPECT_EQ(k.rounds, 837);
            EXPECT_EQ(k.hex.size(), 2u + 19);
            continue;
        }
        EXPECT_EQ("0x" + to_hex(*k.key), k.hex);
        // a key with superpoly value 1 can only exist where the sum is not zero
        EXPECT_EQ(fx::expected_zero_sum(d.zero_sum, k.isoc, k.rounds), std::optional<bool>(false)) << k.isoc << " " << k.rounds;
    }
    EXPECT_EQ(malformed, 1u);
}

TEST(Fixtures, ZeroSumPattern)
{
    auto d = fx::load(kData);
    for (int R : {600, 800, 835, 841})
        EXPECT_EQ(fx::expected_zero_sum(d.zero_sum, "I1", R), std::optional<bool>(true)) << R;
    for (int R : {836, 837, 838, 839, 840, 842})
        EXPECT_EQ(fx::expected_zero_sum(d.zero_sum, "I1", R), std::optional<bool>(false)) << R;
    EXPECT_EQ(fx::expected_zero_sum(d.zero_sum, "I3", 840), std::optional<bool>(true));
    EXPECT_EQ(fx::expected_zero_sum(d.zero_sum, "I2", 843), std::nullopt);
}

TEST(Fixtures, FactorTables)
{
    auto d = fx::load(kData);
    const std::map<int, std::pair<int, int>> sizes{{820, {30, 31}}, {825, {31, 30}}, {830, {25, 41}}};
    auto fam = CandidateFamily::trivium_default();
    std::vector<std::string> outside;
    for (const auto &[R, rows] : d.factors) {
        int t = 0, t1 = 0;
        for (const auto &r : rows) {
            (r.set == "T" ? t : t1)++;
            EXPECT_EQ(r.rounds, R);
            EXPECT_FALSE(r.h.is_constant());
            EXPECT_LE(r.h.degree(), 2);
            double pr = std::stod(r.pr00);
            EXPECT_EQ(pr > 0.77, r.set == "T") << R << " " << r.set << " " << r.no;
            // derived variable k_{135-i} for an equation pivoting on k_i
            int pivot = 80;
            for (const auto &m : r.h.terms())
                m.for_each_var([&](Var v) { pivot = std::min(pivot, int(v.index)); });
            if (r.h.size() > 1)
                EXPECT_EQ(r.name, "k" + std::to_string(135 - pivot)) << r.h_text;
            else
                EXPECT_TRUE(r.name.empty());
            if (std::find(fam.polys.begin(), fam.polys.end(), r.h) == fam.polys.end())
                outside.push_back(std::to_string(R) + " " + r.h_text);
        }
        EXPECT_EQ(t, sizes.at(R).first) << R;
        EXPECT_EQ(t1, sizes.at(R).second) << R;
    }
    EXPECT_EQ(outside, std::vector<std::string>{"830 k68"});
}

TEST(Fixtures, RendersTableRowsVerbatim)
{
    auto d = fx::load(kData);
    auto table = fx::render_factor_table(d.factors.at(820), "T");
    auto lines = fx::lines_of(table);
    ASSERT_EQ(lines.size(), 31u);
    EXPECT_EQ(lines[1], "1 | k103 = k32+k57k58+k59 | 1210 | 0.9996 | 0.5005 | 820");
    EXPECT_EQ(lines[3], "3 | k54 | 826 | 0.9851 | 0.4883 | 820");
    auto t1 = fx::lines_of(fx::render_factor_table(d.factors.at(820), "T1"));
    EXPECT_EQ(t1[4], "4 | k125 = k10+k35k36+k37 | 130 | 0.72563 | 0.3137 | 820");
    EXPECT_EQ(fx::render_proportion_table(d.proportions, 820),
              "C | 2^52 | 2^54 | 2^56 | 2^58 | 2^60\nproportion | 58.0% | 69.2% | 77.0% | 82.8% | 87.8%\n");
}

TEST(Fixtures, ProportionsAgreeWithCounts)
{
    auto d = fx::load(kData);
    ASSERT_EQ(d.proportions.size(), 15u);
    for (const auto &r : d.proportions) {
        EXPECT_EQ(r.trials, 10000u);
        EXPECT_NEAR(double(r.successes) / double(r.trials), r.p(), 0.015) << r.rounds << " " << r.log2_cost;
        EXPECT_TRUE(binomial_check(r.successes, r.trials, r.p()));
    }
}

TEST(Fixtures, ParseErrorsCarryLines)
{
    try {
        fx::parse_factors("set,no,name,h,isocs,pr00,pr_f1,rounds\nT,1,,k3,5,0.9,0.4,820\nT,x,,k3,5,0.9,0.4,820\n");
        FAIL();
    } catch (const fx::ParseError &e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(fx::parse_zero_sum("isoc,rounds,zero_sum\nI1,836,maybe\n"), fx::ParseError);
    EXPECT_THROW(fx::parse_isocs("I9 3 1\n"), fx::ParseError);
    EXPECT_THROW(fx::parse_proportions("wrong\n"), fx::ParseError);
}
