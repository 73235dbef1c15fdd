#include <gtest/gtest.h>

#include <random>

#include "nvolve/evalsuite.hpp"
#include "oracles.hpp"

using namespace nvolve;

namespace {

std::vector<Embedding> random_pool(EmbeddingShape shape, std::size_t n, std::uint64_t seed) {
    std::vector<Embedding> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_embedding(shape, seed * 7919 + i));
    return out;
}

// Selection sort with an explicit tie rule; quadratic but obviously correct.
std::vector<std::size_t> naive_order(std::vector<double> scores) {
    std::vector<std::size_t> out;
    std::vector<bool> used(scores.size(), false);
    for (std::size_t k = 0; k < scores.size(); ++k) {
        std::size_t best = scores.size();
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (!used[i] && (best == scores.size() || scores[i] > scores[best])) best = i;
        used[best] = true;
        out.push_back(best);
    }
    return out;
}

void expect_stats_match_oracle(const DistributionStats& d, const std::vector<double>& xs) {
    EXPECT_EQ(d.count, xs.size());
    EXPECT_EQ(d.min, *std::min_element(xs.begin(), xs.end()));
    EXPECT_EQ(d.max, *std::max_element(xs.begin(), xs.end()));
    EXPECT_NEAR(d.mean, oracle::streaming_mean(xs), 1e-12);
    EXPECT_NEAR(d.q1, oracle::quantile(xs, 0.25), 1e-12);
    EXPECT_NEAR(d.median, oracle::quantile(xs, 0.5), 1e-12);
    EXPECT_NEAR(d.q3, oracle::quantile(xs, 0.75), 1e-12);
}

struct Fixture {
    EncoderModel model = EncoderModel::initialize({8, {12}, 4}, 3);
    RoiAtlas atlas;
    Fixture() {
        atlas.add("A", {0, 1});
        atlas.add("B", {2, 3});
    }
};

}  // namespace

TEST(Rank, DescendingOrder) {
    const std::vector<double> s{0.1, 0.9, 0.5};
    EXPECT_EQ(rank_descending(s), (std::vector<std::size_t>{1, 2, 0}));
}

TEST(Rank, TiesKeepIndexOrder) {
    EXPECT_EQ(rank_descending(std::vector<double>(4, 2.0)), (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(rank_descending(std::vector<double>{1, 3, 1, 3}), (std::vector<std::size_t>{1, 3, 0, 2}));
    EXPECT_THROW(rank_descending(std::vector<double>{}), InvalidArgument);
}

TEST(Rank, MatchesNaiveSortOnLargePool) {
    Fixture f;
    const auto pool = random_pool({2, 4}, 1000, 1);
    const auto order = rank_by_region_mean(f.model, pool, f.atlas.at("A"));
    std::vector<double> scores;
    for (const auto& e : pool) {
        const auto r = oracle::mlp_forward(f.model, std::vector<double>(e.flat().begin(), e.flat().end()));
        scores.push_back((r[0] + r[1]) / 2);
    }
    EXPECT_EQ(order, naive_order(scores));
}

TEST(Rank, ObjectiveRankingUsesNegatedLoss) {
    Fixture f;
    const auto pool = random_pool({2, 4}, 50, 2);
    const auto obj = compile("+A", f.atlas, 4);
    EXPECT_EQ(rank_by_objective(f.model, pool, obj), rank_by_region_mean(f.model, pool, f.atlas.at("A")));
    EXPECT_THROW(rank_by_objective(f.model, std::vector<Embedding>{}, obj), InvalidArgument);
}

TEST(Describe, MatchesStreamingOracle) {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> d(1.0, 3.0);
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 17u, 100u, 1001u}) {
        std::vector<double> xs(n);
        for (auto& x : xs) x = d(gen);
        expect_stats_match_oracle(describe(xs), xs);
    }
    EXPECT_THROW(describe(std::vector<double>{}), InvalidArgument);
}

TEST(Describe, InclusiveQuartiles) {
    const auto d = describe(std::vector<double>{4, 1, 3, 2});
    EXPECT_DOUBLE_EQ(d.q1, 1.75);
    EXPECT_DOUBLE_EQ(d.median, 2.5);
    EXPECT_DOUBLE_EQ(d.q3, 3.25);
}

TEST(ActivationReport, GeneratedEqualToPoolMatchesTopPool) {
    Fixture f;
    const auto pool = random_pool({2, 4}, 200, 5);
    const auto r = activation_report(f.model, f.atlas, "B", pool, pool, 20);
    EXPECT_EQ(r.generated, r.top_pool);
    EXPECT_EQ(r.k, 20u);
    EXPECT_TRUE(r.top_pool_above_median());
}

TEST(ActivationReport, StatsMatchIndependentRecomputation) {
    Fixture f;
    const auto pool = random_pool({2, 4}, 300, 6);
    const auto gen = random_pool({2, 4}, 40, 7);
    const auto r = activation_report(f.model, f.atlas, "A", pool, gen, 10);
    auto scores = [&](const std::vector<Embedding>& es) {
        std::vector<double> out;
        for (const auto& e : es) {
            const auto y = oracle::mlp_forward(f.model, std::vector<double>(e.flat().begin(), e.flat().end()));
            out.push_back((y[0] + y[1]) / 2);
        }
        return out;
    };
    auto top = [](std::vector<double> xs, std::size_t k) {
        std::sort(xs.begin(), xs.end(), std::greater<>());
        xs.resize(k);
        return xs;
    };
    const auto ps = scores(pool), gs = scores(gen);
    expect_stats_match_oracle(r.pool, ps);
    expect_stats_match_oracle(r.top_pool, top(ps, 10));
    expect_stats_match_oracle(r.generated, top(gs, 10));
}

TEST(ActivationReport, TopKMeanIsNonIncreasingInK) {
    Fixture f;
    const auto pool = random_pool({2, 4}, 100, 8);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= 100; ++k) {
        const double m = activation_report(f.model, f.atlas, "A", pool, pool, k).top_pool.mean;
        EXPECT_LE(m, prev + 1e-12);
        prev = m;
    }
}

TEST(ActivationReport, RejectsBadArguments) {
    Fixture f;
    const auto pool = random_pool({2, 4}, 10, 9);
    EXPECT_THROW(activation_report(f.model, f.atlas, "A", pool, pool, 0), InvalidArgument);
    EXPECT_THROW(activation_report(f.model, f.atlas, "A", pool, pool, 11), InvalidArgument);
    EXPECT_THROW(activation_report(f.model, f.atlas, "A", pool, std::vector<Embedding>{}, 1), InvalidArgument);
    EXPECT_THROW(activation_report(f.model, f.atlas, "Z", pool, pool, 1), UnknownRegion);
}

TEST(ReportCsv, LayoutAndRoundTrip) {
    Fixture f;
    const auto pool = random_pool({2, 4}, 60, 10);
    const auto gen = random_pool({2, 4}, 15, 11);
    const std::vector<ActivationReport> reports{activation_report(f.model, f.atlas, "A", pool, gen, 5),
                                                activation_report(f.model, f.atlas, "B", pool, gen, 5)};
    const auto csv = report_csv(reports);
    EXPECT_EQ(csv, report_csv(reports));
    EXPECT_EQ(csv.rfind("region,distribution,stat,value\nA,pool,count,60\nA,pool,min,", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 3 * 7);
    EXPECT_EQ(parse_report_csv(csv), reports);
    EXPECT_THROW(parse_report_csv("nope\n"), FormatError);
    EXPECT_THROW(parse_report_csv("region,distribution,stat,value\nA,pool,count\n"), FormatError);
    EXPECT_THROW(parse_report_csv("region,distribution,stat,value\nA,best,count,1\n"), FormatError);
}

TEST(ReportSvg, DeterministicAndMentionsRegions) {
    Fixture f;
    const auto pool = random_pool({2, 4}, 30, 12);
    const std::vector<ActivationReport> reports{activation_report(f.model, f.atlas, "A", pool, pool, 3),
                                                activation_report(f.model, f.atlas, "B", pool, pool, 3)};
    const auto svg = report_svg(reports);
    EXPECT_EQ(svg, report_svg(reports));
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find(">A<"), std::string::npos);
    EXPECT_NE(svg.find(">B<"), std::string::npos);
}
