#include <gtest/gtest.h>

#include "nvolve/synthetic.hpp"
#include "nvolve/training.hpp"
#include "oracles.hpp"

using namespace nvolve;

namespace {

std::map<std::string, double> oracle_means(const SyntheticSubject& s, std::span<const double> q) {
    Rng unused(0);
    return region_means(s.atlas, oracle_response(s, q, unused));
}

double trained_val_r(double noise) {
    const auto s = make_subject({2, 8}, {{"A", 3}, {"B", 3}}, 5, noise);
    const auto [tr, va] = split_by_session(make_dataset(s, 1000, 4, 6), 0.1);
    TrainConfig cfg;
    return validation_metric(train(tr, va, {16, {64, 32}, 6}, cfg).model, va);
}

}  // namespace

TEST(MakeSubject, PlantedDirectionsAreOrthonormal) {
    const auto s = make_subject({2, 3}, {{"R1", 2}, {"R2", 3}}, 1);
    EXPECT_NEAR(dot(s.direction("R1"), s.direction("R2")), 0.0, 1e-10);
    EXPECT_NEAR(norm(s.direction("R1")), 1.0, 1e-12);
    const auto big = make_subject({4, 16}, {{"A", 1}, {"B", 1}, {"C", 1}, {"D", 1}, {"E", 1}}, 2);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < i; ++j) EXPECT_NEAR(dot(big.directions.row(i), big.directions.row(j)), 0.0, 1e-10);
}

TEST(MakeSubject, PerturbationsAreBounded) {
    const auto s = make_subject({2, 8}, {{"A", 5}, {"B", 7}}, 3);
    for (const auto& [name, voxels] : s.atlas.regions()) {
        const auto u = s.direction(name);
        for (auto v : voxels) {
            std::vector<double> delta(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) delta[i] = s.tuning(v, i) - u[i];
            EXPECT_LE(norm(delta), 0.1 * norm(u) + 1e-12);
        }
    }
    EXPECT_EQ(s.n_voxels, 12u);
    EXPECT_EQ(s.atlas.at("B").front(), 5u);
}

TEST(MakeSubject, DeterministicPerSeed) {
    const std::vector<RegionSpec> r{{"A", 2}, {"B", 2}};
    EXPECT_EQ(make_subject({2, 4}, r, 7), make_subject({2, 4}, r, 7));
    EXPECT_NE(make_subject({2, 4}, r, 7), make_subject({2, 4}, r, 8));
}

TEST(MakeSubject, IndependentOfEmbeddingWithSameSeed) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = make_subject({4, 16}, {{"A", 1}}, seed);
        EXPECT_LT(std::abs(cosine(s.direction("A"), random_embedding({4, 16}, seed).flat())), 0.9) << seed;
    }
}

TEST(MakeSubject, TooManyRegionsForSpace) {
    EXPECT_THROW(make_subject({1, 2}, {{"A", 1}, {"B", 1}, {"C", 1}}, 1), InvalidArgument);
    EXPECT_THROW(make_subject({1, 2}, {{"A", 0}}, 1), InvalidArgument);
    EXPECT_THROW(make_subject({1, 2}, std::vector<RegionSpec>{}, 1), InvalidArgument);
}

TEST(MakeSubject, OverlapModeSetsInnerProduct) {
    SubjectSpec spec;
    spec.regions = {{"A", 2}, {"B", 2}, {"C", 1}};
    spec.direction_overlap = 0.3;
    const auto s = make_subject({2, 6}, spec, 9);
    EXPECT_NEAR(dot(s.direction("A"), s.direction("B")), 0.3, 1e-10);
    EXPECT_NEAR(dot(s.direction("B"), s.direction("C")), 0.3, 1e-10);
    EXPECT_NEAR(norm(s.direction("C")), 1.0, 1e-10);
}

TEST(OracleResponse, PlantedDirectionDrivesItsRegion) {
    const auto s = make_subject({2, 3}, {{"R1", 4}, {"R2", 4}}, 4);
    const auto m = oracle_means(s, s.direction("R1"));
    EXPECT_GT(m.at("R1"), m.at("R2"));
    EXPECT_NEAR(m.at("R1"), 1.0, 0.1);
}

TEST(OracleResponse, ZeroEmbeddingGivesZero) {
    const auto s = make_subject({2, 3}, {{"R1", 3}}, 4);
    EXPECT_EQ(oracle_response(s, Embedding::zeros({2, 3}), 1), std::vector<double>(3, 0.0));
    EXPECT_THROW(oracle_response(s, Embedding::zeros({3, 2}), 1), ShapeError);
}

TEST(OracleResponse, NoiseIsSeeded) {
    const auto clean = make_subject({2, 3}, {{"R1", 3}}, 4);
    const auto q = random_embedding({2, 3}, 2);
    EXPECT_EQ(oracle_response(clean, q, 1), oracle_response(clean, q, 2));
    const auto noisy = make_subject({2, 3}, {{"R1", 3}}, 4, 0.5);
    EXPECT_EQ(oracle_response(noisy, q, 1), oracle_response(noisy, q, 1));
    EXPECT_NE(oracle_response(noisy, q, 1), oracle_response(noisy, q, 2));
}

TEST(OracleResponse, ReluClampsNegativeDrive) {
    const auto s = make_subject({1, 4}, {{"R", 2}}, 4, 0.0, Nonlinearity::relu);
    std::vector<double> q(s.direction("R").begin(), s.direction("R").end());
    for (auto& x : q) x = -x;
    EXPECT_EQ(oracle_response(s, Embedding({1, 4}, q), 0), std::vector<double>(2, 0.0));
}

TEST(MakeDataset, SessionsAreZScored) {
    const auto s = make_subject({2, 4}, {{"A", 2}, {"B", 3}}, 5, 0.1);
    const auto ds = make_dataset(s, 1000, 4, 6);
    EXPECT_NO_THROW(ds.validate());
    const auto groups = group_sessions(ds.session_ids);
    ASSERT_EQ(groups.size(), 4u);
    for (const auto& [id, rows] : groups) {
        EXPECT_EQ(rows.size(), 250u);
        for (std::size_t v = 0; v < s.n_voxels; ++v) {
            std::vector<double> col;
            for (auto r : rows) col.push_back(ds.responses(r, v));
            const double mean = oracle::streaming_mean(col);
            double var = 0;
            for (double x : col) var += (x - mean) * (x - mean);
            EXPECT_NEAR(mean, 0.0, 1e-9);
            EXPECT_NEAR(var / static_cast<double>(col.size()), 1.0, 1e-9);
        }
    }
    EXPECT_EQ(make_dataset(s, 1000, 4, 6), ds);
    EXPECT_THROW(make_dataset(s, 7, 4, 6), InvalidArgument);
}

TEST(MakeDataset, NoiseLowersRecoverableCorrelation) {
    const double clean = trained_val_r(0.0);
    const double noisy = trained_val_r(0.5);
    EXPECT_GT(clean, 0.95);
    EXPECT_LT(noisy, clean);
}
