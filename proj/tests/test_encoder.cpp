#include <gtest/gtest.h>

#include <random>

#include "nvolve/encoder.hpp"
#include "fixtures.hpp"

using namespace nvolve;

namespace {

using test_support::input_away_from_kinks;
using test_support::random_vector;

EncoderModel random_model(std::mt19937_64& gen) { return test_support::random_tiny_model(gen); }

}  // namespace

TEST(EncoderForward, HandComputedTinyNet) {
    auto m = EncoderModel::zeros({2, {2}, 1});
    m.layers[0].weight = {1, 0, 0, 1};
    m.layers[1].weight = {1, 1};
    const auto y = forward(m, std::vector<double>{2, -3});
    ASSERT_EQ(y.size(), 1u);
    EXPECT_EQ(y[0], 2.0);
}

TEST(EncoderForward, ZeroParametersGiveZeroOutput) {
    const auto m = EncoderModel::zeros({5, {4, 3}, 2});
    EXPECT_EQ(forward(m, std::vector<double>{1, -2, 3, 4, 5}), (std::vector<double>{0, 0}));
}

TEST(EncoderForward, MatchesNaiveOracleOnRandomTinyNets) {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = random_model(gen);
        const auto x = random_vector(gen, m.arch.input_len);
        const auto y = forward(m, x);
        const auto ref = oracle::mlp_forward(m, x);
        ASSERT_EQ(y.size(), ref.size());
        for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
    }
}

TEST(EncoderForward, IsPureAndBatchConsistent) {
    std::mt19937_64 gen(12);
    const auto m = random_model(gen);
    Matrix batch(4, m.arch.input_len);
    for (auto& x : batch.data) x = std::normal_distribution<double>()(gen);
    const auto out = forward_batch(m, batch);
    for (std::size_t r = 0; r < 4; ++r) {
        const auto a = forward(m, batch.row(r));
        const auto b = forward(m, batch.row(r));
        EXPECT_EQ(a, b);
        for (std::size_t v = 0; v < a.size(); ++v) EXPECT_EQ(out(r, v), a[v]);
    }
}

TEST(EncoderForward, RejectsWrongInputLength) {
    const auto m = EncoderModel::zeros({3, {2}, 1});
    try {
        forward(m, std::vector<double>{1, 2});
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        EXPECT_EQ(e.expected(), 3u);
        EXPECT_EQ(e.actual(), 2u);
    }
}

TEST(EncoderInit, UniformFanInBoundsAndZeroBias) {
    const auto m = EncoderModel::initialize({16, {8}, 4}, 5);
    for (const auto& l : m.layers) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
        for (double w : l.weight) {
            EXPECT_LE(std::abs(w), bound);
        }
        for (double b : l.bias) EXPECT_EQ(b, 0.0);
    }
    EXPECT_EQ(m, EncoderModel::initialize({16, {8}, 4}, 5));
}

TEST(InputGradient, SingleAffineLayerIsTransposedWeight) {
    auto m = EncoderModel::zeros({3, {}, 2});
    m.layers[0].weight = {1, 2, 3, 4, 5, 6};
    m.layers[0].bias = {0.5, -0.5};
    const std::vector<double> cot{2, -1};
    const auto g = input_gradient(m, std::vector<double>{9, 9, 9}, cot);
    EXPECT_EQ(g, (std::vector<double>{1 * 2 - 4, 2 * 2 - 5, 3 * 2 - 6}));
}

TEST(InputGradient, ZeroCotangentGivesZero) {
    std::mt19937_64 gen(13);
    const auto m = random_model(gen);
    const auto g = input_gradient(m, random_vector(gen, m.arch.input_len), std::vector<double>(m.arch.n_voxels, 0.0));
    for (double x : g) EXPECT_EQ(x, 0.0);
}

TEST(InputGradient, ReluSubgradientAtZeroIsZero) {
    auto m = EncoderModel::zeros({1, {1}, 1});
    m.layers[0].weight = {1};
    m.layers[1].weight = {1};
    const auto g = input_gradient(m, std::vector<double>{0.0}, std::vector<double>{1.0});
    EXPECT_EQ(g[0], 0.0);
}

TEST(InputGradient, RejectsWrongCotangentLength) {
    const auto m = EncoderModel::zeros({3, {2}, 2});
    EXPECT_THROW(input_gradient(m, std::vector<double>{1, 2, 3}, std::vector<double>{1}), ShapeError);
}

TEST(InputGradient, MatchesFiniteDifferences) {
    std::mt19937_64 gen(14);
    for (int trial = 0; trial < 30; ++trial) {
        const auto m = random_model(gen);
        const auto x = input_away_from_kinks(gen, m);
        const auto cot = random_vector(gen, m.arch.n_voxels);
        const auto g = input_gradient(m, x, cot);
        auto f = [&](const std::vector<double>& in) {
            const auto y = oracle::mlp_forward_as<long double>(m, in);
            long double s = 0;
            for (std::size_t v = 0; v < y.size(); ++v) s += y[v] * cot[v];
            return s;
        };
        for (std::size_t i = 0; i < x.size(); ++i)
            EXPECT_LT(oracle::relative_error(g[i], oracle::central_difference(f, x, i)), 1e-5) << "trial " << trial << " i " << i;
    }
}

TEST(ParameterGradients, ZeroModelAndZeroTargetsGiveZeroGradients) {
    const auto m = EncoderModel::zeros({3, {4}, 2});
    Matrix x(2, 3, 1.0), y(2, 2, 0.0);
    const auto lg = parameter_gradients(m, x, y);
    EXPECT_EQ(lg.loss, 0.0);
    for (const auto& l : lg.gradients) {
        for (double g : l.weight) EXPECT_EQ(g, 0.0);
        for (double g : l.bias) EXPECT_EQ(g, 0.0);
    }
}

TEST(ParameterGradients, ScalarAffineHandDerivative) {
    auto m = EncoderModel::zeros({1, {}, 1});
    m.layers[0].weight = {2.0};
    const auto lg = parameter_gradients(m, Matrix(1, 1, 1.0), Matrix(1, 1, 0.0));
    EXPECT_EQ(lg.loss, 4.0);
    EXPECT_EQ(lg.gradients[0].weight[0], 4.0);
    EXPECT_EQ(lg.gradients[0].bias[0], 4.0);
}

TEST(ParameterGradients, EmptyBatchIsAnError) {
    const auto m = EncoderModel::zeros({1, {}, 1});
    EXPECT_THROW(parameter_gradients(m, Matrix(0, 1), Matrix(0, 1)), InvalidArgument);
    EXPECT_THROW(parameter_gradients(m, Matrix(2, 1), Matrix(1, 1)), ShapeError);
}

TEST(ParameterGradients, MatchesFiniteDifferences) {
    std::mt19937_64 gen(15);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_model(gen);
        const std::size_t batch = 3;
        Matrix x(batch, m.arch.input_len), y(batch, m.arch.n_voxels);
        for (std::size_t r = 0; r < batch; ++r) {
            const auto row = input_away_from_kinks(gen, m);
            std::copy(row.begin(), row.end(), x.row(r).begin());
        }
        for (auto& v : y.data) v = std::normal_distribution<double>()(gen);
        const auto lg = parameter_gradients(m, x, y);

        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            for (int which = 0; which < 2; ++which) {
                const std::size_t count = which == 0 ? m.layers[l].weight.size() : m.layers[l].bias.size();
                for (std::size_t p = 0; p < count; ++p) {
                    auto mse = [&](const std::vector<double>& params) {
                        auto copy = m;
                        (which == 0 ? copy.layers[l].weight : copy.layers[l].bias) = params;
                        long double s = 0;
                        for (std::size_t r = 0; r < batch; ++r) {
                            const auto out = oracle::mlp_forward_as<long double>(copy, {x.row(r).begin(), x.row(r).end()});
                            for (std::size_t v = 0; v < out.size(); ++v) s += (out[v] - y(r, v)) * (out[v] - y(r, v));
                        }
                        return s / static_cast<long double>(batch * m.arch.n_voxels);
                    };
                    const auto& params = which == 0 ? m.layers[l].weight : m.layers[l].bias;
                    const double fd = oracle::central_difference(mse, params, p);
                    const double an = (which == 0 ? lg.gradients[l].weight : lg.gradients[l].bias)[p];
                    EXPECT_LT(oracle::relative_error(an, fd), 1e-5) << "trial " << trial << " layer " << l << " param " << p;
                }
            }
        }
    }
}
