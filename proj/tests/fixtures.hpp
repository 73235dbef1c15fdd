#pragma once

// Random problem instances shared by the unit tests and the acceptance run.

#include <random>
#include <string>
#include <vector>

#include "nvolve/encoder.hpp"
#include "nvolve/objective.hpp"
#include "oracles.hpp"

namespace nvolve::test_support {

inline std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n) {
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(gen);
    return v;
}

/// Tiny encoder with nonzero biases so kinks are not all at the origin.
inline EncoderModel random_tiny_model(std::mt19937_64& gen) {
    auto arch = random_tiny_arch(gen);
    auto m = EncoderModel::initialize(arch, gen());
    std::normal_distribution<double> n(0.0, 0.3);
    for (auto& l : m.layers)
        for (auto& b : l.bias) b = n(gen);
    return m;
}

/// Redraws inputs until every pre-activation is at least 1e-4 away from 0.
inline std::vector<double> input_away_from_kinks(std::mt19937_64& gen, const EncoderModel& m) {
    for (;;) {
        auto x = random_vector(gen, m.arch.input_len);
        if (oracle::min_kink_distance(m, x) > 1e-4) return x;
    }
}

struct ObjectiveCase {
    RoiAtlas atlas;
    std::vector<ObjectiveTerm> terms;
    std::vector<double> response;
};

/// Up to 40 voxels, 1-5 possibly overlapping regions, 1-4 terms.
inline ObjectiveCase random_objective_case(std::mt19937_64& gen) {
    ObjectiveCase c;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 40)(gen);
    const int n_regions = std::uniform_int_distribution<int>(1, 5)(gen);
    std::uniform_int_distribution<std::size_t> voxel(0, n - 1);
    for (int k = 0; k < n_regions; ++k) {
        std::vector<std::size_t> idx(std::uniform_int_distribution<std::size_t>(1, n)(gen));
        for (auto& v : idx) v = voxel(gen);
        c.atlas.add("R" + std::to_string(k), idx);
    }
    const int n_terms = std::uniform_int_distribution<int>(1, 4)(gen);
    std::uniform_real_distribution<double> w(0.05, 5.0);
    for (int k = 0; k < n_terms; ++k)
        c.terms.push_back({"R" + std::to_string(std::uniform_int_distribution<int>(0, n_regions - 1)(gen)),
                           gen() % 2 ? Direction::activate : Direction::suppress, w(gen)});
    c.response = random_vector(gen, n);
    return c;
}

}  // namespace nvolve::test_support
