#pragma once

// Synthetic subjects with planted region structure.
//
// Every region R gets a unit direction u_R in embedding space. Voxel v in R
// is tuned to w_v = u_R + delta_v with |delta_v| <= perturbation * |u_R|, and
// responds r_v = g(w_v . q + b_v) + noise. Directions of different regions
// are orthonormal unless an overlap is requested, in which case they share a
// common component and u_Ri . u_Rj = overlap.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nvolve/dataset.hpp"
#include "nvolve/embedding.hpp"
#include "nvolve/error.hpp"
#include "nvolve/matrix.hpp"
#include "nvolve/objective.hpp"
#include "nvolve/rng.hpp"

namespace nvolve {

enum class Nonlinearity { linear, relu };

inline const char* to_string(Nonlinearity n) noexcept { return n == Nonlinearity::linear ? "linear" : "relu"; }

inline Nonlinearity parse_nonlinearity(const std::string& s) {
    if (s == "linear") return Nonlinearity::linear;
    if (s == "relu") return Nonlinearity::relu;
    throw InvalidArgument("unknown nonlinearity '" + s + "' (expected linear or relu)");
}

struct RegionSpec {
    std::string name;
    std::size_t size = 1;
};

struct SubjectSpec {
    std::vector<RegionSpec> regions;
    double noise_sigma = 0.0;
    Nonlinearity nonlinearity = Nonlinearity::linear;
    /// Pairwise inner product of the planted directions, in [0, 1).
    double direction_overlap = 0.0;
    /// Upper bound on |delta_v| relative to |u_R|.
    double perturbation = 0.1;
    /// Standard deviation of the per-voxel biases (0 gives b = 0).
    double bias_sigma = 0.0;
};

struct SyntheticSubject {
    EmbeddingShape shape;
    std::size_t n_voxels = 0;
    RoiAtlas atlas;
    std::vector<std::string> region_order;
    Matrix directions;  // regions x (tokens*dim), row i belongs to region_order[i]
    Matrix tuning;      // voxels x (tokens*dim)
    std::vector<double> biases;
    double noise_sigma = 0.0;
    Nonlinearity nonlinearity = Nonlinearity::linear;

    [[nodiscard]] std::span<const double> direction(const std::string& region) const {
        for (std::size_t i = 0; i < region_order.size(); ++i)
            if (region_order[i] == region) return directions.row(i);
        throw UnknownRegion(region);
    }

    friend bool operator==(const SyntheticSubject&, const SyntheticSubject&) = default;
};

namespace detail {

// Modified Gram-Schmidt with one re-orthogonalization pass; redraws on
// (practically impossible) degeneracy.
inline Matrix orthonormal_rows(std::size_t count, std::size_t len, Rng& rng) {
    Matrix out(count, len);
    for (std::size_t k = 0; k < count; ++k) {
        auto row = out.row(k);
        for (;;) {
            for (auto& x : row) x = rng.normal();
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t j = 0; j < k; ++j) {
                    const double proj = dot(row, out.row(j));
                    auto prev = out.row(j);
                    for (std::size_t i = 0; i < len; ++i) row[i] -= proj * prev[i];
                }
            }
            const double n = norm(row);
            if (n > 1e-8) {
                for (auto& x : row) x /= n;
                break;
            }
        }
    }
    return out;
}

}  // namespace detail

inline SyntheticSubject make_subject(EmbeddingShape shape, const SubjectSpec& spec, std::uint64_t seed) {
    validate(shape);
    if (spec.regions.empty()) throw InvalidArgument("synthetic subject needs at least one region");
    if (spec.noise_sigma < 0.0) throw InvalidArgument("noise_sigma must be >= 0");
    if (!(spec.direction_overlap >= 0.0 && spec.direction_overlap < 1.0))
        throw InvalidArgument("direction_overlap must lie in [0, 1)");
    if (!(spec.perturbation >= 0.0)) throw InvalidArgument("perturbation must be >= 0");
    const std::size_t len = shape.size();
    const std::size_t k = spec.regions.size();
    const std::size_t basis = k + (spec.direction_overlap > 0.0 ? 1 : 0);
    if (basis > len)
        throw InvalidArgument("cannot plant " + std::to_string(basis) + " orthogonal directions in a " +
                              std::to_string(len) + "-dimensional embedding space");

    // Stream 2: distinct from random_embedding(seed) and make_dataset streams 0 and 1.
    Rng rng(derive_seed(seed, 2));
    SyntheticSubject s;
    s.shape = shape;
    s.noise_sigma = spec.noise_sigma;
    s.nonlinearity = spec.nonlinearity;

    const Matrix e = detail::orthonormal_rows(basis, len, rng);
    s.directions = Matrix(k, len);
    if (spec.direction_overlap > 0.0) {
        const double shared = std::sqrt(spec.direction_overlap);
        const double own = std::sqrt(1.0 - spec.direction_overlap);
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t i = 0; i < len; ++i) s.directions(r, i) = shared * e(0, i) + own * e(r + 1, i);
    } else {
        s.directions = e;
    }

    std::size_t voxel = 0;
    for (const auto& region : spec.regions) {
        if (region.size == 0) throw InvalidArgument("region '" + region.name + "' must have at least one voxel");
        voxel += region.size;
    }
    s.n_voxels = voxel;
    s.tuning = Matrix(s.n_voxels, len);
    s.biases.assign(s.n_voxels, 0.0);

    voxel = 0;
    std::vector<double> delta(len);
    for (std::size_t r = 0; r < k; ++r) {
        const auto& region = spec.regions[r];
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < region.size; ++j, ++voxel) {
            for (auto& x : delta) x = rng.normal();
            const double n = norm(delta);
            const double scale = n > 0.0 ? spec.perturbation * rng.uniform01() / n : 0.0;
            auto w = s.tuning.row(voxel);
            for (std::size_t i = 0; i < len; ++i) w[i] = s.directions(r, i) + scale * delta[i];
            if (spec.bias_sigma > 0.0) s.biases[voxel] = rng.normal(0.0, spec.bias_sigma);
            members.push_back(voxel);
        }
        s.atlas.add(region.name, std::move(members));
        s.region_order.push_back(region.name);
    }
    return s;
}

/// Convenience overload mirroring the common parameters.
inline SyntheticSubject make_subject(EmbeddingShape shape, const std::vector<RegionSpec>& regions, std::uint64_t seed,
                                     double noise_sigma = 0.0, Nonlinearity nonlinearity = Nonlinearity::linear) {
    SubjectSpec spec;
    spec.regions = regions;
    spec.noise_sigma = noise_sigma;
    spec.nonlinearity = nonlinearity;
    return make_subject(shape, spec, seed);
}

/// Ground-truth response, with noise drawn from `noise`.
inline std::vector<double> oracle_response(const SyntheticSubject& s, std::span<const double> q, Rng& noise) {
    if (q.size() != s.shape.size()) throw ShapeError("oracle embedding length", s.shape.size(), q.size());
    std::vector<double> r(s.n_voxels);
    for (std::size_t v = 0; v < s.n_voxels; ++v) {
        double x = dot(s.tuning.row(v), q) + s.biases[v];
        if (s.nonlinearity == Nonlinearity::relu) x = x > 0.0 ? x : 0.0;
        if (s.noise_sigma > 0.0) x += s.noise_sigma * noise.normal();
        r[v] = x;
    }
    return r;
}

inline std::vector<double> oracle_response(const SyntheticSubject& s, const Embedding& e, std::uint64_t seed) {
    if (e.shape() != s.shape) throw ShapeError("oracle embedding shape " + to_string(e.shape()) + " vs " + to_string(s.shape));
    Rng noise(seed);
    return oracle_response(s, e.flat(), noise);
}

/// Random standard-normal stimuli with oracle responses, split into
/// contiguous equal-ish session blocks and z-scored per session.
inline ResponseDataset make_dataset(const SyntheticSubject& s, std::size_t n_samples, std::size_t sessions,
                                    std::uint64_t seed) {
    if (sessions == 0) throw InvalidArgument("make_dataset needs at least one session");
    if (n_samples < 2 * sessions)
        throw InvalidArgument("make_dataset needs at least 2 samples per session (" + std::to_string(n_samples) +
                              " samples, " + std::to_string(sessions) + " sessions)");
    Rng stimuli(derive_seed(seed, 0));
    Rng noise(derive_seed(seed, 1));
    ResponseDataset ds{s.shape, {}, Matrix(n_samples, s.n_voxels), {}};
    ds.embeddings.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        std::vector<double> values(s.shape.size());
        for (auto& x : values) x = stimuli.normal();
        ds.embeddings.emplace_back(s.shape, std::move(values));
        const auto r = oracle_response(s, ds.embeddings.back().flat(), noise);
        std::copy(r.begin(), r.end(), ds.responses.row(i).begin());
        ds.session_ids.push_back(static_cast<std::int64_t>(i * sessions / n_samples));
    }
    ds.responses = normalize_per_session(ds.responses, ds.session_ids).values;
    return ds;
}

}  // namespace nvolve
