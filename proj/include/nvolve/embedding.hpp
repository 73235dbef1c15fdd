#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nvolve/error.hpp"
#include "nvolve/rng.hpp"

namespace nvolve {

/// Token-grid shape of an embedding, e.g. 16 query tokens of width 768.
struct EmbeddingShape {
    std::size_t tokens = 16;
    std::size_t dim = 768;

    [[nodiscard]] constexpr std::size_t size() const noexcept { return tokens * dim; }
    [[nodiscard]] constexpr bool valid() const noexcept { return tokens >= 1 && dim >= 1; }

    friend constexpr bool operator==(const EmbeddingShape&, const EmbeddingShape&) = default;
};

inline std::string to_string(const EmbeddingShape& s) {
    return std::to_string(s.tokens) + "x" + std::to_string(s.dim);
}

inline void validate(const EmbeddingShape& s) {
    if (!s.valid()) throw InvalidArgument("embedding shape " + to_string(s) + " must have tokens >= 1 and dim >= 1");
}

/// A point in the token-grid embedding space, stored row-major (token-major).
///
/// Values are always finite; construction checks this.
class Embedding {
public:
    Embedding() = default;

    Embedding(EmbeddingShape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
        validate(shape_);
        if (values_.size() != shape_.size())
            throw ShapeError("embedding values for shape " + to_string(shape_), shape_.size(), values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw NumericError("embedding value " + std::to_string(i) + " is not finite");
    }

    static Embedding zeros(EmbeddingShape shape) { return {shape, std::vector<double>(shape.size(), 0.0)}; }

    /// Builds from a token grid; every row must have the same width.
    static Embedding from_grid(const std::vector<std::vector<double>>& grid) {
        if (grid.empty()) throw InvalidArgument("token grid is empty");
        EmbeddingShape shape{grid.size(), grid.front().size()};
        std::vector<double> flat;
        flat.reserve(shape.size());
        for (const auto& row : grid) {
            if (row.size() != shape.dim) throw ShapeError("token grid row width", shape.dim, row.size());
            flat.insert(flat.end(), row.begin(), row.end());
        }
        return {shape, std::move(flat)};
    }

    [[nodiscard]] const EmbeddingShape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    /// Flat view: flat()[i * dim + j] is token i, channel j.
    [[nodiscard]] std::span<const double> flat() const noexcept { return values_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    /// Row of the token-grid view.
    [[nodiscard]] std::span<const double> token(std::size_t i) const {
        if (i >= shape_.tokens) throw ShapeError("token index out of range");
        return std::span<const double>(values_).subspan(i * shape_.dim, shape_.dim);
    }

    [[nodiscard]] double at(std::size_t token_index, std::size_t channel) const {
        if (token_index >= shape_.tokens || channel >= shape_.dim) throw ShapeError("grid index out of range");
        return values_[token_index * shape_.dim + channel];
    }

    [[nodiscard]] std::vector<std::vector<double>> grid() const {
        std::vector<std::vector<double>> out(shape_.tokens);
        for (std::size_t i = 0; i < shape_.tokens; ++i) {
            auto row = token(i);
            out[i].assign(row.begin(), row.end());
        }
        return out;
    }

    friend bool operator==(const Embedding&, const Embedding&) = default;

private:
    EmbeddingShape shape_{};
    std::vector<double> values_;
};

/// Reinterprets a flat vector under a token-grid shape.
inline Embedding reshape(std::span<const double> flat, EmbeddingShape shape) {
    validate(shape);
    if (flat.size() != shape.size()) throw ShapeError("flat length for shape " + to_string(shape), shape.size(), flat.size());
    return {shape, std::vector<double>(flat.begin(), flat.end())};
}

/// I.i.d. standard normal values from Rng(seed); a pure function of (shape, seed).
inline Embedding random_embedding(EmbeddingShape shape, std::uint64_t seed) {
    validate(shape);
    Rng rng(seed);
    std::vector<double> v(shape.size());
    for (auto& x : v) x = rng.normal();
    return {shape, std::move(v)};
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("dot product operands", a.size(), b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Cosine similarity; 0 when either vector is zero.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

}  // namespace nvolve
