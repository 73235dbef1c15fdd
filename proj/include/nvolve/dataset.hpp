#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nvolve/embedding.hpp"
#include "nvolve/error.hpp"
#include "nvolve/matrix.hpp"

namespace nvolve {

/// Paired stimulus embeddings and measured voxel responses.
struct ResponseDataset {
    EmbeddingShape shape;
    std::vector<Embedding> embeddings;
    Matrix responses;  // samples x voxels
    std::vector<std::int64_t> session_ids;

    [[nodiscard]] std::size_t size() const noexcept { return embeddings.size(); }
    [[nodiscard]] std::size_t n_voxels() const noexcept { return responses.cols; }

    /// Embeddings stacked as rows of a samples x (tokens*dim) matrix.
    [[nodiscard]] Matrix input_matrix() const {
        Matrix m(size(), shape.size());
        for (std::size_t i = 0; i < size(); ++i) std::copy(embeddings[i].flat().begin(), embeddings[i].flat().end(), m.row(i).begin());
        return m;
    }

    void validate() const {
        if (responses.rows != embeddings.size()) throw ShapeError("response rows vs embeddings", embeddings.size(), responses.rows);
        if (session_ids.size() != embeddings.size()) throw ShapeError("session ids vs embeddings", embeddings.size(), session_ids.size());
        for (const auto& e : embeddings)
            if (e.shape() != shape) throw ShapeError("dataset embedding shape " + to_string(e.shape()) + " vs " + to_string(shape));
    }

    friend bool operator==(const ResponseDataset&, const ResponseDataset&) = default;
};

struct NormalizedResponses {
    Matrix values;
    /// (session, voxel) blocks with zero variance; these were set to 0.
    std::vector<std::pair<std::int64_t, std::size_t>> zero_variance_blocks;
};

/// Row indices grouped by session id, sessions in ascending id order.
inline std::map<std::int64_t, std::vector<std::size_t>> group_sessions(std::span<const std::int64_t> session_ids) {
    std::map<std::int64_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < session_ids.size(); ++i) groups[session_ids[i]].push_back(i);
    return groups;
}

/// Z-scores every (session, voxel) block using the population standard deviation.
inline NormalizedResponses normalize_per_session(const Matrix& raw, std::span<const std::int64_t> session_ids) {
    if (session_ids.size() != raw.rows) throw ShapeError("session ids vs response rows", raw.rows, session_ids.size());
    NormalizedResponses out{Matrix(raw.rows, raw.cols), {}};
    for (const auto& [session, rows] : group_sessions(session_ids)) {
        if (rows.size() < 2)
            throw InvalidArgument("session " + std::to_string(session) + " has " + std::to_string(rows.size()) +
                                  " sample(s); normalization needs at least 2");
        const double n = static_cast<double>(rows.size());
        for (std::size_t v = 0; v < raw.cols; ++v) {
            double mean = 0.0;
            for (auto r : rows) mean += raw(r, v);
            mean /= n;
            double var = 0.0;
            for (auto r : rows) var += (raw(r, v) - mean) * (raw(r, v) - mean);
            var /= n;
            const double sd = std::sqrt(var);
            if (!(sd > 0.0)) {
                out.zero_variance_blocks.emplace_back(session, v);
                for (auto r : rows) out.values(r, v) = 0.0;
                continue;
            }
            for (auto r : rows) out.values(r, v) = (raw(r, v) - mean) / sd;
        }
    }
    return out;
}

struct PearsonResult {
    std::vector<double> r;
    /// Columns where either input had zero variance; their r is 0.
    std::vector<std::size_t> zero_variance_columns;

    [[nodiscard]] double mean() const {
        if (r.empty()) return 0.0;
        return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    }
};

/// Pearson correlation of each column of `pred` with the same column of `truth`.
inline PearsonResult pearson_per_voxel(const Matrix& pred, const Matrix& truth) {
    if (pred.rows != truth.rows || pred.cols != truth.cols)
        throw ShapeError("pearson inputs differ in shape (" + std::to_string(pred.rows) + "x" + std::to_string(pred.cols) +
                         " vs " + std::to_string(truth.rows) + "x" + std::to_string(truth.cols) + ")");
    if (pred.rows < 2) throw InvalidArgument("pearson correlation needs at least 2 samples");
    const double n = static_cast<double>(pred.rows);
    PearsonResult out;
    out.r.resize(pred.cols);
    for (std::size_t c = 0; c < pred.cols; ++c) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < pred.rows; ++i) {
            mx += pred(i, c);
            my += truth(i, c);
        }
        mx /= n;
        my /= n;
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < pred.rows; ++i) {
            const double dx = pred(i, c) - mx;
            const double dy = truth(i, c) - my;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
        if (!(sxx > 0.0) || !(syy > 0.0)) {
            out.r[c] = 0.0;
            out.zero_variance_columns.push_back(c);
            continue;
        }
        out.r[c] = sxy / std::sqrt(sxx * syy);
    }
    return out;
}

/// Holds out the last round(fraction * count) samples of every session.
/// Returns {train, validation}.
inline std::pair<ResponseDataset, ResponseDataset> split_by_session(const ResponseDataset& ds, double val_fraction) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidArgument("validation fraction must be in (0, 1)");
    ds.validate();
    std::vector<std::size_t> train_rows, val_rows;
    for (const auto& [session, rows] : group_sessions(ds.session_ids)) {
        const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(rows.size())));
        if (n_val == 0 || n_val >= rows.size())
            throw InvalidArgument("session " + std::to_string(session) + " is too small to split");
        const std::size_t cut = rows.size() - n_val;
        train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(cut));
        val_rows.insert(val_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(cut), rows.end());
    }
    auto take = [&](const std::vector<std::size_t>& rows) {
        ResponseDataset out{ds.shape, {}, Matrix(rows.size(), ds.n_voxels()), {}};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.embeddings.push_back(ds.embeddings[rows[i]]);
            out.session_ids.push_back(ds.session_ids[rows[i]]);
            std::copy(ds.responses.row(rows[i]).begin(), ds.responses.row(rows[i]).end(), out.responses.row(i).begin());
        }
        return out;
    };
    return {take(train_rows), take(val_rows)};
}

}  // namespace nvolve
