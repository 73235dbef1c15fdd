#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nvolve/embedding.hpp"
#include "nvolve/encoder.hpp"
#include "nvolve/error.hpp"
#include "nvolve/objective.hpp"

namespace nvolve {

struct OptimizeConfig {
    int steps = 300;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int record_every = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (steps < 1) throw InvalidArgument("steps must be >= 1");
        if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw InvalidArgument("adam betas must lie in [0, 1)");
        if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
        if (record_every < 1) throw InvalidArgument("record_every must be >= 1");
    }

    friend bool operator==(const OptimizeConfig&, const OptimizeConfig&) = default;
};

/// Adam moments for a flat parameter vector.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update of `q` in place.
inline void adam_step(AdamState& state, std::span<double> q, std::span<const double> grad, const OptimizeConfig& cfg) {
    if (grad.size() != q.size()) throw ShapeError("gradient length", q.size(), grad.size());
    if (state.m.size() != q.size() || state.v.size() != q.size()) throw ShapeError("adam state length", q.size(), state.m.size());
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
            throw NumericError("non-finite gradient at optimizer step " + std::to_string(state.step + 1) + " (element " +
                               std::to_string(i) + ")");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < q.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        q[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

struct TrajectoryPoint {
    int step = 0;
    double loss = 0.0;
    std::map<std::string, double> region_means;
    std::optional<Embedding> embedding;

    friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

/// One point per optimizer step, 0..T. Embeddings are kept every
/// record_every steps and always at steps 0 and T.
struct Trajectory {
    OptimizeConfig config;
    std::string objective;
    EmbeddingShape shape;
    std::vector<TrajectoryPoint> points;

    [[nodiscard]] std::vector<double> losses() const {
        std::vector<double> out;
        out.reserve(points.size());
        for (const auto& p : points) out.push_back(p.loss);
        return out;
    }

    /// Running minimum of the loss.
    [[nodiscard]] std::vector<double> best_loss_so_far() const {
        std::vector<double> out;
        out.reserve(points.size());
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : points) {
            best = std::min(best, p.loss);
            out.push_back(best);
        }
        return out;
    }

    /// Index of the first point attaining the minimum loss.
    [[nodiscard]] std::size_t best_index() const {
        if (points.empty()) throw InvalidArgument("trajectory is empty");
        std::size_t best = 0;
        for (std::size_t i = 1; i < points.size(); ++i)
            if (points[i].loss < points[best].loss) best = i;
        return best;
    }

    /// Throws unless steps strictly increase and both endpoints carry embeddings.
    void validate() const {
        if (points.empty()) throw InvalidArgument("trajectory is empty");
        for (std::size_t i = 1; i < points.size(); ++i)
            if (points[i].step <= points[i - 1].step) throw InvalidArgument("trajectory steps must strictly increase");
        if (!points.front().embedding || !points.back().embedding)
            throw InvalidArgument("trajectory must record embeddings at its first and last step");
    }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Thrown when the loss turns non-finite; carries everything recorded so far.
class OptimizationAborted : public NumericError {
public:
    OptimizationAborted(const std::string& msg, Trajectory partial)
        : NumericError(msg), partial_(std::move(partial)) {}

    [[nodiscard]] const Trajectory& partial() const noexcept { return partial_; }

private:
    Trajectory partial_;
};

/// Minimizes obj(model(q)) over q with Adam, starting at q0.
inline Trajectory optimize(const EncoderModel& model, const NeuralObjective& obj, const Embedding& q0,
                           const OptimizeConfig& cfg) {
    cfg.validate();
    if (q0.size() != model.arch.input_len) throw ShapeError("initial embedding length", model.arch.input_len, q0.size());
    if (obj.n_voxels() != model.arch.n_voxels) throw ShapeError("objective voxel count", model.arch.n_voxels, obj.n_voxels());

    Trajectory traj{cfg, obj.text(), q0.shape(), {}};
    traj.points.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    std::vector<double> q(q0.flat().begin(), q0.flat().end());
    AdamState state(q.size());

    for (int t = 0;; ++t) {
        const auto response = forward(model, q);
        const double value = loss(obj, response);
        TrajectoryPoint point{t, value, region_means(obj.atlas(), response), std::nullopt};
        const bool keep = t == 0 || t == cfg.steps || t % cfg.record_every == 0;
        if (!std::isfinite(value)) {
            if (!traj.points.empty() && !traj.points.back().embedding)
                traj.points.back().embedding = reshape(q, q0.shape());
            throw OptimizationAborted("non-finite loss at optimizer step " + std::to_string(t), std::move(traj));
        }
        if (keep) point.embedding = reshape(q, q0.shape());
        traj.points.push_back(std::move(point));
        if (t == cfg.steps) break;

        const auto grad = input_gradient(model, q, loss_cotangent(obj, response));
        adam_step(state, q, grad, cfg);
    }
    return traj;
}

/// Progress of every step toward the final best loss:
///   p(t) = (L0 - B_t) / (L0 - B_T), B = running minimum of the loss.
/// When nothing improved (L0 == B_T), every step has progress 1.
inline std::vector<double> progress_from_best(std::span<const double> best_so_far) {
    if (best_so_far.empty()) throw InvalidArgument("progress of an empty trajectory");
    const double first = best_so_far.front();
    const double last = best_so_far.back();
    std::vector<double> p(best_so_far.size(), 1.0);
    if (first == last) return p;
    const double span = first - last;
    for (std::size_t i = 0; i < best_so_far.size(); ++i) {
        // Only steps that reach B_T get exactly 1; rounding must not promote others.
        if (best_so_far[i] == last) continue;
        p[i] = std::min((first - best_so_far[i]) / span, std::nextafter(1.0, 0.0));
    }
    return p;
}

inline std::vector<double> progress(const Trajectory& traj) {
    const auto best = traj.best_loss_so_far();
    return progress_from_best(best);
}

/// For each fraction f in (0, 1], the earliest index whose progress is >= f.
inline std::vector<std::size_t> select_progress_indices(std::span<const double> progress_values,
                                                        std::span<const double> fractions) {
    if (progress_values.empty()) throw InvalidArgument("progress of an empty trajectory");
    std::vector<std::size_t> out;
    out.reserve(fractions.size());
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw InvalidArgument("fraction " + detail::format_double(f) + " is outside (0, 1]");
        auto it = std::lower_bound(progress_values.begin(), progress_values.end(), f);
        // p is non-decreasing and ends at 1, so every f in (0, 1] is attained.
        out.push_back(static_cast<std::size_t>(it - progress_values.begin()));
    }
    return out;
}

struct ProgressSample {
    double fraction = 0.0;
    int step = 0;
    Embedding embedding;
};

/// Embeddings at the earliest steps reaching each progress fraction.
inline std::vector<ProgressSample> sample_at_fractions(const Trajectory& traj, std::span<const double> fractions) {
    const auto p = progress(traj);
    const auto indices = select_progress_indices(p, fractions);
    std::vector<ProgressSample> out;
    out.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& point = traj.points[indices[i]];
        if (!point.embedding)
            throw InvalidArgument("no embedding recorded at step " + std::to_string(point.step) + " selected for fraction " +
                                  detail::format_double(fractions[i]) + "; rerun with record_every = 1");
        out.push_back({fractions[i], point.step, *point.embedding});
    }
    return out;
}

}  // namespace nvolve
