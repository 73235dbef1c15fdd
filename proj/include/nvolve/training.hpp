#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "nvolve/dataset.hpp"
#include "nvolve/encoder.hpp"
#include "nvolve/error.hpp"
#include "nvolve/rng.hpp"

namespace nvolve {

struct TrainConfig {
    double learning_rate = 3e-4;
    int max_epochs = 50;
    int patience = 5;
    std::size_t batch_size = 32;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
        if (max_epochs < 1) throw InvalidArgument("max_epochs must be >= 1");
        if (patience < 1) throw InvalidArgument("patience must be >= 1");
        if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
        if (weight_decay < 0.0) throw InvalidArgument("weight_decay must be >= 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw InvalidArgument("adam betas must lie in [0, 1)");
    }
};

/// Moments for AdamW with decoupled weight decay.
struct AdamWState {
    LayerStack m;
    LayerStack v;
    std::uint64_t step = 0;

    explicit AdamWState(const LayerStack& like) : m(zeros_like(like)), v(zeros_like(like)) {}
};

namespace detail {

inline void adamw_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                         std::vector<double>& v, const TrainConfig& cfg, double bc1, double bc2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] -= cfg.learning_rate * cfg.weight_decay * p[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

}  // namespace detail

/// One AdamW step over all parameters.
inline void adamw_step(LayerStack& params, const LayerStack& grads, AdamWState& state, const TrainConfig& cfg) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t l = 0; l < params.size(); ++l) {
        detail::adamw_update(params[l].weight, grads[l].weight, state.m[l].weight, state.v[l].weight, cfg, bc1, bc2);
        detail::adamw_update(params[l].bias, grads[l].bias, state.m[l].bias, state.v[l].bias, cfg, bc1, bc2);
    }
}

/// Tracks the best metric seen and decides when to stop: after `patience`
/// consecutive epochs without strict improvement.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {
        if (patience < 1) throw InvalidArgument("patience must be >= 1");
    }

    /// Records the metric for the next epoch (1-based). Returns true if it is a new best.
    bool record(double metric) {
        ++epoch_;
        if (best_epoch_ == 0 || metric > best_) {
            best_ = metric;
            best_epoch_ = epoch_;
            stale_ = 0;
            return true;
        }
        ++stale_;
        return false;
    }

    [[nodiscard]] bool should_stop() const noexcept { return stale_ >= patience_; }
    [[nodiscard]] int best_epoch() const noexcept { return best_epoch_; }
    [[nodiscard]] double best_metric() const noexcept { return best_; }

private:
    int patience_;
    int epoch_ = 0;
    int best_epoch_ = 0;
    int stale_ = 0;
    double best_ = -std::numeric_limits<double>::infinity();
};

struct EpochRecord {
    int epoch = 0;
    double train_mse = 0.0;   // sample-weighted mean of the epoch's minibatch losses
    double val_mean_r = 0.0;  // mean voxelwise Pearson R on validation data
};

struct TrainResult {
    EncoderModel model;  // best-validation checkpoint
    std::vector<EpochRecord> log;
    int best_epoch = 0;
};

/// Full-dataset MSE of a model.
inline double mean_squared_error(const EncoderModel& model, const ResponseDataset& ds) {
    const auto pred = forward_batch(model, ds.input_matrix());
    double s = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - ds.responses.data[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.data.size());
}

/// Mean voxelwise Pearson R of the model's predictions on a dataset.
inline double validation_metric(const EncoderModel& model, const ResponseDataset& ds) {
    return pearson_per_voxel(forward_batch(model, ds.input_matrix()), ds.responses).mean();
}

/// Mini-batch AdamW on MSE with early stopping on validation mean Pearson R.
///
/// The initial weights come from stream 0 of cfg.seed and the per-epoch
/// shuffles from stream 1, so results are a pure function of the inputs.
inline TrainResult train(const ResponseDataset& train_set, const ResponseDataset& val_set, const EncoderArchitecture& arch,
                         const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    cfg.validate();
    arch.validate();
    if (train_set.size() == 0) throw InvalidArgument("training dataset is empty");
    if (val_set.size() < 2) throw InvalidArgument("validation dataset needs at least 2 samples");
    train_set.validate();
    val_set.validate();
    if (train_set.n_voxels() != arch.n_voxels) throw ShapeError("training voxel count", arch.n_voxels, train_set.n_voxels());
    if (val_set.n_voxels() != arch.n_voxels) throw ShapeError("validation voxel count", arch.n_voxels, val_set.n_voxels());
    if (train_set.shape.size() != arch.input_len) throw ShapeError("training embedding length", arch.input_len, train_set.shape.size());
    if (val_set.shape.size() != arch.input_len) throw ShapeError("validation embedding length", arch.input_len, val_set.shape.size());

    auto model = EncoderModel::initialize(arch, derive_seed(cfg.seed, 0));
    Rng shuffler(derive_seed(cfg.seed, 1));
    AdamWState state(model.layers);
    EarlyStopping stopper(cfg.patience);

    const Matrix inputs = train_set.input_matrix();
    const std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result{model, {}, 0};
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffler.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const std::size_t len = std::min(cfg.batch_size, n - start);
            Matrix xb(len, inputs.cols), yb(len, train_set.n_voxels());
            for (std::size_t i = 0; i < len; ++i) {
                const std::size_t src = order[start + i];
                std::copy(inputs.row(src).begin(), inputs.row(src).end(), xb.row(i).begin());
                std::copy(train_set.responses.row(src).begin(), train_set.responses.row(src).end(), yb.row(i).begin());
            }
            auto lg = parameter_gradients(model, xb, yb);
            if (!std::isfinite(lg.loss))
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_index) + " (try a smaller learning rate)");
            loss_sum += lg.loss * static_cast<double>(len);
            adamw_step(model.layers, lg.gradients, state, cfg);
        }
        const double metric = validation_metric(model, val_set);
        if (!std::isfinite(metric))
            throw NumericError("non-finite validation metric at epoch " + std::to_string(epoch));
        EpochRecord rec{epoch, loss_sum / static_cast<double>(n), metric};
        result.log.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (stopper.record(metric)) {
            result.model = model;
            result.best_epoch = epoch;
        }
        if (stopper.should_stop()) break;
    }
    return result;
}

}  // namespace nvolve
