#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the code paths it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "nvolve/encoder.hpp"

namespace nvolve::oracle {

using Grid = std::vector<std::vector<double>>;

/// Weight matrix of a layer as nested rows.
inline Grid weight_rows(const DenseLayer& l) {
    Grid w(l.out, std::vector<double>(l.in));
    for (std::size_t o = 0; o < l.out; ++o)
        for (std::size_t i = 0; i < l.in; ++i) w[o][i] = l.weight.at(o * l.in + i);
    return w;
}

/// Plain affine + ReLU chain, written from the definition. `Real` selects the
/// accumulation precision; finite-difference oracles use long double so their
/// own round-off stays well below the tolerance being checked.
template <typename Real = double>
std::vector<Real> mlp_forward_as(const EncoderModel& m, const std::vector<double>& input) {
    std::vector<Real> x(input.begin(), input.end());
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        const auto w = weight_rows(m.layers[li]);
        std::vector<Real> y;
        for (std::size_t o = 0; o < w.size(); ++o) {
            Real z = 0;
            for (std::size_t i = 0; i < w[o].size(); ++i) z += static_cast<Real>(w[o][i]) * x[i];
            z += static_cast<Real>(m.layers[li].bias[o]);
            if (li + 1 < m.layers.size()) z = std::max(z, Real(0));
            y.push_back(z);
        }
        x = std::move(y);
    }
    return x;
}

inline std::vector<double> mlp_forward(const EncoderModel& m, const std::vector<double>& x) {
    return mlp_forward_as<double>(m, x);
}

/// Smallest |pre-activation| over all hidden units (distance to a ReLU kink).
inline double min_kink_distance(const EncoderModel& m, std::vector<double> x) {
    double best = INFINITY;
    for (std::size_t li = 0; li + 1 < m.layers.size(); ++li) {
        const auto w = weight_rows(m.layers[li]);
        std::vector<double> y;
        for (std::size_t o = 0; o < w.size(); ++o) {
            const double z = std::inner_product(w[o].begin(), w[o].end(), x.begin(), 0.0) + m.layers[li].bias[o];
            best = std::min(best, std::abs(z));
            y.push_back(std::max(z, 0.0));
        }
        x = std::move(y);
    }
    return best;
}

/// Central difference of f at x along coordinate i. The divisor is the
/// actually representable step, not the nominal 2h.
inline double central_difference(const std::function<long double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h = 1e-6) {
    const double x0 = x[i];
    const double hi = x0 + h;
    const double lo = x0 - h;
    x[i] = hi;
    const long double up = f(x);
    x[i] = lo;
    const long double down = f(x);
    return static_cast<double>((up - down) / (static_cast<long double>(hi) - static_cast<long double>(lo)));
}

/// |a - b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Textbook single-pass Pearson formula.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

/// Scalar Adam, written out from the update equations.
struct ScalarAdam {
    double m = 0, v = 0;
    int t = 0;
    double step(double q, double g, double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
        t += 1;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        return q - lr * mh / (std::sqrt(vh) + eps);
    }
};

/// Earliest step whose best-so-far progress reaches f, by linear scan over raw losses.
inline std::size_t scan_progress_step(const std::vector<double>& losses, double f) {
    std::vector<double> best(losses.size());
    double b = losses[0];
    for (std::size_t t = 0; t < losses.size(); ++t) {
        b = std::min(b, losses[t]);
        best[t] = b;
    }
    const double first = losses[0], last = best.back();
    for (std::size_t t = 0; t < losses.size(); ++t) {
        if (first == last) return t;
        if (f == 1.0) {
            if (best[t] == last) return t;
            continue;
        }
        if ((first - best[t]) / (first - last) >= f) return t;
    }
    return losses.size();
}

/// Welford running mean.
inline double streaming_mean(const std::vector<double>& xs) {
    double mean = 0;
    std::size_t n = 0;
    for (double x : xs) mean += (x - mean) / static_cast<double>(++n);
    return mean;
}

/// Inclusive linear-interpolation quantile computed on a fresh sort.
inline double quantile(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    const double h = (static_cast<double>(xs.size()) - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= xs.size()) return xs.back();
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[lo + 1] - xs[lo]);
}

}  // namespace nvolve::oracle

namespace nvolve::test_support {

/// Fresh empty directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("nvolve_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

/// Random tiny architecture: input <= 8, 1-3 hidden layers of width <= 32, output <= 6.
inline EncoderArchitecture random_tiny_arch(std::mt19937_64& gen) {
    std::uniform_int_distribution<std::size_t> in(1, 8), width(1, 32), depth(1, 3), out(1, 6);
    EncoderArchitecture a;
    a.input_len = in(gen);
    a.hidden.clear();
    const auto d = depth(gen);
    for (std::size_t i = 0; i < d; ++i) a.hidden.push_back(width(gen));
    a.n_voxels = out(gen);
    return a;
}

}  // namespace nvolve::test_support
