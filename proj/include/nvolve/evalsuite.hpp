#pragma once

// Predicted-activation comparisons between a pool of natural stimuli and
// optimized embeddings: the whole pool, its top-k by predicted region mean,
// and the top-k generated embeddings, all scored by the same encoder.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nvolve/embedding.hpp"
#include "nvolve/encoder.hpp"
#include "nvolve/error.hpp"
#include "nvolve/objective.hpp"

namespace nvolve {

/// Predicted mean response over `voxels` for each embedding.
inline std::vector<double> score_region(const EncoderModel& model, std::span<const Embedding> embeddings,
                                        const std::vector<std::size_t>& voxels) {
    if (voxels.empty()) throw InvalidArgument("cannot score an empty region");
    std::vector<double> out;
    out.reserve(embeddings.size());
    for (const auto& e : embeddings) {
        const auto r = forward(model, e);
        double s = 0.0;
        for (auto v : voxels) {
            if (v >= r.size()) throw ShapeError("region voxel index beyond model output", r.size(), v);
            s += r[v];
        }
        out.push_back(s / static_cast<double>(voxels.size()));
    }
    return out;
}

/// Negated objective loss for each embedding (higher is better).
inline std::vector<double> score_objective(const EncoderModel& model, std::span<const Embedding> embeddings,
                                           const NeuralObjective& obj) {
    std::vector<double> out;
    out.reserve(embeddings.size());
    for (const auto& e : embeddings) out.push_back(-loss(obj, forward(model, e)));
    return out;
}

/// Indices ordered by descending score; ties keep the lower index first.
inline std::vector<std::size_t> rank_descending(std::span<const double> scores) {
    if (scores.empty()) throw InvalidArgument("cannot rank an empty list");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

inline std::vector<std::size_t> rank_by_region_mean(const EncoderModel& model, std::span<const Embedding> embeddings,
                                                    const std::vector<std::size_t>& voxels) {
    if (embeddings.empty()) throw InvalidArgument("cannot rank an empty list");
    const auto scores = score_region(model, embeddings, voxels);
    return rank_descending(scores);
}

inline std::vector<std::size_t> rank_by_objective(const EncoderModel& model, std::span<const Embedding> embeddings,
                                                  const NeuralObjective& obj) {
    if (embeddings.empty()) throw InvalidArgument("cannot rank an empty list");
    const auto scores = score_objective(model, embeddings, obj);
    return rank_descending(scores);
}

struct DistributionStats {
    std::size_t count = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double q3 = 0.0;
    double max = 0.0;

    friend bool operator==(const DistributionStats&, const DistributionStats&) = default;
};

/// Quantile by linear interpolation between order statistics at
/// position p * (n - 1) (the inclusive method). `sorted` must be ascending.
inline double quantile_inclusive(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline DistributionStats describe(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("cannot describe an empty sample");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    DistributionStats d;
    d.count = s.size();
    d.min = s.front();
    d.max = s.back();
    d.q1 = quantile_inclusive(s, 0.25);
    d.median = quantile_inclusive(s, 0.5);
    d.q3 = quantile_inclusive(s, 0.75);
    d.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    for (double x : s)
        if (!std::isfinite(x)) throw NumericError("non-finite score in distribution");
    return d;
}

struct ActivationReport {
    std::string region;
    std::size_t k = 0;
    DistributionStats pool;
    DistributionStats top_pool;
    DistributionStats generated;

    /// Sanity flag: the pool's top-k all sit at or above the pool median.
    [[nodiscard]] bool top_pool_above_median() const noexcept { return top_pool.min >= pool.median; }

    friend bool operator==(const ActivationReport&, const ActivationReport&) = default;
};

inline ActivationReport activation_report(const EncoderModel& model, const RoiAtlas& atlas, const std::string& region,
                                          std::span<const Embedding> pool, std::span<const Embedding> generated,
                                          std::size_t k) {
    if (k == 0) throw InvalidArgument("k must be >= 1");
    if (pool.empty() || generated.empty()) throw InvalidArgument("pool and generated sets must be non-empty");
    if (k > pool.size() || k > generated.size())
        throw InvalidArgument("k = " + std::to_string(k) + " exceeds the pool (" + std::to_string(pool.size()) +
                              ") or generated (" + std::to_string(generated.size()) + ") size");
    const auto& voxels = atlas.at(region);
    const auto pool_scores = score_region(model, pool, voxels);
    const auto gen_scores = score_region(model, generated, voxels);

    auto top_k = [k](const std::vector<double>& scores) {
        const auto order = rank_descending(scores);
        std::vector<double> out;
        for (std::size_t i = 0; i < k; ++i) out.push_back(scores[order[i]]);
        return out;
    };
    return {region, k, describe(pool_scores), describe(top_k(pool_scores)), describe(top_k(gen_scores))};
}

namespace detail {

inline constexpr std::array<std::string_view, 3> kDistributions{"pool", "top_pool", "generated"};
inline constexpr std::array<std::string_view, 7> kStats{"count", "min", "q1", "median", "mean", "q3", "max"};

inline DistributionStats& distribution(ActivationReport& r, std::string_view name) {
    if (name == "pool") return r.pool;
    if (name == "top_pool") return r.top_pool;
    if (name == "generated") return r.generated;
    throw FormatError(FormatErrorKind::malformed, "unknown distribution '" + std::string(name) + "'");
}

inline const DistributionStats& distribution(const ActivationReport& r, std::string_view name) {
    return distribution(const_cast<ActivationReport&>(r), name);
}

inline double stat_value(const DistributionStats& d, std::string_view stat) {
    if (stat == "count") return static_cast<double>(d.count);
    if (stat == "min") return d.min;
    if (stat == "q1") return d.q1;
    if (stat == "median") return d.median;
    if (stat == "mean") return d.mean;
    if (stat == "q3") return d.q3;
    if (stat == "max") return d.max;
    throw FormatError(FormatErrorKind::malformed, "unknown statistic '" + std::string(stat) + "'");
}

inline void set_stat(DistributionStats& d, std::string_view stat, double v) {
    if (stat == "count") d.count = static_cast<std::size_t>(v);
    else if (stat == "min") d.min = v;
    else if (stat == "q1") d.q1 = v;
    else if (stat == "median") d.median = v;
    else if (stat == "mean") d.mean = v;
    else if (stat == "q3") d.q3 = v;
    else if (stat == "max") d.max = v;
    else throw FormatError(FormatErrorKind::malformed, "unknown statistic '" + std::string(stat) + "'");
}

}  // namespace detail

/// CSV with header `region,distribution,stat,value`; values use the shortest
/// exact decimal form so parsing recovers them bit-for-bit.
inline std::string report_csv(std::span<const ActivationReport> reports) {
    std::string out = "region,distribution,stat,value\n";
    for (const auto& r : reports)
        for (auto dist : detail::kDistributions)
            for (auto stat : detail::kStats) {
                out += r.region;
                out += ',';
                out += dist;
                out += ',';
                out += stat;
                out += ',';
                out += detail::format_double(detail::stat_value(detail::distribution(r, dist), stat));
                out += '\n';
            }
    return out;
}

inline std::vector<ActivationReport> parse_report_csv(std::string_view text) {
    std::vector<ActivationReport> out;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != "region,distribution,stat,value")
        throw FormatError(FormatErrorKind::malformed, "report CSV header missing");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::array<std::string, 4> f;
        std::size_t pos = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            const auto comma = i < 3 ? line.find(',', pos) : std::string::npos;
            if (i < 3 && comma == std::string::npos)
                throw FormatError(FormatErrorKind::malformed, "report CSV line " + std::to_string(line_no) + " has too few fields");
            f[i] = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            pos = comma + 1;
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), value);
        if (ec != std::errc{} || ptr != f[3].data() + f[3].size())
            throw FormatError(FormatErrorKind::malformed, "report CSV line " + std::to_string(line_no) + " has a bad value");
        if (out.empty() || out.back().region != f[0]) out.push_back(ActivationReport{f[0], 0, {}, {}, {}});
        detail::set_stat(detail::distribution(out.back(), f[1]), f[2], value);
    }
    for (auto& r : out) r.k = r.top_pool.count;
    return out;
}

/// Box plots of the three distributions per region.
inline std::string report_svg(std::span<const ActivationReport> reports) {
    if (reports.empty()) throw InvalidArgument("no reports to plot");
    double lo = reports.front().pool.min, hi = reports.front().pool.max;
    for (const auto& r : reports)
        for (auto dist : detail::kDistributions) {
            lo = std::min(lo, detail::distribution(r, dist).min);
            hi = std::max(hi, detail::distribution(r, dist).max);
        }
    if (hi == lo) hi = lo + 1.0;

    constexpr double plot_h = 300.0, top = 40.0, box_w = 30.0, gap = 20.0, group_gap = 50.0, left = 60.0;
    const double width = left + static_cast<double>(reports.size()) * (3 * (box_w + gap) + group_gap);
    const double height = top + plot_h + 60.0;
    auto y = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    constexpr std::array<std::string_view, 3> colors{"#9e9e9e", "#4a90d9", "#d9534f"};

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) + "\">\n";
    s += "<text x=\"" + num(left) + "\" y=\"20\" font-size=\"14\">predicted region-mean activation</text>\n";
    s += "<text x=\"5\" y=\"" + num(y(hi)) + "\" font-size=\"10\">" + num(hi) + "</text>\n";
    s += "<text x=\"5\" y=\"" + num(y(lo)) + "\" font-size=\"10\">" + num(lo) + "</text>\n";
    double x = left;
    for (const auto& r : reports) {
        const double group_x = x;
        for (std::size_t d = 0; d < 3; ++d) {
            const auto& st = detail::distribution(r, detail::kDistributions[d]);
            const double cx = x + box_w / 2;
            s += "<line x1=\"" + num(cx) + "\" y1=\"" + num(y(st.max)) + "\" x2=\"" + num(cx) + "\" y2=\"" + num(y(st.min)) +
                 "\" stroke=\"black\"/>\n";
            s += "<rect x=\"" + num(x) + "\" y=\"" + num(y(st.q3)) + "\" width=\"" + num(box_w) + "\" height=\"" +
                 num(y(st.q1) - y(st.q3)) + "\" fill=\"" + std::string(colors[d]) + "\" stroke=\"black\"/>\n";
            s += "<line x1=\"" + num(x) + "\" y1=\"" + num(y(st.median)) + "\" x2=\"" + num(x + box_w) + "\" y2=\"" +
                 num(y(st.median)) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
            s += "<text x=\"" + num(x) + "\" y=\"" + num(top + plot_h + 15) + "\" font-size=\"9\">" +
                 std::string(detail::kDistributions[d]) + "</text>\n";
            x += box_w + gap;
        }
        s += "<text x=\"" + num(group_x) + "\" y=\"" + num(top + plot_h + 35) + "\" font-size=\"12\">" + r.region + "</text>\n";
        x += group_gap;
    }
    s += "</svg>\n";
    return s;
}

}  // namespace nvolve
