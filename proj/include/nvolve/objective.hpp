#pragma once

// Neural objectives over named voxel regions.
//
// Text form:
//   objective := term (ws term)*
//   term      := ('+' | '-') NAME (':' WEIGHT)?
// '+' activates a region, '-' suppresses it, WEIGHT defaults to 1. The
// compiled loss is L(r) = sum_i c_i * mean_{v in R_i} r_v with c_i = -w_i for
// activation and +w_i for suppression.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "nvolve/error.hpp"

namespace nvolve {

namespace detail {

inline bool is_name_char(char c) noexcept {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

inline bool is_space(char c) noexcept { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, end);
}

}  // namespace detail

/// Named voxel regions. Indices are kept sorted and unique; regions may overlap.
class RoiAtlas {
public:
    RoiAtlas() = default;

    void add(const std::string& name, std::vector<std::size_t> indices) {
        if (name.empty() || !std::all_of(name.begin(), name.end(), detail::is_name_char))
            throw InvalidArgument("invalid region name '" + name + "'");
        if (indices.empty()) throw InvalidArgument("region '" + name + "' is empty");
        if (regions_.count(name)) throw InvalidArgument("duplicate region '" + name + "'");
        std::sort(indices.begin(), indices.end());
        indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
        regions_.emplace(name, std::move(indices));
    }

    [[nodiscard]] bool contains(const std::string& name) const { return regions_.count(name) != 0; }

    [[nodiscard]] const std::vector<std::size_t>& at(const std::string& name) const {
        auto it = regions_.find(name);
        if (it == regions_.end()) throw UnknownRegion(name);
        return it->second;
    }

    [[nodiscard]] std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [k, _] : regions_) out.push_back(k);
        return out;
    }

    [[nodiscard]] std::size_t size() const noexcept { return regions_.size(); }
    [[nodiscard]] const std::map<std::string, std::vector<std::size_t>>& regions() const noexcept { return regions_; }

    /// Throws if any index is outside [0, n_voxels).
    void validate(std::size_t n_voxels) const {
        for (const auto& [name, idx] : regions_)
            if (!idx.empty() && idx.back() >= n_voxels)
                throw InvalidArgument("region '" + name + "' has voxel index " + std::to_string(idx.back()) +
                                      " out of bounds for " + std::to_string(n_voxels) + " voxels");
    }

    friend bool operator==(const RoiAtlas&, const RoiAtlas&) = default;

private:
    std::map<std::string, std::vector<std::size_t>> regions_;
};

/// Parses the atlas text format: one `NAME: i1,i2,...` record per line.
/// Blank lines and lines starting with '#' are ignored.
inline RoiAtlas parse_atlas(std::string_view text) {
    RoiAtlas atlas;
    std::size_t line_start = 0;
    while (line_start < text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = text.size();
        const std::string_view line = text.substr(line_start, line_end - line_start);
        auto fail = [&](const std::string& msg, std::size_t col) -> ParseError {
            return ParseError("atlas: " + msg, line_start + col);
        };

        std::size_t i = 0;
        while (i < line.size() && detail::is_space(line[i])) ++i;
        if (i == line.size() || line[i] == '#') {
            line_start = line_end + 1;
            continue;
        }
        const std::size_t name_begin = i;
        while (i < line.size() && detail::is_name_char(line[i])) ++i;
        if (i == name_begin) throw fail("expected region name", i);
        const std::string name(line.substr(name_begin, i - name_begin));
        while (i < line.size() && detail::is_space(line[i])) ++i;
        if (i == line.size() || line[i] != ':') throw fail("expected ':' after region name", i);
        ++i;

        std::vector<std::size_t> indices;
        for (;;) {
            while (i < line.size() && detail::is_space(line[i])) ++i;
            std::size_t value = 0;
            auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + line.size(), value);
            if (ec != std::errc{}) throw fail("expected voxel index", i);
            i = static_cast<std::size_t>(ptr - line.data());
            indices.push_back(value);
            while (i < line.size() && detail::is_space(line[i])) ++i;
            if (i == line.size()) break;
            if (line[i] != ',') throw fail("expected ',' between voxel indices", i);
            ++i;
        }
        if (atlas.contains(name)) throw fail("duplicate region '" + name + "'", name_begin);
        atlas.add(name, std::move(indices));
        line_start = line_end + 1;
    }
    return atlas;
}

inline std::string format_atlas(const RoiAtlas& atlas) {
    std::string out;
    for (const auto& [name, idx] : atlas.regions()) {
        out += name + ":";
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out += (i ? "," : " ");
            out += std::to_string(idx[i]);
        }
        out += "\n";
    }
    return out;
}

enum class Direction { activate, suppress };

struct ObjectiveTerm {
    std::string region;
    Direction direction = Direction::activate;
    double weight = 1.0;

    friend bool operator==(const ObjectiveTerm&, const ObjectiveTerm&) = default;
};

/// Parses objective text. Errors carry the byte offset of the problem.
inline std::vector<ObjectiveTerm> parse_objective(std::string_view text) {
    std::vector<ObjectiveTerm> terms;
    std::size_t i = 0;
    auto skip_ws = [&] {
        const std::size_t before = i;
        while (i < text.size() && detail::is_space(text[i])) ++i;
        return i > before;
    };
    skip_ws();
    if (i == text.size()) throw ParseError("empty objective", i);
    while (i < text.size()) {
        ObjectiveTerm term;
        if (text[i] == '+') {
            term.direction = Direction::activate;
        } else if (text[i] == '-') {
            term.direction = Direction::suppress;
        } else if (detail::is_name_char(text[i])) {
            throw ParseError("missing '+' or '-' before region name", i);
        } else {
            throw ParseError(std::string("unexpected character '") + text[i] + "'", i);
        }
        ++i;
        const std::size_t name_begin = i;
        while (i < text.size() && detail::is_name_char(text[i])) ++i;
        if (i == name_begin) {
            if (i < text.size() && !detail::is_space(text[i]) && text[i] != ':')
                throw ParseError(std::string("unexpected character '") + text[i] + "'", i);
            throw ParseError("expected region name", i);
        }
        term.region = std::string(text.substr(name_begin, i - name_begin));
        if (i < text.size() && text[i] == ':') {
            ++i;
            const std::size_t num_begin = i;
            // Reject signs and special values; from_chars would accept "-1", "inf" and "nan".
            if (i >= text.size() || !(std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.'))
                throw ParseError("expected positive decimal weight", num_begin);
            double w = 0.0;
            auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), w, std::chars_format::general);
            if (ec != std::errc{}) throw ParseError("expected positive decimal weight", num_begin);
            i = static_cast<std::size_t>(ptr - text.data());
            if (!(w > 0.0) || !std::isfinite(w)) throw ParseError("weight must be a positive finite number", num_begin);
            term.weight = w;
        }
        terms.push_back(std::move(term));
        const bool had_ws = skip_ws();
        if (i < text.size() && !had_ws) {
            if (text[i] == '+' || text[i] == '-') throw ParseError("expected whitespace between terms", i);
            throw ParseError(std::string("unexpected character '") + text[i] + "'", i);
        }
    }
    return terms;
}

/// Canonical text for a list of terms; parse_objective(format_objective(t)) == t.
inline std::string format_objective(std::span<const ObjectiveTerm> terms) {
    std::string out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i) out += ' ';
        out += terms[i].direction == Direction::activate ? '+' : '-';
        out += terms[i].region;
        if (terms[i].weight != 1.0) out += ":" + detail::format_double(terms[i].weight);
    }
    return out;
}

struct CompiledTerm {
    ObjectiveTerm term;
    double coefficient = 0.0;  // -weight for activate, +weight for suppress
    std::vector<std::size_t> voxels;
};

/// Objective bound to an atlas and a voxel count. Immutable once compiled.
class NeuralObjective {
public:
    [[nodiscard]] const std::vector<CompiledTerm>& terms() const noexcept { return terms_; }
    [[nodiscard]] std::size_t n_voxels() const noexcept { return n_voxels_; }
    [[nodiscard]] const RoiAtlas& atlas() const noexcept { return *atlas_; }
    [[nodiscard]] std::string text() const {
        std::vector<ObjectiveTerm> t;
        for (const auto& c : terms_) t.push_back(c.term);
        return format_objective(t);
    }

    friend NeuralObjective compile(std::span<const ObjectiveTerm>, const RoiAtlas&, std::size_t);

private:
    std::vector<CompiledTerm> terms_;
    std::size_t n_voxels_ = 0;
    std::shared_ptr<const RoiAtlas> atlas_;
};

inline NeuralObjective compile(std::span<const ObjectiveTerm> terms, const RoiAtlas& atlas, std::size_t n_voxels) {
    if (terms.empty()) throw InvalidArgument("objective has no terms");
    atlas.validate(n_voxels);
    NeuralObjective obj;
    obj.n_voxels_ = n_voxels;
    obj.atlas_ = std::make_shared<const RoiAtlas>(atlas);
    for (const auto& t : terms) {
        if (!(t.weight > 0.0) || !std::isfinite(t.weight))
            throw InvalidArgument("term weight for '" + t.region + "' must be positive");
        const auto& voxels = atlas.at(t.region);
        if (voxels.empty()) throw InvalidArgument("region '" + t.region + "' is empty");
        const double c = t.direction == Direction::activate ? -t.weight : t.weight;
        obj.terms_.push_back({t, c, voxels});
    }
    return obj;
}

inline NeuralObjective compile(std::string_view text, const RoiAtlas& atlas, std::size_t n_voxels) {
    const auto terms = parse_objective(text);
    return compile(terms, atlas, n_voxels);
}

namespace detail {

inline void check_response(std::size_t expected, std::size_t actual) {
    if (expected != actual) throw ShapeError("response length", expected, actual);
}

inline double mean_over(std::span<const double> response, const std::vector<std::size_t>& voxels) {
    double s = 0.0;
    for (auto v : voxels) s += response[v];
    return s / static_cast<double>(voxels.size());
}

}  // namespace detail

inline double loss(const NeuralObjective& obj, std::span<const double> response) {
    detail::check_response(obj.n_voxels(), response.size());
    double total = 0.0;
    for (const auto& t : obj.terms()) total += t.coefficient * detail::mean_over(response, t.voxels);
    return total;
}

/// dL/dresponse; entry v is the sum over terms containing v of c_i / |R_i|.
inline std::vector<double> loss_cotangent(const NeuralObjective& obj, std::span<const double> response) {
    detail::check_response(obj.n_voxels(), response.size());
    std::vector<double> g(response.size(), 0.0);
    for (const auto& t : obj.terms()) {
        const double share = t.coefficient / static_cast<double>(t.voxels.size());
        for (auto v : t.voxels) g[v] += share;
    }
    return g;
}

/// Mean response of every atlas region.
inline std::map<std::string, double> region_means(const RoiAtlas& atlas, std::span<const double> response) {
    std::map<std::string, double> out;
    for (const auto& [name, voxels] : atlas.regions()) {
        for (auto v : voxels)
            if (v >= response.size())
                throw ShapeError("region '" + name + "' indexes voxel " + std::to_string(v) + " beyond response length " +
                                 std::to_string(response.size()));
        out.emplace(name, detail::mean_over(response, voxels));
    }
    return out;
}

}  // namespace nvolve
