#pragma once

// Line-oriented `key = value` text with `[section]` headers. Sections may
// repeat; keys before the first header belong to the unnamed section "".
// Lines starting with '#' are comments.

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nvolve/error.hpp"
#include "nvolve/objective.hpp"

namespace nvolve {

struct KeyValueSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    void set(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }
    void set(std::string key, double value) { set(std::move(key), detail::format_double(value)); }
    void set(std::string key, std::int64_t value) { set(std::move(key), std::to_string(value)); }
    void set(std::string key, std::uint64_t value) { set(std::move(key), std::to_string(value)); }
    void set(std::string key, int value) { set(std::move(key), std::to_string(value)); }
    void set(std::string key, const char* value) { set(std::move(key), std::string(value)); }

    [[nodiscard]] std::optional<std::string> find(std::string_view key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return v;
        return std::nullopt;
    }

    [[nodiscard]] const std::string& get(std::string_view key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return v;
        throw FormatError(FormatErrorKind::missing_entry, "key '" + std::string(key) + "' missing from [" + name + "]");
    }

    template <typename T>
    [[nodiscard]] T get_number(std::string_view key) const {
        const auto& text = get(key);
        T value{};
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw FormatError(FormatErrorKind::malformed, "key '" + std::string(key) + "' in [" + name + "] is not a number: '" + text + "'");
        return value;
    }
};

struct KeyValueDoc {
    std::vector<KeyValueSection> sections;

    KeyValueSection& add(std::string name) {
        sections.push_back({std::move(name), {}});
        return sections.back();
    }

    [[nodiscard]] const KeyValueSection* find(std::string_view name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }

    [[nodiscard]] const KeyValueSection& section(std::string_view name) const {
        if (const auto* s = find(name)) return *s;
        throw FormatError(FormatErrorKind::missing_entry, "section [" + std::string(name) + "] missing");
    }

    [[nodiscard]] std::vector<const KeyValueSection*> all(std::string_view name) const {
        std::vector<const KeyValueSection*> out;
        for (const auto& s : sections)
            if (s.name == name) out.push_back(&s);
        return out;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace detail

inline std::string format_keyvalue(const KeyValueDoc& doc) {
    std::string out;
    for (const auto& s : doc.sections) {
        if (!s.name.empty()) out += "[" + s.name + "]\n";
        for (const auto& [k, v] : s.entries) out += k + " = " + v + "\n";
    }
    return out;
}

inline KeyValueDoc parse_keyvalue(std::string_view text) {
    KeyValueDoc doc;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        ++line_no;
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = detail::trim(text.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw FormatError(FormatErrorKind::malformed, "line " + std::to_string(line_no) + ": unterminated section header");
            doc.add(std::string(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw FormatError(FormatErrorKind::malformed, "line " + std::to_string(line_no) + ": expected 'key = value'");
        if (doc.sections.empty()) doc.add("");
        doc.sections.back().set(std::string(detail::trim(line.substr(0, eq))), std::string(detail::trim(line.substr(eq + 1))));
    }
    return doc;
}

}  // namespace nvolve
