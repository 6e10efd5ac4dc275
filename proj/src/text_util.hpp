#ifndef FIXLOCUS_TEXT_UTIL_HPP
#define FIXLOCUS_TEXT_UTIL_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fixlocus::text {

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

/// Splits on `sep` only at parenthesis depth zero, so canonical method
/// text with commas in the descriptor survives.
inline std::vector<std::string> split_top_level(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::string current;
    int depth = 0;
    for (char c : s) {
        if (c == '(') {
            ++depth;
        } else if (c == ')') {
            --depth;
        }
        if (c == sep && depth == 0) {
            out.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    out.push_back(current);
    return out;
}

template <typename Range, typename Fn>
std::string join(const Range& items, std::string_view sep, Fn to_text) {
    std::string out;
    bool first = true;
    for (const auto& item : items) {
        if (!first) {
            out += sep;
        }
        first = false;
        out += to_text(item);
    }
    return out;
}

inline std::string join(const std::vector<std::string>& items, std::string_view sep) {
    return join(items, sep, [](const std::string& s) { return s; });
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

/// RFC-4180 quoting, applied only when the field needs it so simple
/// fields stay byte-identical to their raw text.
inline std::string csv_field(const std::string& raw) {
    if (raw.find_first_of(",\"\n") == std::string::npos) {
        return raw;
    }
    std::string out = "\"";
    for (char c : raw) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out += '"';
    return out;
}

inline std::string format_score(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

} // namespace fixlocus::text

#endif
