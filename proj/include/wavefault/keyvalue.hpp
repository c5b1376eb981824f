#ifndef WAVEFAULT_KEYVALUE_HPP
#define WAVEFAULT_KEYVALUE_HPP

#include <charconv>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wavefault/error.hpp"

namespace wavefault {

/// Minimal TOML-style document: `[section]` headers, `key = value` lines,
/// `#` comments. Values are numbers, quoted strings or flat number arrays.
/// Keys are flattened to "section.key".
class KeyValueDoc {
public:
    static KeyValueDoc parse(std::string_view text) {
        KeyValueDoc doc;
        std::string section;
        std::size_t line_no = 0;
        std::istringstream in{std::string(text)};
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            auto s = trim(strip_comment(line));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']') fail(line_no, "unterminated section header");
                section = std::string(trim(s.substr(1, s.size() - 2)));
                if (section.empty()) fail(line_no, "empty section name");
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string_view::npos) fail(line_no, "expected key = value");
            const auto key = trim(s.substr(0, eq));
            const auto value = trim(s.substr(eq + 1));
            if (key.empty() || value.empty()) fail(line_no, "empty key or value");
            const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
            if (doc.values_.contains(full)) fail(line_no, "duplicate key '" + full + "'");
            doc.values_[full] = std::string(value);
            doc.order_.push_back(full);
        }
        return doc;
    }

    bool has(const std::string& key) const { return values_.contains(key); }
    const std::vector<std::string>& keys() const { return order_; }

    double number(const std::string& key) const { return to_number(key, raw(key)); }

    double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::string string(const std::string& key) const {
        const auto& v = raw(key);
        if (v.size() < 2 || v.front() != '"' || v.back() != '"') {
            throw Error(ErrorKind::FormatError, "key '" + key + "' is not a quoted string");
        }
        return v.substr(1, v.size() - 2);
    }

    std::vector<double> array(const std::string& key) const {
        std::string_view v = raw(key);
        if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
            throw Error(ErrorKind::FormatError, "key '" + key + "' is not an array");
        }
        v = trim(v.substr(1, v.size() - 2));
        std::vector<double> out;
        while (!v.empty()) {
            const auto comma = v.find(',');
            out.push_back(to_number(key, std::string(trim(v.substr(0, comma)))));
            if (comma == std::string_view::npos) break;
            v = trim(v.substr(comma + 1));
        }
        return out;
    }

private:
    const std::string& raw(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw Error(ErrorKind::FormatError, "missing key '" + key + "'");
        return it->second;
    }

    static double to_number(const std::string& key, const std::string& text) {
        double v = 0.0;
        const auto* first = text.data();
        const auto* last = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) {
            throw Error(ErrorKind::FormatError, "key '" + key + "': '" + text + "' is not a number");
        }
        return v;
    }

    static std::string_view strip_comment(std::string_view s) {
        bool quoted = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') quoted = !quoted;
            if (s[i] == '#' && !quoted) return s.substr(0, i);
        }
        return s;
    }

    static std::string_view trim(std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    [[noreturn]] static void fail(std::size_t line, const std::string& msg) {
        throw Error(ErrorKind::FormatError, "line " + std::to_string(line) + ": " + msg);
    }

    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
};

} // namespace wavefault

#endif // WAVEFAULT_KEYVALUE_HPP
