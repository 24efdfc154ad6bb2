#pragma once

// Flat `key = value` configuration files.
//
//   # comment
//   mod      = pm            # bare word or "quoted string"
//   trials   = 256           # integer
//   beta     = 0.5           # real
//   linearized = false       # boolean
//   lambda   = [30, 100, 300]  # real list
//
// Each subcommand owns a schema; unknown, duplicate and missing required keys are errors.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "../errors.hpp"

namespace qphase::harness {

enum class ValueType { String, Integer, Real, Boolean, RealList };

inline std::string to_string(ValueType t) {
    switch (t) {
    case ValueType::String: return "string";
    case ValueType::Integer: return "integer";
    case ValueType::Real: return "real";
    case ValueType::Boolean: return "boolean";
    case ValueType::RealList: return "real list";
    }
    return "?";
}

using Value = std::variant<std::string, long long, double, bool, std::vector<double>>;

inline std::string format_real(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    std::string s = buf;
    // keep reals distinguishable from integers on re-read
    if (s.find_first_of(".eEni") == std::string::npos) s += ".0";
    return s;
}

inline std::string format_value(const Value& v) {
    struct {
        std::string operator()(const std::string& s) const {
            std::string out = "\"";
            for (char c : s) {
                if (c == '"' || c == '\\') out += '\\';
                out += c;
            }
            return out + "\"";
        }
        std::string operator()(long long i) const { return std::to_string(i); }
        std::string operator()(double d) const { return format_real(d); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(const std::vector<double>& l) const {
            std::string out = "[";
            for (std::size_t i = 0; i < l.size(); ++i) out += (i ? ", " : "") + format_real(l[i]);
            return out + "]";
        }
    } f;
    return std::visit(f, v);
}

struct KeySpec {
    std::string name;
    ValueType type;
    bool required = false;
    std::optional<Value> fallback; // default; absent for optional keys without one
    std::string doc;
};

struct Schema {
    std::string name;
    std::vector<KeySpec> keys;

    const KeySpec* find(const std::string& key) const {
        for (const auto& k : keys)
            if (k.name == key) return &k;
        return nullptr;
    }
};

/// Raw `key = value` text before type resolution.
struct RawEntry {
    std::string value;
    int line;
};

namespace detail {

inline std::string trim(std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted && c == '\\') {
            ++i;
            continue;
        }
        if (c == '"') quoted = !quoted;
        if (c == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

[[noreturn]] inline void fail(const std::string& source, int line, const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
}

inline bool valid_key(const std::string& k) {
    if (k.empty() || !(std::isalpha(static_cast<unsigned char>(k[0])) || k[0] == '_')) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

inline std::optional<long long> parse_integer(const std::string& s) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<double> parse_real(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<std::string> parse_string(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            char c = s[i];
            if (c == '\\' && i + 2 < s.size()) c = s[++i];
            else if (c == '"') return std::nullopt;
            out += c;
        }
        return out;
    }
    if (s.empty() || s.find_first_of("\"[], \t") != std::string::npos) return std::nullopt;
    return s;
}

} // namespace detail

/// Splits text into raw entries; syntax errors and duplicates are reported with line numbers.
inline std::map<std::string, RawEntry> parse_raw(const std::string& text, const std::string& source = "<config>") {
    std::map<std::string, RawEntry> out;
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        std::string body = detail::trim(detail::strip_comment(line));
        if (body.empty()) continue;
        auto eq = body.find('=');
        if (eq == std::string::npos) detail::fail(source, no, "expected `key = value`");
        std::string key = detail::trim(body.substr(0, eq));
        std::string value = detail::trim(body.substr(eq + 1));
        if (!detail::valid_key(key)) detail::fail(source, no, "invalid key '" + key + "'");
        if (value.empty()) detail::fail(source, no, "missing value for '" + key + "'");
        auto prev = out.find(key);
        if (prev != out.end())
            detail::fail(source, no, "duplicate key '" + key + "' (first set on line " +
                                         std::to_string(prev->second.line) + ")");
        out.emplace(key, RawEntry{value, no});
    }
    return out;
}

inline Value convert(const RawEntry& raw, const KeySpec& spec, const std::string& source) {
    const std::string& s = raw.value;
    auto bad = [&](const std::string& what) -> Value {
        detail::fail(source, raw.line, "'" + spec.name + "' expects " + what + ", got '" + s + "'");
    };
    switch (spec.type) {
    case ValueType::String: {
        auto v = detail::parse_string(s);
        return v ? Value{*v} : bad("a string");
    }
    case ValueType::Integer: {
        auto v = detail::parse_integer(s);
        return v ? Value{*v} : bad("an integer");
    }
    case ValueType::Real: {
        auto v = detail::parse_real(s);
        return v ? Value{*v} : bad("a real");
    }
    case ValueType::Boolean:
        if (s == "true") return true;
        if (s == "false") return false;
        return bad("true or false");
    case ValueType::RealList: {
        if (s.front() != '[') {
            // a bare scalar is a one-element list
            auto v = detail::parse_real(s);
            return v ? Value{std::vector<double>{*v}} : bad("a real list");
        }
        if (s.back() != ']') return bad("a real list");
        std::vector<double> out;
        std::string inner = detail::trim(s.substr(1, s.size() - 2));
        if (inner.empty()) return bad("a nonempty real list");
        std::stringstream items(inner);
        std::string item;
        while (std::getline(items, item, ',')) {
            auto v = detail::parse_real(detail::trim(item));
            if (!v) return bad("a real list");
            out.push_back(*v);
        }
        return out;
    }
    }
    return bad("a value");
}

/// Configuration with every schema key resolved to a typed value (defaults included).
class Config {
public:
    Config() = default;
    Config(std::string schema, std::map<std::string, Value> values)
        : schema_(std::move(schema)), values_(std::move(values)) {}

    const std::string& schema() const { return schema_; }
    const std::map<std::string, Value>& values() const { return values_; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    template <class T>
    const T& get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing configuration key '" + key + "'");
        const T* p = std::get_if<T>(&it->second);
        if (!p) throw ConfigError("configuration key '" + key + "' has the wrong type");
        return *p;
    }

    template <class T>
    std::optional<T> maybe(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return get<T>(key);
    }

    double real(const std::string& key) const { return get<double>(key); }
    long long integer(const std::string& key) const { return get<long long>(key); }
    const std::string& string(const std::string& key) const { return get<std::string>(key); }
    bool boolean(const std::string& key) const { return get<bool>(key); }
    const std::vector<double>& list(const std::string& key) const { return get<std::vector<double>>(key); }

    /// Serializes to the file grammar, sorted by key; parsing the result gives an equal Config.
    std::string serialize() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + " = " + format_value(v) + "\n";
        return out;
    }

    friend bool operator==(const Config&, const Config&) = default;

private:
    std::string schema_;
    std::map<std::string, Value> values_;
};

inline Config resolve(const Schema& schema, const std::string& text, const std::string& source = "<config>") {
    auto raw = parse_raw(text, source);
    std::map<std::string, Value> values;
    for (const auto& [key, entry] : raw) {
        const KeySpec* spec = schema.find(key);
        if (!spec) detail::fail(source, entry.line, "unknown key '" + key + "' for " + schema.name);
        values.emplace(key, convert(entry, *spec, source));
    }
    std::vector<std::string> missing;
    for (const auto& k : schema.keys) {
        if (values.count(k.name)) continue;
        if (k.required) missing.push_back(k.name);
        else if (k.fallback) values.emplace(k.name, *k.fallback);
    }
    if (!missing.empty()) {
        std::string msg = source + ": missing required key";
        msg += missing.size() > 1 ? "s: " : ": ";
        for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : "") + missing[i];
        throw ConfigError(msg);
    }
    return Config(schema.name, std::move(values));
}

inline Config load_config(const Schema& schema, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return resolve(schema, ss.str(), path);
}

} // namespace qphase::harness
