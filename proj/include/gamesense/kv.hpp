#pragma once

// Textual key-value format used for layout files, label lists, and the
// per-game config bundles. Layout:
//
//   format = layout/1          # header keys before the first section
//   [channel]                  # sections may repeat; order is preserved
//   name = boss_hp
//   rect = 40 6 80 4
//
// '#' starts a comment, values keep internal whitespace, keys are unique
// within a section.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gamesense/common.hpp"

namespace gamesense {

struct KvSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return &v;
        return nullptr;
    }
    bool has(const std::string& key) const { return find(key) != nullptr; }

    std::string get(const std::string& key) const {
        const std::string* v = find(key);
        if (!v) throw std::runtime_error("kv: missing key '" + key + "' in [" + name + "]");
        return *v;
    }
    std::string get_or(const std::string& key, const std::string& dflt) const {
        const std::string* v = find(key);
        return v ? *v : dflt;
    }
    long get_int(const std::string& key) const { return parse_int(get(key), key); }
    long get_int_or(const std::string& key, long dflt) const {
        const std::string* v = find(key);
        return v ? parse_int(*v, key) : dflt;
    }
    double get_double(const std::string& key) const { return parse_double(get(key), key); }
    double get_double_or(const std::string& key, double dflt) const {
        const std::string* v = find(key);
        return v ? parse_double(*v, key) : dflt;
    }
    bool get_bool_or(const std::string& key, bool dflt) const {
        const std::string* v = find(key);
        if (!v) return dflt;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw std::runtime_error("kv: bad bool '" + *v + "' for key '" + key + "'");
    }
    // Whitespace-separated integer list, e.g. "rect = 40 6 80 4".
    std::vector<long> get_ints(const std::string& key) const {
        std::istringstream is(get(key));
        std::vector<long> out;
        long v;
        while (is >> v) out.push_back(v);
        return out;
    }
    std::vector<double> get_doubles(const std::string& key) const {
        std::istringstream is(get(key));
        std::vector<double> out;
        double v;
        while (is >> v) out.push_back(v);
        return out;
    }
    Rect get_rect(const std::string& key) const {
        auto v = get_ints(key);
        if (v.size() != 4) throw std::runtime_error("kv: rect '" + key + "' needs 4 ints");
        return Rect{int(v[0]), int(v[1]), int(v[2]), int(v[3])};
    }
    Color get_color(const std::string& key) const {
        auto v = get_ints(key);
        if (v.size() != 3) throw std::runtime_error("kv: color '" + key + "' needs 3 ints");
        return Color{uint8_t(v[0]), uint8_t(v[1]), uint8_t(v[2])};
    }

    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : entries)
            if (k == key) {
                v = value;
                return;
            }
        entries.emplace_back(key, value);
    }

private:
    static long parse_int(const std::string& s, const std::string& key) {
        size_t used = 0;
        long v = 0;
        try {
            v = std::stol(s, &used);
        } catch (const std::exception&) {
            throw std::runtime_error("kv: bad integer '" + s + "' for key '" + key + "'");
        }
        if (used != s.size())
            throw std::runtime_error("kv: trailing junk in integer '" + s + "' for key '" + key + "'");
        return v;
    }
    static double parse_double(const std::string& s, const std::string& key) {
        size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw std::runtime_error("kv: bad number '" + s + "' for key '" + key + "'");
        }
        if (used != s.size())
            throw std::runtime_error("kv: trailing junk in number '" + s + "' for key '" + key + "'");
        return v;
    }
};

struct KvFile {
    KvSection header;                 // keys before the first [section]
    std::vector<KvSection> sections;  // in file order

    std::vector<const KvSection*> all(const std::string& name) const {
        std::vector<const KvSection*> out;
        for (const auto& s : sections)
            if (s.name == name) out.push_back(&s);
        return out;
    }
    const KvSection* first(const std::string& name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }

    std::string serialize() const {
        std::string out;
        auto emit = [&out](const KvSection& s) {
            for (const auto& [k, v] : s.entries) out += k + " = " + v + "\n";
        };
        emit(header);
        for (const auto& s : sections) {
            out += "\n[" + s.name + "]\n";
            emit(s);
        }
        return out;
    }
};

namespace detail {
inline std::string kv_trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}
}  // namespace detail

inline KvFile kv_parse(const std::string& text, const std::string& origin = "<string>") {
    KvFile file;
    KvSection* cur = &file.header;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::kv_trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error(strf("%s:%d: unterminated section header", origin.c_str(), lineno));
            file.sections.push_back(KvSection{detail::kv_trim(line.substr(1, line.size() - 2)), {}});
            cur = &file.sections.back();
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(strf("%s:%d: expected 'key = value'", origin.c_str(), lineno));
        std::string key = detail::kv_trim(line.substr(0, eq));
        std::string val = detail::kv_trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(strf("%s:%d: empty key", origin.c_str(), lineno));
        if (cur->has(key))
            throw std::runtime_error(strf("%s:%d: duplicate key '%s'", origin.c_str(), lineno, key.c_str()));
        cur->entries.emplace_back(key, val);
    }
    return file;
}

inline KvFile kv_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("kv: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return kv_parse(ss.str(), path);
}

inline void kv_save(const KvFile& file, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("kv: cannot write " + path);
    out << file.serialize();
}

}  // namespace gamesense
