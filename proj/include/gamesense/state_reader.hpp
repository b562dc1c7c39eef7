#pragma once

// Pixel-space instrument readers. Everything the control loops know about
// game state comes through here: bar fill fractions, indicator flags and the
// score readout, bound to named channels by a schema file. No simulator
// internals are consulted; a reader works on any frame with the same layout.

#include <string>
#include <vector>

#include "gamesense/common.hpp"
#include "gamesense/digits.hpp"
#include "gamesense/env.hpp"
#include "gamesense/kv.hpp"

namespace gamesense {

enum class BarDirection { Right, Left, Up, Down };

inline BarDirection bar_direction_from(const std::string& s) {
    if (s == "right") return BarDirection::Right;
    if (s == "left") return BarDirection::Left;
    if (s == "up") return BarDirection::Up;
    if (s == "down") return BarDirection::Down;
    throw std::runtime_error("layout: unknown bar direction '" + s + "'");
}

struct BarSpec {
    std::string name;
    Rect rect;
    BarDirection direction = BarDirection::Right;
    Color fill;
    int tolerance = 30;
};

struct FlagSpec {
    std::string name;
    Rect rect;
    Color color;
    int tolerance = 30;
    double coverage = 0.7;
};

struct ScoreSpec {
    Rect rect;
    int cells = 4;
    int scale = 2;
    Color color;
    int tolerance = 30;
};

struct Layout {
    std::string game;
    int width = 0;
    int height = 0;
    std::vector<BarSpec> bars;
    std::vector<FlagSpec> flags;
    std::vector<ScoreSpec> scores;  // zero or one in practice

    static Layout from_kv(const KvFile& kv) {
        Layout lay;
        lay.game = kv.header.get_or("game", "");
        lay.width = int(kv.header.get_int("width"));
        lay.height = int(kv.header.get_int("height"));
        for (const KvSection* s : kv.all("bar")) {
            BarSpec b;
            b.name = s->get("name");
            b.rect = s->get_rect("rect");
            b.direction = bar_direction_from(s->get_or("direction", "right"));
            b.fill = s->get_color("fill");
            b.tolerance = int(s->get_int_or("tolerance", 30));
            lay.bars.push_back(b);
        }
        for (const KvSection* s : kv.all("flag")) {
            FlagSpec f;
            f.name = s->get("name");
            f.rect = s->get_rect("rect");
            f.color = s->get_color("color");
            f.tolerance = int(s->get_int_or("tolerance", 30));
            f.coverage = s->get_double_or("coverage", 0.7);
            lay.flags.push_back(f);
        }
        for (const KvSection* s : kv.all("score")) {
            ScoreSpec sc;
            sc.rect = s->get_rect("rect");
            sc.cells = int(s->get_int_or("cells", 4));
            sc.scale = int(s->get_int_or("scale", 2));
            sc.color = s->get_color("color");
            sc.tolerance = int(s->get_int_or("tolerance", 30));
            lay.scores.push_back(sc);
        }
        return lay;
    }

    const BarSpec* find_bar(const std::string& name) const {
        for (const auto& b : bars)
            if (b.name == name) return &b;
        return nullptr;
    }
    const FlagSpec* find_flag(const std::string& name) const {
        for (const auto& f : flags)
            if (f.name == name) return &f;
        return nullptr;
    }
};

// Longest prefix run of fill-coloured pixels along the bar direction, as a
// fraction of the bar length. Measured on the bar's centre line.
inline double read_bar(const Frame& f, const BarSpec& bar) {
    const Rect& r = bar.rect;
    int len = (bar.direction == BarDirection::Right || bar.direction == BarDirection::Left) ? r.w
                                                                                            : r.h;
    if (len <= 0) return 0.0;
    int run = 0;
    for (int i = 0; i < len; ++i) {
        int x, y;
        switch (bar.direction) {
            case BarDirection::Right: x = r.x + i, y = r.y + r.h / 2; break;
            case BarDirection::Left: x = r.x + r.w - 1 - i, y = r.y + r.h / 2; break;
            case BarDirection::Up: x = r.x + r.w / 2, y = r.y + r.h - 1 - i; break;
            default: x = r.x + r.w / 2, y = r.y + i; break;
        }
        if (x < 0 || y < 0 || x >= f.width || y >= f.height) break;
        if (!color_match(f.at(x, y), bar.fill, bar.tolerance)) break;
        ++run;
    }
    return double(run) / len;
}

// True when at least `coverage` of the rect matches the flag colour.
inline bool read_flag(const Frame& f, const FlagSpec& flag) {
    const Rect& r = flag.rect;
    int total = 0, hit = 0;
    for (int y = r.y; y < r.y + r.h; ++y) {
        for (int x = r.x; x < r.x + r.w; ++x) {
            if (x < 0 || y < 0 || x >= f.width || y >= f.height) continue;
            ++total;
            if (color_match(f.at(x, y), flag.color, flag.tolerance)) ++hit;
        }
    }
    return total > 0 && double(hit) / total >= flag.coverage;
}

// Exact glyph-template score readout. Digits are left-aligned; empty cells
// after the number must stay empty. Failures carry a cell diagnostic.
inline Parsed<int> read_score(const Frame& f, const ScoreSpec& sc) {
    const int stride = kDigitCols * sc.scale + 2;
    int value = 0;
    int digits_read = 0;
    bool ended = false;

    for (int cell = 0; cell < sc.cells; ++cell) {
        int ox = sc.rect.x + cell * stride;
        int oy = sc.rect.y + 1;

        auto block_filled = [&](int row, int col) {
            int x = ox + col * sc.scale, y = oy + row * sc.scale;
            if (x < 0 || y < 0 || x >= f.width || y >= f.height) return false;
            return color_match(f.at(x, y), sc.color, sc.tolerance);
        };

        int matched = -1;
        for (int d = 0; d <= 9 && matched < 0; ++d) {
            bool all = true;
            for (int r = 0; r < kDigitRowsN && all; ++r)
                for (int c = 0; c < kDigitCols && all; ++c)
                    all = block_filled(r, c) == digit_pixel(d, r, c);
            if (all) matched = d;
        }

        bool any_ink = false;
        for (int r = 0; r < kDigitRowsN && !any_ink; ++r)
            for (int c = 0; c < kDigitCols && !any_ink; ++c) any_ink = block_filled(r, c);

        if (matched < 0) {
            if (any_ink)
                return Parsed<int>::failure(strf("score cell %d has ink but matches no digit", cell));
            ended = true;
            continue;
        }
        if (ended)
            return Parsed<int>::failure(strf("score cell %d has a digit after a gap", cell));
        value = value * 10 + matched;
        ++digits_read;
    }
    if (digits_read == 0) return Parsed<int>::failure("score region is blank");
    return Parsed<int>::success(value);
}

// ---------------------------------------------------------------------------
// Schema-driven state vectors.
// ---------------------------------------------------------------------------

struct StateChannel {
    enum class Source { Bar, Flag, Score };
    std::string name;
    Source source = Source::Bar;
    std::string ref;     // layout bar/flag name
    double norm = 1.0;   // score divisor
};

struct StateSchema {
    std::vector<StateChannel> channels;
    std::vector<std::string> done_flags;  // any of these set => episode over

    static StateSchema from_kv(const KvFile& kv) {
        StateSchema sc;
        for (const KvSection* s : kv.all("channel")) {
            StateChannel ch;
            ch.name = s->get("name");
            std::string src = s->get("source");
            if (src == "bar")
                ch.source = StateChannel::Source::Bar;
            else if (src == "flag")
                ch.source = StateChannel::Source::Flag;
            else if (src == "score")
                ch.source = StateChannel::Source::Score;
            else
                throw std::runtime_error("schema: unknown source '" + src + "' for channel '" +
                                         ch.name + "'");
            if (ch.source != StateChannel::Source::Score) ch.ref = s->get("ref");
            ch.norm = s->get_double_or("norm", 1.0);
            if (ch.norm <= 0)
                throw std::runtime_error("schema: channel '" + ch.name + "' norm must be positive");
            sc.channels.push_back(ch);
        }
        if (const KvSection* d = kv.first("done")) {
            std::istringstream is(d->get("flags"));
            std::string name;
            while (is >> name) sc.done_flags.push_back(name);
        }
        return sc;
    }

    int index_of(const std::string& name) const {
        for (size_t i = 0; i < channels.size(); ++i)
            if (channels[i].name == name) return int(i);
        return -1;
    }
};

using StateVector = std::vector<double>;

class StateReader {
public:
    StateReader(Layout layout, StateSchema schema)
        : layout_(std::move(layout)), schema_(std::move(schema)) {
        // Bind once, loudly: a typo in a schema must fail at load.
        for (const auto& ch : schema_.channels) {
            switch (ch.source) {
                case StateChannel::Source::Bar:
                    if (!layout_.find_bar(ch.ref))
                        throw std::runtime_error("schema: channel '" + ch.name +
                                                 "' references unknown bar '" + ch.ref + "'");
                    break;
                case StateChannel::Source::Flag:
                    if (!layout_.find_flag(ch.ref))
                        throw std::runtime_error("schema: channel '" + ch.name +
                                                 "' references unknown flag '" + ch.ref + "'");
                    break;
                case StateChannel::Source::Score:
                    if (layout_.scores.empty())
                        throw std::runtime_error("schema: channel '" + ch.name +
                                                 "' needs a score region in the layout");
                    break;
            }
        }
        for (const auto& name : schema_.done_flags)
            if (!layout_.find_flag(name))
                throw std::runtime_error("schema: done flag '" + name + "' not in layout");
    }

    const Layout& layout() const { return layout_; }
    const StateSchema& schema() const { return schema_; }
    size_t size() const { return schema_.channels.size(); }

    Parsed<StateVector> read(const Frame& f) const {
        StateVector out;
        out.reserve(schema_.channels.size());
        for (const auto& ch : schema_.channels) {
            switch (ch.source) {
                case StateChannel::Source::Bar:
                    out.push_back(read_bar(f, *layout_.find_bar(ch.ref)));
                    break;
                case StateChannel::Source::Flag:
                    out.push_back(read_flag(f, *layout_.find_flag(ch.ref)) ? 1.0 : 0.0);
                    break;
                case StateChannel::Source::Score: {
                    Parsed<int> v = read_score(f, layout_.scores.front());
                    if (!v.ok())
                        return Parsed<StateVector>::failure("channel '" + ch.name + "': " + v.error);
                    out.push_back(double(*v.value) / ch.norm);
                    break;
                }
            }
        }
        return Parsed<StateVector>::success(std::move(out));
    }

    bool detect_done(const Frame& f) const {
        for (const auto& name : schema_.done_flags)
            if (read_flag(f, *layout_.find_flag(name))) return true;
        return false;
    }

private:
    Layout layout_;
    StateSchema schema_;
};

}  // namespace gamesense
