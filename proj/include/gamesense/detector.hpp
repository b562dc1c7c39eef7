#pragma once

// Colour-blob object detector. Each label is a reference colour with a
// tolerance; detections are 4-connected components of matching pixels, gated
// by a minimum size. Output order is deterministic: priority first, then
// blob density, then leftmost. aim_offset() turns a detection into the
// pointer nudge that centres it.

#include <string>
#include <vector>

#include "gamesense/common.hpp"
#include "gamesense/env.hpp"
#include "gamesense/kv.hpp"

namespace gamesense {

struct LabelSpec {
    std::string name;
    Color color;
    int tolerance = 26;
    int min_size = 12;
    int priority = 2;  // lower = reported first
};

inline std::vector<LabelSpec> labels_from_kv(const KvFile& kv) {
    std::vector<LabelSpec> out;
    for (const KvSection* s : kv.all("label")) {
        LabelSpec l;
        l.name = s->get("name");
        l.color = s->get_color("color");
        l.tolerance = int(s->get_int_or("tolerance", 26));
        l.min_size = int(s->get_int_or("min_size", 12));
        l.priority = int(s->get_int_or("priority", 2));
        if (l.min_size < 1) throw std::runtime_error("label '" + l.name + "': min_size must be >= 1");
        out.push_back(l);
    }
    return out;
}

struct Detection {
    std::string label;
    Rect bbox;
    int pixels = 0;
    double score = 0;  // blob density within the bbox
    int priority = 2;
};

inline std::vector<Detection> detect(const Frame& f, const std::vector<LabelSpec>& labels) {
    std::vector<Detection> out;
    std::vector<uint8_t> mask(size_t(f.width) * size_t(f.height));
    std::vector<size_t> stack;

    for (const LabelSpec& label : labels) {
        std::fill(mask.begin(), mask.end(), 0);
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x)
                if (color_match(f.at(x, y), label.color, label.tolerance))
                    mask[size_t(y) * size_t(f.width) + size_t(x)] = 1;

        for (size_t start = 0; start < mask.size(); ++start) {
            if (mask[start] != 1) continue;
            int minx = f.width, miny = f.height, maxx = -1, maxy = -1, count = 0;
            stack.assign(1, start);
            mask[start] = 2;
            while (!stack.empty()) {
                size_t cur = stack.back();
                stack.pop_back();
                int x = int(cur % size_t(f.width)), y = int(cur / size_t(f.width));
                ++count;
                minx = std::min(minx, x);
                maxx = std::max(maxx, x);
                miny = std::min(miny, y);
                maxy = std::max(maxy, y);
                const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    int nx = x + dx[k], ny = y + dy[k];
                    if (nx < 0 || ny < 0 || nx >= f.width || ny >= f.height) continue;
                    size_t ni = size_t(ny) * size_t(f.width) + size_t(nx);
                    if (mask[ni] == 1) {
                        mask[ni] = 2;
                        stack.push_back(ni);
                    }
                }
            }
            if (count < label.min_size) continue;
            Detection d;
            d.label = label.name;
            d.bbox = Rect{minx, miny, maxx - minx + 1, maxy - miny + 1};
            d.pixels = count;
            d.score = double(count) / d.bbox.area();
            d.priority = label.priority;
            out.push_back(d);
        }
    }

    std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
        if (a.priority != b.priority) return a.priority < b.priority;
        if (a.score != b.score) return a.score > b.score;
        if (a.bbox.x != b.bbox.x) return a.bbox.x < b.bbox.x;
        if (a.bbox.y != b.bbox.y) return a.bbox.y < b.bbox.y;
        return a.label < b.label;
    });
    return out;
}

inline std::vector<Detection> detect_label(const Frame& f, const std::vector<LabelSpec>& labels,
                                           const std::string& name) {
    std::vector<LabelSpec> filtered;
    for (const auto& l : labels)
        if (l.name == name) filtered.push_back(l);
    return detect(f, filtered);
}

// Pointer delta that would centre the detection in the frame.
inline std::pair<int, int> aim_offset(const Frame& f, const Detection& d) {
    return {d.bbox.x + d.bbox.w / 2 - f.width / 2, d.bbox.y + d.bbox.h / 2 - f.height / 2};
}

}  // namespace gamesense
