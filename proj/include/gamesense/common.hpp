#pragma once

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gamesense {

// ---------------------------------------------------------------------------
// Small geometry / color types shared by the simulators and the vision tools.
// ---------------------------------------------------------------------------

struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool contains(int px, int py) const {
        return px >= x && px < x + w && py >= y && py < y + h;
    }
    bool within(int frame_w, int frame_h) const {
        return x >= 0 && y >= 0 && w > 0 && h > 0 && x + w <= frame_w && y + h <= frame_h;
    }
    int cx() const { return x + w / 2; }
    int cy() const { return y + h / 2; }
    int area() const { return w * h; }
};

inline double rect_iou(const Rect& a, const Rect& b) {
    int x0 = std::max(a.x, b.x);
    int y0 = std::max(a.y, b.y);
    int x1 = std::min(a.x + a.w, b.x + b.w);
    int y1 = std::min(a.y + a.h, b.y + b.h);
    if (x1 <= x0 || y1 <= y0) return 0.0;
    double inter = double(x1 - x0) * double(y1 - y0);
    return inter / (double(a.area()) + double(b.area()) - inter);
}

struct Color {
    uint8_t r = 0;
    uint8_t g = 0;
    uint8_t b = 0;

    bool operator==(const Color& o) const { return r == o.r && g == o.g && b == o.b; }
};

inline bool color_match(Color px, Color ref, int tol) {
    return std::abs(int(px.r) - int(ref.r)) <= tol &&
           std::abs(int(px.g) - int(ref.g)) <= tol &&
           std::abs(int(px.b) - int(ref.b)) <= tol;
}

// ---------------------------------------------------------------------------
// Counter-based RNG. Stateless mixing of (seed, stream tag, counter) so that
// independent domains (physics, spawns, exploration, ...) never share a
// stream and replaying a run never depends on call interleaving.
// ---------------------------------------------------------------------------

inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t hash_tag(const char* s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (; *s; ++s) {
        h ^= uint8_t(*s);
        h *= 1099511628211ULL;
    }
    return h;
}

class RngStream {
public:
    RngStream() = default;
    RngStream(uint64_t seed, const char* tag) : base_(mix64(seed ^ hash_tag(tag))) {}
    RngStream(uint64_t seed, uint64_t tag) : base_(mix64(seed ^ mix64(tag))) {}

    uint64_t next_u64() { return mix64(base_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

    // [0, 1)
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // [0, n)
    uint64_t next_below(uint64_t n) { return n ? next_u64() % n : 0; }

    // normal(0, 1), Box-Muller
    double next_normal() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    uint64_t counter() const { return counter_; }
    void set_counter(uint64_t c) { counter_ = c; }

private:
    uint64_t base_ = 0;
    uint64_t counter_ = 0;
};

// FNV-1a over raw bytes; used for frame-sequence checksums.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Parse results. Parsers report failures as diagnostics instead of throwing
// so that callers can run a bounded repair round-trip.
// ---------------------------------------------------------------------------

template <class T>
struct Parsed {
    std::optional<T> value;
    std::string error;

    bool ok() const { return value.has_value(); }
    const T& operator*() const { return *value; }
    const T* operator->() const { return &*value; }

    static Parsed success(T v) { return Parsed{std::move(v), {}}; }
    static Parsed failure(std::string msg) { return Parsed{std::nullopt, std::move(msg)}; }
};

// printf-style helper; std::format is not available on this toolchain.
inline std::string strf(const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 1, 2)))
#endif
    ;

inline std::string strf(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[1024];
    int n = vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    if (n < 0) return {};
    if (size_t(n) < sizeof(buf)) return std::string(buf, size_t(n));
    std::string big(size_t(n) + 1, '\0');
    va_start(args, fmt);
    vsnprintf(big.data(), big.size(), fmt, args);
    va_end(args);
    big.resize(size_t(n));
    return big;
}

// Canonical float formatting for CSV/JSON artifacts: shortest representation
// that round-trips, so identical runs produce byte-identical files.
inline std::string fmt_double(double v) {
    if (v == 0.0) return "0";
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    for (int prec = 1; prec <= 17; ++prec) {
        std::string s = strf("%.*g", prec, v);
        if (std::stod(s) == v) return s;
    }
    return strf("%.17g", v);
}

}  // namespace gamesense
