#include <catch_amalgamated.hpp>

#include <cstring>

#include "gamesense/common.hpp"
#include "gamesense/kv.hpp"
#include "gamesense/png.hpp"

using namespace gamesense;

TEST_CASE("rng streams are deterministic and tag-separated") {
    RngStream a(42, "physics");
    RngStream b(42, "physics");
    RngStream c(42, "spawn");

    std::vector<uint64_t> sa, sb, sc;
    for (int i = 0; i < 64; ++i) {
        sa.push_back(a.next_u64());
        sb.push_back(b.next_u64());
        sc.push_back(c.next_u64());
    }
    CHECK(sa == sb);
    CHECK(sa != sc);
}

TEST_CASE("rng counter replay") {
    RngStream a(7, "x");
    for (int i = 0; i < 10; ++i) a.next_u64();
    uint64_t at10 = a.counter();
    uint64_t v11 = a.next_u64();
    a.set_counter(at10);
    CHECK(a.next_u64() == v11);

    a.set_counter(0);
    RngStream fresh(7, "x");
    CHECK(a.next_u64() == fresh.next_u64());
}

TEST_CASE("rng ranges") {
    RngStream r(1, "t");
    for (int i = 0; i < 1000; ++i) {
        double d = r.next_double();
        CHECK(d >= 0.0);
        CHECK(d < 1.0);
        uint64_t v = r.next_below(13);
        CHECK(v < 13);
    }
    // next_below must hit every residue eventually
    std::vector<int> seen(13, 0);
    for (int i = 0; i < 2000; ++i) ++seen[size_t(r.next_below(13))];
    for (int count : seen) CHECK(count > 0);
}

TEST_CASE("rng normal has sane moments") {
    RngStream r(3, "n");
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double v = r.next_normal();
        sum += v;
        sq += v * v;
    }
    double mean = sum / n, var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("fnv1a matches reference values") {
    // Reference vectors from the published FNV-1a 64-bit parameters.
    CHECK(fnv1a(nullptr, 0) == 0xcbf29ce484222325ULL);
    const char* a = "a";
    CHECK(fnv1a(a, 1) == 0xaf63dc4c8601ec8cULL);
    const char* foobar = "foobar";
    CHECK(fnv1a(foobar, 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("rect helpers") {
    Rect r{10, 20, 30, 40};
    CHECK(r.contains(10, 20));
    CHECK(r.contains(39, 59));
    CHECK_FALSE(r.contains(40, 20));
    CHECK(r.area() == 1200);
    CHECK(rect_iou(r, r) == Catch::Approx(1.0));
    CHECK(rect_iou(r, Rect{100, 100, 5, 5}) == 0.0);
    Rect half{10, 20, 15, 40};
    CHECK(rect_iou(r, half) == Catch::Approx(0.5));
}

TEST_CASE("color matching uses per-channel tolerance") {
    Color ref{100, 150, 200};
    CHECK(color_match(Color{110, 140, 210}, ref, 10));
    CHECK_FALSE(color_match(Color{111, 150, 200}, ref, 10));
}

TEST_CASE("kv round trip") {
    const char* text =
        "# comment\n"
        "game = arena\n"
        "width = 160\n"
        "\n"
        "[bar]\n"
        "name = hp\n"
        "rect = 4 4 50 4\n"
        "fill = 230 60 40\n"
        "frac = 0.5\n"
        "enabled = true\n"
        "\n"
        "[bar]\n"
        "name = mana\n"
        "rect = 4 15 50 3\n";

    KvFile kv = kv_parse(text, "inline");
    CHECK(kv.header.get("game") == "arena");
    CHECK(kv.header.get_int("width") == 160);
    auto bars = kv.all("bar");
    REQUIRE(bars.size() == 2);
    CHECK(bars[0]->get("name") == "hp");
    Rect r = bars[0]->get_rect("rect");
    CHECK(r.x == 4);
    CHECK(r.h == 4);
    Color c = bars[0]->get_color("fill");
    CHECK(c.r == 230);
    CHECK(bars[0]->get_double("frac") == Catch::Approx(0.5));
    CHECK(bars[0]->get_bool_or("enabled", false));
    CHECK(bars[1]->get("name") == "mana");

    // serialize → reparse → identical structure
    KvFile again = kv_parse(kv.serialize(), "reparse");
    CHECK(again.serialize() == kv.serialize());
    CHECK(again.all("bar").size() == 2);
}

TEST_CASE("kv errors carry file and line") {
    CHECK_THROWS_WITH(kv_parse("a = 1\na = 2\n", "dup.kv"),
                      Catch::Matchers::ContainsSubstring("dup.kv:2"));
    CHECK_THROWS_WITH(kv_parse("nonsense line\n", "bad.kv"),
                      Catch::Matchers::ContainsSubstring("bad.kv:1"));
    KvFile kv = kv_parse("x = 1\n", "m.kv");
    CHECK_THROWS_WITH(kv.header.get("missing"), Catch::Matchers::ContainsSubstring("missing"));
    CHECK_THROWS_WITH(kv.header.get_int("x_nope"), Catch::Matchers::ContainsSubstring("x_nope"));
}

TEST_CASE("kv typed getter rejects malformed numbers") {
    KvFile kv = kv_parse("n = 12abc\n", "n.kv");
    CHECK_THROWS_AS(kv.header.get_int("n"), std::runtime_error);
}

TEST_CASE("strf and float formatting") {
    CHECK(strf("%d-%s", 7, "x") == "7-x");
    CHECK(fmt_double(0.5) == "0.5");
    CHECK(fmt_double(-3.0) == "-3");
    for (double v : {0.1, 1.0 / 3.0, 1e-9, 123456.789, -0.0625}) {
        double back = std::strtod(fmt_double(v).c_str(), nullptr);
        CHECK(back == v);
    }
}

TEST_CASE("png encoder emits well-formed chunks") {
    std::vector<uint8_t> rgb(16 * 8 * 3, 0);
    for (size_t i = 0; i < rgb.size(); i += 3) rgb[i] = 255;
    std::vector<uint8_t> png = png_encode(16, 8, rgb);

    const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    REQUIRE(png.size() > 8 + 25);
    CHECK(std::memcmp(png.data(), sig, 8) == 0);
    // IHDR with the right dimensions
    CHECK(std::memcmp(png.data() + 12, "IHDR", 4) == 0);
    auto be32 = [&](size_t off) {
        return (uint32_t(png[off]) << 24) | (uint32_t(png[off + 1]) << 16) |
               (uint32_t(png[off + 2]) << 8) | uint32_t(png[off + 3]);
    };
    CHECK(be32(16) == 16);
    CHECK(be32(20) == 8);
    // final chunk is IEND
    CHECK(std::memcmp(png.data() + png.size() - 8, "IEND", 4) == 0);
}

TEST_CASE("parsed diagnostics") {
    Parsed<int> good = Parsed<int>::success(4);
    CHECK(good.ok());
    CHECK(*good.value == 4);
    Parsed<int> bad = Parsed<int>::failure("expected digit at offset 3");
    CHECK_FALSE(bad.ok());
    CHECK(bad.error.find("offset 3") != std::string::npos);
}
