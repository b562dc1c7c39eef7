#include <catch2/catch_amalgamated.hpp>
#include <fstream>

#include "gamesense/reward.hpp"

using namespace gamesense;
using nlohmann::json;

namespace {

#ifndef CONFIG_DIR
#define CONFIG_DIR "configs"
#endif

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

StateSchema arena_schema() {
    return StateSchema::from_kv(kv_load(std::string(CONFIG_DIR) + "/arena.state.kv"));
}

StateSchema flappy_schema() {
    return StateSchema::from_kv(kv_load(std::string(CONFIG_DIR) + "/flappy.state.kv"));
}

RewardSpec boss_v0() {
    auto parsed = RewardSpec::from_json_text(read_file(std::string(CONFIG_DIR) +
                                                       "/boss.reward.v0.json"));
    REQUIRE(parsed.ok());
    return *parsed.value;
}

// Arena schema channel order: boss_hp, player_hp, potion, stamina, mana,
// telegraph, vulnerable, in_range.
StateVector arena_state(double boss, double player) {
    return {boss, player, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0};
}

constexpr int kArenaActions = 9;

}  // namespace

TEST_CASE("shipped boss reward reproduces every template branch") {
    StateSchema schema = arena_schema();
    RewardEvaluator eval(boss_v0(), schema, kArenaActions);
    std::vector<int> none;

    SECTION("terminal tiers on boss health reduction, short-circuiting") {
        // non-terminal rules would add plenty; done must return the tier only
        struct Case {
            double prev_boss;
            double want;
        } cases[] = {
            {0.40, 150},  // reduction 0.60 >= 0.5
            {0.75, 75},   // reduction 0.25 >= 0.2
            {0.85, 30},   // reduction 0.15 >= 0.1
            {0.95, -5},   // reduction 0.05: fallback penalty
            {0.00, 150},  // boss dead
        };
        std::vector<int> spam(20, 6);  // would cost -5 were it not terminal
        for (const Case& c : cases) {
            StateVector prev = arena_state(c.prev_boss, 0.2);
            StateVector next = arena_state(0.0, 0.0);
            RewardContext ctx{prev, next, 6, true, spam, 100, 10.0};
            CHECK(eval.evaluate(ctx) == c.want);
        }
    }

    SECTION("boss damage above threshold pays linearly, else a flat penalty") {
        StateVector prev = arena_state(0.80, 0.5);
        StateVector hit = arena_state(0.75, 0.5);  // boss delta 0.05 > 0.02
        RewardContext ctx{prev, hit, 0, false, none, 1, 0.1};
        CHECK(eval.evaluate(ctx) == Catch::Approx(100 * 0.05).margin(1e-12));

        StateVector graze = arena_state(0.79, 0.5);  // boss delta 0.01
        RewardContext ctx2{prev, graze, 0, false, none, 1, 0.1};
        CHECK(eval.evaluate(ctx2) == Catch::Approx(-2.0).margin(1e-12));
    }

    SECTION("player health change is linear and unconditional") {
        StateVector prev = arena_state(0.80, 0.50);
        StateVector hurt = arena_state(0.80, 0.38);  // player delta -0.12
        // boss delta 0 <= 0.02 contributes its -2 alongside
        RewardContext ctx{prev, hurt, 0, false, none, 1, 0.1};
        CHECK(eval.evaluate(ctx) == Catch::Approx(-2.0 + 10 * (-0.12)).margin(1e-12));

        StateVector healed = arena_state(0.80, 0.60);
        RewardContext ctx2{prev, healed, 0, false, none, 1, 0.1};
        CHECK(eval.evaluate(ctx2) == Catch::Approx(-2.0 + 10 * 0.10).margin(1e-12));
    }

    SECTION("dodge reward depends on whether the player took damage") {
        StateVector prev = arena_state(0.80, 0.50);
        StateVector same = arena_state(0.80, 0.50);
        std::vector<int> hist = {6};
        RewardContext clean{prev, same, 6, false, hist, 1, 0.1};
        CHECK(eval.evaluate(clean) == Catch::Approx(-2.0 + 2.0).margin(1e-12));

        StateVector hurt = arena_state(0.80, 0.45);
        RewardContext dinged{prev, hurt, 6, false, hist, 1, 0.1};
        CHECK(eval.evaluate(dinged) ==
              Catch::Approx(-2.0 + 10 * (-0.05) - 0.5).margin(1e-12));
    }

    SECTION("four consecutive light attacks earn the combo bonus") {
        StateVector prev = arena_state(0.80, 0.50);
        StateVector next = arena_state(0.80, 0.50);
        std::vector<int> combo = {0, 2, 4, 4, 4, 4};
        RewardContext ctx{prev, next, 4, false, combo, 6, 0.6};
        CHECK(eval.evaluate(ctx) == Catch::Approx(-2.0 + 5.0).margin(1e-12));

        std::vector<int> broken = {4, 4, 4, 0};
        RewardContext ctx2{prev, next, 0, false, broken, 4, 0.4};
        CHECK(eval.evaluate(ctx2) == Catch::Approx(-2.0).margin(1e-12));

        std::vector<int> three = {4, 4, 4};  // shorter than the suffix
        RewardContext ctx3{prev, next, 4, false, three, 3, 0.3};
        CHECK(eval.evaluate(ctx3) == Catch::Approx(-2.0).margin(1e-12));
    }

    SECTION("spam penalties use strict episode-wide counts") {
        StateVector prev = arena_state(0.80, 0.50);
        StateVector next = arena_state(0.80, 0.50);

        std::vector<int> dodge15(15, 6);
        RewardContext at_limit{prev, next, 0, false, dodge15, 20, 2.0};
        CHECK(eval.evaluate(at_limit) == Catch::Approx(-2.0).margin(1e-12));

        std::vector<int> dodge16(16, 6);
        // current action is a dodge with no damage: +2 also applies
        RewardContext over{prev, next, 6, false, dodge16, 21, 2.1};
        CHECK(eval.evaluate(over) == Catch::Approx(-2.0 + 2.0 - 5.0).margin(1e-12));

        std::vector<int> potions = {7, 7, 7, 7};
        RewardContext chugging{prev, next, 0, false, potions, 22, 2.2};
        CHECK(eval.evaluate(chugging) == Catch::Approx(-2.0 - 5.0).margin(1e-12));
    }

    SECTION("evaluate is pure") {
        StateVector prev = arena_state(0.6, 0.4);
        StateVector next = arena_state(0.5, 0.4);
        std::vector<int> hist = {4, 4};
        RewardContext ctx{prev, next, 4, false, hist, 9, 0.9};
        CHECK(eval.evaluate(ctx) == eval.evaluate(ctx));
    }
}

TEST_CASE("shipped specs validate cleanly against their schemas") {
    CHECK(validate_reward(boss_v0(), arena_schema(), kArenaActions).empty());

    auto flappy = RewardSpec::from_json_text(
        read_file(std::string(CONFIG_DIR) + "/flappy.reward.v0.json"));
    REQUIRE(flappy.ok());
    CHECK(validate_reward(*flappy.value, flappy_schema(), 2).empty());
}

TEST_CASE("flappy default reward: pipes, survival, and death") {
    auto spec = RewardSpec::from_json_text(
        read_file(std::string(CONFIG_DIR) + "/flappy.reward.v0.json"));
    REQUIRE(spec.ok());
    RewardEvaluator eval(*spec.value, flappy_schema(), 2);
    std::vector<int> none;

    // channels: altitude, score (per-50 normalized), death
    StateVector prev = {0.5, 3.0 / 50.0, 0.0};
    StateVector passed = {0.5, 4.0 / 50.0, 0.0};
    RewardContext pipe{prev, passed, 1, false, none, 30, 1.0};
    CHECK(eval.evaluate(pipe) == Catch::Approx(1.0 + 0.01).margin(1e-9));

    StateVector idle = prev;
    RewardContext survive{prev, idle, 0, false, none, 31, 1.03};
    CHECK(eval.evaluate(survive) == Catch::Approx(0.01).margin(1e-12));

    RewardContext died{prev, idle, 0, true, none, 32, 1.06};
    CHECK(eval.evaluate(died) == -10.0);
}

TEST_CASE("dodge patch reproduces the optimized reward semantics") {
    StateSchema schema = arena_schema();
    RewardSpec v0 = boss_v0();
    json patch = json::parse(read_file(std::string(CONFIG_DIR) + "/boss.reward.dodge-patch.json"));

    auto patched = apply_patch(v0, patch, schema, kArenaActions);
    REQUIRE(patched.ok());
    const RewardSpec& v1 = *patched.value;
    CHECK(v1.version == 1);
    REQUIRE(v1.parent_version.has_value());
    CHECK(*v1.parent_version == 0);

    RewardEvaluator old_eval(v0, schema, kArenaActions);
    RewardEvaluator new_eval(v1, schema, kArenaActions);

    StateVector prev = arena_state(0.80, 0.50);
    StateVector same = arena_state(0.80, 0.50);
    std::vector<int> hist = {6};
    RewardContext clean{prev, same, 6, false, hist, 1, 0.1};
    CHECK(old_eval.evaluate(clean) == Catch::Approx(-2.0 + 2.0).margin(1e-12));
    CHECK(new_eval.evaluate(clean) == Catch::Approx(-2.0 + 0.5).margin(1e-12));

    StateVector hurt = arena_state(0.80, 0.45);
    RewardContext dinged{prev, hurt, 6, false, hist, 1, 0.1};
    CHECK(new_eval.evaluate(dinged) ==
          Catch::Approx(-2.0 + 10 * (-0.05) - 0.1).margin(1e-12));

    // threshold dropped from >15 to >10: 11 dodges now draw the penalty
    std::vector<int> dodge11(11, 6);
    RewardContext spam{prev, same, 0, false, dodge11, 30, 3.0};
    CHECK(old_eval.evaluate(spam) == Catch::Approx(-2.0).margin(1e-12));
    CHECK(new_eval.evaluate(spam) == Catch::Approx(-2.0 - 5.0).margin(1e-12));
}

TEST_CASE("patch version history forms a chain back to v0") {
    StateSchema schema = arena_schema();
    RewardSpec v0 = boss_v0();

    auto v1 = apply_patch(v0, json::array(), schema, kArenaActions);
    REQUIRE(v1.ok());
    CHECK(v1.value->version == 1);
    CHECK(*v1.value->parent_version == 0);

    json edit = json::parse(R"([{"op":"set","id":"light_combo","field":"reward","value":7}])");
    auto v2 = apply_patch(*v1.value, edit, schema, kArenaActions);
    REQUIRE(v2.ok());
    CHECK(v2.value->version == 2);
    CHECK(*v2.value->parent_version == 1);

    // empty patch keeps semantics: serialized rules identical apart from lineage
    json a = v0.to_json();
    json b = v1.value->to_json();
    a.erase("version");
    a.erase("parent_version");
    b.erase("version");
    b.erase("parent_version");
    CHECK(a == b);
}

TEST_CASE("patches are rejected wholesale on any invalid edit") {
    StateSchema schema = arena_schema();
    RewardSpec v0 = boss_v0();

    // the appendix mis-optimization: treating the terminal-only reduction
    // concept as a step channel
    json bad_channel = json::parse(R"([
      {"op":"add_delta_rule","rule":{"id":"confused","channel":"boss_health_reduction",
       "direction":"decrease","coeff":50}}
    ])");
    auto r1 = apply_patch(v0, bad_channel, schema, kArenaActions);
    REQUIRE_FALSE(r1.ok());
    CHECK(r1.error.find("boss_health_reduction") != std::string::npos);

    json unknown_id = json::parse(R"([
      {"op":"set","id":"light_combo","field":"reward","value":9},
      {"op":"set","id":"not_a_rule","field":"reward","value":1}
    ])");
    auto r2 = apply_patch(v0, unknown_id, schema, kArenaActions);
    REQUIRE_FALSE(r2.ok());
    CHECK(r2.error.find("not_a_rule") != std::string::npos);

    json unknown_field = json::parse(
        R"([{"op":"set","id":"dodge_unhurt","field":"if_ture","value":1}])");
    CHECK_FALSE(apply_patch(v0, unknown_field, schema, kArenaActions).ok());

    json bad_op = json::parse(R"([{"op":"fiddle","id":"dodge_unhurt"}])");
    CHECK_FALSE(apply_patch(v0, bad_op, schema, kArenaActions).ok());

    json bad_action = json::parse(R"([
      {"op":"add_count_rule","rule":{"id":"bf","action":9,"more_than":2,"reward":-1}}
    ])");
    auto r3 = apply_patch(v0, bad_action, schema, kArenaActions);
    REQUIRE_FALSE(r3.ok());
    CHECK(r3.error.find("9-action") != std::string::npos);

    json not_array = json::object();
    CHECK_FALSE(apply_patch(v0, not_array, schema, kArenaActions).ok());
}

TEST_CASE("validation diagnoses structural problems") {
    StateSchema schema = arena_schema();
    RewardSpec spec = boss_v0();

    SECTION("tier thresholds must strictly decrease") {
        spec.terminal.tiers = {{0.2, 75}, {0.5, 150}};
        auto bad = validate_reward(spec, schema, kArenaActions);
        REQUIRE(bad.size() == 1);
        CHECK(bad[0].find("strictly decreasing") != std::string::npos);
    }

    SECTION("action indices must fit the action space") {
        spec.action_rules[0].action = 9;
        auto bad = validate_reward(spec, schema, kArenaActions);
        REQUIRE(bad.size() == 1);
        CHECK(bad[0].find("outside") != std::string::npos);
    }

    SECTION("duplicate rule ids are caught") {
        spec.count_rules[1].id = spec.count_rules[0].id;
        auto bad = validate_reward(spec, schema, kArenaActions);
        REQUIRE(bad.size() == 1);
        CHECK(bad[0].find("duplicate") != std::string::npos);
    }

    SECTION("evaluator refuses an invalid spec") {
        spec.delta_rules[0].channel = "nonexistent";
        CHECK_THROWS_AS(RewardEvaluator(spec, schema, kArenaActions), std::invalid_argument);
    }
}

TEST_CASE("reward specs survive a JSON round-trip") {
    StateSchema schema = arena_schema();
    RewardSpec v0 = boss_v0();
    auto back = RewardSpec::from_json_text(v0.to_json_text());
    REQUIRE(back.ok());
    CHECK(back.value->to_json() == v0.to_json());

    CHECK_FALSE(RewardSpec::from_json_text("{ not json").ok());

    auto unknown = RewardSpec::from_json_text(R"({"version":0,"terminal":{"tiers":[],
        "otherwise":0},"surprise":1})");
    REQUIRE_FALSE(unknown.ok());
    CHECK(unknown.error.find("surprise") != std::string::npos);
}

TEST_CASE("rule windows gate by step and time") {
    StateSchema schema = arena_schema();
    RewardSpec spec = boss_v0();
    spec.delta_rules[0].when.min_step = 10;

    RewardEvaluator eval(spec, schema, kArenaActions);
    StateVector prev = arena_state(0.80, 0.50);
    StateVector hit = arena_state(0.70, 0.50);
    std::vector<int> none;

    RewardContext early{prev, hit, 0, false, none, 5, 0.5};
    CHECK(eval.evaluate(early) == Catch::Approx(0.0).margin(1e-12));  // rule inactive

    RewardContext late{prev, hit, 0, false, none, 10, 1.0};
    CHECK(eval.evaluate(late) == Catch::Approx(100 * 0.10).margin(1e-12));
}
