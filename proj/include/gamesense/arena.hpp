#pragma once

// First-person corridor combat sim. The player walks a lane with mobs, an
// item pickup, waypoints and a boss at the end; scenarios can instead spawn
// an isolated fight (normal-mob / harder-mob / boss) for task training.
// Rendering is billboard sprites over a sky/floor split plus a HUD of bars,
// indicator lamps and a score readout, all at fixed published rects.

#include <array>
#include <functional>

#include "gamesense/digits.hpp"
#include "gamesense/env.hpp"

namespace gamesense {

namespace arena_colors {
inline constexpr Color kSky{60, 70, 95};
inline constexpr Color kFloor{70, 65, 60};
inline constexpr Color kBarBg{38, 38, 38};
inline constexpr Color kHpFill{230, 60, 40};
inline constexpr Color kStaminaFill{85, 215, 85};
inline constexpr Color kManaFill{85, 125, 235};
inline constexpr Color kPotionFill{230, 200, 70};
inline constexpr Color kBossFill{195, 70, 205};
inline constexpr Color kTargetFill{250, 120, 120};
inline constexpr Color kMob{185, 30, 80};
inline constexpr Color kHarderMob{235, 130, 35};
inline constexpr Color kCamoMob{90, 70, 120};
inline constexpr Color kBoss{150, 45, 190};
inline constexpr Color kItem{40, 200, 140};
inline constexpr Color kTelegraph{255, 240, 70};
inline constexpr Color kVulnerable{80, 220, 220};
inline constexpr Color kInRange{250, 250, 250};
inline constexpr Color kDeath{140, 20, 55};
inline constexpr Color kCleared{245, 215, 70};
inline constexpr Color kTitle{70, 90, 210};
inline constexpr Color kDigit{255, 255, 255};
inline constexpr Color kWaypoint{130, 130, 170};
}  // namespace arena_colors

struct ArenaEntity {
    enum class Kind { NormalMob, HarderMob, Boss, Item, Waypoint };
    enum class Ai { Idle, Chase, Windup, Cooldown, Immobilized, Dead };

    Kind kind = Kind::NormalMob;
    bool camo = false;
    double x = 0, z = 0;
    double hp = 0, max_hp = 0;
    Ai ai = Ai::Idle;
    int timer = 0;
    int pattern = 0;
    bool consumed = false;  // items picked up / waypoints passed

    bool combatant() const {
        return kind == Kind::NormalMob || kind == Kind::HarderMob || kind == Kind::Boss;
    }
    bool alive() const { return combatant() ? ai != Ai::Dead : !consumed; }
};

struct ArenaPlayer {
    double x = 0, z = 0;
    double yaw = 0;       // 0 faces +z
    double pitch_px = 0;  // vertical look offset in screen pixels
    double hp = 100, stamina = 100, mana = 100;
    int potions = 3;
    int iframe = 0;
    int dodge_cd = 0;
    bool charging = false;
    int charge_timer = 0;
};

class ArenaEnv : public Environment {
public:
    explicit ArenaEnv(EnvConfig cfg)
        : Environment(std::move(cfg)), spawn_rng_(cfg_.seed, "arena/spawn") {
        spawn_world(default_checkpoint());
        if (cfg_.scenario != ArenaScenario::Flow) set_phase(Phase::Playing);
    }

    std::vector<std::string> key_set() const override {
        return {"W", "A", "S", "D", "J", "K", "SPACE", "R", "F", "LEFT", "RIGHT", "UP", "DOWN", "ENTER"};
    }
    bool supports_pointer() const override { return true; }

    std::vector<std::string> checkpoints() const override {
        return {"start", "mob-field", "boss-arena"};
    }

    void restart(const std::string& checkpoint) override {
        auto cps = checkpoints();
        if (std::find(cps.begin(), cps.end(), checkpoint) == cps.end())
            throw std::invalid_argument("arena: unknown checkpoint '" + checkpoint + "'");
        if (cfg_.freeze_rng) spawn_rng_.set_counter(0);
        reset_input_state();
        spawn_world(checkpoint);
        set_phase(Phase::Playing);
    }

    Frame frame() const override {
        Frame f;
        render(f, nullptr);
        return f;
    }

    std::vector<SpriteTruth> sprite_truth() const override {
        Frame f;
        std::vector<int> ids;
        render(f, &ids);
        return truth_from_ids(ids, f.width, f.height);
    }

    KvFile layout() const override;

    // Oracle accessors for tests.
    const ArenaPlayer& player() const { return player_; }
    const std::vector<ArenaEntity>& entities() const { return entities_; }
    const ArenaEntity* boss() const {
        for (const auto& e : entities_)
            if (e.kind == ArenaEntity::Kind::Boss) return &e;
        return nullptr;
    }
    int score_points() const { return score_points_; }

    // HUD rects, shared between renderer and layout().
    Rect hp_rect() const { return {4, 4, 50, 4}; }
    Rect stamina_rect() const { return {4, 10, 50, 3}; }
    Rect mana_rect() const { return {4, 15, 50, 3}; }
    Rect potion_rect() const { return {4, 20, 30, 3}; }
    Rect boss_bar_rect() const { return {30, 110, 100, 5}; }
    Rect target_bar_rect() const { return {106, 4, 44, 4}; }
    Rect score_area() const { return {106, 14, 32, 12}; }
    Rect telegraph_lamp() const { return {152, 4, 6, 6}; }
    Rect vulnerable_lamp() const { return {152, 14, 6, 6}; }
    Rect inrange_lamp() const { return {152, 24, 6, 6}; }
    Rect overlay_rect() const { return {60, 50, 40, 20}; }
    Rect title_rect() const { return {50, 46, 60, 18}; }

protected:
    void simulate_tick(const TickInput& in) override {
        if (phase_unlocked() == Phase::Ui) {
            if (in.edge("ENTER") || in.clicks > 0) set_phase(Phase::Playing);
            return;
        }
        const ArenaPhysics& a = cfg_.arena;

        apply_look(in);
        apply_movement(in);
        apply_actions(in);
        advance_heavy_charge();
        advance_entities();
        collect_pickups();

        player_.stamina = std::min(a.stamina_max, player_.stamina + a.stamina_regen);
        if (player_.iframe > 0) --player_.iframe;
        if (player_.dodge_cd > 0) --player_.dodge_cd;

        if (player_.hp <= 0) {
            set_phase(Phase::Dead);
            return;
        }
        if (scenario_cleared()) set_phase(Phase::Cleared);
    }

private:
    static double wrap_angle(double a) {
        while (a > M_PI) a -= 2 * M_PI;
        while (a < -M_PI) a += 2 * M_PI;
        return a;
    }

    double dist_to(const ArenaEntity& e) const {
        return std::hypot(e.x - player_.x, e.z - player_.z);
    }
    double bearing_to(const ArenaEntity& e) const {
        return wrap_angle(std::atan2(e.x - player_.x, e.z - player_.z) - player_.yaw);
    }

    std::string default_checkpoint() const {
        return cfg_.scenario == ArenaScenario::Boss ? "boss-arena" : "start";
    }

    void spawn_world(const std::string& checkpoint) {
        const ArenaPhysics& a = cfg_.arena;
        entities_.clear();
        player_ = ArenaPlayer{};
        player_.hp = a.player_max_hp;
        player_.stamina = a.stamina_max;
        player_.mana = a.mana_max;
        player_.potions = a.potion_stock;
        score_points_ = 0;

        if (checkpoint == "start")
            player_.z = 0;
        else if (checkpoint == "mob-field")
            player_.z = 16;
        else
            player_.z = 37.5;

        auto mob = [&](ArenaEntity::Kind kind, double x, double z, bool camo = false) {
            ArenaEntity e;
            e.kind = kind;
            e.x = x;
            e.z = z;
            e.camo = camo;
            e.max_hp = kind == ArenaEntity::Kind::Boss     ? a.boss_hp
                       : kind == ArenaEntity::Kind::HarderMob ? a.harder_mob_hp
                                                              : a.normal_mob_hp;
            e.hp = e.max_hp;
            entities_.push_back(e);
        };
        auto marker = [&](ArenaEntity::Kind kind, double x, double z) {
            ArenaEntity e;
            e.kind = kind;
            e.x = x;
            e.z = z;
            entities_.push_back(e);
        };

        switch (cfg_.scenario) {
            case ArenaScenario::Flow:
                mob(ArenaEntity::Kind::NormalMob, 0, 6);
                marker(ArenaEntity::Kind::Waypoint, 0, 10);
                marker(ArenaEntity::Kind::Item, 1.5, 14);
                mob(ArenaEntity::Kind::NormalMob, -1, 18);
                mob(ArenaEntity::Kind::HarderMob, 0.5, 24);
                marker(ArenaEntity::Kind::Waypoint, 0, 30);
                mob(ArenaEntity::Kind::Boss, 0, 40);
                break;
            case ArenaScenario::NormalMob:
                for (int i = 0; i < a.scenario_mob_count; ++i) {
                    double x = i == 0 ? 0 : (i % 2 ? 1.6 : -1.6) * double((i + 1) / 2);
                    double z = a.scenario_mob_distance + 1.2 * i;
                    bool camo = i > 0 && spawn_rng_.next_double() < a.camo_chance;
                    mob(ArenaEntity::Kind::NormalMob, x, z, camo);
                }
                break;
            case ArenaScenario::HarderMob:
                mob(ArenaEntity::Kind::HarderMob, 0, a.scenario_mob_distance);
                break;
            case ArenaScenario::Boss:
                mob(ArenaEntity::Kind::Boss, 0, 40);
                player_.z = 37.5;
                break;
        }

        // Waypoints behind the spawn point count as already passed.
        for (auto& e : entities_)
            if (e.kind == ArenaEntity::Kind::Waypoint && e.z <= player_.z) e.consumed = true;
    }

    // ---- player ----

    void apply_look(const TickInput& in) {
        const ArenaPhysics& a = cfg_.arena;
        player_.yaw += in.pointer_dx * a.yaw_per_px;
        if (in.down("LEFT")) player_.yaw -= a.key_turn_rate;
        if (in.down("RIGHT")) player_.yaw += a.key_turn_rate;
        player_.yaw = wrap_angle(player_.yaw);
        player_.pitch_px += in.pointer_dy * 0.5;
        if (in.down("UP")) player_.pitch_px -= 0.8;
        if (in.down("DOWN")) player_.pitch_px += 0.8;
        player_.pitch_px = std::clamp(player_.pitch_px, -18.0, 18.0);
    }

    void move_dir(const TickInput& in, double& mx, double& mz) const {
        double fx = std::sin(player_.yaw), fz = std::cos(player_.yaw);
        double lx = -fz, lz = fx;
        mx = mz = 0;
        if (in.down("W")) mx += fx, mz += fz;
        if (in.down("S")) mx -= fx, mz -= fz;
        if (in.down("A")) mx += lx, mz += lz;
        if (in.down("D")) mx -= lx, mz -= lz;
        double n = std::hypot(mx, mz);
        if (n > 1e-9) mx /= n, mz /= n;
    }

    void apply_movement(const TickInput& in) {
        const ArenaPhysics& a = cfg_.arena;
        double mx, mz;
        move_dir(in, mx, mz);
        player_.x = std::clamp(player_.x + mx * a.move_speed, -3.0, 3.0);
        player_.z = std::clamp(player_.z + mz * a.move_speed, 0.0, 44.0);
        check_waypoints();
    }

    void check_waypoints() {
        for (auto& e : entities_) {
            if (e.kind != ArenaEntity::Kind::Waypoint || e.consumed) continue;
            if (player_.z >= e.z) {
                e.consumed = true;
                push_score(cfg_.score_keypoints ? ScoreEvent::KeypointPassed
                                                : ScoreEvent::JunctionPassed);
            }
        }
    }

    void apply_actions(const TickInput& in) {
        const ArenaPhysics& a = cfg_.arena;

        if (in.edge("J") && !player_.charging && player_.stamina >= a.light_stamina) {
            player_.stamina -= a.light_stamina;
            melee_strike(a.light_damage);
        }
        if (in.edge("K") && !player_.charging && player_.stamina >= a.heavy_stamina) {
            player_.stamina -= a.heavy_stamina;
            player_.charging = true;
            player_.charge_timer = a.charge_ticks;
        }
        if (in.edge("SPACE") && player_.dodge_cd == 0 && player_.stamina >= a.dodge_stamina) {
            player_.stamina -= a.dodge_stamina;
            double mx, mz;
            move_dir(in, mx, mz);
            if (std::hypot(mx, mz) < 0.5) {  // no direction held: hop backward
                mx = -std::sin(player_.yaw);
                mz = -std::cos(player_.yaw);
            }
            player_.x = std::clamp(player_.x + mx * a.dodge_lunge, -3.0, 3.0);
            player_.z = std::clamp(player_.z + mz * a.dodge_lunge, 0.0, 44.0);
            player_.iframe = a.dodge_iframe_ticks;
            player_.dodge_cd = a.dodge_cooldown;
            check_waypoints();
        }
        if (in.edge("R") && player_.potions > 0) {
            --player_.potions;
            player_.hp = std::min(a.player_max_hp, player_.hp + a.potion_heal_fraction * a.player_max_hp);
        }
        if (in.edge("F") && player_.mana >= a.fix_mana_cost) {
            ArenaEntity* target = nearest_enemy(a.fix_range, M_PI);
            if (target) {
                player_.mana -= a.fix_mana_cost;
                target->ai = ArenaEntity::Ai::Immobilized;
                target->timer = a.fix_duration_ticks;
            }
        }
        if (in.clicks > 0) fire_shot(in.clicks);
    }

    bool enemy_within(double max_dist, double max_bearing) const {
        for (const auto& e : entities_) {
            if (!e.combatant() || !e.alive()) continue;
            if (dist_to(e) <= max_dist && std::abs(bearing_to(e)) <= max_bearing) return true;
        }
        return false;
    }

    ArenaEntity* nearest_enemy(double max_dist, double max_bearing, bool include_boss = true) {
        ArenaEntity* best = nullptr;
        double best_d = max_dist;
        for (auto& e : entities_) {
            if (!e.combatant() || !e.alive()) continue;
            if (!include_boss && e.kind == ArenaEntity::Kind::Boss) continue;
            double d = dist_to(e);
            if (d <= best_d && std::abs(bearing_to(e)) <= max_bearing) {
                best_d = d;
                best = &e;
            }
        }
        return best;
    }

    void melee_strike(double damage) {
        const ArenaPhysics& a = cfg_.arena;
        ArenaEntity* target = nearest_enemy(a.melee_range, a.melee_cone);
        if (target) hurt(*target, damage);
    }

    void fire_shot(int count) {
        const ArenaPhysics& a = cfg_.arena;
        for (int i = 0; i < count; ++i) {
            ArenaEntity* target = nearest_enemy(a.shot_range, a.aim_tolerance);
            if (target) hurt(*target, a.shot_damage);
        }
    }

    void hurt(ArenaEntity& e, double damage) {
        if (e.ai == ArenaEntity::Ai::Immobilized) damage *= 2;
        e.hp -= damage;
        if (e.ai == ArenaEntity::Ai::Idle) e.ai = ArenaEntity::Ai::Chase;
        if (e.hp <= 0) {
            e.hp = 0;
            e.ai = ArenaEntity::Ai::Dead;
            if (e.kind == ArenaEntity::Kind::NormalMob) push_score(ScoreEvent::MobKilled);
            if (e.kind == ArenaEntity::Kind::HarderMob) push_score(ScoreEvent::HarderMobKilled);
        }
    }

    void advance_heavy_charge() {
        if (!player_.charging) return;
        if (--player_.charge_timer <= 0) {
            player_.charging = false;
            melee_strike(cfg_.arena.heavy_damage);
        }
    }

    // ---- entities ----

    struct BossPattern {
        int telegraph;
        double range;
        double damage;
        int cooldown;
        bool dash;
    };
    static constexpr std::array<BossPattern, 3> kBossPatterns{{
        {20, 1.7, 16, 26, false},   // swipe
        {34, 2.6, 28, 52, false},   // slam, long whiff recovery
        {26, 1.5, 20, 38, true},    // lunge
    }};

    void advance_entities() {
        const ArenaPhysics& a = cfg_.arena;
        for (auto& e : entities_) {
            if (!e.combatant() || !e.alive()) continue;
            double d = dist_to(e);
            bool is_boss = e.kind == ArenaEntity::Kind::Boss;
            double speed = is_boss                                ? a.harder_mob_speed
                           : e.kind == ArenaEntity::Kind::HarderMob ? a.harder_mob_speed
                                                                    : a.normal_mob_speed;

            switch (e.ai) {
                case ArenaEntity::Ai::Idle:
                    if (d <= a.aggro_radius) e.ai = ArenaEntity::Ai::Chase;
                    break;
                case ArenaEntity::Ai::Chase:
                    if (d <= a.attack_range) {
                        e.ai = ArenaEntity::Ai::Windup;
                        if (is_boss) {
                            e.pattern = int(spawn_rng_.next_below(kBossPatterns.size()));
                            e.timer = kBossPatterns[size_t(e.pattern)].telegraph;
                        } else {
                            e.pattern = 0;
                            e.timer = e.kind == ArenaEntity::Kind::HarderMob
                                          ? a.harder_telegraph_ticks
                                          : a.mob_telegraph_ticks;
                        }
                    } else if (d > 0.7) {
                        step_toward_player(e, std::min(speed, d - 0.7));
                    }
                    break;
                case ArenaEntity::Ai::Windup: {
                    if (is_boss && kBossPatterns[size_t(e.pattern)].dash && e.timer <= 12 && d > 0.7)
                        step_toward_player(e, std::min(0.22, d - 0.7));
                    if (--e.timer <= 0) {
                        double range = is_boss ? kBossPatterns[size_t(e.pattern)].range : a.strike_range;
                        double dmg = is_boss ? kBossPatterns[size_t(e.pattern)].damage
                                   : e.kind == ArenaEntity::Kind::HarderMob ? a.harder_mob_damage
                                                                            : a.mob_damage;
                        if (dist_to(e) <= range && player_.iframe == 0) damage_player(dmg);
                        e.ai = ArenaEntity::Ai::Cooldown;
                        e.timer = is_boss ? kBossPatterns[size_t(e.pattern)].cooldown : a.mob_cooldown_ticks;
                    }
                    break;
                }
                case ArenaEntity::Ai::Cooldown:
                    if (--e.timer <= 0) e.ai = ArenaEntity::Ai::Chase;
                    break;
                case ArenaEntity::Ai::Immobilized:
                    if (--e.timer <= 0) e.ai = ArenaEntity::Ai::Chase;
                    break;
                case ArenaEntity::Ai::Dead:
                    break;
            }
        }
    }

    void step_toward_player(ArenaEntity& e, double speed) {
        double dx = player_.x - e.x, dz = player_.z - e.z;
        double n = std::hypot(dx, dz);
        if (n < 1e-9 || speed <= 0) return;
        e.x += dx / n * speed;
        e.z += dz / n * speed;
    }

    void damage_player(double dmg) {
        player_.hp -= dmg;
        player_.charging = false;  // getting hit interrupts a heavy wind-up
    }

    void collect_pickups() {
        for (auto& e : entities_) {
            if (e.kind != ArenaEntity::Kind::Item || e.consumed) continue;
            if (dist_to(e) <= 0.8) {
                e.consumed = true;
                push_score(ScoreEvent::ItemCollected);
            }
        }
    }

    bool scenario_cleared() const {
        if (cfg_.scenario == ArenaScenario::Flow || cfg_.scenario == ArenaScenario::Boss) {
            for (const auto& e : entities_)
                if (e.kind == ArenaEntity::Kind::Boss) return !e.alive();
            return false;
        }
        for (const auto& e : entities_)
            if (e.combatant() && e.alive()) return false;
        return true;
    }

    void push_score(ScoreEvent ev) {
        push_event(ev);
        score_points_ += score_event_weight(ev);
    }

    // ---- rendering ----

    struct SpriteDraw {
        int entity_index;
        double dist;
        Rect box;
        Color body;
        bool telegraph;
        bool vulnerable;
    };

    void render(Frame& f, std::vector<int>* ids) const;
    std::vector<SpriteTruth> truth_from_ids(const std::vector<int>& ids, int w, int h) const;

    RngStream spawn_rng_;
    std::vector<ArenaEntity> entities_;
    ArenaPlayer player_;
    int score_points_ = 0;
};

inline void ArenaEnv::render(Frame& f, std::vector<int>* ids) const {
    const ArenaPhysics& a = cfg_.arena;
    f.width = a.width;
    f.height = a.height;
    f.tick = tick();
    f.pixels.assign(size_t(a.width) * size_t(a.height) * 3, 0);
    if (ids) ids->assign(size_t(a.width) * size_t(a.height), -1);

    auto put = [&](int x, int y, Color c, int id) {
        if (x < 0 || y < 0 || x >= f.width || y >= f.height) return;
        f.set(x, y, c);
        if (ids) (*ids)[size_t(y) * size_t(f.width) + size_t(x)] = id;
    };
    auto fill = [&](Rect r, Color c, int id) {
        for (int y = r.y; y < r.y + r.h; ++y)
            for (int x = r.x; x < r.x + r.w; ++x) put(x, y, c, id);
    };

    int horizon = std::clamp(a.height / 2 - 10 - int(std::lround(player_.pitch_px)), 20,
                             a.height - 20);
    fill({0, 0, a.width, horizon}, arena_colors::kSky, -1);
    fill({0, horizon, a.width, a.height - horizon}, arena_colors::kFloor, -1);

    double px_per_rad = a.width / a.fov;

    // Waypoint floor stripes (behind sprites).
    for (const auto& e : entities_) {
        if (e.kind != ArenaEntity::Kind::Waypoint || e.consumed) continue;
        double dz = e.z - player_.z;
        if (dz < 0.5 || dz > 24) continue;
        int y = horizon + int(26.0 / dz);
        fill({0, y, a.width, 2}, arena_colors::kWaypoint, -1);
    }

    // Billboards, far to near.
    std::vector<SpriteDraw> draws;
    for (size_t i = 0; i < entities_.size(); ++i) {
        const auto& e = entities_[i];
        if (e.kind == ArenaEntity::Kind::Waypoint || !e.alive()) continue;
        double d = dist_to(e);
        double rel = bearing_to(e);
        if (d < 0.3 || d > 28 || std::abs(rel) > a.fov / 2 + 0.4) continue;

        bool item = e.kind == ArenaEntity::Kind::Item;
        int h = item ? std::clamp(int(30.0 / d), 3, 40) : std::clamp(int(60.0 / d), 4, 95);
        int w = item ? h : std::max(3, h * 3 / 5);
        int cx = a.width / 2 + int(std::lround(rel * px_per_rad));
        int bottom = horizon + int(26.0 / d);
        Rect box{cx - w / 2, bottom - h, w, h};

        Color body = arena_colors::kItem;
        if (e.kind == ArenaEntity::Kind::NormalMob)
            body = e.camo ? arena_colors::kCamoMob : arena_colors::kMob;
        else if (e.kind == ArenaEntity::Kind::HarderMob)
            body = arena_colors::kHarderMob;
        else if (e.kind == ArenaEntity::Kind::Boss)
            body = arena_colors::kBoss;

        draws.push_back({int(i), d, box, body, e.ai == ArenaEntity::Ai::Windup,
                         e.ai == ArenaEntity::Ai::Immobilized});
    }
    std::sort(draws.begin(), draws.end(),
              [](const SpriteDraw& l, const SpriteDraw& r) { return l.dist > r.dist; });

    for (const auto& s : draws) {
        bool ring = (s.telegraph || s.vulnerable) && s.box.h >= 16;
        Rect body = s.box;
        if (ring) {
            Color rc = s.telegraph ? arena_colors::kTelegraph : arena_colors::kVulnerable;
            fill(s.box, rc, -1);
            body = Rect{s.box.x + 2, s.box.y + 2, s.box.w - 4, s.box.h - 4};
        }
        fill(body, s.body, s.entity_index);
    }

    // HUD (occludes sprites; id -2 so truth sees the occlusion).
    auto bar = [&](Rect r, double frac, Color fill_c) {
        fill(r, arena_colors::kBarBg, -2);
        int w = int(std::lround(std::clamp(frac, 0.0, 1.0) * r.w));
        fill({r.x, r.y, w, r.h}, fill_c, -2);
    };
    bar(hp_rect(), player_.hp / a.player_max_hp, arena_colors::kHpFill);
    bar(stamina_rect(), player_.stamina / a.stamina_max, arena_colors::kStaminaFill);
    bar(mana_rect(), player_.mana / a.mana_max, arena_colors::kManaFill);
    bar(potion_rect(), double(player_.potions) / std::max(1, a.potion_stock),
        arena_colors::kPotionFill);

    const ArenaEntity* bs = boss();
    bool boss_engaged =
        bs && bs->alive() && (cfg_.scenario == ArenaScenario::Boss || bs->ai != ArenaEntity::Ai::Idle);
    if (boss_engaged) bar(boss_bar_rect(), bs->hp / bs->max_hp, arena_colors::kBossFill);

    const ArenaEntity* tgt = nullptr;
    double tgt_d = 6.0;
    for (const auto& e : entities_) {
        if (!e.combatant() || !e.alive() || e.kind == ArenaEntity::Kind::Boss) continue;
        double d = dist_to(e);
        if (d <= tgt_d) {
            tgt_d = d;
            tgt = &e;
        }
    }
    if (tgt) bar(target_bar_rect(), tgt->hp / tgt->max_hp, arena_colors::kTargetFill);

    // Indicator lamps.
    bool any_windup = false, any_vulnerable = false;
    for (const auto& e : entities_) {
        if (!e.combatant() || !e.alive()) continue;
        if (e.ai == ArenaEntity::Ai::Windup && dist_to(e) <= 8) any_windup = true;
        if (e.ai == ArenaEntity::Ai::Immobilized) any_vulnerable = true;
    }
    bool in_range = enemy_within(a.melee_range, a.melee_cone);
    if (any_windup) fill(telegraph_lamp(), arena_colors::kTelegraph, -2);
    if (any_vulnerable) fill(vulnerable_lamp(), arena_colors::kVulnerable, -2);
    if (in_range) fill(inrange_lamp(), arena_colors::kInRange, -2);

    // Score readout.
    {
        Rect region = score_area();
        std::string text = strf("%d", score_points_);
        if (text.size() > 4) text = text.substr(text.size() - 4);
        const int scale = 2, stride = kDigitCols * 2 + 2;
        for (size_t i = 0; i < text.size(); ++i) {
            int dgt = text[i] - '0';
            int ox = region.x + int(i) * stride;
            for (int r = 0; r < kDigitRowsN; ++r)
                for (int c = 0; c < kDigitCols; ++c)
                    if (digit_pixel(dgt, r, c))
                        fill({ox + c * scale, region.y + 1 + r * scale, scale, scale},
                             arena_colors::kDigit, -2);
        }
    }

    Phase ph = phase();
    if (ph == Phase::Ui) fill(title_rect(), arena_colors::kTitle, -2);
    if (ph == Phase::Dead) fill(overlay_rect(), arena_colors::kDeath, -2);
    if (ph == Phase::Cleared) fill(overlay_rect(), arena_colors::kCleared, -2);
}

inline std::vector<SpriteTruth> ArenaEnv::truth_from_ids(const std::vector<int>& ids, int w,
                                                         int h) const {
    return truth_from_id_buffer(ids, w, h, [this](int id) -> std::string {
        const ArenaEntity& e = entities_[size_t(id)];
        if (e.kind == ArenaEntity::Kind::NormalMob) return e.camo ? "camo-mob" : "mob";
        if (e.kind == ArenaEntity::Kind::HarderMob) return "harder-mob";
        if (e.kind == ArenaEntity::Kind::Boss) return "boss";
        return "item";
    });
}

inline KvFile ArenaEnv::layout() const {
    KvFile kv;
    kv.header.set("game", "arena");
    kv.header.set("width", strf("%d", cfg_.arena.width));
    kv.header.set("height", strf("%d", cfg_.arena.height));

    auto bar = [&kv](const char* name, Rect r, Color c) {
        KvSection s;
        s.name = "bar";
        s.set("name", name);
        s.set("rect", strf("%d %d %d %d", r.x, r.y, r.w, r.h));
        s.set("direction", "right");
        s.set("fill", strf("%d %d %d", c.r, c.g, c.b));
        s.set("tolerance", "30");
        kv.sections.push_back(s);
    };
    bar("player_hp", hp_rect(), arena_colors::kHpFill);
    bar("stamina", stamina_rect(), arena_colors::kStaminaFill);
    bar("mana", mana_rect(), arena_colors::kManaFill);
    bar("potion", potion_rect(), arena_colors::kPotionFill);
    bar("boss_hp", boss_bar_rect(), arena_colors::kBossFill);
    bar("target_hp", target_bar_rect(), arena_colors::kTargetFill);

    KvSection score;
    score.name = "score";
    Rect sr = score_area();
    score.set("rect", strf("%d %d %d %d", sr.x, sr.y, sr.w, sr.h));
    score.set("cells", "4");
    score.set("scale", "2");
    score.set("color", strf("%d %d %d", arena_colors::kDigit.r, arena_colors::kDigit.g,
                            arena_colors::kDigit.b));
    score.set("tolerance", "30");
    kv.sections.push_back(score);

    auto flag = [&kv](const char* name, Rect r, Color c) {
        KvSection s;
        s.name = "flag";
        s.set("name", name);
        s.set("rect", strf("%d %d %d %d", r.x, r.y, r.w, r.h));
        s.set("color", strf("%d %d %d", c.r, c.g, c.b));
        s.set("tolerance", "30");
        s.set("coverage", "0.7");
        kv.sections.push_back(s);
    };
    flag("title", title_rect(), arena_colors::kTitle);
    flag("death", overlay_rect(), arena_colors::kDeath);
    flag("cleared", overlay_rect(), arena_colors::kCleared);
    flag("telegraph", telegraph_lamp(), arena_colors::kTelegraph);
    flag("vulnerable", vulnerable_lamp(), arena_colors::kVulnerable);
    flag("in_range", inrange_lamp(), arena_colors::kInRange);
    return kv;
}

}  // namespace gamesense
