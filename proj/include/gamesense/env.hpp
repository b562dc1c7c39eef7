#pragma once

// Deterministic headless game environments. Everything the agent learns from
// comes out of `Frame` pixels; everything it does goes in through
// `InputCommand`s consumed at tick boundaries. One env instance belongs to a
// single logical consumer; the command queue is the only cross-context
// surface (one producer, one consumer).

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "gamesense/common.hpp"
#include "gamesense/kv.hpp"
#include "gamesense/png.hpp"

namespace gamesense {

struct Frame {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // row-major RGB8
    int64_t tick = 0;

    Color at(int x, int y) const {
        size_t i = (size_t(y) * size_t(width) + size_t(x)) * 3;
        return Color{pixels[i], pixels[i + 1], pixels[i + 2]};
    }
    void set(int x, int y, Color c) {
        if (x < 0 || y < 0 || x >= width || y >= height) return;
        size_t i = (size_t(y) * size_t(width) + size_t(x)) * 3;
        pixels[i] = c.r;
        pixels[i + 1] = c.g;
        pixels[i + 2] = c.b;
    }
    void fill_rect(Rect r, Color c) {
        for (int y = r.y; y < r.y + r.h; ++y)
            for (int x = r.x; x < r.x + r.w; ++x) set(x, y, c);
    }
    uint64_t checksum() const {
        uint64_t h = fnv1a(pixels.data(), pixels.size());
        uint8_t t[8];
        for (int i = 0; i < 8; ++i) t[i] = uint8_t(uint64_t(tick) >> (8 * i));
        return fnv1a(t, 8, h);
    }
};

struct InputCommand {
    enum class Kind { KeyPress, KeyDown, KeyUp, PointerMove, PointerClick };

    Kind kind = Kind::KeyPress;
    std::string key;          // KeyPress / KeyDown / KeyUp
    double duration_s = 0.0;  // KeyPress only, must be > 0
    int dx = 0, dy = 0;       // PointerMove
    std::string button;       // PointerClick
    int64_t issue_tick = 0;   // stamped on enqueue

    static InputCommand key_press(std::string k, double seconds) {
        InputCommand c;
        c.kind = Kind::KeyPress;
        c.key = std::move(k);
        c.duration_s = seconds;
        return c;
    }
    static InputCommand key_down(std::string k) {
        InputCommand c;
        c.kind = Kind::KeyDown;
        c.key = std::move(k);
        return c;
    }
    static InputCommand key_up(std::string k) {
        InputCommand c;
        c.kind = Kind::KeyUp;
        c.key = std::move(k);
        return c;
    }
    static InputCommand pointer_move(int dx, int dy) {
        InputCommand c;
        c.kind = Kind::PointerMove;
        c.dx = dx;
        c.dy = dy;
        return c;
    }
    static InputCommand pointer_click(std::string btn = "left") {
        InputCommand c;
        c.kind = Kind::PointerClick;
        c.button = std::move(btn);
        return c;
    }
};

enum class Phase { Ui, Playing, Dead, Cleared };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Ui: return "ui";
        case Phase::Playing: return "playing";
        case Phase::Dead: return "dead";
        case Phase::Cleared: return "cleared";
    }
    return "?";
}

enum class ScoreEvent {
    PipePassed,
    MobKilled,
    HarderMobKilled,
    JunctionPassed,
    ItemCollected,
    KeypointPassed,
};

inline const char* score_event_name(ScoreEvent e) {
    switch (e) {
        case ScoreEvent::PipePassed: return "pipe-passed";
        case ScoreEvent::MobKilled: return "mob-killed";
        case ScoreEvent::HarderMobKilled: return "harder-mob-killed";
        case ScoreEvent::JunctionPassed: return "junction-passed";
        case ScoreEvent::ItemCollected: return "item-collected";
        case ScoreEvent::KeypointPassed: return "keypoint-passed";
    }
    return "?";
}

inline int score_event_weight(ScoreEvent e) {
    return e == ScoreEvent::HarderMobKilled ? 2 : 1;
}

inline int flow_score(const std::vector<ScoreEvent>& events) {
    int total = 0;
    for (ScoreEvent e : events) total += score_event_weight(e);
    return total;
}

struct SimStatus {
    Phase phase = Phase::Ui;
    std::vector<ScoreEvent> score_events;  // append-only
    int64_t tick = 0;
};

// --------------------------------------------------------------------------

enum class GameKind { Flappy, Arena };
enum class ArenaScenario { Flow, NormalMob, HarderMob, Boss };

inline const char* scenario_name(ArenaScenario s) {
    switch (s) {
        case ArenaScenario::Flow: return "flow";
        case ArenaScenario::NormalMob: return "normal-mob";
        case ArenaScenario::HarderMob: return "harder-mob";
        case ArenaScenario::Boss: return "boss";
    }
    return "?";
}

struct FlappyPhysics {
    int width = 120;
    int height = 160;
    double gravity = 0.11;        // px / tick^2
    double flap_impulse = 1.7;    // px / tick, upward
    double terminal_vel = 2.6;    // px / tick cap
    double scroll_speed = 1.1;    // px / tick
    int pipe_spacing = 58;        // px between pipe leading edges
    int pipe_width = 16;
    int gap_height = 58;
    int gap_margin = 14;          // min distance of gap edge from top / ground
    int bird_x = 24;
    int bird_size = 8;
    int ground_y = 150;
};

struct ArenaPhysics {
    int width = 160;
    int height = 120;
    double move_speed = 0.055;       // units / tick
    double yaw_per_px = 0.005;       // rad of camera yaw per pointer px
    double key_turn_rate = 0.02;     // rad / tick while arrow key held
    double fov = 1.6;                // rad
    double player_max_hp = 100;
    double stamina_max = 100;
    double stamina_regen = 0.6;      // per tick
    double mana_max = 100;
    double light_damage = 10;
    double light_stamina = 12;
    double heavy_damage = 25;
    double heavy_stamina = 20;
    int charge_ticks = 18;           // heavy attack wind-up, interruptible
    double melee_range = 1.45;
    double melee_cone = 0.7;         // rad half-angle
    double shot_damage = 15;
    double shot_range = 25;
    double aim_tolerance = 0.07;     // rad half-angle for hitscan
    int dodge_iframe_ticks = 18;
    double dodge_stamina = 16;
    double dodge_lunge = 1.1;        // units of displacement
    int dodge_cooldown = 10;
    int potion_stock = 3;
    double potion_heal_fraction = 0.5;
    double fix_mana_cost = 50;
    double fix_range = 4.0;
    int fix_duration_ticks = 110;    // boss immobilize window
    double normal_mob_hp = 30;       // 3 light hits
    double harder_mob_hp = 65;       // 7 light hits
    double boss_hp = 120;
    double normal_mob_speed = 0.018;
    double harder_mob_speed = 0.05;
    double mob_damage = 12;
    double harder_mob_damage = 18;
    double boss_damage = 16;
    int mob_telegraph_ticks = 18;
    int harder_telegraph_ticks = 14;
    double aggro_radius = 8.0;
    double attack_range = 1.1;       // mob starts wind-up inside this
    double strike_range = 1.6;       // player hit if inside this at strike
    int mob_cooldown_ticks = 34;
    int scenario_mob_count = 1;      // mobs spawned by the normal-mob scenario
    double camo_chance = 0.0;        // chance a scenario mob uses the camo skin
    double scenario_mob_distance = 9.0;
};

struct EnvConfig {
    uint64_t seed = 1;
    int tick_rate = 30;
    GameKind game = GameKind::Flappy;
    ArenaScenario scenario = ArenaScenario::Flow;
    bool freeze_rng = false;        // restart() also resets RNG streams
    std::string frame_dump_dir;     // write one PNG per rendered frame when set
    bool score_keypoints = false;   // waypoints emit keypoint events instead of junction
    FlappyPhysics flappy;
    ArenaPhysics arena;

    // Field-by-field diagnostics; empty means valid.
    std::vector<std::string> validate() const;
};

inline std::vector<std::string> EnvConfig::validate() const {
    std::vector<std::string> out;
    auto positive = [&out](double v, const char* field) {
        if (!(v > 0)) out.push_back(strf("%s must be positive (got %g)", field, v));
    };
    positive(tick_rate, "tick_rate");
    positive(flappy.gravity, "flappy.gravity");
    positive(flappy.flap_impulse, "flappy.flap_impulse");
    positive(flappy.scroll_speed, "flappy.scroll_speed");
    positive(flappy.gap_height, "flappy.gap_height");
    positive(flappy.pipe_spacing, "flappy.pipe_spacing");
    positive(arena.move_speed, "arena.move_speed");
    positive(arena.yaw_per_px, "arena.yaw_per_px");
    positive(arena.light_damage, "arena.light_damage");
    positive(arena.heavy_damage, "arena.heavy_damage");
    positive(arena.charge_ticks, "arena.charge_ticks");
    positive(arena.dodge_iframe_ticks, "arena.dodge_iframe_ticks");
    positive(arena.potion_heal_fraction, "arena.potion_heal_fraction");
    positive(arena.boss_hp, "arena.boss_hp");
    if (flappy.width < 60 || flappy.height < 80) out.push_back("flappy frame too small");
    if (arena.width < 80 || arena.height < 60) out.push_back("arena frame too small");
    if (arena.camo_chance < 0 || arena.camo_chance > 1) out.push_back("arena.camo_chance must be in [0,1]");
    return out;
}

// Ground-truth sprite info published for detector tests and oracles. One
// entry per visible connected region of an entity; an entity partially hidden
// behind another can contribute several regions (or none).
struct SpriteTruth {
    std::string label;
    Rect bbox;
    int pixels = 0;     // visible pixel count of this region
    int entity_id = 0;  // stable per entity within a frame
};

// Per-tick input view assembled from the command queue.
struct TickInput {
    std::set<std::string> held;
    std::set<std::string> edges;  // keys that went down this tick
    double pointer_dx = 0;
    double pointer_dy = 0;
    int clicks = 0;

    bool down(const std::string& k) const { return held.count(k) != 0; }
    bool edge(const std::string& k) const { return edges.count(k) != 0; }
};

class Environment {
public:
    explicit Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {
        auto diags = cfg_.validate();
        if (!diags.empty()) {
            std::string msg = "invalid EnvConfig:";
            for (const auto& d : diags) msg += "\n  " + d;
            throw std::invalid_argument(msg);
        }
    }
    virtual ~Environment() = default;

    const EnvConfig& config() const { return cfg_; }
    int64_t tick() const { return tick_; }

    SimStatus status() const {
        std::lock_guard lock(mutex_);
        return SimStatus{phase_, score_events_, tick_};
    }
    Phase phase() const {
        std::lock_guard lock(mutex_);
        return phase_;
    }

    virtual std::vector<std::string> key_set() const = 0;
    virtual bool supports_pointer() const = 0;
    // Some games take clicks but have no camera to move.
    virtual bool supports_pointer_move() const { return supports_pointer(); }

    // FIFO enqueue; never blocks stepping. Unknown keys are rejected and the
    // queue is left unchanged.
    void enqueue(InputCommand cmd) {
        if (cmd.kind == InputCommand::Kind::KeyPress && !(cmd.duration_s > 0))
            throw std::invalid_argument("key-press duration must be positive");
        if (cmd.kind == InputCommand::Kind::PointerClick && !supports_pointer())
            throw std::invalid_argument("environment does not accept pointer commands");
        if (cmd.kind == InputCommand::Kind::PointerMove && !supports_pointer_move())
            throw std::invalid_argument("environment does not accept pointer movement");
        if (cmd.kind == InputCommand::Kind::KeyPress || cmd.kind == InputCommand::Kind::KeyDown ||
            cmd.kind == InputCommand::Kind::KeyUp) {
            auto keys = key_set();
            if (std::find(keys.begin(), keys.end(), cmd.key) == keys.end())
                throw std::invalid_argument("unknown key '" + cmd.key + "'");
        }
        std::lock_guard lock(mutex_);
        cmd.issue_tick = tick_;
        queue_.push_back(std::move(cmd));
    }

    size_t queued() const {
        std::lock_guard lock(mutex_);
        return queue_.size();
    }

    // Advance dt ticks. Terminal environments return the terminal frame
    // unchanged. Commands are consumed at each tick boundary in FIFO order.
    std::pair<Frame, SimStatus> step(int dt) {
        for (int i = 0; i < dt; ++i) {
            {
                std::lock_guard lock(mutex_);
                if (phase_ == Phase::Dead || phase_ == Phase::Cleared) break;
            }
            tick_once_internal();
        }
        Frame f = frame();
        maybe_dump(f);
        return {std::move(f), status()};
    }

    virtual Frame frame() const = 0;
    virtual void restart(const std::string& checkpoint) = 0;
    virtual std::vector<std::string> checkpoints() const = 0;

    // Layout metadata (bar rects, flags, score region) for the pixel tools.
    virtual KvFile layout() const = 0;
    // Ground truth for detector tests.
    virtual std::vector<SpriteTruth> sprite_truth() const = 0;

protected:
    virtual void simulate_tick(const TickInput& in) = 0;

    void set_phase(Phase p) { phase_ = p; }
    Phase phase_unlocked() const { return phase_; }
    void push_event(ScoreEvent e) { score_events_.push_back(e); }
    int64_t tick_unlocked() const { return tick_; }

    // Subclass restart() helpers: clear any latched input state.
    void reset_input_state() {
        std::lock_guard lock(mutex_);
        hold_ticks_.clear();
        queue_.clear();
    }

    EnvConfig cfg_;

private:
    void tick_once_internal() {
        TickInput in;
        {
            std::lock_guard lock(mutex_);
            // Consume everything enqueued so far, in order.
            while (!queue_.empty()) {
                InputCommand cmd = std::move(queue_.front());
                queue_.pop_front();
                switch (cmd.kind) {
                    case InputCommand::Kind::KeyPress: {
                        // Durations quantized to ticks, rounding up.
                        int ticks = int(std::ceil(cmd.duration_s * cfg_.tick_rate - 1e-9));
                        if (ticks < 1) ticks = 1;
                        int& slot = hold_ticks_[cmd.key];
                        if (slot == 0) newly_pressed_.insert(cmd.key);
                        slot = std::max(slot, ticks);
                        break;
                    }
                    case InputCommand::Kind::KeyDown: {
                        int& slot = hold_ticks_[cmd.key];
                        if (slot == 0) newly_pressed_.insert(cmd.key);
                        slot = -1;  // held until KeyUp
                        break;
                    }
                    case InputCommand::Kind::KeyUp:
                        hold_ticks_.erase(cmd.key);
                        break;
                    case InputCommand::Kind::PointerMove:
                        in.pointer_dx += cmd.dx;
                        in.pointer_dy += cmd.dy;
                        break;
                    case InputCommand::Kind::PointerClick:
                        in.clicks += 1;
                        break;
                }
            }
            for (const auto& [key, ticks] : hold_ticks_) in.held.insert(key);
            in.edges = std::move(newly_pressed_);
            newly_pressed_.clear();

            ++tick_;
        }

        simulate_tick(in);

        {
            std::lock_guard lock(mutex_);
            // Expire timed holds after the tick they covered.
            for (auto it = hold_ticks_.begin(); it != hold_ticks_.end();) {
                if (it->second > 0 && --it->second == 0)
                    it = hold_ticks_.erase(it);
                else
                    ++it;
            }
        }
    }

    void maybe_dump(const Frame& f);

    mutable std::mutex mutex_;
    std::deque<InputCommand> queue_;
    std::map<std::string, int> hold_ticks_;  // -1 = until KeyUp
    std::set<std::string> newly_pressed_;
    std::vector<ScoreEvent> score_events_;
    Phase phase_ = Phase::Ui;
    int64_t tick_ = 0;
};

inline void Environment::maybe_dump(const Frame& f) {
    if (cfg_.frame_dump_dir.empty()) return;
    png_write(strf("%s/frame_%08lld.png", cfg_.frame_dump_dir.c_str(), (long long)f.tick),
              f.width, f.height, f.pixels);
}

// Shared ground-truth extraction: 4-connected components of an entity-id
// buffer written during rendering (>= 0 entity pixel, -1 background, -2 HUD
// occluder). Occlusion and splits therefore show up in the truth exactly as
// a pixel-space observer would see them.
template <class LabelOf>
std::vector<SpriteTruth> truth_from_id_buffer(const std::vector<int>& ids, int w, int h,
                                              LabelOf&& label_of) {
    std::vector<SpriteTruth> out;
    std::vector<int> comp(ids.size(), -1);
    std::vector<size_t> stack;
    int next_comp = 0;
    for (size_t start = 0; start < ids.size(); ++start) {
        if (ids[start] < 0 || comp[start] != -1) continue;
        int id = ids[start];
        int c = next_comp++;
        int minx = w, miny = h, maxx = -1, maxy = -1, count = 0;
        stack.assign(1, start);
        comp[start] = c;
        while (!stack.empty()) {
            size_t cur = stack.back();
            stack.pop_back();
            int x = int(cur % size_t(w)), y = int(cur / size_t(w));
            ++count;
            minx = std::min(minx, x);
            maxx = std::max(maxx, x);
            miny = std::min(miny, y);
            maxy = std::max(maxy, y);
            const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                int nx = x + dx[k], ny = y + dy[k];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                size_t ni = size_t(ny) * size_t(w) + size_t(nx);
                if (ids[ni] == id && comp[ni] == -1) {
                    comp[ni] = c;
                    stack.push_back(ni);
                }
            }
        }
        out.push_back({label_of(id), Rect{minx, miny, maxx - minx + 1, maxy - miny + 1}, count, id});
    }
    return out;
}

std::unique_ptr<Environment> make_environment(const EnvConfig& cfg);

}  // namespace gamesense
